#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "storesim/analytics.hpp"
#include "storesim/data.hpp"
#include "storesim/distribution.hpp"
#include "storesim/dp.hpp"
#include "storesim/errors.hpp"
#include "storesim/model.hpp"
#include "storesim/policies.hpp"
#include "storesim/sim.hpp"
#include "storesim/version.hpp"

namespace storesim::cli {

namespace {

using nlohmann::json;

// Raised for bad flag values; maps to the configuration exit code.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

bool is_inf_token(const std::string& s) {
    return s == "inf" || s == "+inf" || s == "infinity" || s == "unbounded";
}

double parse_number(const std::string& key, const std::string& text) {
    if (is_inf_token(text)) return INFINITY;
    if (text == "-inf") return -INFINITY;
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (text.empty() || end != begin + text.size() || errno == ERANGE || std::isnan(v))
        throw ConfigError("--" + key + ": not a number: '" + text + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(begin, &end, 10);
    if (text.empty() || text[0] == '-' || end != begin + text.size() || errno == ERANGE)
        throw ConfigError("--" + key + ": not a non-negative integer: '" + text + "'");
    return v;
}

// "a:b:step" (inclusive) or a comma-separated list.
std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ':')) parts.push_back(part);
        if (parts.size() != 3) throw ConfigError("--" + key + ": range must be a:b:step");
        double a = parse_number(key, parts[0]);
        double b = parse_number(key, parts[1]);
        double step = parse_number(key, parts[2]);
        if (!(step > 0.0) || !std::isfinite(a) || !std::isfinite(b) || b < a)
            throw ConfigError("--" + key + ": range needs finite a <= b and step > 0");
        auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
        for (std::size_t k = 0; k <= count; ++k) out.push_back(a + static_cast<double>(k) * step);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(parse_number(key, item));
    }
    if (out.empty()) throw ConfigError("--" + key + ": empty list");
    return out;
}

json json_number(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

json json_optional(const std::optional<double>& v) {
    return v ? json_number(*v) : json(nullptr);
}

enum class Kind { Number, Capacity, Integer, Text, Flag, List };

// Named string-backed options. Every option is resolved to a typed JSON value
// so a run can be replayed from its own output.
class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {}

    void add(const std::string& key, Kind kind, const std::string& def, const std::string& help,
             bool semantic = true) {
        auto& f = fields_[key];
        f.kind = kind;
        f.value = def;
        f.semantic = semantic;
        if (kind == Kind::Flag) {
            f.flag = def == "true";
            f.opt = app_->add_flag("--" + key, f.flag, help);
        } else {
            f.opt = app_->add_option("--" + key, f.value, help);
            if (!def.empty()) f.opt->default_str(def);
        }
    }

    void load(const json& cfg) {
        for (auto& [key, f] : fields_) {
            if (!f.semantic || f.opt->count() > 0 || !cfg.contains(key)) continue;
            const json& v = cfg.at(key);
            if (f.kind == Kind::Flag) {
                if (!v.is_boolean()) throw ConfigError("config '" + key + "' must be a boolean");
                f.flag = v.get<bool>();
            } else if (v.is_null()) {
                f.value.clear();
            } else if (v.is_string()) {
                f.value = v.get<std::string>();
            } else if (v.is_number_unsigned()) {
                f.value = std::to_string(v.get<std::uint64_t>());
            } else if (v.is_number_integer()) {
                f.value = std::to_string(v.get<std::int64_t>());
            } else if (v.is_number_float()) {
                f.value = format_double(v.get<double>());
            } else {
                throw ConfigError("config '" + key + "' has an unsupported type");
            }
        }
    }

    json resolved() const {
        json cfg = json::object();
        for (const auto& [key, f] : fields_) {
            if (!f.semantic) continue;
            if (f.kind == Kind::Flag) {
                cfg[key] = f.flag;
            } else if (f.value.empty()) {
                cfg[key] = nullptr;
            } else if (f.kind == Kind::Number || f.kind == Kind::Capacity) {
                cfg[key] = json_number(parse_number(key, f.value));
            } else if (f.kind == Kind::Integer) {
                cfg[key] = parse_unsigned(key, f.value);
            } else {
                cfg[key] = f.value;
            }
        }
        return cfg;
    }

    bool has(const std::string& key) const { return !field(key).value.empty(); }
    const std::string& text(const std::string& key) const { return field(key).value; }
    bool flag(const std::string& key) const { return field(key).flag; }

    double number(const std::string& key) const { return parse_number(key, require(key)); }
    std::optional<double> maybe_number(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return number(key);
    }
    std::uint64_t integer(const std::string& key) const {
        return parse_unsigned(key, require(key));
    }
    std::optional<std::uint64_t> maybe_integer(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return integer(key);
    }
    std::vector<double> list(const std::string& key) const {
        return parse_list(key, require(key));
    }

    Capacity capacity(const std::string& key) const {
        double v = number(key);
        if (std::isinf(v) && v > 0) return Capacity::unbounded();
        if (!(v >= 0.0)) throw ConfigError("--" + key + " must be >= 0 or 'inf'");
        return Capacity::mw(v);
    }

private:
    struct Field {
        Kind kind = Kind::Text;
        std::string value;
        bool flag = false;
        bool semantic = true;
        CLI::Option* opt = nullptr;
    };

    const Field& field(const std::string& key) const {
        auto it = fields_.find(key);
        if (it == fields_.end()) throw std::logic_error("unknown option " + key);
        return it->second;
    }
    const std::string& require(const std::string& key) const {
        const auto& v = field(key).value;
        if (v.empty()) throw ConfigError("--" + key + " is required");
        return v;
    }

    CLI::App* app_;
    std::map<std::string, Field> fields_;
};

// Provenance shared by every output of one run.
struct Context {
    std::string command;
    json config;
    std::string config_hash;
    std::optional<std::uint64_t> seed;
    std::ostream* progress = nullptr;  // null when stdout carries JSON

    void note(const std::string& msg) const {
        if (progress) *progress << msg << '\n';
    }

    std::string seed_text() const { return seed ? std::to_string(*seed) : "none"; }

    std::ofstream open(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + path + "'");
        return f;
    }

    void write_preamble(std::ostream& f) const {
        f << "# storesim " << kVersion << " command=" << command
          << " config_hash=" << config_hash << " seed=" << seed_text() << '\n';
    }

    void write_csv(const std::string& path, const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) const {
        auto f = open(path);
        write_preamble(f);
        for (std::size_t k = 0; k < header.size(); ++k) f << (k ? "," : "") << header[k];
        f << '\n';
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) f << (k ? "," : "") << row[k];
            f << '\n';
        }
        note("wrote " + path);
    }
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

// ---- shared option groups ----

void add_system(Options& o) {
    o.add("gmax", Kind::Capacity, "160", "Generator capacity in MW, or 'inf'");
    o.add("smax", Kind::Capacity, "0", "Storage capacity in MW, or 'inf'");
    o.add("cmax", Kind::Capacity, "",
          "Charging rate limit in MW (default: never binding)");
    o.add("dmax", Kind::Capacity, "",
          "Discharging rate limit in MW (default: never binding)");
    o.add("alpha", Kind::Number, "",
          "Round-trip efficiency; sets both efficiencies to sqrt(alpha)");
    o.add("eta-c", Kind::Number, "", "Charging efficiency");
    o.add("eta-d", Kind::Number, "", "Discharging efficiency");
    o.add("slot-hours", Kind::Number, format_double(1.0 / 6.0), "Slot length in hours");
}

void add_laplace(Options& o) {
    o.add("laplace-scale", Kind::Number, "13.99", "Scale (mean absolute deviation) in MW");
    o.add("laplace-mu", Kind::Number, "0", "Location in MW");
}

void add_policy(Options& o) {
    o.add("policy", Kind::Text, "min-gen",
          "min-gen | min-lolp | two-threshold | min-gen-constrained | "
          "min-lolp-constrained | suboptimal-lolp");
    o.add("sc", Kind::Number, "0", "Charging threshold in MW (two-threshold)");
    o.add("sd", Kind::Number, "0", "Discharging threshold in MW (two-threshold)");
}

void add_run(Options& o, const std::string& n_default) {
    o.add("n", Kind::Integer, n_default, "Slots per run, burn-in included");
    o.add("seed", Kind::Integer, "1", "Random seed");
    o.add("burn-in", Kind::Integer, "",
          "Slots excluded from averages (default: 1% of n, at least 10000)");
}

void add_output(Options& o) {
    o.add("out", Kind::Text, "", "Summary JSON path", false);
}

std::pair<double, double> efficiencies(const Options& o) {
    std::optional<double> alpha = o.maybe_number("alpha");
    std::optional<double> ec = o.maybe_number("eta-c");
    std::optional<double> ed = o.maybe_number("eta-d");
    if (alpha && !(*alpha > 0.0 && *alpha <= 1.0)) throw ConfigError("--alpha must lie in (0, 1]");
    double root = alpha ? std::sqrt(*alpha) : 1.0;
    if (alpha && ec && !ed) ed = *alpha / *ec;
    if (alpha && ed && !ec) ec = *alpha / *ed;
    double c = ec.value_or(root);
    double d = ed.value_or(root);
    if (alpha && std::abs(c * d - *alpha) > 1e-12)
        throw ConfigError("--alpha disagrees with --eta-c * --eta-d");
    return {c, d};
}

SystemParams system_params(const Options& o) {
    auto [ec, ed] = efficiencies(o);
    SystemParams p = SystemParams::unconstrained(o.capacity("gmax"), o.capacity("smax"), ec, ed,
                                                 o.number("slot-hours"));
    if (o.has("cmax")) p.c_max = o.capacity("cmax");
    if (o.has("dmax")) p.d_max = o.capacity("dmax");
    p.validate();
    return p;
}

LaplaceModel laplace(const Options& o) {
    return LaplaceModel(o.number("laplace-mu"), o.number("laplace-scale"));
}

PolicyKind policy_kind(const Options& o) {
    return policy_from_name(o.text("policy"), {o.number("sc"), o.number("sd")});
}

std::size_t burn_in_for(const Options& o, std::size_t n) {
    auto b = o.maybe_integer("burn-in");
    return b ? static_cast<std::size_t>(*b) : default_burn_in(n);
}

json params_json(const SystemParams& p) {
    return {{"g_max", json_number(p.g_max.value())},
            {"s_max", json_number(p.s_max.value())},
            {"c_max", json_number(p.c_max.value())},
            {"d_max", json_number(p.d_max.value())},
            {"eta_c", p.eta_c},
            {"eta_d", p.eta_d},
            {"alpha", p.alpha()},
            {"slot_hours", p.slot_hours}};
}

json report_json(const CostReport& r, double slot_hours) {
    return {{"j_g", r.j_g},
            {"j_g_energy_mwh", slot_hours * r.j_g},
            {"j_l_event", r.j_l_event},
            {"j_l_smoothed", json_optional(r.j_l_smoothed)},
            {"n", r.n},
            {"curtailed_avg", r.curtailed_avg},
            {"final_s", r.final_s}};
}

// Evaluates fn into out[key], or records why it is unavailable.
void attempt(json& out, const std::string& key, const std::function<json()>& fn) {
    try {
        out[key] = fn();
    } catch (const ConditionViolated&) {
        out[key] = "condition violated";
    } catch (const Error& e) {
        out[key] = json{{"error", e.what()}};
    }
}

// ---- commands ----

json cmd_simulate(const Options& o, Context& ctx) {
    SystemParams p = system_params(o);
    PolicyKind kind = policy_kind(o);
    validate_policy(p, kind);
    LaplaceModel lap = laplace(o);
    double s1 = o.has("s1") ? o.number("s1") : 0.0;

    Trace trace;
    std::size_t burn;
    if (o.has("trace")) {
        SchemaConfig sc;
        sc.gaps = o.text("gaps") == "interpolate" ? GapPolicy::Interpolate : GapPolicy::Reject;
        if (o.text("gaps") != "interpolate" && o.text("gaps") != "reject")
            throw ConfigError("--gaps must be reject or interpolate");
        TimeSeries ts = load_timeseries(o.text("trace"), sc);
        trace.deltas = ts.values;
        trace.origin = FileOrigin{o.text("trace")};
        burn = o.maybe_integer("burn-in").value_or(0);
        ctx.note("loaded " + std::to_string(ts.size()) + " slots from " + o.text("trace"));
    } else {
        auto n = static_cast<std::size_t>(o.integer("n"));
        trace = sample_iid(lap, n, o.integer("seed"));
        burn = burn_in_for(o, n);
        ctx.note("simulating " + std::to_string(n) + " slots, policy " + policy_name(kind));
    }

    RunOptions ro;
    ro.burn_in = burn;
    ro.smoothing = &lap;
    std::unique_ptr<std::ofstream> slots;
    if (o.has("slots-csv")) {
        slots = std::make_unique<std::ofstream>(ctx.open(o.text("slots-csv")));
        ctx.write_preamble(*slots);
        *slots << "slot,s,delta,g,c,d,next_s,lost_load,curtailed\n";
        ro.observer = [&](std::size_t i, double s, double delta, const SlotOutcome& out) {
            *slots << i << ',' << fmt(s) << ',' << fmt(delta) << ',' << fmt(out.applied.g) << ','
                   << fmt(out.applied.c) << ',' << fmt(out.applied.d) << ','
                   << fmt(out.next_s) << ',' << (out.lost_load ? 1 : 0) << ','
                   << fmt(out.curtailed) << '\n';
        };
    }
    CostReport r = run_trace(p, kind, trace, s1, ro);
    if (slots) ctx.note("wrote " + o.text("slots-csv"));

    json res = {{"params", params_json(p)},
                {"policy", policy_name(kind)},
                {"model", describe(lap)},
                {"burn_in", burn},
                {"report", report_json(r, p.slot_hours)}};
    if (const auto* tt = std::get_if<policy::TwoThreshold>(&kind))
        res["thresholds"] = {{"s_c", tt->thresholds.s_c}, {"s_d", tt->thresholds.s_d}};
    if (std::holds_alternative<policy::MinGeneration>(kind) && !o.has("trace"))
        attempt(res, "j_g_closed_form", [&] { return json(jg_closed_form(p, lap)); });
    return res;
}

json cmd_analyze(const Options& o, Context& ctx) {
    SystemParams p = system_params(o);
    LaplaceModel lap = laplace(o);
    ctx.note("evaluating closed forms for " + describe(lap));

    json res = {{"params", params_json(p)}, {"model", describe(lap)}};
    attempt(res, "j_g", [&] { return json_number(jg_closed_form(p, lap)); });
    attempt(res, "j_g_energy_mwh",
            [&] { return json_number(p.slot_hours * jg_closed_form(p, lap)); });
    attempt(res, "j_g_derivative_smax", [&] { return json_number(jg_derivative_smax(p, lap)); });
    attempt(res, "j_g_no_storage", [&] {
        return json_number(jg_closed_form(
            SystemParams::unconstrained(p.g_max, Capacity::mw(0.0), p.eta_c, p.eta_d), lap));
    });
    attempt(res, "j_g_unbounded_storage", [&] {
        return json_number(jg_closed_form(
            SystemParams::unconstrained(p.g_max, Capacity::unbounded(), p.eta_c, p.eta_d), lap));
    });
    attempt(res, "j_g_asymptotic", [&] { return json_number(jg_asymptotic(lap, p.alpha())); });
    attempt(res, "lolp_min_generation",
            [&] { return json_number(lolp_under_min_generation(p, lap)); });
    attempt(res, "rate_bounds", [&] {
        RateBounds rb = lolp_rate_bounds(p, lap);
        return json{{"gamma_min", rb.gamma_min},
                    {"gamma_max", rb.gamma_max},
                    {"lambda0", rb.lambda0}};
    });
    attempt(res, "lolp_conditions", [&] {
        AsympConditions c = lolp_asymp_conditions(lap, p);
        return json{{"tail", c.tail}, {"positive", c.positive}, {"holds", c.holds()}};
    });
    if (p.s_max.is_finite()) {
        attempt(res, "suboptimal_lolp", [&] { return json_number(suboptimal_lolp(p, lap)); });
        attempt(res, "acoe", [&] {
            AcoeWitness w = acoe_witness(p, lap);
            return json{{"eta", w.eta}, {"slope", w.slope}, {"scale", w.scale},
                        {"theta", w.theta}};
        });
    }
    if (o.has("reduction")) {
        double f = o.number("reduction");
        attempt(res, "smax_for_reduction",
                [&] { return json_number(smax_for_reduction_fraction(p, lap, f)); });
    }
    if (o.has("jg-target")) {
        double t = o.number("jg-target");
        attempt(res, "smax_for_jg_target",
                [&] { return json_number(smax_for_jg_target(p, lap, t)); });
    }
    return res;
}

json cmd_fit(const Options& o, Context& ctx) {
    SchemaConfig sc;
    if (o.text("gaps") != "interpolate" && o.text("gaps") != "reject")
        throw ConfigError("--gaps must be reject or interpolate");
    sc.gaps = o.text("gaps") == "interpolate" ? GapPolicy::Interpolate : GapPolicy::Reject;
    if (o.has("resample")) sc.resample_seconds = static_cast<std::int64_t>(o.integer("resample"));
    sc.label = "input";
    TimeSeries series = load_timeseries(o.text("input"), sc);
    if (o.has("load")) {
        SchemaConfig lc = sc;
        lc.label = "load";
        series = net_generation(series, load_timeseries(o.text("load"), lc));
    }
    ctx.note("fitting on " + std::to_string(series.size()) + " samples");

    auto lags = static_cast<std::size_t>(o.integer("lags"));
    std::optional<IndexRange> range;
    if (o.has("train-begin") || o.has("train-end")) {
        range = IndexRange{static_cast<std::size_t>(o.maybe_integer("train-begin").value_or(0)),
                           static_cast<std::size_t>(
                               o.maybe_integer("train-end").value_or(series.size()))};
    }
    FitOptions fo;
    fo.allow_degenerate = o.flag("allow-degenerate");
    PredictorModel m = fit_predictor(series, lags, range, fo);
    TimeSeries res_series = residuals(m, series);

    std::string loc = o.text("location");
    if (loc != "zero" && loc != "median") throw ConfigError("--location must be zero or median");
    LaplaceModel lap =
        fit_laplace(res_series.values, loc == "zero" ? LocationMode::Zero : LocationMode::Median);

    double sum = 0.0, sum_abs = 0.0;
    for (double r : res_series.values) {
        sum += r;
        sum_abs += std::abs(r);
    }
    double cnt = static_cast<double>(res_series.size());
    double mean = sum / cnt;
    double var = 0.0;
    for (double r : res_series.values) var += (r - mean) * (r - mean);
    double sd = res_series.size() > 1 ? std::sqrt(var / (cnt - 1.0)) : 0.0;
    double ks = ks_distance(res_series.values, CdfFunction::of(lap));

    if (o.has("residuals-csv")) {
        auto f = ctx.open(o.text("residuals-csv"));
        ctx.write_preamble(f);
        write_timeseries(f, res_series);
        ctx.note("wrote " + o.text("residuals-csv"));
    }

    return {{"predictor",
             {{"lags", m.lags},
              {"coefficients", m.coefficients},
              {"intercept", m.intercept},
              {"train_range", {m.train_range.begin, m.train_range.end}}}},
            {"laplace", {{"mu", lap.mu()}, {"b", lap.b()}}},
            {"residuals",
             {{"n", res_series.size()},
              {"mean", mean},
              {"mean_abs", sum_abs / cnt},
              {"std", sd},
              {"ks_distance", ks}}},
            {"step_seconds", series.step_seconds},
            {"start", format_rfc3339(series.start_time)}};
}

json cmd_sweep(const Options& o, Context& ctx) {
    if (o.text("axis") != "smax") throw ConfigError("--axis supports only 'smax'");
    SystemParams base = system_params(o);
    PolicyKind kind = policy_from_name(o.text("policy"));
    LaplaceModel lap = laplace(o);
    std::vector<double> values = o.list("values");
    auto n = static_cast<std::size_t>(o.integer("n"));

    SweepOptions so;
    so.threshold_fractions = {o.number("sc-frac"), o.number("sd-frac")};
    so.s1_fraction = o.number("s1-frac");
    so.burn_in = burn_in_for(o, n);
    so.threads = static_cast<unsigned>(o.integer("threads"));
    ctx.note("sweeping " + std::to_string(values.size()) + " storage capacities");
    SweepResult r = sweep_capacity(base, kind, lap, values, n, o.integer("seed"), so);

    std::vector<std::vector<std::string>> rows;
    json points = json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const CostReport& rep = r.reports[i];
        std::string sc = r.thresholds.empty() ? "" : fmt(r.thresholds[i].s_c);
        std::string sd = r.thresholds.empty() ? "" : fmt(r.thresholds[i].s_d);
        rows.push_back({fmt(values[i]), fmt(rep.j_g), fmt(rep.j_l_event), fmt(rep.j_l_smoothed),
                        fmt(rep.curtailed_avg), fmt(rep.final_s), sc, sd});
        json pt = report_json(rep, base.slot_hours);
        pt["s_max"] = values[i];
        points.push_back(pt);
    }
    if (o.has("csv"))
        ctx.write_csv(o.text("csv"),
                      {"s_max", "j_g", "j_l_event", "j_l_smoothed", "curtailed_avg", "final_s",
                       "s_c", "s_d"},
                      rows);
    return {{"axis", r.axis},
            {"policy", r.meta.policy},
            {"model", r.meta.model},
            {"base", params_json(base)},
            {"points", points}};
}

json cmd_pareto(const Options& o, Context& ctx) {
    SystemParams p = system_params(o);
    if (p.s_max.is_unbounded()) throw ConfigError("pareto needs a finite --smax");
    LaplaceModel lap = laplace(o);
    auto grid = threshold_grid(p.s_max.value(), o.number("grid-step"));
    auto n = static_cast<std::size_t>(o.integer("n"));
    ctx.note("evaluating " + std::to_string(grid.size()) + " threshold pairs");
    ParetoResult r = pareto_two_threshold(p, lap, grid, n, o.integer("seed"),
                                          static_cast<unsigned>(o.integer("threads")));

    std::vector<bool> on_front(r.points.size(), false);
    for (std::size_t i : r.frontier) on_front[i] = true;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& pt = r.points[i];
        rows.push_back({fmt(pt.thresholds.s_c), fmt(pt.thresholds.s_d), fmt(pt.report.j_g),
                        fmt(pt.report.j_l_event), fmt(pt.report.j_l_smoothed),
                        on_front[i] ? "1" : "0"});
    }
    if (o.has("csv"))
        ctx.write_csv(o.text("csv"), {"s_c", "s_d", "j_g", "j_l_event", "j_l_smoothed", "frontier"},
                      rows);
    json front = json::array();
    for (std::size_t i : r.frontier) {
        const auto& pt = r.points[i];
        front.push_back({{"s_c", pt.thresholds.s_c},
                         {"s_d", pt.thresholds.s_d},
                         {"j_g", pt.report.j_g},
                         {"j_l_smoothed", json_optional(pt.report.j_l_smoothed)}});
    }
    return {{"params", params_json(p)},
            {"model", r.meta.model},
            {"points", r.points.size()},
            {"frontier", front}};
}

json cmd_plan(const Options& o, Context& ctx) {
    auto [ec, ed] = efficiencies(o);
    LaplaceModel lap = laplace(o);
    PlanConfig cfg;
    cfg.eta_c = ec;
    cfg.eta_d = ed;
    cfg.n = static_cast<std::size_t>(o.integer("n"));
    cfg.seed = o.integer("seed");
    if (o.has("burn-in")) cfg.burn_in = static_cast<std::size_t>(o.integer("burn-in"));
    cfg.smax_hi = o.number("smax-hi");
    cfg.smax_tol = o.number("smax-tol");
    cfg.sd_tol = o.number("sd-tol");
    cfg.sc_fractions = o.list("sc-fractions");
    cfg.threads = static_cast<unsigned>(o.integer("threads"));
    std::vector<double> gmax = o.list("gmax-values");
    double jg = o.number("jg-target");
    double jl = o.number("jl-target");
    ctx.note("planning over " + std::to_string(gmax.size()) + " generator capacities");
    PlanResult r = plan_curve(lap, jg, jl, gmax, cfg);

    std::vector<std::vector<std::string>> rows;
    json points = json::array();
    for (const auto& pt : r.points) {
        rows.push_back({fmt(pt.g_max), pt.feasible ? "1" : "0",
                        pt.feasible ? fmt(pt.s_max) : "", pt.feasible ? fmt(pt.thresholds.s_c) : "",
                        pt.feasible ? fmt(pt.thresholds.s_d) : "",
                        pt.feasible ? fmt(pt.report.j_g) : "",
                        pt.feasible ? fmt(pt.report.j_l_smoothed) : "", pt.note});
        json j = {{"g_max", pt.g_max}, {"feasible", pt.feasible}};
        if (pt.feasible) {
            j["s_max"] = pt.s_max;
            j["s_c"] = pt.thresholds.s_c;
            j["s_d"] = pt.thresholds.s_d;
            j["j_g"] = pt.report.j_g;
            j["j_l_smoothed"] = json_optional(pt.report.j_l_smoothed);
        } else {
            j["note"] = pt.note;
        }
        points.push_back(j);
    }
    if (o.has("csv"))
        ctx.write_csv(o.text("csv"),
                      {"g_max", "feasible", "s_max", "s_c", "s_d", "j_g", "j_l_smoothed", "note"},
                      rows);
    return {{"jg_target", jg}, {"jl_target", jl}, {"model", describe(lap)}, {"points", points}};
}

json cmd_dp(const Options& o, Context& ctx) {
    SystemParams p = system_params(o);
    LaplaceModel lap = laplace(o);
    CostWeights w{o.number("rho1"), o.number("rho2")};
    Grid grid = make_grid(p, lap, static_cast<std::size_t>(o.integer("ns")),
                          static_cast<std::size_t>(o.integer("nd")));
    DpOptions opts;
    opts.tol = o.number("tol");
    opts.max_iter = static_cast<long>(o.integer("max-iter"));
    opts.threads = static_cast<unsigned>(o.integer("threads"));
    ctx.note("value iteration on " + std::to_string(grid.n_s) + " x " +
             std::to_string(grid.n_d) + " grid");
    DpSolution sol = value_iteration(p, lap, w, grid, opts);
    ThresholdFit fit = extract_thresholds(sol, grid);

    if (o.has("value-csv")) {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < grid.n_s; ++i)
            rows.push_back({fmt(grid.s_values[i]), fmt(sol.v[i])});
        ctx.write_csv(o.text("value-csv"), {"s", "v"}, rows);
    }
    if (o.has("policy-csv")) {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < grid.n_s; ++i)
            for (std::size_t j = 0; j < grid.n_d; ++j) {
                const Decision& d = sol.decision(i, j);
                std::size_t idx = i * grid.n_d + j;
                rows.push_back({fmt(grid.s_values[i]), fmt(grid.d_values[j].value),
                                fmt(grid.d_values[j].prob), fmt(d.g), fmt(d.c), fmt(d.d),
                                fmt(sol.next_s[idx]), sol.forced[idx] ? "1" : "0"});
            }
        ctx.write_csv(o.text("policy-csv"),
                      {"s", "delta", "prob", "g", "c", "d", "next_s", "forced"}, rows);
    }

    json res = {{"params", params_json(p)},
                {"model", describe(lap)},
                {"rho1", w.rho1},
                {"rho2", w.rho2},
                {"eta", sol.eta},
                {"iterations", sol.iterations},
                {"span_residual", sol.span_residual},
                {"thresholds", {{"s_c", fit.thresholds.s_c}, {"s_d", fit.thresholds.s_d}}},
                {"is_two_threshold", fit.is_two_threshold},
                {"max_deviation", fit.max_deviation},
                {"mean_deviation", fit.mean_deviation}};
    attempt(res, "two_slot_thresholds", [&] {
        ThresholdPair t = two_slot_thresholds(p, lap, w);
        return json{{"s_c", t.s_c}, {"s_d", t.s_d}};
    });
    return res;
}

// Human-readable key: value lines; arrays of objects are summarized by size.
void print_summary(std::ostream& out, const json& j, const std::string& prefix) {
    for (const auto& [key, v] : j.items()) {
        std::string name = prefix.empty() ? key : prefix + "." + key;
        if (v.is_object()) {
            print_summary(out, v, name);
        } else if (v.is_array() && !v.empty() && v.front().is_object()) {
            out << name << ": " << v.size() << " entries\n";
        } else if (v.is_number_float()) {
            out << name << ": " << fmt(v.get<double>()) << '\n';
        } else {
            out << name << ": " << v.dump() << '\n';
        }
    }
}

// ---- wiring ----

struct Command {
    std::string name;
    CLI::App* app = nullptr;
    std::unique_ptr<Options> opts;
    std::function<json(const Options&, Context&)> run;
    bool seeded = false;
    std::string config_path;
    bool stdout_json = false;
};

std::string default_threads() {
    const char* env = std::getenv("STORESIM_THREADS");
    return env && *env ? env : "0";
}

Command& make(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& app, const std::string& name,
              const std::string& help, std::function<json(const Options&, Context&)> run,
              bool seeded) {
    auto c = std::make_unique<Command>();
    c->name = name;
    c->app = app.add_subcommand(name, help);
    c->opts = std::make_unique<Options>(c->app);
    c->run = std::move(run);
    c->seeded = seeded;
    c->app->add_option("--config", c->config_path,
                       "Replay the resolved config of an earlier output JSON");
    c->app->add_flag("--stdout-json", c->stdout_json, "Print the summary JSON on stdout");
    add_output(*c->opts);
    cmds.push_back(std::move(c));
    return *cmds.back();
}

void add_threads(Options& o) {
    o.add("threads", Kind::Integer, default_threads(),
          "Worker threads (0: all cores; env STORESIM_THREADS)", false);
}

json read_config(const std::string& path, const std::string& command) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config '" + path + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (doc.contains("command") && doc["command"] != command)
        throw ConfigError("config was written by '" + doc["command"].get<std::string>() +
                          "', not '" + command + "'");
    json cfg = doc.contains("config") ? doc["config"] : doc;
    if (!cfg.is_object()) throw ConfigError("config section must be an object");
    return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Storage-backed generation planning: simulation, closed forms and DP"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Command>> cmds;

    {
        auto& c = make(cmds, app, "simulate", "Run one policy on a sampled or recorded trace",
                       cmd_simulate, true);
        add_system(*c.opts);
        add_laplace(*c.opts);
        add_policy(*c.opts);
        add_run(*c.opts, "1000000");
        c.opts->add("s1", Kind::Number, "0", "Initial stored power in MW");
        c.opts->add("trace", Kind::Text, "", "CSV trace of net generation (timestamp,value_mw)");
        c.opts->add("gaps", Kind::Text, "reject", "Trace gaps: reject | interpolate");
        c.opts->add("slots-csv", Kind::Text, "", "Per-slot CSV path", false);
    }
    {
        auto& c = make(cmds, app, "analyze", "Closed-form results for a Laplace disturbance",
                       cmd_analyze, false);
        add_system(*c.opts);
        add_laplace(*c.opts);
        c.opts->add("reduction", Kind::Number, "",
                    "Also report the storage achieving this fraction of the largest reduction");
        c.opts->add("jg-target", Kind::Number, "",
                    "Also report the least storage with average generation <= target");
    }
    {
        auto& c = make(cmds, app, "fit", "Fit the linear predictor and the Laplace error model",
                       cmd_fit, false);
        c.opts->add("input", Kind::Text, "", "CSV series (wind, or net generation)");
        c.opts->add("load", Kind::Text, "", "Optional load CSV; the fit uses input - load");
        c.opts->add("lags", Kind::Integer, "6", "Predictor lags");
        c.opts->add("train-begin", Kind::Integer, "", "First training target index");
        c.opts->add("train-end", Kind::Integer, "", "One past the last training target index");
        c.opts->add("location", Kind::Text, "zero", "Laplace location: zero | median");
        c.opts->add("allow-degenerate", Kind::Flag, "false",
                    "Intercept-only model for a rank-deficient design");
        c.opts->add("gaps", Kind::Text, "reject", "Gaps: reject | interpolate");
        c.opts->add("resample", Kind::Integer, "", "Mean-aggregate to this step in seconds");
        c.opts->add("residuals-csv", Kind::Text, "", "Residual series CSV path", false);
    }
    {
        auto& c = make(cmds, app, "sweep", "Cost versus storage capacity on one sampled trace",
                       cmd_sweep, true);
        add_system(*c.opts);
        add_laplace(*c.opts);
        add_run(*c.opts, "1000000");
        c.opts->add("policy", Kind::Text, "min-gen", "Policy name (see simulate)");
        c.opts->add("axis", Kind::Text, "smax", "Swept quantity (smax)");
        c.opts->add("values", Kind::List, "0:100:10", "a:b:step or comma list, in MW");
        c.opts->add("sc-frac", Kind::Number, "0", "Two-threshold s_c as a fraction of s_max");
        c.opts->add("sd-frac", Kind::Number, "0", "Two-threshold s_d as a fraction of s_max");
        c.opts->add("s1-frac", Kind::Number, "0", "Initial storage as a fraction of s_max");
        c.opts->add("csv", Kind::Text, "", "Curve CSV path", false);
        add_threads(*c.opts);
    }
    {
        auto& c = make(cmds, app, "pareto", "Two-threshold generation/loss tradeoff", cmd_pareto,
                       true);
        add_system(*c.opts);
        add_laplace(*c.opts);
        add_run(*c.opts, "200000");
        c.opts->add("grid-step", Kind::Number, "5", "Threshold grid step in MW");
        c.opts->add("csv", Kind::Text, "", "All points CSV path", false);
        add_threads(*c.opts);
    }
    {
        auto& c = make(cmds, app, "plan", "Least storage per generator capacity meeting targets",
                       cmd_plan, true);
        add_laplace(*c.opts);
        c.opts->add("alpha", Kind::Number, "0.6", "Round-trip efficiency");
        c.opts->add("eta-c", Kind::Number, "", "Charging efficiency");
        c.opts->add("eta-d", Kind::Number, "", "Discharging efficiency");
        c.opts->add("jg-target", Kind::Number, "3.6", "Average generation target in MW");
        c.opts->add("jl-target", Kind::Number, "2e-6", "Loss-of-load probability target");
        c.opts->add("gmax-values", Kind::List, "150:190:10", "a:b:step or comma list, in MW");
        c.opts->add("n", Kind::Integer, "200000", "Slots per evaluation, burn-in included");
        c.opts->add("seed", Kind::Integer, "1", "Random seed");
        c.opts->add("burn-in", Kind::Integer, "", "Slots excluded from averages");
        c.opts->add("smax-hi", Kind::Number, "400", "Upper end of the storage search in MW");
        c.opts->add("smax-tol", Kind::Number, "1", "Storage bisection tolerance in MW");
        c.opts->add("sd-tol", Kind::Number, "0.5", "Threshold bisection tolerance in MW");
        c.opts->add("sc-fractions", Kind::List, "0,0.1,0.2,0.3,0.4,0.5",
                    "Charging thresholds tried, as fractions of s_max");
        c.opts->add("csv", Kind::Text, "", "Curve CSV path", false);
        add_threads(*c.opts);
    }
    {
        auto& c = make(cmds, app, "dp", "Average-cost value iteration", cmd_dp, false);
        add_system(*c.opts);
        add_laplace(*c.opts);
        c.opts->add("rho1", Kind::Number, "1", "Weight of average generation");
        c.opts->add("rho2", Kind::Number, "0", "Weight of loss-of-load probability");
        c.opts->add("ns", Kind::Integer, "401", "Storage grid points");
        c.opts->add("nd", Kind::Integer, "1001", "Disturbance bins");
        c.opts->add("tol", Kind::Number, "1e-9", "Span stopping tolerance");
        c.opts->add("max-iter", Kind::Integer, "100000", "Iteration cap");
        c.opts->add("value-csv", Kind::Text, "", "Relative value CSV path", false);
        c.opts->add("policy-csv", Kind::Text, "", "Policy table CSV path", false);
        add_threads(*c.opts);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    Command* cmd = nullptr;
    for (auto& c : cmds)
        if (c->app->parsed()) cmd = c.get();
    if (!cmd) return kExitConfig;

    Context ctx;
    ctx.command = cmd->name;
    ctx.progress = cmd->stdout_json ? nullptr : &out;

    try {
        if (!cmd->config_path.empty()) cmd->opts->load(read_config(cmd->config_path, cmd->name));
        ctx.config = cmd->opts->resolved();
        ctx.config_hash = "fnv1a64:" + hex64(fnv1a64(ctx.config.dump()));
        if (cmd->seeded) ctx.seed = cmd->opts->integer("seed");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        json result = cmd->run(*cmd->opts, ctx);
        json doc = {{"tool", "storesim"},
                    {"version", kVersion},
                    {"command", cmd->name},
                    {"config_hash", ctx.config_hash},
                    {"seed", ctx.seed ? json(*ctx.seed) : json(nullptr)},
                    {"config", ctx.config},
                    {"result", result}};
        if (cmd->opts->has("out")) {
            auto f = ctx.open(cmd->opts->text("out"));
            f << doc.dump(2) << '\n';
            ctx.note("wrote " + cmd->opts->text("out"));
        }
        if (cmd->stdout_json) {
            out << doc.dump(2) << '\n';
        } else {
            print_summary(out, result, "");
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidRegime& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidThresholds& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidGrid& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace storesim::cli
