#include "storesim/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "storesim/errors.hpp"
#include "storesim/rng.hpp"

namespace storesim {

namespace {

bool read_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::int64_t parse_rfc3339(const std::string& text) {
    using namespace std::chrono;
    const std::string& s = text;
    int Y, M, D, h, m, sec;
    auto bad = [&](const char* why) {
        return InvalidArgument("bad RFC3339 timestamp '" + text + "': " + why);
    };
    if (!(read_int(s, 0, 4, Y) && s.size() > 4 && s[4] == '-' && read_int(s, 5, 2, M) &&
          s.size() > 7 && s[7] == '-' && read_int(s, 8, 2, D)))
        throw bad("date");
    if (s.size() < 19 || !(s[10] == 'T' || s[10] == 't' || s[10] == ' '))
        throw bad("missing time");
    if (!(read_int(s, 11, 2, h) && s[13] == ':' && read_int(s, 14, 2, m) && s[16] == ':' &&
          read_int(s, 17, 2, sec)))
        throw bad("time");
    year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
    if (!ymd.ok() || h > 23 || m > 59 || sec > 60) throw bad("field out of range");

    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (s[pos] != '0') throw bad("fractional seconds are not supported");
            ++pos;
            ++digits;
        }
        if (digits == 0) throw bad("empty fraction");
    }
    long offset = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        int oh, om;
        if (!(read_int(s, pos + 1, 2, oh) && pos + 3 < s.size() && s[pos + 3] == ':' &&
              read_int(s, pos + 4, 2, om)))
            throw bad("offset");
        offset = (s[pos] == '-' ? -1 : 1) * (oh * 3600L + om * 60L);
        pos += 6;
    } else {
        throw bad("missing UTC offset");
    }
    if (pos != s.size()) throw bad("trailing characters");

    auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + h * 3600 + m * 60 + sec - offset;
}

std::string format_rfc3339(std::int64_t t) {
    using namespace std::chrono;
    std::int64_t days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
    std::int64_t rem = t - days * 86400;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

TimeSeries read_timeseries(std::istream& in, const SchemaConfig& cfg) {
    // Lines starting with '#' carry provenance and are skipped.
    std::string line;
    std::size_t lineno = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++lineno;
        header = trim(line);
        if (header.empty() || header[0] != '#') break;
        header.clear();
    }
    if (header.empty()) throw ParseError(lineno ? lineno : 1, "missing header");
    std::size_t header_line = lineno;
    auto comma = header.find(',');
    if (comma == std::string::npos || trim(header.substr(0, comma)) != "timestamp")
        throw ParseError(header_line, "header must be 'timestamp,value_mw'");
    std::string unit_col = trim(header.substr(comma + 1));
    double scale;
    if (unit_col == "value_mw") scale = 1.0;
    else if (unit_col == "value_kw") scale = 1e-3;
    else if (unit_col == "value_gw") scale = 1e3;
    else throw UnitError("unsupported value column '" + unit_col + "' (expected value_mw)");

    std::vector<std::int64_t> times;
    std::vector<double> vals;
    std::vector<std::size_t> rows;
    while (std::getline(in, line)) {
        ++lineno;
        std::string row = trim(line);
        if (row.empty() || row[0] == '#') continue;
        auto c = row.find(',');
        if (c == std::string::npos) throw ParseError(lineno, "expected two columns");
        std::int64_t t;
        try {
            t = parse_rfc3339(trim(row.substr(0, c)));
        } catch (const InvalidArgument& e) {
            throw ParseError(lineno, e.what());
        }
        std::string vtext = trim(row.substr(c + 1));
        double v = 0.0;
        auto res = std::from_chars(vtext.data(), vtext.data() + vtext.size(), v);
        if (res.ec != std::errc() || res.ptr != vtext.data() + vtext.size() || !std::isfinite(v))
            throw ParseError(lineno, "bad value '" + vtext + "'");
        if (!times.empty() && t <= times.back())
            throw ParseError(lineno, "timestamps must be strictly increasing");
        times.push_back(t);
        vals.push_back(v * scale);
        rows.push_back(lineno);
    }
    if (times.empty()) throw InsufficientData("series has no rows");

    std::int64_t step;
    if (cfg.step_seconds) step = *cfg.step_seconds;
    else if (times.size() >= 2) step = times[1] - times[0];
    else throw InsufficientData("cannot infer the step of a single-row series");
    if (step <= 0) throw InvalidArgument("step must be positive");

    TimeSeries ts;
    ts.start_time = times.front();
    ts.step_seconds = step;
    ts.label = cfg.label;
    ts.values.reserve(vals.size());
    ts.values.push_back(vals.front());
    for (std::size_t i = 1; i < times.size(); ++i) {
        std::int64_t dt = times[i] - times[i - 1];
        if (dt % step != 0)
            throw ParseError(rows[i], "timestamp not aligned to the " + std::to_string(step) +
                                        " s step");
        std::int64_t missing = dt / step - 1;
        if (missing > 0) {
            std::size_t first = ts.values.size();
            std::size_t last = first + static_cast<std::size_t>(missing) - 1;
            if (cfg.gaps == GapPolicy::Reject)
                throw GapError(first, last,
                               "missing samples between " + format_rfc3339(times[i - 1]) +
                                   " and " + format_rfc3339(times[i]));
            double a = vals[i - 1];
            double b = vals[i];
            for (std::int64_t k = 1; k <= missing; ++k) {
                double w = static_cast<double>(k) / static_cast<double>(missing + 1);
                ts.values.push_back(a + w * (b - a));
            }
        }
        ts.values.push_back(vals[i]);
    }
    if (cfg.resample_seconds) return resample_mean(ts, *cfg.resample_seconds);
    return ts;
}

TimeSeries load_timeseries(const std::string& path, const SchemaConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    SchemaConfig c = cfg;
    if (c.label.empty()) c.label = path;
    return read_timeseries(in, c);
}

void write_timeseries(std::ostream& out, const TimeSeries& ts) {
    out << "timestamp,value_mw\n";
    for (std::size_t i = 0; i < ts.values.size(); ++i)
        out << format_rfc3339(ts.time_at(i)) << ',' << format_double(ts.values[i]) << '\n';
}

void emit_timeseries(const std::string& path, const TimeSeries& ts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path + "'");
    write_timeseries(out, ts);
}

TimeSeries resample_mean(const TimeSeries& ts, std::int64_t target) {
    if (target <= 0 || target % ts.step_seconds != 0)
        throw InvalidArgument("resample step must be a positive multiple of the series step");
    auto k = static_cast<std::size_t>(target / ts.step_seconds);
    TimeSeries out;
    out.start_time = ts.start_time;
    out.step_seconds = target;
    out.label = ts.label;
    for (std::size_t i = 0; i + k <= ts.values.size(); i += k) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += ts.values[i + j];
        out.values.push_back(sum / static_cast<double>(k));
    }
    return out;
}

TimeSeries net_generation(const TimeSeries& wind, const TimeSeries& load) {
    if (wind.step_seconds != load.step_seconds)
        throw InvalidArgument("wind and load steps differ; resample first");
    if (wind.start_time != load.start_time || wind.size() != load.size())
        throw InvalidArgument("wind and load must cover the same time range");
    TimeSeries out;
    out.start_time = wind.start_time;
    out.step_seconds = wind.step_seconds;
    out.label = "net";
    out.values.resize(wind.size());
    for (std::size_t i = 0; i < wind.size(); ++i) out.values[i] = wind.values[i] - load.values[i];
    return out;
}

PredictorModel fit_predictor(const std::vector<double>& x, std::size_t lags, IndexRange range,
                             const FitOptions& opts) {
    if (lags == 0) throw InvalidArgument("lags must be at least 1");
    if (range.end > x.size() || range.begin > range.end)
        throw InvalidArgument("training range outside the series");
    std::size_t first = std::max(range.begin, lags);
    if (range.end <= first || range.end - first <= lags)
        throw InsufficientData("training range too short for " + std::to_string(lags) + " lags");
    std::size_t rows = range.end - first;
    const auto p = static_cast<Eigen::Index>(lags);

    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(p);
    double ybar = 0.0;
    for (std::size_t t = first; t < range.end; ++t) {
        ybar += x[t];
        for (Eigen::Index k = 0; k < p; ++k) xbar[k] += x[t - 1 - static_cast<std::size_t>(k)];
    }
    ybar /= static_cast<double>(rows);
    xbar /= static_cast<double>(rows);

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd row(p);
    for (std::size_t t = first; t < range.end; ++t) {
        for (Eigen::Index k = 0; k < p; ++k)
            row[k] = x[t - 1 - static_cast<std::size_t>(k)] - xbar[k];
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
        xty += row * (x[t] - ybar);
    }
    xtx = xtx.selfadjointView<Eigen::Lower>();

    PredictorModel m;
    m.lags = lags;
    m.train_range = {first, range.end};  // targets actually used

    // Rank check on the unregularized centered design.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(xtx, Eigen::EigenvaluesOnly);
    double top = eig.eigenvalues().maxCoeff();
    double bottom = eig.eigenvalues().minCoeff();
    bool singular = !(top > 0.0) || bottom <= 1e-12 * top;
    if (singular && !opts.allow_degenerate)
        throw SingularDesign("predictor design is rank-deficient (constant or collinear lags)");
    if (singular) {
        m.coefficients.assign(lags, 0.0);
        m.intercept = ybar;
        return m;
    }

    Eigen::MatrixXd a = xtx;
    a.diagonal().array() += opts.ridge;
    Eigen::VectorXd beta = a.ldlt().solve(xty);
    m.coefficients.assign(beta.data(), beta.data() + p);
    m.intercept = ybar - beta.dot(xbar);
    return m;
}

PredictorModel fit_predictor(const TimeSeries& series, std::size_t lags,
                             std::optional<IndexRange> train_range, const FitOptions& opts) {
    return fit_predictor(series.values, lags, train_range.value_or(IndexRange{0, series.size()}),
                         opts);
}

double predict_at(const PredictorModel& m, const std::vector<double>& x, std::size_t t) {
    if (t < m.lags || t >= x.size()) throw InvalidArgument("prediction index out of range");
    double y = m.intercept;
    for (std::size_t k = 0; k < m.lags; ++k) y += m.coefficients[k] * x[t - 1 - k];
    return y;
}

TimeSeries residuals(const PredictorModel& m, const TimeSeries& series,
                     std::optional<IndexRange> eval_range) {
    IndexRange r = eval_range.value_or(IndexRange{0, series.size()});
    if (r.end > series.size() || r.begin > r.end)
        throw InvalidArgument("evaluation range outside the series");
    std::size_t first = std::max(r.begin, m.lags);
    TimeSeries out;
    out.step_seconds = series.step_seconds;
    out.start_time = series.time_at(first);
    out.label = series.label.empty() ? "residual" : series.label + ":residual";
    for (std::size_t t = first; t < r.end; ++t)
        out.values.push_back(series.values[t] - predict_at(m, series.values, t));
    return out;
}

LaplaceModel fit_laplace(const std::vector<double>& x, LocationMode mode) {
    if (x.size() < 2) throw InsufficientData("Laplace fit needs at least two residuals");
    double loc = 0.0;
    if (mode == LocationMode::Median) {
        std::vector<double> s = x;
        auto mid = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
        std::nth_element(s.begin(), mid, s.end());
        loc = *mid;
        if (s.size() % 2 == 0) loc = 0.5 * (loc + *std::max_element(s.begin(), mid));
    }
    double acc = 0.0;
    for (double v : x) acc += std::abs(v - loc);
    double b = acc / static_cast<double>(x.size());
    if (!(b > 0.0)) throw InsufficientData("residuals have zero spread");
    return LaplaceModel(loc, b);
}

CdfFunction CdfFunction::of(const Distribution& d) {
    return {[&d](double x) { return d.cdf(x); }, [&d](double x) { return d.cdf_left(x); }};
}

double ks_distance(std::vector<double> sample, const CdfFunction& cdf) {
    if (sample.empty()) throw InsufficientData("KS distance of an empty sample");
    if (!cdf.at) throw InvalidArgument("reference cdf missing");
    std::sort(sample.begin(), sample.end());
    const auto& before = cdf.before ? cdf.before : cdf.at;
    double n = static_cast<double>(sample.size());
    double worst = 0.0;
    std::size_t i = 0;
    while (i < sample.size()) {
        std::size_t j = i;
        while (j < sample.size() && sample[j] == sample[i]) ++j;
        double v = sample[i];
        worst = std::max(worst, std::abs(static_cast<double>(i) / n - before(v)));
        worst = std::max(worst, std::abs(static_cast<double>(j) / n - cdf.at(v)));
        i = j;
    }
    return worst;
}

TimeSeries synthetic_ar(const std::vector<double>& coeffs, double intercept,
                        const Distribution& noise, std::size_t n, std::uint64_t seed,
                        std::int64_t step_seconds) {
    if (coeffs.empty()) throw InvalidArgument("AR model needs at least one coefficient");
    double sum = 0.0;
    for (double c : coeffs) sum += c;
    double mean = std::abs(1.0 - sum) > 1e-12 ? intercept / (1.0 - sum) : intercept;
    constexpr std::size_t kWarmup = 1000;
    std::size_t p = coeffs.size();
    std::vector<double> x(p, mean);
    x.reserve(p + kWarmup + n);
    Philox4x64 rng(seed, 1);
    for (std::size_t t = 0; t < kWarmup + n; ++t) {
        double y = intercept + noise.quantile(to_unit_open(rng()));
        for (std::size_t k = 0; k < p; ++k) y += coeffs[k] * x[x.size() - 1 - k];
        x.push_back(y);
    }
    TimeSeries ts;
    ts.step_seconds = step_seconds;
    ts.label = "synthetic-ar";
    ts.values.assign(x.end() - static_cast<std::ptrdiff_t>(n), x.end());
    return ts;
}

}  // namespace storesim
