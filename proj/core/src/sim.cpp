#include "storesim/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "storesim/errors.hpp"
#include "storesim/rng.hpp"

namespace storesim {

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
    unsigned workers = std::min<std::size_t>(resolve_threads(threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::size_t default_burn_in(std::size_t n) {
    std::size_t b = std::max<std::size_t>(n / 100, 10000);
    return std::min(b, n / 2);
}

CostReport run_trace(const SystemParams& p, const PolicyKind& policy, const Trace& trace,
                     double s1, const RunOptions& opts) {
    validate_policy(p, policy);
    const auto& deltas = trace.deltas;
    if (deltas.empty()) throw EmptyTrace("trace has no slots");
    if (!(s1 >= 0.0 && s1 <= p.s_max.value()))
        throw InvalidArgument("initial storage must lie in [0, s_max]");
    if (opts.burn_in >= deltas.size())
        throw InvalidArgument("burn-in must be shorter than the trace");

    const double neg_g = -p.g_max.value();
    double s = s1;
    double sum_g = 0.0;
    double sum_curtailed = 0.0;
    double sum_smoothed = 0.0;
    std::size_t losses = 0;

    for (std::size_t i = 0; i < deltas.size(); ++i) {
        double delta = deltas[i];
        SlotOutcome out = step(p, s, delta, decide(p, policy, s, delta));
        if (i >= opts.burn_in) {
            sum_g += out.g_used;
            sum_curtailed += out.curtailed;
            losses += out.lost_load ? 1 : 0;
            if (opts.smoothing) sum_smoothed += opts.smoothing->cdf_left(neg_g - max_discharge(p, s));
        }
        if (opts.observer) opts.observer(i, s, delta, out);
        s = out.next_s;
    }

    double m = static_cast<double>(deltas.size() - opts.burn_in);
    CostReport r;
    r.n = deltas.size() - opts.burn_in;
    r.j_g = sum_g / m;
    r.j_l_event = static_cast<double>(losses) / m;
    if (opts.smoothing) r.j_l_smoothed = sum_smoothed / m;
    r.curtailed_avg = sum_curtailed / m;
    r.final_s = s;
    return r;
}

Trace sample_iid(const Distribution& dist, std::size_t n, std::uint64_t seed,
                 std::uint64_t stream) {
    if (n == 0) throw EmptyTrace("cannot sample an empty trace");
    Trace t;
    t.deltas.resize(n);
    Philox4x64 rng(seed, stream);
    for (auto& x : t.deltas) x = dist.quantile(to_unit_open(rng()));
    t.origin = SyntheticOrigin{seed, describe(dist)};
    return t;
}

namespace {

Histogram interior_histogram(const std::vector<double>& sorted, double lo, double hi,
                             std::size_t bins, std::size_t total) {
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    if (bins == 0 || !(hi > lo) || !std::isfinite(hi) || total == 0) return h;
    h.density.assign(bins, 0.0);
    double width = (hi - lo) / static_cast<double>(bins);
    for (double x : sorted) {
        if (!(x > lo && x < hi)) continue;
        auto k = static_cast<std::size_t>((x - lo) / width);
        h.density[std::min(k, bins - 1)] += 1.0;
    }
    for (auto& d : h.density) d /= static_cast<double>(total) * width;
    return h;
}

double fraction_equal(const std::vector<double>& v, double x) {
    auto [a, b] = std::equal_range(v.begin(), v.end(), x);
    return static_cast<double>(b - a) / static_cast<double>(v.size());
}

}  // namespace

StationarySample stationary_histogram(const SystemParams& p, const PolicyKind& policy,
                                      const Trace& trace, double s1, std::size_t burn_in,
                                      std::size_t bins) {
    StationarySample out;
    std::size_t keep = trace.deltas.size() > burn_in ? trace.deltas.size() - burn_in : 0;
    out.storage.reserve(keep);
    out.generation.reserve(keep);
    RunOptions opts;
    opts.burn_in = burn_in;
    opts.observer = [&](std::size_t i, double s, double, const SlotOutcome& o) {
        if (i < burn_in) return;
        out.storage.push_back(s);
        out.generation.push_back(o.g_used);
    };
    run_trace(p, policy, trace, s1, opts);

    std::sort(out.storage.begin(), out.storage.end());
    std::sort(out.generation.begin(), out.generation.end());
    double smax = p.s_max.value();
    double gmax = p.g_max.value();
    out.storage_atom_empty = fraction_equal(out.storage, 0.0);
    out.storage_atom_full = std::isfinite(smax) ? fraction_equal(out.storage, smax) : 0.0;
    out.generation_atom_zero = fraction_equal(out.generation, 0.0);
    out.generation_atom_full = std::isfinite(gmax) ? fraction_equal(out.generation, gmax) : 0.0;

    double s_hi = std::isfinite(smax) ? smax : (out.storage.empty() ? 0.0 : out.storage.back());
    double g_hi = std::isfinite(gmax) ? gmax : (out.generation.empty() ? 0.0 : out.generation.back());
    out.storage_hist = interior_histogram(out.storage, 0.0, s_hi, bins, out.storage.size());
    out.generation_hist =
        interior_histogram(out.generation, 0.0, g_hi, bins, out.generation.size());
    return out;
}

StationarySample stationary_histogram(const SystemParams& p, const PolicyKind& policy,
                                      const Distribution& dist, std::size_t n,
                                      std::size_t burn_in, std::uint64_t seed,
                                      std::size_t bins) {
    Trace t = sample_iid(dist, n + burn_in, seed);
    return stationary_histogram(p, policy, t, 0.0, burn_in, bins);
}

namespace {

void require_increasing(const std::vector<double>& v, const char* what) {
    if (v.empty()) throw InvalidArgument(std::string(what) + " must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0)
            throw InvalidArgument(std::string(what) + " must be finite and non-negative");
        if (i > 0 && !(v[i] > v[i - 1]))
            throw InvalidArgument(std::string(what) + " must be strictly increasing");
    }
}

SystemParams with_storage(const SystemParams& base, double smax) {
    if (base.is_unconstrained_rates())
        return SystemParams::unconstrained(base.g_max, Capacity::mw(smax), base.eta_c,
                                           base.eta_d, base.slot_hours);
    SystemParams p = base;
    p.s_max = Capacity::mw(smax);
    return p;
}

double loss_metric(const CostReport& r) { return r.j_l_smoothed.value_or(r.j_l_event); }

}  // namespace

SweepResult sweep_capacity(const SystemParams& base, const PolicyKind& policy,
                           const Distribution& dist, const std::vector<double>& smax_values,
                           std::size_t n, std::uint64_t seed, const SweepOptions& opts) {
    require_increasing(smax_values, "s_max values");
    std::size_t burn = opts.burn_in.value_or(default_burn_in(n));
    Trace trace = sample_iid(dist, n, seed);
    bool two = std::holds_alternative<policy::TwoThreshold>(policy);

    SweepResult res;
    res.axis = "s_max";
    res.axis_values = smax_values;
    res.reports.resize(smax_values.size());
    if (two) res.thresholds.resize(smax_values.size());
    res.meta = {policy_name(policy), describe(dist), seed, n, base};

    parallel_for(smax_values.size(), opts.threads, [&](std::size_t i) {
        double smax = smax_values[i];
        SystemParams p = with_storage(base, smax);
        PolicyKind pk = policy;
        if (two) {
            ThresholdPair t{opts.threshold_fractions.s_c * smax,
                            opts.threshold_fractions.s_d * smax};
            pk = policy::TwoThreshold{t};
            res.thresholds[i] = t;
        }
        RunOptions ro;
        ro.burn_in = burn;
        ro.smoothing = opts.smoothing ? &dist : nullptr;
        res.reports[i] = run_trace(p, pk, trace, opts.s1_fraction * smax, ro);
    });
    return res;
}

std::vector<ThresholdPair> threshold_grid(double s_max, double step) {
    if (!(step > 0.0) || !(s_max >= 0.0) || !std::isfinite(s_max))
        throw InvalidArgument("threshold grid needs a positive step and finite s_max");
    std::vector<double> axis;
    auto count = static_cast<std::size_t>(std::floor(s_max / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) axis.push_back(std::min(s_max, k * step));
    if (axis.back() < s_max) axis.push_back(s_max);
    std::vector<ThresholdPair> grid;
    for (std::size_t i = 0; i < axis.size(); ++i)
        for (std::size_t j = i; j < axis.size(); ++j) grid.push_back({axis[i], axis[j]});
    return grid;
}

std::vector<std::size_t> nondominated(const std::vector<ParetoPoint>& points) {
    std::vector<std::size_t> idx(points.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = points[a].report;
        const auto& rb = points[b].report;
        if (ra.j_g != rb.j_g) return ra.j_g < rb.j_g;
        if (loss_metric(ra) != loss_metric(rb)) return loss_metric(ra) < loss_metric(rb);
        return a < b;
    });
    std::vector<std::size_t> front;
    double best = INFINITY;
    for (std::size_t i : idx) {
        double l = loss_metric(points[i].report);
        if (l < best) {
            front.push_back(i);
            best = l;
        }
    }
    return front;
}

ParetoResult pareto_two_threshold(const SystemParams& p, const Distribution& dist,
                                  const std::vector<ThresholdPair>& grid, std::size_t n,
                                  std::uint64_t seed, unsigned threads) {
    if (grid.empty()) throw InvalidArgument("threshold grid is empty");
    for (const auto& t : grid) validate_thresholds(p, t);
    Trace trace = sample_iid(dist, n, seed);
    std::size_t burn = default_burn_in(n);

    ParetoResult res;
    res.points.resize(grid.size());
    res.meta = {"two-threshold", describe(dist), seed, n, p};
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        RunOptions ro;
        ro.burn_in = burn;
        ro.smoothing = &dist;
        res.points[i] = {grid[i], run_trace(p, policy::TwoThreshold{grid[i]}, trace, 0.0, ro)};
    });
    res.frontier = nondominated(res.points);
    return res;
}

namespace {

struct PlanEvaluator {
    const Distribution& dist;
    const Trace& trace;
    std::size_t burn;
    double jg_target;
    double jl_target;
    const PlanConfig& cfg;

    CostReport eval(const SystemParams& p, ThresholdPair t) const {
        RunOptions ro;
        ro.burn_in = burn;
        ro.smoothing = &dist;
        // Start full: the chain then spends its burn-in near the thresholds.
        return run_trace(p, policy::TwoThreshold{t}, trace, p.s_max.value(), ro);
    }

    // Some two-threshold policy at this (g_max, s_max) meets both targets.
    bool feasible(double gmax, double smax, ThresholdPair& found, CostReport& rep,
                  std::string& why) const {
        SystemParams p = SystemParams::unconstrained(Capacity::mw(gmax), Capacity::mw(smax),
                                                     cfg.eta_c, cfg.eta_d);
        // Thresholds only add generation to the greedy policy and only remove loss
        // from the full-storage policy, so these two runs bound the whole family.
        CostReport greedy = eval(p, {0.0, 0.0});
        if (greedy.j_g > jg_target) {
            why = "generation target unreachable";
            return false;
        }
        CostReport full = eval(p, {smax, smax});
        if (*full.j_l_smoothed > jl_target) {
            why = "loss-of-load target unreachable";
            return false;
        }
        for (double frac : cfg.sc_fractions) {
            double sc = frac * smax;
            CostReport hi_rep = eval(p, {sc, smax});
            if (*hi_rep.j_l_smoothed > jl_target) continue;
            // Smallest discharging threshold meeting the loss target.
            double lo = sc;
            double hi = smax;
            CostReport at_hi = hi_rep;
            CostReport at_lo = eval(p, {sc, sc});
            if (*at_lo.j_l_smoothed <= jl_target) {
                hi = sc;
                at_hi = at_lo;
            } else {
                while (hi - lo > cfg.sd_tol) {
                    double mid = 0.5 * (lo + hi);
                    CostReport r = eval(p, {sc, mid});
                    if (*r.j_l_smoothed <= jl_target) {
                        hi = mid;
                        at_hi = r;
                    } else {
                        lo = mid;
                    }
                }
            }
            if (at_hi.j_g <= jg_target) {
                found = {sc, hi};
                rep = at_hi;
                return true;
            }
        }
        why = "no threshold pair meets both targets";
        return false;
    }
};

}  // namespace

PlanResult plan_curve(const Distribution& dist, double jg_target, double jl_target,
                      const std::vector<double>& gmax_values, const PlanConfig& cfg) {
    require_increasing(gmax_values, "g_max values");
    if (!(cfg.smax_tol > 0.0 && cfg.sd_tol > 0.0 && cfg.smax_hi > 0.0))
        throw InvalidArgument("plan search tolerances and bound must be positive");
    if (cfg.sc_fractions.empty()) throw InvalidArgument("plan needs at least one s_c fraction");
    for (double f : cfg.sc_fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("s_c fractions must lie in [0, 1]");

    Trace trace = sample_iid(dist, cfg.n, cfg.seed);
    PlanEvaluator ev{dist, trace, cfg.burn_in.value_or(default_burn_in(cfg.n)),
                     jg_target, jl_target, cfg};

    PlanResult res;
    res.jg_target = jg_target;
    res.jl_target = jl_target;
    res.config = cfg;
    res.points.resize(gmax_values.size());

    parallel_for(gmax_values.size(), cfg.threads, [&](std::size_t i) {
        PlanPoint pt;
        pt.g_max = gmax_values[i];
        ThresholdPair t;
        CostReport rep;
        std::string why;
        if (ev.feasible(pt.g_max, 0.0, t, rep, why)) {
            pt.feasible = true;
            pt.s_max = 0.0;
            pt.thresholds = t;
            pt.report = rep;
        } else if (!ev.feasible(pt.g_max, cfg.smax_hi, t, rep, why)) {
            pt.note = "infeasible up to s_max=" + std::to_string(cfg.smax_hi) + ": " + why;
        } else {
            double lo = 0.0;
            double hi = cfg.smax_hi;
            ThresholdPair best_t = t;
            CostReport best_rep = rep;
            while (hi - lo > cfg.smax_tol) {
                double mid = 0.5 * (lo + hi);
                if (ev.feasible(pt.g_max, mid, t, rep, why)) {
                    hi = mid;
                    best_t = t;
                    best_rep = rep;
                } else {
                    lo = mid;
                }
            }
            pt.feasible = true;
            pt.s_max = hi;
            pt.thresholds = best_t;
            pt.report = best_rep;
        }
        res.points[i] = pt;
    });
    return res;
}

}  // namespace storesim
