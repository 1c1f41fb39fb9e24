#include "storesim/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "storesim/errors.hpp"
#include "storesim/quadrature.hpp"
#include "storesim/sim.hpp"

namespace storesim {

namespace {

// E[X; X <= q] for any law, from partial expectations.
double lower_partial_mean(const Distribution& d, double q) {
    if (q == -INFINITY) return 0.0;
    if (q == INFINITY) return d.mean();
    return q * d.cdf(q) - d.expected_negative(-q);
}

// Leftmost argmin over index ranges in O(1) after O(n log n) setup.
class RangeMin {
public:
    void build(const std::vector<double>& w) {
        w_ = &w;
        std::size_t n = w.size();
        levels_ = 1;
        while ((std::size_t{1} << levels_) <= n) ++levels_;
        table_.assign(levels_ * n, 0);
        for (std::size_t i = 0; i < n; ++i) table_[i] = static_cast<std::uint32_t>(i);
        for (std::size_t k = 1; k < levels_; ++k) {
            std::size_t half = std::size_t{1} << (k - 1);
            for (std::size_t i = 0; i + (std::size_t{1} << k) <= n; ++i)
                table_[k * n + i] =
                    better(table_[(k - 1) * n + i], table_[(k - 1) * n + i + half]);
        }
        n_ = n;
    }

    // Requires lo <= hi < n.
    std::size_t query(std::size_t lo, std::size_t hi) const {
        std::size_t len = hi - lo + 1;
        std::size_t k = 63 - static_cast<std::size_t>(__builtin_clzll(len));
        return better(table_[k * n_ + lo], table_[k * n_ + hi + 1 - (std::size_t{1} << k)]);
    }

private:
    std::uint32_t better(std::uint32_t a, std::uint32_t b) const {
        const auto& w = *w_;
        if (w[b] < w[a]) return b;
        return a;  // a < b by construction, so ties keep the left index
    }

    const std::vector<double>* w_ = nullptr;
    std::vector<std::uint32_t> table_;
    std::size_t levels_ = 0;
    std::size_t n_ = 0;
};

struct Choice {
    double next = 0.0;
    double phi = INFINITY;
    double g = 0.0;
};

// State of one sweep: current values plus their range-min tables.
struct Sweep {
    const SystemParams& p;
    const CostWeights& w;
    const std::vector<double>& v;
    double h;
    std::size_t n;
    RangeMin flat, charge, discharge;
    std::vector<double> w_charge, w_discharge;

    Sweep(const SystemParams& p_, const CostWeights& w_, const std::vector<double>& v_, double h_)
        : p(p_), w(w_), v(v_), h(h_), n(v_.size()) {
        w_charge.resize(n);
        w_discharge.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            double s = static_cast<double>(k) * h;
            w_charge[k] = v[k] + w.rho1 * s / p.eta_c;
            w_discharge[k] = v[k] + w.rho1 * p.eta_d * s;
        }
        flat.build(v);
        charge.build(w_charge);
        discharge.build(w_discharge);
    }

    double interp(double x) const {
        double pos = x / h;
        if (pos <= 0.0) return v[0];
        auto k = static_cast<std::size_t>(pos);
        if (k >= n - 1) return v[n - 1];
        double f = pos - static_cast<double>(k);
        return v[k] + f * (v[k + 1] - v[k]);
    }

    static double gen(double s, double delta, double next, double ec, double ed) {
        return std::max({0.0, -delta + (next - s) / ec, -delta + ed * (next - s)});
    }

    void consider(Choice& best, double s, double delta, double next) const {
        double g = gen(s, delta, next, p.eta_c, p.eta_d);
        double phi = w.rho1 * g + interp(next);
        if (phi < best.phi || (phi == best.phi && next < best.next)) best = {next, phi, g};
    }

    // Node candidates of one linear piece of the generation cost on [a, b].
    void consider_nodes(Choice& best, const RangeMin& rm, double s, double delta, double a,
                        double b) const {
        if (!(a <= b)) return;
        double lo_pos = std::ceil(a / h - 1e-12);
        double hi_pos = std::floor(b / h + 1e-12);
        if (lo_pos < 0.0) lo_pos = 0.0;
        if (hi_pos > static_cast<double>(n - 1)) hi_pos = static_cast<double>(n - 1);
        if (lo_pos > hi_pos) return;
        std::size_t k = rm.query(static_cast<std::size_t>(lo_pos), static_cast<std::size_t>(hi_pos));
        double node = std::clamp(static_cast<double>(k) * h, a, b);
        consider(best, s, delta, node);
    }

    // Best next level for a non-forced cell with feasible range [lo, hi].
    Choice best_next(double s, double delta, double lo, double hi) const {
        Choice best;
        consider(best, s, delta, lo);
        consider(best, s, delta, hi);
        double kink = delta >= 0.0 ? s + p.eta_c * delta : s + delta / p.eta_d;
        if (kink > lo && kink < hi) consider(best, s, delta, kink);
        if (s > lo && s < hi) consider(best, s, delta, s);
        if (delta >= 0.0) {
            consider_nodes(best, flat, s, delta, lo, std::min(hi, kink));
            consider_nodes(best, charge, s, delta, std::max(lo, kink), hi);
        } else {
            consider_nodes(best, flat, s, delta, lo, std::min(hi, kink));
            consider_nodes(best, discharge, s, delta, std::max(lo, kink), std::min(hi, s));
            consider_nodes(best, charge, s, delta, std::max(lo, s), hi);
        }
        return best;
    }
};

}  // namespace

Grid make_grid(const SystemParams& p, const Distribution& dist, std::size_t n_s,
               std::size_t n_d) {
    if (p.s_max.is_unbounded() || !(p.s_max.value() > 0.0))
        throw InvalidGrid("storage grid needs a finite positive s_max");
    if (n_s < 2 || n_d < 1) throw InvalidGrid("grid needs n_s >= 2 and n_d >= 1");
    Grid g;
    g.n_s = n_s;
    double smax = p.s_max.value();
    g.s_values.resize(n_s);
    for (std::size_t i = 0; i < n_s; ++i)
        g.s_values[i] = smax * static_cast<double>(i) / static_cast<double>(n_s - 1);
    g.s_values.back() = smax;

    double prev_q = -INFINITY;
    double prev_f = 0.0;
    double prev_m = 0.0;
    double total = 0.0;
    for (std::size_t k = 1; k <= n_d; ++k) {
        double q = k == n_d ? INFINITY : dist.quantile(static_cast<double>(k) / n_d);
        double f = k == n_d ? 1.0 : dist.cdf(q);
        double m = lower_partial_mean(dist, q);
        double mass = f - prev_f;
        if (mass > 0.0 && q > prev_q) {
            g.d_values.push_back({(m - prev_m) / mass, mass});
            total += mass;
        }
        prev_q = q;
        prev_f = f;
        prev_m = m;
    }
    for (auto& d : g.d_values) d.prob /= total;
    g.n_d = g.d_values.size();
    return g;
}

void validate_grid(const SystemParams& p, const Grid& grid) {
    if (p.s_max.is_unbounded()) throw InvalidGrid("grid needs finite s_max");
    const auto& s = grid.s_values;
    if (s.size() < 2 || grid.n_s != s.size()) throw InvalidGrid("storage grid size mismatch");
    if (s.front() != 0.0 || std::abs(s.back() - p.s_max.value()) > 1e-9 * std::max(1.0, s.back()))
        throw InvalidGrid("storage grid must span [0, s_max]");
    double h = s.back() / static_cast<double>(s.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (!(s[i] > s[i - 1])) throw InvalidGrid("storage grid must be strictly increasing");
        if (std::abs(s[i] - static_cast<double>(i) * h) > 1e-9 * std::max(1.0, s.back()))
            throw InvalidGrid("storage grid must be uniform");
    }
    if (grid.d_values.empty() || grid.n_d != grid.d_values.size())
        throw InvalidGrid("disturbance grid size mismatch");
    double total = 0.0;
    for (const auto& d : grid.d_values) {
        if (!(d.prob >= 0.0) || !std::isfinite(d.value))
            throw InvalidGrid("disturbance grid has invalid points");
        total += d.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidGrid("disturbance probabilities must sum to 1");
}

DpSolution value_iteration(const SystemParams& p, const Distribution& dist,
                           const CostWeights& w, const Grid& grid, const DpOptions& opts) {
    p.validate();
    validate_grid(p, grid);
    if (!(w.rho1 >= 0.0 && w.rho2 >= 0.0) || (w.rho1 == 0.0 && w.rho2 == 0.0))
        throw InvalidArgument("cost weights must be non-negative and not both zero");

    const std::size_t ns = grid.n_s;
    const std::size_t nd = grid.n_d;
    const double h = grid.s_values.back() / static_cast<double>(ns - 1);
    const double G = p.g_max.value();
    const double cmax = p.c_max.value();
    const double smax = p.s_max.value();

    // Per-state quantities that do not depend on v.
    std::vector<double> loss_bound(ns), loss_prob(ns), forced_next(ns), lower(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        double s = grid.s_values[i];
        double dmax_now = max_discharge(p, s);
        loss_bound[i] = -G - dmax_now;
        // Exact loss probability, not its grid approximation, so the loss term
        // varies smoothly with the storage level.
        loss_prob[i] = std::isfinite(loss_bound[i]) ? dist.cdf_left(loss_bound[i]) : 0.0;
        forced_next[i] = std::max(0.0, s - dmax_now / p.eta_d);
        lower[i] = std::max(0.0, s - p.d_max.value() / p.eta_d);
    }

    std::vector<double> v = opts.initial_v;
    if (v.empty()) v.assign(ns, 0.0);
    if (v.size() != ns) throw InvalidGrid("initial values do not match the storage grid");

    std::vector<double> tv(ns);
    DpSolution sol;
    sol.params = p;
    sol.n_d = nd;

    auto evaluate = [&](const Sweep& sw, std::size_t i, bool record) {
        double s = grid.s_values[i];
        double acc = w.rho2 * loss_prob[i];
        for (std::size_t j = 0; j < nd; ++j) {
            double delta = grid.d_values[j].value;
            double prob = grid.d_values[j].prob;
            double next;
            double g;
            bool forced = delta < loss_bound[i];
            if (forced) {
                next = forced_next[i];
                g = G;
                acc += prob * (w.rho1 * g + sw.interp(next));
            } else {
                double room = G + delta;
                double hi = room >= 0.0 ? s + p.eta_c * std::min(room, cmax) : s + room / p.eta_d;
                hi = std::min(hi, smax);
                double lo = lower[i];
                if (hi < lo) hi = lo;  // rounding at the loss boundary
                Choice c = sw.best_next(s, delta, lo, hi);
                next = c.next;
                g = c.g;
                acc += prob * c.phi;
            }
            if (record) {
                std::size_t idx = i * nd + j;
                sol.next_s[idx] = next;
                sol.forced[idx] = forced;
                if (forced) {
                    sol.policy[idx] = {G, 0.0, max_discharge(p, s)};
                } else if (next >= s) {
                    sol.policy[idx] = {g, (next - s) / p.eta_c, 0.0};
                } else {
                    sol.policy[idx] = {g, 0.0, p.eta_d * (s - next)};
                }
            }
        }
        return acc;
    };

    double span = INFINITY;
    long it = 0;
    double lo_diff = 0.0, hi_diff = 0.0;
    for (; it < opts.max_iter; ++it) {
        Sweep sw(p, w, v, h);
        parallel_for(ns, opts.threads, [&](std::size_t i) { tv[i] = evaluate(sw, i, false); });

        lo_diff = INFINITY;
        hi_diff = -INFINITY;
        for (std::size_t i = 0; i < ns; ++i) {
            double d = tv[i] - v[i];
            lo_diff = std::min(lo_diff, d);
            hi_diff = std::max(hi_diff, d);
        }
        span = hi_diff - lo_diff;
        double ref = tv[0];
        for (std::size_t i = 0; i < ns; ++i) v[i] = tv[i] - ref;
        if (opts.check_monotone) {
            for (std::size_t i = 1; i < ns; ++i)
                if (v[i] > v[i - 1] + 1e-12 * std::max(1.0, std::abs(v[i - 1])))
                    sol.monotone = false;
        }
        if (span < opts.tol) {
            ++it;
            break;
        }
    }
    if (!(span < opts.tol)) throw NoConvergence(it, span);

    sol.eta = 0.5 * (lo_diff + hi_diff);
    sol.iterations = it;
    sol.span_residual = span;
    sol.v = v;

    sol.policy.resize(ns * nd);
    sol.next_s.resize(ns * nd);
    sol.forced.assign(ns * nd, false);
    Sweep sw(p, w, v, h);
    for (std::size_t i = 0; i < ns; ++i) evaluate(sw, i, true);
    return sol;
}

namespace {

struct FitScore {
    double sum = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

FitScore score(const DpSolution& sol, const Grid& grid, ThresholdPair t, std::size_t stride_s,
               std::size_t stride_d) {
    FitScore sc;
    PolicyKind kind = policy::TwoThreshold{t};
    const auto& p = sol.params;
    for (std::size_t i = 0; i < grid.n_s; i += stride_s) {
        double s = grid.s_values[i];
        for (std::size_t j = 0; j < grid.n_d; j += stride_d) {
            std::size_t idx = i * grid.n_d + j;
            if (sol.forced[idx]) continue;
            double delta = grid.d_values[j].value;
            Decision d = decide(p, kind, s, delta);
            double next = std::clamp(s + p.eta_c * d.c - d.d / p.eta_d, 0.0, p.s_max.value());
            double dev = std::abs(next - sol.next_s[idx]);
            sc.sum += dev;
            sc.max = std::max(sc.max, dev);
            ++sc.count;
        }
    }
    return sc;
}

}  // namespace

ThresholdFit extract_thresholds(const DpSolution& sol, const Grid& grid) {
    if (sol.next_s.size() != grid.n_s * grid.n_d)
        throw InvalidGrid("solution does not match the grid");
    const auto& s = grid.s_values;
    const std::size_t ns = grid.n_s;
    const double h = s.back() / static_cast<double>(ns - 1);

    std::size_t stride_s = std::max<std::size_t>(1, ns / 50);
    std::size_t stride_d = std::max<std::size_t>(1, grid.n_d / 50);

    // Coarse pass over a sub-grid of threshold pairs, then a local refinement at
    // full resolution around the best coarse pair.
    std::size_t coarse = std::max<std::size_t>(1, (ns - 1) / 20);
    ThresholdPair best{0.0, 0.0};
    double best_sum = INFINITY;
    auto try_pair = [&](std::size_t a, std::size_t b) {
        ThresholdPair t{s[a], s[b]};
        double sum = score(sol, grid, t, stride_s, stride_d).sum;
        if (sum < best_sum) {
            best_sum = sum;
            best = t;
        }
    };
    std::vector<std::size_t> axis;
    for (std::size_t k = 0; k < ns; k += coarse) axis.push_back(k);
    if (axis.back() != ns - 1) axis.push_back(ns - 1);
    for (std::size_t a = 0; a < axis.size(); ++a)
        for (std::size_t b = a; b < axis.size(); ++b) try_pair(axis[a], axis[b]);

    auto ia = static_cast<std::size_t>(std::llround(best.s_c / h));
    auto ib = static_cast<std::size_t>(std::llround(best.s_d / h));
    std::size_t a0 = ia > coarse ? ia - coarse : 0;
    std::size_t a1 = std::min(ns - 1, ia + coarse);
    std::size_t b0 = ib > coarse ? ib - coarse : 0;
    std::size_t b1 = std::min(ns - 1, ib + coarse);
    for (std::size_t a = a0; a <= a1; ++a)
        for (std::size_t b = std::max(a, b0); b <= b1; ++b) try_pair(a, b);

    FitScore full = score(sol, grid, best, 1, 1);
    ThresholdFit fit;
    fit.thresholds = best;
    fit.max_deviation = full.max;
    fit.mean_deviation = full.count ? full.sum / static_cast<double>(full.count) : 0.0;
    fit.is_two_threshold = full.max <= h * (1.0 + 1e-9);
    return fit;
}

double two_slot_value_slope(const SystemParams& p, const Distribution& dist,
                            const CostWeights& w, double s2) {
    double ed = p.eta_d;
    double G = p.g_max.value();
    double edge = -G - ed * s2;
    double loss_density = std::isfinite(edge) ? dist.pdf(edge) : 0.0;
    double band = dist.cdf(-ed * s2) - (std::isfinite(edge) ? dist.cdf(edge) : 0.0);
    return -ed * w.rho2 * loss_density - ed * w.rho1 * band;
}

double two_slot_value(const SystemParams& p, const Distribution& dist, const CostWeights& w,
                      double s2) {
    double ed = p.eta_d;
    double G = p.g_max.value();
    double edge = -G - ed * s2;
    double top = -ed * s2;
    double loss = std::isfinite(edge) ? dist.cdf_left(edge) : 0.0;
    // E[top - X; edge <= X < top]: generation covering what discharge cannot.
    double cover;
    if (dist.has_pdf()) {
        cover = integrate([&](double x) { return (top - x) * dist.pdf(x); }, edge, top,
                          dist.kinks());
    } else {
        double lo_cdf = std::isfinite(edge) ? dist.cdf(edge) : 0.0;
        double lo_mean = std::isfinite(edge) ? lower_partial_mean(dist, edge) : 0.0;
        cover = top * (dist.cdf(top) - lo_cdf) - (lower_partial_mean(dist, top) - lo_mean);
    }
    double loss_gen = std::isfinite(G) ? (w.rho1 * G + w.rho2) * loss : 0.0;
    return loss_gen + w.rho1 * cover;
}

ThresholdPair two_slot_thresholds(const SystemParams& p, const Distribution& dist,
                                  const CostWeights& w) {
    p.validate();
    if (p.s_max.is_unbounded()) throw InvalidArgument("two-slot thresholds need finite s_max");
    if (!(w.rho1 >= 0.0 && w.rho2 >= 0.0) || (w.rho1 == 0.0 && w.rho2 == 0.0))
        throw InvalidArgument("cost weights must be non-negative and not both zero");
    if (!dist.has_pdf()) throw HypothesisViolated("two-slot construction needs a density");

    // Density must not decrease on (-inf, 0]: sampled from far in the tail to 0.
    double scale = std::max(dist.stddev(), 1e-9);
    constexpr int kSamples = 400;
    double prev = dist.pdf(-20.0 * scale);
    for (int k = 1; k <= kSamples; ++k) {
        double x = -20.0 * scale * (1.0 - static_cast<double>(k) / kSamples);
        double f = dist.pdf(x);
        if (f < prev * (1.0 - 1e-12))
            throw HypothesisViolated("density decreases on (-inf, 0] near x=" + std::to_string(x));
        prev = f;
    }

    double smax = p.s_max.value();
    // The slope is nondecreasing in s2 (the cost-to-go is convex), so each level
    // set {slope <= -k} is an interval [0, s*].
    auto sup_point = [&](double k) {
        auto f = [&](double s) { return two_slot_value_slope(p, dist, w, s) + k; };
        if (f(0.0) > 0.0) return 0.0;
        if (f(smax) <= 0.0) return smax;
        auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(1.0, b); };
        auto r = boost::math::tools::bisect(f, 0.0, smax, tol);
        return 0.5 * (r.first + r.second);
    };
    ThresholdPair t;
    t.s_c = sup_point(w.rho1 / p.eta_c);
    t.s_d = sup_point(p.eta_d * w.rho1);
    t.s_d = std::max(t.s_d, t.s_c);
    return t;
}

}  // namespace storesim
