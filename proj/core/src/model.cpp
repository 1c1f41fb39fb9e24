#include "storesim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "storesim/errors.hpp"

namespace storesim {

namespace {

bool close(double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

void check_capacity(const Capacity& c, const char* name) {
    if (c.is_finite() && !(c.value() >= 0.0 && std::isfinite(c.value())))
        throw InvalidArgument(std::string(name) + " must be a finite non-negative number");
}

}  // namespace

bool SystemParams::is_unconstrained_rates() const {
    double s = s_max.value();
    return close(eta_c * c_max.value(), s) && close(d_max.value() / eta_d, s);
}

bool SystemParams::is_constrained_regime() const {
    double s = s_max.value();
    return c_max.value() <= s / eta_c * (1 + 1e-12) + kFeasTol &&
           d_max.value() <= eta_d * s * (1 + 1e-12) + kFeasTol;
}

void SystemParams::validate() const {
    check_capacity(g_max, "g_max");
    check_capacity(s_max, "s_max");
    check_capacity(c_max, "c_max");
    check_capacity(d_max, "d_max");
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("eta_c must lie in (0, 1]");
    if (!(eta_d > 0.0 && eta_d <= 1.0)) throw InvalidArgument("eta_d must lie in (0, 1]");
    if (!(slot_hours > 0.0 && std::isfinite(slot_hours)))
        throw InvalidArgument("slot_hours must be positive");
}

SystemParams SystemParams::unconstrained(Capacity g_max, Capacity s_max, double eta_c,
                                         double eta_d, double slot_hours) {
    SystemParams p;
    p.g_max = g_max;
    p.s_max = s_max;
    if (s_max.is_unbounded()) {
        p.c_max = Capacity::unbounded();
        p.d_max = Capacity::unbounded();
    } else {
        p.c_max = Capacity::mw(s_max.value() / eta_c);
        p.d_max = Capacity::mw(eta_d * s_max.value());
    }
    p.eta_c = eta_c;
    p.eta_d = eta_d;
    p.slot_hours = slot_hours;
    return p;
}

bool loss_of_load(const SystemParams& p, double s, double delta) {
    return delta < -p.g_max.value() - max_discharge(p, s);
}

bool feasible(const SystemParams& p, double s, double delta, const Decision& dec) {
    const double tol = kFeasTol;
    if (!(std::isfinite(dec.g) && std::isfinite(dec.c) && std::isfinite(dec.d))) return false;
    if (dec.g < -tol || dec.g > p.g_max.value() + tol) return false;
    if (dec.c < -tol || dec.c > p.c_max.value() + tol) return false;
    if (dec.d < -tol || dec.d > p.d_max.value() + tol) return false;

    double clamp = std::max(delta, -p.g_max.value() - max_discharge(p, s));
    if (dec.g - dec.c + dec.d + clamp < -tol) return false;

    double next = s + p.eta_c * dec.c - dec.d / p.eta_d;
    return next >= -tol && next <= p.s_max.value() + tol;
}

SlotOutcome step(const SystemParams& p, double s, double delta, const Decision& dec) {
    SlotOutcome out;
    if (loss_of_load(p, s, delta)) {
        out.applied = Decision{p.g_max.value(), 0.0, max_discharge(p, s)};
        out.lost_load = true;
        out.curtailed = 0.0;
    } else {
        if (!feasible(p, s, delta, dec))
            throw InfeasibleDecision("decision (g=" + std::to_string(dec.g) +
                                     ", c=" + std::to_string(dec.c) +
                                     ", d=" + std::to_string(dec.d) + ") infeasible at s=" +
                                     std::to_string(s) + ", delta=" + std::to_string(delta));
        out.applied = dec;
        out.curtailed = std::max(0.0, dec.g + dec.d - dec.c + delta);
    }
    out.g_used = out.applied.g;

    double next = s + p.eta_c * out.applied.c - out.applied.d / p.eta_d;
    // Rounding residue of "fill" and "empty" moves lands exactly on the bound so
    // the atoms of the storage law stay atoms. feasible() already bounded larger
    // excursions.
    double smax = p.s_max.value();
    double ulps = 16.0 * std::numeric_limits<double>::epsilon() *
                  std::max({1.0, std::abs(s), std::isfinite(smax) ? smax : 0.0});
    if (next < ulps) next = 0.0;
    if (next > smax - ulps) next = smax;
    out.next_s = next;
    return out;
}

}  // namespace storesim
