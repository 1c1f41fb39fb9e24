#pragma once

#include <limits>

namespace storesim {

inline constexpr double kFeasTol = 1e-9;

// A non-negative power rating in MW, or the explicit "unbounded" marker.
class Capacity {
public:
    constexpr Capacity() = default;

    static constexpr Capacity mw(double v) { return Capacity(v, false); }
    static constexpr Capacity unbounded() { return Capacity(0.0, true); }

    constexpr bool is_unbounded() const { return unbounded_; }
    constexpr bool is_finite() const { return !unbounded_; }

    // +inf for the unbounded marker, so it can enter arithmetic directly.
    constexpr double value() const {
        return unbounded_ ? std::numeric_limits<double>::infinity() : v_;
    }

    friend constexpr bool operator==(const Capacity&, const Capacity&) = default;

private:
    constexpr Capacity(double v, bool u) : v_(v), unbounded_(u) {}

    double v_ = 0.0;
    bool unbounded_ = false;
};

struct SystemParams {
    Capacity g_max;
    Capacity s_max;
    Capacity c_max;
    Capacity d_max;
    double eta_c = 1.0;
    double eta_d = 1.0;
    double slot_hours = 1.0 / 6.0;

    double alpha() const { return eta_c * eta_d; }

    // Charging and discharging rates never bind: eta_c*c_max = d_max/eta_d = s_max.
    bool is_unconstrained_rates() const;

    // Rates are tighter than (or equal to) what the storage capacity allows.
    bool is_constrained_regime() const;

    // Throws InvalidArgument on out-of-range fields.
    void validate() const;

    // Rates set so that neither ever binds.
    static SystemParams unconstrained(Capacity g_max, Capacity s_max, double eta_c, double eta_d,
                                      double slot_hours = 1.0 / 6.0);
};

struct Decision {
    double g = 0.0;
    double c = 0.0;
    double d = 0.0;

    friend bool operator==(const Decision&, const Decision&) = default;
};

struct SlotOutcome {
    double next_s = 0.0;
    bool lost_load = false;
    double curtailed = 0.0;
    double g_used = 0.0;
    Decision applied;
};

// Largest power the storage can deliver this slot.
inline double max_discharge(const SystemParams& p, double s) {
    double d = p.eta_d * s;
    double dm = p.d_max.value();
    return d < dm ? d : dm;
}

bool loss_of_load(const SystemParams& p, double s, double delta);

bool feasible(const SystemParams& p, double s, double delta, const Decision& dec);

// Applies one slot. On loss of load the decision is overridden by the forced one.
SlotOutcome step(const SystemParams& p, double s, double delta, const Decision& dec);

}  // namespace storesim
