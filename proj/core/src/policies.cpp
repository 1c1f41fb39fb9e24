#include "storesim/policies.hpp"

#include <algorithm>
#include <cmath>

#include "storesim/errors.hpp"

// Row expressions are written identically across the tables so that the
// threshold endpoints reproduce the extreme policies bit for bit.

namespace storesim {

namespace {

struct Terms {
    double G;   // generator capacity
    double ec;
    double ed;
    double up;  // charge that fills the storage
};

Terms terms(const SystemParams& p, double s) {
    return {p.g_max.value(), p.eta_c, p.eta_d, (p.s_max.value() - s) / p.eta_c};
}

Decision raw_min_generation(const SystemParams& p, double s, double delta) {
    auto [G, ec, ed, up] = terms(p, s);
    (void)ec;
    if (delta >= up) return {0.0, up, 0.0};
    if (delta >= 0.0) return {0.0, delta, 0.0};
    if (delta >= -ed * s) return {0.0, 0.0, -delta};
    if (delta >= -G - ed * s) return {-delta - ed * s, 0.0, ed * s};
    return {G, 0.0, ed * s};
}

Decision raw_min_lolp(const SystemParams& p, double s, double delta) {
    auto [G, ec, ed, up] = terms(p, s);
    (void)ec;
    if (delta >= up) return {0.0, up, 0.0};
    if (delta >= -G + up) return {up - delta, up, 0.0};
    if (delta >= -G) return {G, G + delta, 0.0};
    if (delta >= -G - ed * s) return {G, 0.0, -delta - G};
    return {G, 0.0, ed * s};
}

// Storage below the charging threshold.
Decision below_charging(const SystemParams& p, double s_c, double s, double delta) {
    auto [G, ec, ed, up] = terms(p, s);
    double uc = (s_c - s) / ec;
    if (delta >= up) return {0.0, up, 0.0};
    if (delta >= uc) return {0.0, delta, 0.0};
    if (delta >= -G + uc) return {uc - delta, uc, 0.0};
    if (delta >= -G) return {G, G + delta, 0.0};
    if (delta >= -G - ed * s) return {G, 0.0, -delta - G};
    return {G, 0.0, ed * s};
}

// Storage between the thresholds: generation covers moderate deficits alone.
Decision between_thresholds(const SystemParams& p, double s, double delta) {
    auto [G, ec, ed, up] = terms(p, s);
    (void)ec;
    if (delta >= up) return {0.0, up, 0.0};
    if (delta >= 0.0) return {0.0, delta, 0.0};
    if (delta >= -G) return {-delta, 0.0, 0.0};
    if (delta >= -G - ed * s) return {G, 0.0, -delta - G};
    return {G, 0.0, ed * s};
}

// Storage above the discharging threshold.
Decision above_discharging(const SystemParams& p, double s_d, double s, double delta) {
    auto [G, ec, ed, up] = terms(p, s);
    (void)ec;
    double r = ed * (s - s_d);
    if (delta >= up) return {0.0, up, 0.0};
    if (delta >= 0.0) return {0.0, delta, 0.0};
    if (delta >= -r) return {0.0, 0.0, -delta};
    if (delta >= -G - r) return {-delta - r, 0.0, r};
    if (delta >= -G - ed * s) return {G, 0.0, -delta - G};
    return {G, 0.0, ed * s};
}

Decision raw_two_threshold(const SystemParams& p, const ThresholdPair& t, double s,
                           double delta) {
    if (s < t.s_c) return below_charging(p, t.s_c, s, delta);
    if (s <= t.s_d) return between_thresholds(p, s, delta);
    return above_discharging(p, t.s_d, s, delta);
}

Decision compose_caps(const SystemParams& p, const Decision& base, double delta) {
    // Caps at the storage-implied rates never bind; rounding in the base rows
    // must not make them appear to.
    if (p.is_unconstrained_rates()) return base;
    double c = std::min(base.c, p.c_max.value());
    double d = std::min(base.d, p.d_max.value());
    // With inactive caps the composed generation equals the base one; reuse it
    // rather than recomputing through a cancelling difference.
    if (c == base.c && d == base.d) return base;
    double g = std::min(std::max(c - d - delta, 0.0), p.g_max.value());
    return {g, c, d};
}

SystemParams lifted(const SystemParams& p) {
    return SystemParams::unconstrained(p.g_max, p.s_max, p.eta_c, p.eta_d, p.slot_hours);
}

void require_unconstrained(const SystemParams& p) {
    if (!p.is_unconstrained_rates())
        throw InvalidRegime("policy requires eta_c*c_max = d_max/eta_d = s_max");
}

void require_constrained(const SystemParams& p) {
    if (!p.is_constrained_regime())
        throw InvalidRegime("constrained policy requires c_max <= s_max/eta_c and "
                            "d_max <= eta_d*s_max");
}

void require_not_both_unbounded(const SystemParams& p) {
    if (p.g_max.is_unbounded() && p.s_max.is_unbounded())
        throw InvalidRegime("loss-of-load policy undefined with unbounded g_max and s_max");
}

}  // namespace

std::string policy_name(const PolicyKind& kind) {
    struct V {
        std::string operator()(const policy::MinGeneration&) const { return "min-gen"; }
        std::string operator()(const policy::MinLolp&) const { return "min-lolp"; }
        std::string operator()(const policy::TwoThreshold&) const { return "two-threshold"; }
        std::string operator()(const policy::MinGenerationConstrained&) const {
            return "min-gen-constrained";
        }
        std::string operator()(const policy::MinLolpConstrained&) const {
            return "min-lolp-constrained";
        }
        std::string operator()(const policy::SuboptimalLolp&) const { return "suboptimal-lolp"; }
    };
    return std::visit(V{}, kind);
}

PolicyKind policy_from_name(const std::string& name, ThresholdPair thresholds) {
    if (name == "min-gen") return policy::MinGeneration{};
    if (name == "min-lolp") return policy::MinLolp{};
    if (name == "two-threshold") return policy::TwoThreshold{thresholds};
    if (name == "min-gen-constrained") return policy::MinGenerationConstrained{};
    if (name == "min-lolp-constrained") return policy::MinLolpConstrained{};
    if (name == "suboptimal-lolp") return policy::SuboptimalLolp{};
    throw InvalidArgument("unknown policy '" + name + "'");
}

void validate_thresholds(const SystemParams& p, const ThresholdPair& t) {
    if (!(std::isfinite(t.s_c) && std::isfinite(t.s_d) && t.s_c >= 0.0 && t.s_c <= t.s_d &&
          t.s_d <= p.s_max.value()))
        throw InvalidThresholds("thresholds must satisfy 0 <= s_c <= s_d <= s_max");
}

Decision decide_min_generation(const SystemParams& p, double s, double delta) {
    require_unconstrained(p);
    return raw_min_generation(p, s, delta);
}

Decision decide_min_lolp(const SystemParams& p, double s, double delta) {
    require_unconstrained(p);
    require_not_both_unbounded(p);
    return raw_min_lolp(p, s, delta);
}

Decision decide_two_threshold(const SystemParams& p, const ThresholdPair& t, double s,
                              double delta) {
    require_unconstrained(p);
    validate_thresholds(p, t);
    return raw_two_threshold(p, t, s, delta);
}

Decision decide_min_generation_constrained(const SystemParams& p, double s, double delta) {
    require_constrained(p);
    return compose_caps(p, raw_min_generation(lifted(p), s, delta), delta);
}

Decision decide_min_lolp_constrained(const SystemParams& p, double s, double delta) {
    require_constrained(p);
    require_not_both_unbounded(p);
    return compose_caps(p, raw_min_lolp(lifted(p), s, delta), delta);
}

Decision decide_suboptimal_lolp(const SystemParams& p, double s, double delta) {
    require_unconstrained(p);
    return between_thresholds(p, s, delta);
}

void validate_policy(const SystemParams& p, const PolicyKind& kind) {
    p.validate();
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, policy::MinGenerationConstrained> ||
                          std::is_same_v<K, policy::MinLolpConstrained>) {
                require_constrained(p);
            } else {
                require_unconstrained(p);
            }
            if constexpr (std::is_same_v<K, policy::MinLolp> ||
                          std::is_same_v<K, policy::MinLolpConstrained>) {
                require_not_both_unbounded(p);
            }
            if constexpr (std::is_same_v<K, policy::TwoThreshold>) {
                validate_thresholds(p, k.thresholds);
            }
        },
        kind);
}

Decision decide(const SystemParams& p, const PolicyKind& kind, double s, double delta) {
    switch (kind.index()) {
        case 0: return raw_min_generation(p, s, delta);
        case 1: return raw_min_lolp(p, s, delta);
        case 2: return raw_two_threshold(p, std::get<2>(kind).thresholds, s, delta);
        case 3: return compose_caps(p, raw_min_generation(lifted(p), s, delta), delta);
        case 4: return compose_caps(p, raw_min_lolp(lifted(p), s, delta), delta);
        default: return between_thresholds(p, s, delta);
    }
}

}  // namespace storesim
