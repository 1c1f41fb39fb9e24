#pragma once

#include <string>
#include <variant>

#include "storesim/model.hpp"

namespace storesim {

struct ThresholdPair {
    double s_c = 0.0;  // charging threshold
    double s_d = 0.0;  // discharging threshold

    friend bool operator==(const ThresholdPair&, const ThresholdPair&) = default;
};

namespace policy {
struct MinGeneration {};
struct MinLolp {};
struct TwoThreshold {
    ThresholdPair thresholds;
};
struct MinGenerationConstrained {};
struct MinLolpConstrained {};
struct SuboptimalLolp {};
}  // namespace policy

using PolicyKind = std::variant<policy::MinGeneration, policy::MinLolp, policy::TwoThreshold,
                                policy::MinGenerationConstrained, policy::MinLolpConstrained,
                                policy::SuboptimalLolp>;

// Stable names used by the CLI and in output metadata.
std::string policy_name(const PolicyKind& kind);
PolicyKind policy_from_name(const std::string& name, ThresholdPair thresholds = {});

// Greedy: storage first, generation only to cover what storage cannot.
Decision decide_min_generation(const SystemParams& p, double s, double delta);

// Keeps storage as full as possible, using generation ahead of storage.
Decision decide_min_lolp(const SystemParams& p, double s, double delta);

Decision decide_two_threshold(const SystemParams& p, const ThresholdPair& t, double s,
                              double delta);

// Rate-capped versions built on the uncapped decisions.
Decision decide_min_generation_constrained(const SystemParams& p, double s, double delta);
Decision decide_min_lolp_constrained(const SystemParams& p, double s, double delta);

// Generation-only for moderate deficits; storage only under duress.
Decision decide_suboptimal_lolp(const SystemParams& p, double s, double delta);

void validate_thresholds(const SystemParams& p, const ThresholdPair& t);

// Validates the regime once so hot loops can call decide() without re-checking.
void validate_policy(const SystemParams& p, const PolicyKind& kind);

// Dispatch without per-call regime validation; call validate_policy first.
Decision decide(const SystemParams& p, const PolicyKind& kind, double s, double delta);

}  // namespace storesim
