// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "critic_arena/structured_output.hpp"

namespace critic_arena {

struct RewardConfig {
    double alpha = 0.9;        // preference weight; format weight is 1 - alpha
    double std_epsilon = 1e-8; // guard for near-zero group variance

    void validate() const;  // throws ConfigError
};

// Per-rollout verifiable reward:  r = alpha * r_pref + (1 - alpha) * r_format,
// with both sub-rewards binary.
struct RewardBreakdown {
    double r_pref = 0.0;
    double r_format = 0.0;
    double r = 0.0;
    std::optional<double> advantage;  // set by group scoring, absent for size-1 groups
};

// 1 - alpha, evaluated at one-decimal scale: (10 - 10*alpha) / 10. For the
// one-digit alphas used in practice this is bitwise equal to the decimal
// constant (alpha 0.9 gives exactly 0.1), so reward values compare clean.
double format_weight(double alpha);

// r_pref = 1 iff the response verdict (boxed answer, or last-line salvage)
// equals gold; Unparseable counts as a miss. r_format = 1 iff format_ok.
// gold must not be Unparseable.
RewardBreakdown score_rollout(const ParsedResponse& parsed, PreferenceVerdict gold,
                              const RewardConfig& cfg = {});

// GRPO-style group normalization: (r_i - mean) / max(std, std_epsilon) with
// population std. Groups with std below std_epsilon yield all zeros. Throws
// GroupTooSmall for fewer than 2 rewards.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     const RewardConfig& cfg = {});

struct RolloutGroup {
    PreferenceVerdict gold = PreferenceVerdict::Tie;
    std::vector<ParsedResponse> rollouts;
};

// Scores every group and fills advantages. Size-1 groups keep their reward
// but get no advantage. Output order matches input order; element errors are
// rethrown with group/rollout indices attached.
std::vector<std::vector<RewardBreakdown>> batch_score(std::span<const RolloutGroup> groups,
                                                      const RewardConfig& cfg = {});

}  // namespace critic_arena
