// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "critic_arena/concurrency.hpp"
#include "critic_arena/errors.hpp"

namespace critic_arena {

void RewardConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("alpha must be in [0, 1], got " + std::to_string(alpha));
    if (!(std_epsilon > 0.0))
        throw ConfigError("std_epsilon must be > 0, got " + std::to_string(std_epsilon));
}

double format_weight(double alpha) { return (10.0 - 10.0 * alpha) / 10.0; }

RewardBreakdown score_rollout(const ParsedResponse& parsed, PreferenceVerdict gold,
                              const RewardConfig& cfg) {
    cfg.validate();
    if (gold == PreferenceVerdict::Unparseable)
        throw std::invalid_argument("gold verdict must be 1, 2, or tie");

    RewardBreakdown out;
    out.r_pref = response_verdict(parsed) == gold ? 1.0 : 0.0;
    out.r_format = parsed.format_ok ? 1.0 : 0.0;
    out.r = cfg.alpha * out.r_pref + format_weight(cfg.alpha) * out.r_format;
    return out;
}

std::vector<double> group_advantages(std::span<const double> rewards, const RewardConfig& cfg) {
    cfg.validate();
    const std::size_t n = rewards.size();
    if (n < 2) throw GroupTooSmall(n);

    double mean = 0.0;
    for (const double r : rewards) mean += r;
    mean /= static_cast<double>(n);

    double var = 0.0;
    for (const double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);
    const double std_dev = std::sqrt(var);

    std::vector<double> out(n, 0.0);
    if (std_dev < cfg.std_epsilon) return out;
    for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / std_dev;
    return out;
}

std::vector<std::vector<RewardBreakdown>> batch_score(std::span<const RolloutGroup> groups,
                                                      const RewardConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<RewardBreakdown>> out(groups.size());

    parallel_for(groups.size(), 4, [&](std::size_t g) {
        const RolloutGroup& group = groups[g];
        if (group.rollouts.empty())
            throw std::invalid_argument("group " + std::to_string(g) + " has no rollouts");
        if (group.gold == PreferenceVerdict::Unparseable)
            throw std::invalid_argument("group " + std::to_string(g) +
                                        ": gold verdict must be 1, 2, or tie");

        std::vector<RewardBreakdown> scored;
        scored.reserve(group.rollouts.size());
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            try {
                scored.push_back(score_rollout(group.rollouts[i], group.gold, cfg));
            } catch (const std::exception& e) {
                throw std::runtime_error("group " + std::to_string(g) + ", rollout " +
                                         std::to_string(i) + ": " + e.what());
            }
        }

        if (scored.size() >= 2) {
            std::vector<double> rewards;
            rewards.reserve(scored.size());
            for (const auto& b : scored) rewards.push_back(b.r);
            const auto advantages = group_advantages(rewards, cfg);
            for (std::size_t i = 0; i < scored.size(); ++i) scored[i].advantage = advantages[i];
        }
        out[g] = std::move(scored);
    });

    return out;
}

}  // namespace critic_arena
