// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/reward.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

#include "critic_arena/errors.hpp"
#include "critic_arena/rng.hpp"

using namespace critic_arena;

namespace {

ParsedResponse good_format(PreferenceVerdict v) {
    return parse_structured_output("<think>weighing.</think>\n\\boxed{" +
                                   std::string(canonical_verdict_text(v)) + "}");
}

ParsedResponse bad_format(PreferenceVerdict v) {
    return parse_structured_output("\\boxed{" + std::string(canonical_verdict_text(v)) + "}");
}

// Extended-precision recomputation of group advantages.
std::vector<double> advantages_oracle(const std::vector<double>& rewards, double eps) {
    long double mean = 0.0L;
    for (const double r : rewards) mean += r;
    mean /= static_cast<long double>(rewards.size());
    long double var = 0.0L;
    for (const double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<long double>(rewards.size());
    const long double sd = sqrtl(var);
    std::vector<double> out(rewards.size(), 0.0);
    if (sd < static_cast<long double>(eps)) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i)
        out[i] = static_cast<double>((rewards[i] - mean) / sd);
    return out;
}

}  // namespace

TEST_CASE("reward values for the three pinned cases at alpha 0.9") {
    const RewardConfig cfg;
    const auto gold = PreferenceVerdict::Response1;

    const auto full = score_rollout(good_format(gold), gold, cfg);
    CHECK(full.r == 1.0);
    CHECK(full.r_pref == 1.0);
    CHECK(full.r_format == 1.0);

    const auto missing_think = score_rollout(bad_format(gold), gold, cfg);
    CHECK(missing_think.r == 0.9);

    const auto wrong_verdict = score_rollout(good_format(PreferenceVerdict::Response2), gold, cfg);
    CHECK(wrong_verdict.r == 0.1);

    const auto both_wrong = score_rollout(bad_format(PreferenceVerdict::Response2), gold, cfg);
    CHECK(both_wrong.r == 0.0);
}

TEST_CASE("reward is exactly one of the four values over fuzzed rollouts") {
    const RewardConfig cfg;
    SplitMix64 rng(20240817);
    for (int i = 0; i < 2000; ++i) {
        const auto gold = static_cast<PreferenceVerdict>(rng.next_below(3));
        std::string raw;
        if (rng.next() & 1) raw += "<think>notes</think>\n";
        if (rng.next() & 1) raw += "\\boxed{" + std::string(canonical_verdict_text(
                                        static_cast<PreferenceVerdict>(rng.next_below(3)))) + "}";
        else raw += "free-form text without a box";
        const auto b = score_rollout(parse_structured_output(raw), gold, cfg);
        const bool pinned = b.r == 0.0 || b.r == 0.1 || b.r == 0.9 || b.r == 1.0;
        CHECK(pinned);
    }
}

TEST_CASE("unparseable answers score zero preference reward") {
    const auto parsed = parse_structured_output("<think>a</think>\\boxed{dunno}");
    const auto b = score_rollout(parsed, PreferenceVerdict::Response1);
    CHECK(b.r_pref == 0.0);
    CHECK(b.r_format == 1.0);
    CHECK(b.r == 0.1);
}

TEST_CASE("salvage path can earn the preference reward without the format reward") {
    const auto parsed = parse_structured_output("no box here\nResponse 1");
    const auto b = score_rollout(parsed, PreferenceVerdict::Response1);
    CHECK(b.r_pref == 1.0);
    CHECK(b.r_format == 0.0);
    CHECK(b.r == 0.9);
}

TEST_CASE("flipping r_pref with format fixed moves r by exactly alpha") {
    for (const double alpha : {0.9, 0.5, 0.75, 0.7}) {
        RewardConfig cfg;
        cfg.alpha = alpha;
        const auto gold = PreferenceVerdict::Tie;
        const auto hit_fmt = score_rollout(good_format(gold), gold, cfg);
        const auto miss_fmt = score_rollout(good_format(PreferenceVerdict::Response1), gold, cfg);
        CHECK(hit_fmt.r - miss_fmt.r == alpha);
        const auto hit_raw = score_rollout(bad_format(gold), gold, cfg);
        const auto miss_raw = score_rollout(bad_format(PreferenceVerdict::Response1), gold, cfg);
        CHECK(hit_raw.r - miss_raw.r == alpha);
    }
}

TEST_CASE("config validation") {
    RewardConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(score_rollout(good_format(PreferenceVerdict::Tie), PreferenceVerdict::Tie, cfg),
                    ConfigError);
    cfg.alpha = 0.9;
    cfg.std_epsilon = 0.0;
    CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0, 0.0}, cfg), ConfigError);
    CHECK_THROWS(score_rollout(good_format(PreferenceVerdict::Tie),
                               PreferenceVerdict::Unparseable));
}

TEST_CASE("group advantages: hand-checked and degenerate cases") {
    const auto simple = group_advantages(std::vector<double>{1.0, 0.0, 1.0, 0.0});
    CHECK(simple == std::vector<double>{1.0, -1.0, 1.0, -1.0});

    const auto flat = group_advantages(std::vector<double>{1.0, 1.0, 1.0, 1.0});
    CHECK(flat == std::vector<double>{0.0, 0.0, 0.0, 0.0});

    CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), GroupTooSmall);
}

TEST_CASE("group advantages match the extended-precision oracle") {
    // Frozen values computed with the long-double oracle for
    // [1.0, 0.9, 0.1, 0.0]: mean 0.5, population std sqrt(0.205).
    const std::vector<double> rewards = {1.0, 0.9, 0.1, 0.0};
    const auto got = group_advantages(rewards);
    const std::vector<double> frozen = {1.1043152607484654, 0.88345220859877235,
                                        -0.88345220859877235, -1.1043152607484654};
    REQUIRE(got.size() == frozen.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(std::fabs(got[i] - frozen[i]) < 1e-12);

    SplitMix64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t size = 2 + rng.next_below(63);
        std::vector<double> rs;
        for (std::size_t i = 0; i < size; ++i) rs.push_back(rng.next_unit());
        const auto impl = group_advantages(rs);
        const auto oracle = advantages_oracle(rs, 1e-8);
        for (std::size_t i = 0; i < size; ++i) CHECK(std::fabs(impl[i] - oracle[i]) < 1e-12);
    }
}

TEST_CASE("advantage moments: mean near zero, population std near one") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t size = 2 + rng.next_below(63);
        std::vector<double> rs;
        bool degenerate = true;
        for (std::size_t i = 0; i < size; ++i) {
            rs.push_back(rng.next_below(2) ? 1.0 : 0.0);
            if (i > 0 && rs[i] != rs[0]) degenerate = false;
        }
        if (degenerate) rs[0] = rs[0] == 1.0 ? 0.0 : 1.0;

        const auto adv = group_advantages(rs);
        double mean = 0.0;
        for (const double a : adv) mean += a;
        mean /= static_cast<double>(adv.size());
        double var = 0.0;
        for (const double a : adv) var += (a - mean) * (a - mean);
        var /= static_cast<double>(adv.size());
        CHECK(std::fabs(mean) <= 1e-9);
        CHECK(std::fabs(std::sqrt(var) - 1.0) <= 1e-6);
    }
}

TEST_CASE("argmax of advantages equals argmax of rewards when unique") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t size = 2 + rng.next_below(20);
        std::vector<double> rs;
        for (std::size_t i = 0; i < size; ++i) rs.push_back(rng.next_unit());
        const auto adv = group_advantages(rs);
        std::size_t best_r = 0;
        std::size_t best_a = 0;
        bool unique = true;
        for (std::size_t i = 1; i < size; ++i) {
            if (rs[i] == rs[best_r]) unique = false;
            if (rs[i] > rs[best_r]) best_r = i;
            if (adv[i] > adv[best_a]) best_a = i;
        }
        if (unique) CHECK(best_r == best_a);
    }
}

TEST_CASE("batch_score composes scoring and normalization") {
    RolloutGroup group;
    group.gold = PreferenceVerdict::Response1;
    group.rollouts = {good_format(PreferenceVerdict::Response1),
                      good_format(PreferenceVerdict::Response2),
                      good_format(PreferenceVerdict::Response1),
                      good_format(PreferenceVerdict::Response2)};
    const auto scored = batch_score(std::vector<RolloutGroup>{group});
    REQUIRE(scored.size() == 1);
    REQUIRE(scored[0].size() == 4);
    CHECK(*scored[0][0].advantage == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*scored[0][1].advantage == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(*scored[0][2].advantage == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*scored[0][3].advantage == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("batch_score: size-1 groups keep rewards but omit advantages") {
    RolloutGroup group;
    group.gold = PreferenceVerdict::Tie;
    group.rollouts = {good_format(PreferenceVerdict::Tie)};
    const auto scored = batch_score(std::vector<RolloutGroup>{group});
    REQUIRE(scored[0].size() == 1);
    CHECK(scored[0][0].r == 1.0);
    CHECK(!scored[0][0].advantage.has_value());
}

TEST_CASE("batch_score preserves group order") {
    RolloutGroup a;
    a.gold = PreferenceVerdict::Response1;
    a.rollouts = {good_format(PreferenceVerdict::Response1)};
    RolloutGroup b;
    b.gold = PreferenceVerdict::Response2;
    b.rollouts = {good_format(PreferenceVerdict::Response1)};
    const auto scored = batch_score(std::vector<RolloutGroup>{a, b});
    REQUIRE(scored.size() == 2);
    CHECK(scored[0][0].r == 1.0);
    CHECK(scored[1][0].r == 0.1);
}

TEST_CASE("batch_score attaches the group index to element errors") {
    RolloutGroup ok;
    ok.gold = PreferenceVerdict::Tie;
    ok.rollouts = {good_format(PreferenceVerdict::Tie)};
    RolloutGroup empty;
    empty.gold = PreferenceVerdict::Tie;
    try {
        batch_score(std::vector<RolloutGroup>{ok, empty});
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("group 1") != std::string::npos);
    }
}
