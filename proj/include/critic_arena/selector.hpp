// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critic_arena/generation.hpp"

namespace critic_arena {

enum class SelectionStrategy { Tournament, Majority, Oracle };

std::string_view strategy_label(SelectionStrategy s);
std::optional<SelectionStrategy> strategy_from_label(std::string_view label);

enum class TiePolicy { RandomSeeded };
enum class ByePolicy { RandomSeeded };

struct SelectionConfig {
    int n = 0;  // expected candidate count; 0 means "whatever is passed in"
    std::uint64_t rng_seed = 0;
    TiePolicy tie_policy = TiePolicy::RandomSeeded;
    ByePolicy bye_policy = ByePolicy::RandomSeeded;

    // When set, every pair is judged in both orders and disagreement becomes
    // a Tie. Off by default.
    bool judge_both_orders = false;
};

// One bracket event. Matches carry both sides and the verdict; byes carry
// only the survivor (index_b is -1 and the verdict is meaningless).
struct MatchRecord {
    int round = 0;  // 1-based
    int index_a = -1;
    int index_b = -1;
    PreferenceVerdict verdict = PreferenceVerdict::Tie;
    int advanced_index = -1;
    bool bye = false;
};

bool operator==(const MatchRecord& a, const MatchRecord& b);

struct VoteGroup {
    std::string answer;        // representative extracted answer ("" if none)
    std::vector<int> members;  // ascending candidate indices
};

struct SelectionResult {
    SelectionStrategy strategy = SelectionStrategy::Tournament;
    int winner_index = -1;
    std::uint64_t rng_seed = 0;
    std::vector<MatchRecord> trace;  // tournament only
    std::vector<VoteGroup> votes;    // majority only
};

// Judge over two candidates. The first argument is always presented as
// Response 1. May return Tie or Unparseable; Unparseable advances a seeded
// random side, same as a tie.
using PairJudge = std::function<PreferenceVerdict(const Generation&, const Generation&)>;

// Single-elimination bracket: adjacent survivors pair in index order, the
// preferred side advances, ties advance a side chosen by an RNG stream
// derived from (rng_seed, round, match), odd rounds give one survivor a
// seeded random bye. For a transitive, antisymmetric judge the winner is the
// judge-maximal candidate regardless of seed or input order.
SelectionResult tournament_select(std::span<const Generation> candidates, const PairJudge& judge,
                                  const SelectionConfig& cfg);

// Groups candidates by extracted answer under match_answer equivalence
// (transitive closure) and picks the largest group; group-size ties break by
// lowest member index, and the winner is that group's lowest index.
SelectionResult majority_vote(std::span<const Generation> candidates, MatchMode mode);

struct OracleOutcome {
    bool solved = false;
    std::optional<int> witness;  // lowest matching index
};

OracleOutcome oracle_select(std::span<const Generation> candidates, std::string_view gold,
                            MatchMode mode);

// Exact closed-form best-of-k success probability for n candidates of which
// c are correct: 1 - C(n-c, k)/C(n, k). Exact (integer binomials) whenever
// they fit a double; falls back to a product form for very large n.
double oracle_best_of_k(int n, int c, int k);

struct CurvePoint {
    int k = 0;
    double estimate = 0.0;
    double std_err = 0.0;
};

bool operator==(const CurvePoint& a, const CurvePoint& b);

enum class SubsetMode {
    Resample,        // seeded subsets drawn without replacement, averaged over trials
    TruncatePrefix,  // deterministic first-k prefix, single evaluation
};

// Accuracy-vs-k points for one question's cached candidate set. Oracle uses
// the exact closed form (trials ignored, std_err 0); Tournament and Majority
// are Monte Carlo over seeded subsets with binomial standard error. Throws
// KTooLarge when any k exceeds the cached count; Tournament requires judge.
std::vector<CurvePoint> best_of_k_curve(std::span<const Generation> cached,
                                        std::string_view gold, std::span<const int> ks,
                                        SelectionStrategy strategy, int trials,
                                        std::uint64_t seed, const PairJudge* judge = nullptr,
                                        MatchMode mode = MatchMode::Exact,
                                        SubsetMode subset_mode = SubsetMode::Resample);

// Re-walks a stored tournament trace using its recorded verdicts and the
// seeded tie/bye streams, validating every pairing and advancement. Returns
// the winner index; throws std::runtime_error on any mismatch.
int replay_winner(int n_candidates, std::span<const MatchRecord> trace,
                  const SelectionConfig& cfg);

}  // namespace critic_arena
