// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "critic_arena/errors.hpp"
#include "critic_arena/rng.hpp"

namespace critic_arena {

namespace {

// RNG stream tags. Byes use a sentinel in the match slot so they never
// collide with a match stream in the same round.
constexpr std::uint64_t kByeSlot = 0xB1E5EA7ull;
constexpr std::uint64_t kSubsetStream = 0x5B5E75ull;
constexpr std::uint64_t kTrialStream = 0x7121A1ull;

std::uint64_t match_stream(std::uint64_t seed, int round, std::uint64_t slot) {
    return derive_stream(seed, static_cast<std::uint64_t>(round), slot);
}

PreferenceVerdict flip_frame(PreferenceVerdict v) {
    if (v == PreferenceVerdict::Response1) return PreferenceVerdict::Response2;
    if (v == PreferenceVerdict::Response2) return PreferenceVerdict::Response1;
    return v;
}

// Single bracket pass. verdict_for supplies the outcome of (round, match
// slot, a, b); the rest of the walk (pairing, byes, tie advancement) is
// shared between live runs and trace replay.
template <typename VerdictFn, typename OnBye, typename OnMatch>
int run_bracket(int n, const SelectionConfig& cfg, VerdictFn&& verdict_for, OnBye&& on_bye,
                OnMatch&& on_match) {
    std::vector<int> survivors(static_cast<std::size_t>(n));
    std::iota(survivors.begin(), survivors.end(), 0);

    int round = 1;
    while (survivors.size() > 1) {
        std::vector<int> next;
        next.reserve(survivors.size() / 2 + 1);

        std::vector<int> playing = survivors;
        if (playing.size() % 2 == 1) {
            const std::uint64_t r = match_stream(cfg.rng_seed, round, kByeSlot);
            const std::size_t bye_pos = r % playing.size();
            const int lucky = playing[bye_pos];
            on_bye(round, lucky);
            next.push_back(lucky);
            playing.erase(playing.begin() + static_cast<std::ptrdiff_t>(bye_pos));
        }

        for (std::size_t m = 0; m < playing.size() / 2; ++m) {
            const int a = playing[2 * m];      // lower index: presented as Response 1
            const int b = playing[2 * m + 1];
            const PreferenceVerdict verdict =
                verdict_for(round, static_cast<std::uint64_t>(m), a, b);

            int advanced;
            if (verdict == PreferenceVerdict::Response1) {
                advanced = a;
            } else if (verdict == PreferenceVerdict::Response2) {
                advanced = b;
            } else {
                // Tie and Unparseable: seeded coin per (seed, round, match).
                const std::uint64_t coin =
                    match_stream(cfg.rng_seed, round, static_cast<std::uint64_t>(m));
                advanced = (coin & 1) ? b : a;
            }
            on_match(round, a, b, verdict, advanced);
            next.push_back(advanced);
        }

        std::sort(next.begin(), next.end());
        survivors = std::move(next);
        ++round;
    }
    return survivors.front();
}

std::optional<std::string> extracted_answer(const Generation& g) { return g.parsed.answer; }

// k ascending original indices drawn without replacement (partial
// Fisher-Yates over the index range).
std::vector<int> sample_subset(int n, int k, std::uint64_t seed) {
    std::vector<int> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), 0);
    SplitMix64 rng(seed);
    for (int i = 0; i < k; ++i) {
        const std::uint64_t j =
            static_cast<std::uint64_t>(i) + rng.next_below(static_cast<std::uint64_t>(n - i));
        std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    }
    indices.resize(static_cast<std::size_t>(k));
    std::sort(indices.begin(), indices.end());
    return indices;
}

// C(n, k) when it is exactly representable (fits in a double's integer
// range); nullopt otherwise.
std::optional<double> exact_binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    unsigned long long c = 1;
    for (int i = 0; i < k; ++i) {
        const unsigned long long numerator = static_cast<unsigned long long>(n - i);
        if (c > ~0ull / numerator) return std::nullopt;
        c = c * numerator / static_cast<unsigned long long>(i + 1);
    }
    if (c > (1ull << 53)) return std::nullopt;
    return static_cast<double>(c);
}

}  // namespace

std::string_view strategy_label(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::Tournament: return "tournament";
        case SelectionStrategy::Majority: return "majority";
        case SelectionStrategy::Oracle: return "oracle";
    }
    return "tournament";
}

std::optional<SelectionStrategy> strategy_from_label(std::string_view label) {
    if (label == "tournament") return SelectionStrategy::Tournament;
    if (label == "majority") return SelectionStrategy::Majority;
    if (label == "oracle") return SelectionStrategy::Oracle;
    return std::nullopt;
}

bool operator==(const MatchRecord& a, const MatchRecord& b) {
    return a.round == b.round && a.index_a == b.index_a && a.index_b == b.index_b &&
           a.verdict == b.verdict && a.advanced_index == b.advanced_index && a.bye == b.bye;
}

bool operator==(const CurvePoint& a, const CurvePoint& b) {
    return a.k == b.k && a.estimate == b.estimate && a.std_err == b.std_err;
}

SelectionResult tournament_select(std::span<const Generation> candidates, const PairJudge& judge,
                                  const SelectionConfig& cfg) {
    if (candidates.empty()) throw EmptyCandidates();

    SelectionResult result;
    result.strategy = SelectionStrategy::Tournament;
    result.rng_seed = cfg.rng_seed;

    result.winner_index = run_bracket(
        static_cast<int>(candidates.size()), cfg,
        [&](int, std::uint64_t, int a, int b) {
            const auto ai = static_cast<std::size_t>(a);
            const auto bi = static_cast<std::size_t>(b);
            PreferenceVerdict v = judge(candidates[ai], candidates[bi]);
            if (cfg.judge_both_orders) {
                const PreferenceVerdict reversed = flip_frame(judge(candidates[bi], candidates[ai]));
                if (reversed != v) v = PreferenceVerdict::Tie;
            }
            return v;
        },
        [&](int round, int lucky) {
            MatchRecord rec;
            rec.round = round;
            rec.index_a = lucky;
            rec.advanced_index = lucky;
            rec.bye = true;
            result.trace.push_back(rec);
        },
        [&](int round, int a, int b, PreferenceVerdict verdict, int advanced) {
            MatchRecord rec;
            rec.round = round;
            rec.index_a = a;
            rec.index_b = b;
            rec.verdict = verdict;
            rec.advanced_index = advanced;
            result.trace.push_back(rec);
        });
    return result;
}

SelectionResult majority_vote(std::span<const Generation> candidates, MatchMode mode) {
    if (candidates.empty()) throw EmptyCandidates();
    const int n = static_cast<int>(candidates.size());

    // Transitive closure of pairwise answer matches (union-find).
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };

    std::vector<std::optional<std::string>> answers;
    answers.reserve(candidates.size());
    for (const auto& c : candidates) answers.push_back(extracted_answer(c));

    for (int i = 0; i < n; ++i) {
        if (!answers[static_cast<std::size_t>(i)]) continue;
        for (int j = i + 1; j < n; ++j) {
            if (!answers[static_cast<std::size_t>(j)]) continue;
            if (match_answer(*answers[static_cast<std::size_t>(i)],
                             *answers[static_cast<std::size_t>(j)], mode)) {
                const int ri = find(i);
                const int rj = find(j);
                if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] =
                    std::min(ri, rj);
            }
        }
    }

    std::vector<VoteGroup> groups;
    std::vector<int> group_of(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        if (group_of[static_cast<std::size_t>(root)] == -1) {
            group_of[static_cast<std::size_t>(root)] = static_cast<int>(groups.size());
            VoteGroup g;
            g.answer = answers[static_cast<std::size_t>(root)].value_or("");
            groups.push_back(std::move(g));
        }
        groups[static_cast<std::size_t>(group_of[static_cast<std::size_t>(root)])]
            .members.push_back(i);
    }

    // Largest group wins; ties break by lowest minimal member index. Groups
    // are already ordered by their minimal member, so the first maximum wins.
    std::size_t best = 0;
    for (std::size_t g = 1; g < groups.size(); ++g)
        if (groups[g].members.size() > groups[best].members.size()) best = g;

    SelectionResult result;
    result.strategy = SelectionStrategy::Majority;
    result.winner_index = groups[best].members.front();
    result.votes = std::move(groups);
    return result;
}

OracleOutcome oracle_select(std::span<const Generation> candidates, std::string_view gold,
                            MatchMode mode) {
    OracleOutcome out;
    if (gold.empty()) throw std::invalid_argument("oracle gold answer must be non-empty");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto answer = extracted_answer(candidates[i]);
        if (answer && match_answer(*answer, gold, mode)) {
            out.solved = true;
            out.witness = static_cast<int>(i);
            return out;
        }
    }
    return out;
}

double oracle_best_of_k(int n, int c, int k) {
    if (c <= 0) return 0.0;
    if (k > n - c) return 1.0;  // every k-subset contains a correct candidate

    const auto total = exact_binomial(n, k);
    const auto miss = exact_binomial(n - c, k);
    if (total && miss) return (*total - *miss) / *total;

    // Large-n fallback: miss probability as a product of exact ratios.
    long double p_miss = 1.0L;
    for (int i = 0; i < k; ++i)
        p_miss *= static_cast<long double>(n - c - i) / static_cast<long double>(n - i);
    return static_cast<double>(1.0L - p_miss);
}

std::vector<CurvePoint> best_of_k_curve(std::span<const Generation> cached,
                                        std::string_view gold, std::span<const int> ks,
                                        SelectionStrategy strategy, int trials,
                                        std::uint64_t seed, const PairJudge* judge,
                                        MatchMode mode, SubsetMode subset_mode) {
    const int n = static_cast<int>(cached.size());
    if (n == 0) throw EmptyCandidates();
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (strategy == SelectionStrategy::Tournament && judge == nullptr)
        throw std::invalid_argument("tournament curve requires a judge");
    for (const int k : ks)
        if (k < 1 || k > n) throw KTooLarge(k, cached.size());

    std::vector<CurvePoint> curve;
    curve.reserve(ks.size());

    for (const int k : ks) {
        CurvePoint point;
        point.k = k;

        if (strategy == SelectionStrategy::Oracle) {
            int c = 0;
            for (const auto& g : cached) {
                const auto answer = extracted_answer(g);
                if (answer && match_answer(*answer, gold, mode)) ++c;
            }
            point.estimate = oracle_best_of_k(n, c, k);
            point.std_err = 0.0;
            curve.push_back(point);
            continue;
        }

        const int effective_trials = subset_mode == SubsetMode::TruncatePrefix ? 1 : trials;
        int hits = 0;
        for (int t = 0; t < effective_trials; ++t) {
            std::vector<int> subset;
            if (subset_mode == SubsetMode::TruncatePrefix) {
                subset.resize(static_cast<std::size_t>(k));
                std::iota(subset.begin(), subset.end(), 0);
            } else {
                subset = sample_subset(
                    n, k,
                    derive_stream(seed, static_cast<std::uint64_t>(k),
                                  kSubsetStream + static_cast<std::uint64_t>(t)));
            }

            std::vector<Generation> pool;
            pool.reserve(subset.size());
            for (const int idx : subset) pool.push_back(cached[static_cast<std::size_t>(idx)]);

            int winner;
            if (strategy == SelectionStrategy::Tournament) {
                SelectionConfig cfg;
                cfg.rng_seed = derive_stream(seed, static_cast<std::uint64_t>(k),
                                             kTrialStream + static_cast<std::uint64_t>(t));
                winner = tournament_select(pool, *judge, cfg).winner_index;
            } else {
                winner = majority_vote(pool, mode).winner_index;
            }

            const auto answer = extracted_answer(pool[static_cast<std::size_t>(winner)]);
            if (answer && match_answer(*answer, gold, mode)) ++hits;
        }

        point.estimate = static_cast<double>(hits) / static_cast<double>(effective_trials);
        point.std_err = std::sqrt(point.estimate * (1.0 - point.estimate) /
                                  static_cast<double>(effective_trials));
        curve.push_back(point);
    }
    return curve;
}

int replay_winner(int n_candidates, std::span<const MatchRecord> trace,
                  const SelectionConfig& cfg) {
    if (n_candidates < 1) throw std::runtime_error("replay: empty candidate set");
    std::size_t cursor = 0;
    auto fail = [](const std::string& why) -> PreferenceVerdict {
        throw std::runtime_error("replay: " + why);
    };

    const int winner = run_bracket(
        n_candidates, cfg,
        [&](int round, std::uint64_t, int a, int b) {
            if (cursor >= trace.size()) return fail("trace ended early");
            const MatchRecord& rec = trace[cursor++];
            if (rec.bye || rec.round != round || rec.index_a != a || rec.index_b != b)
                return fail("pairing mismatch at round " + std::to_string(round));
            return rec.verdict;
        },
        [&](int round, int lucky) {
            if (cursor >= trace.size()) throw std::runtime_error("replay: trace ended early");
            const MatchRecord& rec = trace[cursor++];
            if (!rec.bye || rec.round != round || rec.index_a != lucky ||
                rec.advanced_index != lucky)
                throw std::runtime_error("replay: bye mismatch at round " +
                                         std::to_string(round));
        },
        [&](int, int, int, PreferenceVerdict, int advanced) {
            const MatchRecord& rec = trace[cursor - 1];
            if (rec.advanced_index != advanced)
                throw std::runtime_error("replay: advancement mismatch (stored " +
                                         std::to_string(rec.advanced_index) + ", derived " +
                                         std::to_string(advanced) + ")");
        });

    if (cursor != trace.size()) throw std::runtime_error("replay: unconsumed trace records");
    return winner;
}

}  // namespace critic_arena
