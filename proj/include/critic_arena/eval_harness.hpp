// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "critic_arena/model_client.hpp"
#include "critic_arena/selector.hpp"

namespace critic_arena {

struct EvalItem {
    std::string id;
    std::optional<std::string> image_ref;
    std::string question;
    std::string gold_answer;  // non-empty
    MatchMode answer_mode = MatchMode::Exact;
};

// Item lines: {"id", "question", "gold_answer", "image"?, "answer_mode"?:
// "exact"|"normalized"}; same shape as the pairwise records minus responses.
std::vector<EvalItem> load_eval_items(const std::string& path);

struct StrategyOutcome {
    int winner_index = -1;
    std::string winner_answer;
    bool correct = false;
};

bool operator==(const StrategyOutcome& a, const StrategyOutcome& b);

struct ItemResult {
    std::string id;
    std::map<SelectionStrategy, StrategyOutcome> outcomes;
    bool failed = false;   // generation failed in keep-going mode
    std::string error;
};

bool operator==(const ItemResult& a, const ItemResult& b);

struct EvalReport {
    std::vector<ItemResult> per_item;                 // sorted by item id
    std::map<SelectionStrategy, double> aggregates;   // mean per-item correctness
    std::map<SelectionStrategy, std::vector<CurvePoint>> curves;
    std::string config_fingerprint;
    int failed_items = 0;
};

bool operator==(const EvalReport& a, const EvalReport& b);

struct EvalOptions {
    int n = 8;
    std::set<SelectionStrategy> strategies;
    std::uint64_t run_seed = 0;

    std::vector<int> curve_ks;  // empty: no curves
    int curve_trials = 200;
    SubsetMode subset_mode = SubsetMode::Resample;

    bool keep_going = false;  // failed items count as incorrect instead of aborting
    int item_workers = 4;

    SelectionConfig selection;  // rng_seed is overridden per item
};

// Full benchmark pass: n generations per item (seeds derived from
// (run_seed, item id), so adding items never perturbs existing draws), one
// winner per requested strategy, correctness against gold, aggregate
// accuracies and, when curve_ks is set, mean best-of-k curves across items.
// The judge for Tournament uses critic params when given, else the policy
// params (self-critic).
EvalReport run_eval(const std::vector<EvalItem>& items, ModelClient& client,
                    const GenerationParams& policy,
                    const std::optional<GenerationParams>& critic, const EvalOptions& opts);

enum class ReportFormat { TableText, Csv, JsonLines };

// csv emits curve rows under the header "strategy,k,estimate,stderr"; the
// text table lists one strategy per row. Emission is deterministic, so
// byte-identical reports mean identical runs.
void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out);
void emit_report_file(const EvalReport& report, ReportFormat format, const std::string& path);

// Inverse of the JsonLines emission.
EvalReport load_report_jsonl(std::istream& in);
EvalReport load_report_jsonl_file(const std::string& path);

}  // namespace critic_arena
