// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/eval_harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "critic_arena/concurrency.hpp"
#include "critic_arena/errors.hpp"
#include "critic_arena/jsonl.hpp"
#include "critic_arena/rng.hpp"

namespace critic_arena {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kItemStream = 0x17E6ull;
constexpr std::uint64_t kJudgeStream = 0x10D6Eull;
constexpr std::uint64_t kTournamentStream = 0x70A2ull;
constexpr std::uint64_t kCurveStream = 0xC02Eull;

// Shortest round-trip decimal form; keeps emission deterministic.
std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

StrategyOutcome outcome_for_winner(std::span<const Generation> candidates, int winner,
                                   const EvalItem& item) {
    StrategyOutcome out;
    out.winner_index = winner;
    if (winner >= 0) {
        const auto& answer = candidates[static_cast<std::size_t>(winner)].parsed.answer;
        out.winner_answer = answer.value_or("");
        out.correct = match_answer(out.winner_answer, item.gold_answer, item.answer_mode);
    }
    return out;
}

json curve_point_json(SelectionStrategy s, const CurvePoint& p) {
    return {{"type", "curve"},
            {"strategy", strategy_label(s)},
            {"k", p.k},
            {"estimate", p.estimate},
            {"stderr", p.std_err}};
}

}  // namespace

bool operator==(const StrategyOutcome& a, const StrategyOutcome& b) {
    return a.winner_index == b.winner_index && a.winner_answer == b.winner_answer &&
           a.correct == b.correct;
}

bool operator==(const ItemResult& a, const ItemResult& b) {
    return a.id == b.id && a.outcomes == b.outcomes && a.failed == b.failed &&
           a.error == b.error;
}

bool operator==(const EvalReport& a, const EvalReport& b) {
    return a.per_item == b.per_item && a.aggregates == b.aggregates && a.curves == b.curves &&
           a.config_fingerprint == b.config_fingerprint && a.failed_items == b.failed_items;
}

std::vector<EvalItem> load_eval_items(const std::string& path) {
    std::vector<EvalItem> items;
    for_each_jsonl_line(path, [&](std::size_t line_no, const std::string& line) {
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaError(line_no, "", std::string("invalid JSON: ") + e.what());
        }
        EvalItem item;
        if (!j.contains("id") || !j.at("id").is_string())
            throw SchemaError(line_no, "id", "missing or not a string");
        item.id = j.at("id").get<std::string>();
        if (!j.contains("question") || !j.at("question").is_string())
            throw SchemaError(line_no, "question", "missing or not a string");
        item.question = j.at("question").get<std::string>();
        if (!j.contains("gold_answer") || !j.at("gold_answer").is_string() ||
            j.at("gold_answer").get<std::string>().empty())
            throw SchemaError(line_no, "gold_answer", "missing or empty");
        item.gold_answer = j.at("gold_answer").get<std::string>();
        if (j.contains("image") && j.at("image").is_string() &&
            !j.at("image").get<std::string>().empty())
            item.image_ref = j.at("image").get<std::string>();
        const std::string mode = j.value("answer_mode", "exact");
        if (mode == "exact") item.answer_mode = MatchMode::Exact;
        else if (mode == "normalized") item.answer_mode = MatchMode::Normalized;
        else throw SchemaError(line_no, "answer_mode", "must be \"exact\" or \"normalized\"");
        items.push_back(std::move(item));
    });
    return items;
}

EvalReport run_eval(const std::vector<EvalItem>& items, ModelClient& client,
                    const GenerationParams& policy,
                    const std::optional<GenerationParams>& critic, const EvalOptions& opts) {
    if (opts.n < 1) throw std::invalid_argument("n must be >= 1");

    EvalReport report;
    report.per_item.resize(items.size());

    // Per-item curve estimates, merged after the parallel pass.
    std::vector<std::map<SelectionStrategy, std::vector<CurvePoint>>> item_curves(items.size());

    parallel_for(items.size(), opts.item_workers, [&](std::size_t idx) {
        const EvalItem& item = items[idx];
        ItemResult& result = report.per_item[idx];
        result.id = item.id;

        const std::uint64_t item_seed =
            derive_stream(opts.run_seed, fnv1a64(item.id), kItemStream);

        std::vector<Generation> candidates;
        try {
            GenerationParams params = policy;
            params.seed_hint = static_cast<std::int64_t>(item_seed);
            candidates = client.generate_n(item.question, item.image_ref, opts.n, params,
                                           item.id);
        } catch (const std::exception& e) {
            if (!opts.keep_going)
                throw std::runtime_error("item '" + item.id + "': " + e.what());
            result.failed = true;
            result.error = e.what();
            for (const auto s : opts.strategies) result.outcomes[s] = StrategyOutcome{};
            return;
        }

        PairJudge judge;
        if (opts.strategies.count(SelectionStrategy::Tournament) ||
            (!opts.curve_ks.empty())) {
            GenerationParams judge_params = critic.value_or(policy);
            judge_params.seed_hint =
                static_cast<std::int64_t>(derive_stream(item_seed, kJudgeStream, 0));
            judge = [&client, item, judge_params](const Generation& a, const Generation& b) {
                return client.judge_pair(item.question, item.image_ref, a.raw_text, b.raw_text,
                                         judge_params);
            };
        }

        for (const auto strategy : opts.strategies) {
            switch (strategy) {
                case SelectionStrategy::Tournament: {
                    SelectionConfig cfg = opts.selection;
                    cfg.rng_seed = derive_stream(item_seed, kTournamentStream, 0);
                    const auto sel = tournament_select(candidates, judge, cfg);
                    result.outcomes[strategy] =
                        outcome_for_winner(candidates, sel.winner_index, item);
                    break;
                }
                case SelectionStrategy::Majority: {
                    const auto sel = majority_vote(candidates, item.answer_mode);
                    result.outcomes[strategy] =
                        outcome_for_winner(candidates, sel.winner_index, item);
                    break;
                }
                case SelectionStrategy::Oracle: {
                    const auto oracle = oracle_select(candidates, item.gold_answer,
                                                      item.answer_mode);
                    StrategyOutcome out;
                    out.correct = oracle.solved;
                    if (oracle.witness) {
                        out.winner_index = *oracle.witness;
                        out.winner_answer =
                            candidates[static_cast<std::size_t>(*oracle.witness)]
                                .parsed.answer.value_or("");
                    }
                    result.outcomes[strategy] = out;
                    break;
                }
            }
        }

        if (!opts.curve_ks.empty()) {
            for (const auto strategy : opts.strategies) {
                const PairJudge* judge_ptr =
                    strategy == SelectionStrategy::Tournament ? &judge : nullptr;
                item_curves[idx][strategy] = best_of_k_curve(
                    candidates, item.gold_answer, opts.curve_ks, strategy, opts.curve_trials,
                    derive_stream(item_seed, kCurveStream, 0), judge_ptr, item.answer_mode,
                    opts.subset_mode);
            }
        }
    });

    std::sort(report.per_item.begin(), report.per_item.end(),
              [](const ItemResult& a, const ItemResult& b) { return a.id < b.id; });

    for (const auto& item : report.per_item)
        if (item.failed) ++report.failed_items;

    for (const auto strategy : opts.strategies) {
        double correct = 0.0;
        for (const auto& item : report.per_item)
            if (item.outcomes.count(strategy) && item.outcomes.at(strategy).correct)
                correct += 1.0;
        report.aggregates[strategy] =
            items.empty() ? 0.0 : correct / static_cast<double>(items.size());
    }

    // Benchmark-level curve: mean of per-item estimates; per-item standard
    // errors combine as independent (sqrt of summed squares over N).
    if (!opts.curve_ks.empty() && !items.empty()) {
        for (const auto strategy : opts.strategies) {
            std::vector<CurvePoint> merged;
            for (std::size_t ki = 0; ki < opts.curve_ks.size(); ++ki) {
                CurvePoint p;
                p.k = opts.curve_ks[ki];
                double se_sq = 0.0;
                for (std::size_t idx = 0; idx < items.size(); ++idx) {
                    const auto it = item_curves[idx].find(strategy);
                    // Failed items have no curve and contribute zero accuracy.
                    if (it == item_curves[idx].end() || it->second.size() <= ki) continue;
                    p.estimate += it->second[ki].estimate;
                    se_sq += it->second[ki].std_err * it->second[ki].std_err;
                }
                p.estimate /= static_cast<double>(items.size());
                p.std_err = std::sqrt(se_sq) / static_cast<double>(items.size());
                merged.push_back(p);
            }
            report.curves[strategy] = std::move(merged);
        }
    }

    // Fingerprint covers everything that determines the report.
    json fp = {{"n", opts.n},
               {"run_seed", opts.run_seed},
               {"curve_ks", opts.curve_ks},
               {"curve_trials", opts.curve_trials},
               {"subset_mode", opts.subset_mode == SubsetMode::Resample ? "resample" : "prefix"},
               {"policy_model", policy.model},
               {"policy_temperature", policy.temperature},
               {"policy_max_tokens", policy.max_tokens},
               {"critic_model", critic ? critic->model : ""},
               {"both_orders", opts.selection.judge_both_orders}};
    json strategies = json::array();
    for (const auto s : opts.strategies) strategies.push_back(strategy_label(s));
    fp["strategies"] = strategies;
    std::string item_digest;
    for (const auto& item : items) {
        item_digest += item.id;
        item_digest += '\x1f';
        item_digest += item.gold_answer;
        item_digest += '\x1e';
    }
    fp["items"] = fnv1a64(item_digest);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(fp.dump())));
    report.config_fingerprint.assign(hex);
    return report;
}

void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out) {
    switch (format) {
        case ReportFormat::Csv: {
            out << "strategy,k,estimate,stderr\n";
            for (const auto& [strategy, points] : report.curves)
                for (const auto& p : points)
                    out << strategy_label(strategy) << ',' << p.k << ','
                        << format_double(p.estimate) << ',' << format_double(p.std_err) << '\n';
            return;
        }
        case ReportFormat::TableText: {
            out << "config " << report.config_fingerprint << "\n";
            out << "items " << report.per_item.size() << " (" << report.failed_items
                << " failed)\n\n";
            out << "strategy      accuracy\n";
            for (const auto& [strategy, accuracy] : report.aggregates) {
                std::string name(strategy_label(strategy));
                name.resize(14, ' ');
                char acc[16];
                std::snprintf(acc, sizeof(acc), "%.4f", accuracy);
                out << name << acc << "\n";
            }
            if (!report.curves.empty()) {
                out << "\nstrategy      k     estimate  stderr\n";
                for (const auto& [strategy, points] : report.curves) {
                    for (const auto& p : points) {
                        std::string name(strategy_label(strategy));
                        name.resize(14, ' ');
                        char row[48];
                        std::snprintf(row, sizeof(row), "%-6d%.4f    %.4f", p.k, p.estimate,
                                      p.std_err);
                        out << name << row << "\n";
                    }
                }
            }
            return;
        }
        case ReportFormat::JsonLines: {
            out << json{{"type", "config"},
                        {"fingerprint", report.config_fingerprint},
                        {"failed_items", report.failed_items}}
                       .dump()
                << '\n';
            for (const auto& item : report.per_item) {
                json outcomes = json::object();
                for (const auto& [strategy, outcome] : item.outcomes) {
                    outcomes[std::string(strategy_label(strategy))] = {
                        {"winner_index", outcome.winner_index},
                        {"winner_answer", outcome.winner_answer},
                        {"correct", outcome.correct}};
                }
                json line = {{"type", "item"}, {"id", item.id}, {"outcomes", outcomes}};
                if (item.failed) {
                    line["failed"] = true;
                    line["error"] = item.error;
                }
                out << line.dump() << '\n';
            }
            for (const auto& [strategy, accuracy] : report.aggregates)
                out << json{{"type", "aggregate"},
                            {"strategy", strategy_label(strategy)},
                            {"accuracy", accuracy}}
                           .dump()
                    << '\n';
            for (const auto& [strategy, points] : report.curves)
                for (const auto& p : points) out << curve_point_json(strategy, p).dump() << '\n';
            return;
        }
    }
}

void emit_report_file(const EvalReport& report, ReportFormat format, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot open " + path + " for writing");
    emit_report(report, format, out);
    if (!out) throw FileError("short write to " + path);
}

EvalReport load_report_jsonl(std::istream& in) {
    EvalReport report;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string type = j.value("type", "");
        if (type == "config") {
            report.config_fingerprint = j.value("fingerprint", "");
            report.failed_items = j.value("failed_items", 0);
        } else if (type == "item") {
            ItemResult item;
            item.id = j.at("id").get<std::string>();
            item.failed = j.value("failed", false);
            item.error = j.value("error", "");
            for (const auto& [name, o] : j.at("outcomes").items()) {
                const auto strategy = strategy_from_label(name);
                if (!strategy) continue;
                StrategyOutcome outcome;
                outcome.winner_index = o.value("winner_index", -1);
                outcome.winner_answer = o.value("winner_answer", "");
                outcome.correct = o.value("correct", false);
                item.outcomes[*strategy] = outcome;
            }
            report.per_item.push_back(std::move(item));
        } else if (type == "aggregate") {
            const auto strategy = strategy_from_label(j.at("strategy").get<std::string>());
            if (strategy) report.aggregates[*strategy] = j.at("accuracy").get<double>();
        } else if (type == "curve") {
            const auto strategy = strategy_from_label(j.at("strategy").get<std::string>());
            if (!strategy) continue;
            CurvePoint p;
            p.k = j.at("k").get<int>();
            p.estimate = j.at("estimate").get<double>();
            p.std_err = j.at("stderr").get<double>();
            report.curves[*strategy].push_back(p);
        }
    }
    return report;
}

EvalReport load_report_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    return load_report_jsonl(in);
}

}  // namespace critic_arena
