// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/selector_json.hpp"

#include <stdexcept>

namespace critic_arena {

using json = nlohmann::json;

json to_json(const MatchRecord& rec) {
    if (rec.bye) return {{"type", "bye"}, {"round", rec.round}, {"index", rec.index_a}};
    return {{"type", "match"},
            {"round", rec.round},
            {"index_a", rec.index_a},
            {"index_b", rec.index_b},
            {"verdict", verdict_label(rec.verdict)},
            {"advanced_index", rec.advanced_index}};
}

MatchRecord match_record_from_json(const json& j) {
    MatchRecord rec;
    rec.round = j.at("round").get<int>();
    if (j.value("type", "match") == "bye") {
        rec.bye = true;
        rec.index_a = j.at("index").get<int>();
        rec.advanced_index = rec.index_a;
        return rec;
    }
    rec.index_a = j.at("index_a").get<int>();
    rec.index_b = j.at("index_b").get<int>();
    rec.advanced_index = j.at("advanced_index").get<int>();
    const std::string label = j.at("verdict").get<std::string>();
    if (label == "unparseable") {
        rec.verdict = PreferenceVerdict::Unparseable;
    } else {
        const auto v = verdict_from_label(label);
        if (!v) throw std::runtime_error("bad verdict label in trace: " + label);
        rec.verdict = *v;
    }
    return rec;
}

json to_json(const SelectionResult& result) {
    json j = {{"strategy", strategy_label(result.strategy)},
              {"winner_index", result.winner_index},
              {"rng_seed", result.rng_seed}};
    if (!result.trace.empty() || result.strategy == SelectionStrategy::Tournament) {
        json trace = json::array();
        for (const auto& rec : result.trace) trace.push_back(to_json(rec));
        j["trace"] = trace;
    }
    if (!result.votes.empty()) {
        json votes = json::array();
        for (const auto& group : result.votes)
            votes.push_back({{"answer", group.answer}, {"members", group.members}});
        j["votes"] = votes;
    }
    return j;
}

SelectionResult selection_result_from_json(const json& j) {
    SelectionResult result;
    const auto strategy = strategy_from_label(j.at("strategy").get<std::string>());
    if (!strategy) throw std::runtime_error("bad strategy label");
    result.strategy = *strategy;
    result.winner_index = j.at("winner_index").get<int>();
    result.rng_seed = j.value("rng_seed", std::uint64_t{0});
    if (j.contains("trace"))
        for (const auto& rec : j.at("trace")) result.trace.push_back(match_record_from_json(rec));
    if (j.contains("votes")) {
        for (const auto& g : j.at("votes")) {
            VoteGroup group;
            group.answer = g.at("answer").get<std::string>();
            group.members = g.at("members").get<std::vector<int>>();
            result.votes.push_back(std::move(group));
        }
    }
    return result;
}

}  // namespace critic_arena
