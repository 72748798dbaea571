// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/reformulate.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "json.hpp"

#include "critic_arena/concurrency.hpp"
#include "critic_arena/errors.hpp"
#include "critic_arena/jsonl.hpp"
#include "critic_arena/templates.hpp"

namespace critic_arena {

using json = nlohmann::json;

namespace {

std::string require_string(const json& j, std::size_t line_no, const char* field,
                           bool allow_empty = false) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw SchemaError(line_no, field, "missing or not a string");
    std::string value = j.at(field).get<std::string>();
    if (!allow_empty && value.empty()) throw SchemaError(line_no, field, "must be non-empty");
    return value;
}

PreferenceVerdict parse_preference(const json& j, std::size_t line_no) {
    if (!j.contains("human_preference"))
        throw SchemaError(line_no, "human_preference", "missing");
    const json& p = j.at("human_preference");
    int value = -1;
    if (p.is_number_integer()) {
        value = p.get<int>();
    } else if (p.is_string()) {
        const std::string s = p.get<std::string>();
        if (s == "1") value = 1;
        else if (s == "2") value = 2;
        else if (s == "0" || s == "tie") value = 0;
    }
    switch (value) {
        case 1: return PreferenceVerdict::Response1;
        case 2: return PreferenceVerdict::Response2;
        case 0: return PreferenceVerdict::Tie;
        default:
            throw SchemaError(line_no, "human_preference", "must be 1, 2, or 0 (tie)");
    }
}

PairwiseRecord record_from_json(const json& j, std::size_t line_no) {
    if (!j.is_object()) throw SchemaError(line_no, "", "record is not a JSON object");
    if (j.contains("response") && !j.contains("response_1"))
        throw SchemaError(line_no, "response",
                          "pointwise critic records are out of scope; this tool only accepts "
                          "pairwise records with response_1/response_2");
    if (j.contains("score") && !j.contains("human_preference"))
        throw SchemaError(line_no, "score",
                          "pointwise critic records are out of scope; this tool only accepts "
                          "pairwise records with a human_preference label");

    PairwiseRecord rec;
    rec.id = require_string(j, line_no, "id");
    rec.image_ref = j.contains("image") ? require_string(j, line_no, "image", true) : "";
    rec.question = require_string(j, line_no, "question", true);
    rec.response_1 = require_string(j, line_no, "response_1");
    rec.response_2 = require_string(j, line_no, "response_2");
    rec.gold = parse_preference(j, line_no);
    if (j.contains("rationale") && j.at("rationale").is_string())
        rec.rationale = j.at("rationale").get<std::string>();
    if (j.contains("source") && j.at("source").is_string())
        rec.source = j.at("source").get<std::string>();
    return rec;
}

}  // namespace

LoadResult load_records(const std::string& path, bool strict) {
    LoadResult out;
    for_each_jsonl_line(path, [&](std::size_t line_no, const std::string& line) {
        try {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw SchemaError(line_no, "", std::string("invalid JSON: ") + e.what());
            }
            out.records.push_back(record_from_json(j, line_no));
        } catch (const SchemaError& e) {
            if (strict) throw;
            out.issues.push_back({e.line_no, e.field, e.what()});
        }
    });
    return out;
}

CriticTask reformulate(const PairwiseRecord& record) {
    CriticTask task;
    task.id = record.id;
    task.image_ref = record.image_ref;
    task.prompt = render_judge_prompt(record.question, record.response_1, record.response_2);
    task.gold = record.gold;
    return task;
}

PairwiseRecord swap_record(const PairwiseRecord& record) {
    PairwiseRecord swapped = record;
    swapped.id += "::swap";
    std::swap(swapped.response_1, swapped.response_2);
    if (record.gold == PreferenceVerdict::Response1) swapped.gold = PreferenceVerdict::Response2;
    if (record.gold == PreferenceVerdict::Response2) swapped.gold = PreferenceVerdict::Response1;
    return swapped;
}

std::vector<CriticTask> reformulate_all(std::span<const PairwiseRecord> records,
                                        bool swap_augment, int max_workers) {
    const std::size_t stride = swap_augment ? 2 : 1;
    std::vector<CriticTask> out(records.size() * stride);
    parallel_for(records.size(), max_workers, [&](std::size_t i) {
        out[i * stride] = reformulate(records[i]);
        if (swap_augment) out[i * stride + 1] = reformulate(swap_record(records[i]));
    });
    return out;
}

DatasetStats dataset_stats(std::span<const PairwiseRecord> records) {
    DatasetStats stats;
    stats.count = records.size();
    std::map<std::string, std::size_t> id_counts;
    for (const auto& rec : records) {
        switch (rec.gold) {
            case PreferenceVerdict::Response1: ++stats.response_1_wins; break;
            case PreferenceVerdict::Response2: ++stats.response_2_wins; break;
            case PreferenceVerdict::Tie: ++stats.ties; break;
            case PreferenceVerdict::Unparseable: break;
        }
        ++id_counts[rec.id];
    }
    if (stats.count > 0) {
        stats.tie_fraction = static_cast<double>(stats.ties) / static_cast<double>(stats.count);
        stats.tie_fraction_defined = true;
    }
    for (const auto& [id, n] : id_counts)
        if (n > 1) stats.duplicate_ids.push_back(id);
    return stats;
}

void write_tasks(const std::string& path, std::span<const CriticTask> tasks) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot open " + path + " for writing");
    for (const auto& task : tasks) {
        const json j = {{"id", task.id},
                        {"image", task.image_ref},
                        {"prompt", task.prompt},
                        {"gold", verdict_label(task.gold)}};
        out << j.dump() << '\n';
    }
    if (!out) throw FileError("short write to " + path);
}

std::vector<CriticTask> load_tasks(const std::string& path) {
    std::vector<CriticTask> tasks;
    for_each_jsonl_line(path, [&](std::size_t line_no, const std::string& line) {
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaError(line_no, "", std::string("invalid JSON: ") + e.what());
        }
        CriticTask task;
        task.id = require_string(j, line_no, "id");
        task.image_ref = j.contains("image") ? require_string(j, line_no, "image", true) : "";
        task.prompt = require_string(j, line_no, "prompt", true);
        const auto gold = verdict_from_label(require_string(j, line_no, "gold"));
        if (!gold) throw SchemaError(line_no, "gold", "must be \"1\", \"2\", or \"tie\"");
        task.gold = *gold;
        tasks.push_back(std::move(task));
    });
    return tasks;
}

}  // namespace critic_arena
