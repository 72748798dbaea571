// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critic_arena/structured_output.hpp"

namespace critic_arena {

// Raw pairwise critic datum. The rationale is carried through loading and
// dropped by reformulation.
struct PairwiseRecord {
    std::string id;
    std::string image_ref;
    std::string question;
    std::string response_1;
    std::string response_2;
    PreferenceVerdict gold = PreferenceVerdict::Tie;  // never Unparseable
    std::optional<std::string> rationale;
    std::string source;
};

// Verifiable RL task: rendered judge prompt plus machine-checkable gold.
struct CriticTask {
    std::string id;
    std::string image_ref;
    std::string prompt;
    PreferenceVerdict gold = PreferenceVerdict::Tie;
};

struct LoadIssue {
    std::size_t line_no = 0;
    std::string field;
    std::string message;
};

struct LoadResult {
    std::vector<PairwiseRecord> records;  // valid records in file order
    std::vector<LoadIssue> issues;        // skipped lines (lenient mode only)
};

// Input lines: {"id", "image", "question", "response_1", "response_2",
// "human_preference": 1|2|0, "rationale"?, "source"?}. Strict mode throws
// SchemaError at the first malformed record; lenient mode records an issue
// and keeps going. Pointwise records (single response + score) are rejected
// either way. Throws FileError when the path cannot be opened.
LoadResult load_records(const std::string& path, bool strict = false);

// Renders the judge prompt from the record, copies the gold verdict and
// discards the rationale. Throws TemplateError when a substituted field
// contains the placeholder sigil.
CriticTask reformulate(const PairwiseRecord& record);

// Same record with responses swapped and gold mirrored; id gets a "::swap"
// suffix. Used by the --swap-augment path for position-bias measurement.
PairwiseRecord swap_record(const PairwiseRecord& record);

// Order-preserving reformulation of a dataset. With swap_augment, each task
// is followed by its swapped twin.
std::vector<CriticTask> reformulate_all(std::span<const PairwiseRecord> records,
                                        bool swap_augment = false, int max_workers = 4);

struct DatasetStats {
    std::size_t count = 0;
    std::size_t response_1_wins = 0;
    std::size_t response_2_wins = 0;
    std::size_t ties = 0;
    double tie_fraction = 0.0;
    bool tie_fraction_defined = false;  // false only for an empty dataset
    std::vector<std::string> duplicate_ids;
};

DatasetStats dataset_stats(std::span<const PairwiseRecord> records);

// Task lines: {"id", "image", "prompt", "gold": "1"|"2"|"tie"}. write/load
// round-trip byte-exactly.
void write_tasks(const std::string& path, std::span<const CriticTask> tasks);
std::vector<CriticTask> load_tasks(const std::string& path);

}  // namespace critic_arena
