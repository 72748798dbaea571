// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/reformulate.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "critic_arena/errors.hpp"
#include "critic_arena/templates.hpp"
#include "test_support.hpp"

using namespace critic_arena;
using critic_arena::test::TempDir;

namespace {

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& line : lines) out << line << "\n";
}

PairwiseRecord sample_record() {
    PairwiseRecord rec;
    rec.id = "r1";
    rec.image_ref = "images/0001.jpg";
    rec.question = "Q";
    rec.response_1 = "A";
    rec.response_2 = "B";
    rec.gold = PreferenceVerdict::Response1;
    return rec;
}

}  // namespace

TEST_CASE("load_records keeps file order and reports issues") {
    TempDir dir;
    const auto path = dir.file("records.jsonl");
    write_lines(path,
                {R"({"id":"a","image":"i1","question":"q1","response_1":"r1","response_2":"r2","human_preference":1})",
                 R"({"id":"b","image":"i2","question":"q2","response_1":"r1","response_2":"r2","human_preference":0})",
                 R"({"id":"c","image":"i3","question":"q3","response_1":"r1","response_2":"r2","human_preference":2,"rationale":"because"})"});
    const auto loaded = load_records(path);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.issues.empty());
    CHECK(loaded.records[0].id == "a");
    CHECK(loaded.records[1].gold == PreferenceVerdict::Tie);
    CHECK(loaded.records[2].rationale.has_value());
    CHECK(*loaded.records[2].rationale == "because");
}

TEST_CASE("missing file raises FileError") {
    CHECK_THROWS_AS(load_records("/nonexistent/records.jsonl"), FileError);
}

TEST_CASE("strict mode throws SchemaError with line and field") {
    TempDir dir;
    const auto path = dir.file("records.jsonl");
    write_lines(path,
                {R"({"id":"a","image":"i","question":"q","response_1":"r1","response_2":"r2","human_preference":1})",
                 R"({"id":"b","image":"i","question":"q","response_1":"r1","human_preference":1})"});
    try {
        load_records(path, /*strict=*/true);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line_no == 2);
        CHECK(e.field == "response_2");
    }
}

TEST_CASE("lenient mode reports invalid lines instead of dropping them silently") {
    TempDir dir;
    const auto path = dir.file("records.jsonl");
    write_lines(path,
                {R"(not json at all)",
                 R"({"id":"a","image":"i","question":"q","response_1":"r1","response_2":"","human_preference":1})",
                 R"({"id":"b","image":"i","question":"q","response_1":"r1","response_2":"r2","human_preference":2})"});
    const auto loaded = load_records(path);
    REQUIRE(loaded.records.size() == 1);
    CHECK(loaded.records[0].id == "b");
    REQUIRE(loaded.issues.size() == 2);
    CHECK(loaded.issues[0].line_no == 1);
    CHECK(loaded.issues[1].line_no == 2);
    CHECK(loaded.issues[1].field == "response_2");
}

TEST_CASE("pointwise records are rejected by name") {
    TempDir dir;
    const auto path = dir.file("records.jsonl");
    write_lines(path, {R"({"id":"p","image":"i","question":"q","response":"only one","score":4})"});
    try {
        load_records(path, /*strict=*/true);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("pointwise") != std::string::npos);
    }
    const auto lenient = load_records(path);
    CHECK(lenient.records.empty());
    REQUIRE(lenient.issues.size() == 1);
}

TEST_CASE("reformulate renders the template and drops the rationale") {
    PairwiseRecord rec = sample_record();
    rec.rationale = "fluency: 5; accuracy: 4; the first response is better because...";
    const auto task = reformulate(rec);
    CHECK(task.id == "r1");
    CHECK(task.gold == PreferenceVerdict::Response1);
    const std::string tail = "Response 1: A\nResponse 2: B";
    CHECK(task.prompt.substr(task.prompt.size() - tail.size()) == tail);
    CHECK(task.prompt.find("fluency") == std::string::npos);
    CHECK(task.prompt.find("because") == std::string::npos);
    CHECK(task.prompt.substr(0, 7) == "<image>");
}

TEST_CASE("reformulate preserves tie gold") {
    PairwiseRecord rec = sample_record();
    rec.gold = PreferenceVerdict::Tie;
    CHECK(reformulate(rec).gold == PreferenceVerdict::Tie);
}

TEST_CASE("placeholder sigil in a field is a TemplateError") {
    PairwiseRecord rec = sample_record();
    rec.response_2 = "code sample: vector<int> v{}; // {}";
    CHECK_THROWS_AS(reformulate(rec), TemplateError);
}

TEST_CASE("reformulate_all is order preserving and swap-augment mirrors gold") {
    std::vector<PairwiseRecord> records;
    for (int i = 0; i < 20; ++i) {
        PairwiseRecord rec = sample_record();
        rec.id = "rec" + std::to_string(i);
        rec.gold = i % 3 == 0 ? PreferenceVerdict::Tie
                              : (i % 3 == 1 ? PreferenceVerdict::Response1
                                            : PreferenceVerdict::Response2);
        records.push_back(rec);
    }

    const auto plain = reformulate_all(records);
    REQUIRE(plain.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(plain[i].id == records[i].id);

    const auto augmented = reformulate_all(records, /*swap_augment=*/true);
    REQUIRE(augmented.size() == records.size() * 2);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(augmented[2 * i].id == records[i].id);
        CHECK(augmented[2 * i + 1].id == records[i].id + "::swap");
        const auto mirrored = augmented[2 * i + 1].gold;
        switch (records[i].gold) {
            case PreferenceVerdict::Response1:
                CHECK(mirrored == PreferenceVerdict::Response2);
                break;
            case PreferenceVerdict::Response2:
                CHECK(mirrored == PreferenceVerdict::Response1);
                break;
            default: CHECK(mirrored == records[i].gold);
        }
        // Swapped prompt carries the responses in reversed positions.
        CHECK(augmented[2 * i + 1].prompt.find("Response 1: B") != std::string::npos);
    }
}

TEST_CASE("dataset stats") {
    std::vector<PairwiseRecord> records;
    PairwiseRecord a = sample_record();
    a.id = "x";
    a.gold = PreferenceVerdict::Response1;
    PairwiseRecord b = sample_record();
    b.id = "y";
    b.gold = PreferenceVerdict::Response2;
    PairwiseRecord c = sample_record();
    c.id = "x";
    c.gold = PreferenceVerdict::Tie;
    records = {a, b, c};

    const auto stats = dataset_stats(records);
    CHECK(stats.count == 3);
    CHECK(stats.ties == 1);
    CHECK(stats.tie_fraction == doctest::Approx(1.0 / 3.0));
    CHECK(stats.tie_fraction_defined);
    REQUIRE(stats.duplicate_ids.size() == 1);
    CHECK(stats.duplicate_ids[0] == "x");

    const auto empty = dataset_stats(std::vector<PairwiseRecord>{});
    CHECK(empty.count == 0);
    CHECK(empty.tie_fraction == 0.0);
    CHECK(!empty.tie_fraction_defined);
}

TEST_CASE("task write/load round-trips byte-exactly") {
    TempDir dir;
    std::vector<PairwiseRecord> records;
    for (int i = 0; i < 10; ++i) {
        PairwiseRecord rec = sample_record();
        rec.id = "t" + std::to_string(i);
        rec.question = "line1\nline2 with \"quotes\" and \\backslashes\\";
        rec.response_1 = "unicode: déjà vu";
        rec.response_2 = "tabs\tand\ttrailing space ";
        rec.gold = i % 2 ? PreferenceVerdict::Tie : PreferenceVerdict::Response2;
        records.push_back(rec);
    }
    const auto tasks = reformulate_all(records);
    const auto path = dir.file("tasks.jsonl");
    write_tasks(path, tasks);
    const auto reloaded = load_tasks(path);
    REQUIRE(reloaded.size() == tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK(reloaded[i].id == tasks[i].id);
        CHECK(reloaded[i].image_ref == tasks[i].image_ref);
        CHECK(reloaded[i].prompt == tasks[i].prompt);
        CHECK(reloaded[i].gold == tasks[i].gold);
    }
}

TEST_CASE("emitted gold labels agree with the verdict normalizer on canonical text") {
    for (const auto gold : {PreferenceVerdict::Response1, PreferenceVerdict::Response2,
                            PreferenceVerdict::Tie}) {
        PairwiseRecord rec = sample_record();
        rec.gold = gold;
        const auto task = reformulate(rec);
        CHECK(normalize_preference_verdict(canonical_verdict_text(task.gold)) == task.gold);
    }
}
