// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/structured_output.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"

#include "critic_arena/rng.hpp"
#include "critic_arena/templates.hpp"

using namespace critic_arena;

namespace {

// Character-level brace-counting oracle: counts '{' and '}' in a string.
std::pair<int, int> brace_counts(const std::string& s) {
    int open = 0;
    int close = 0;
    for (const char c : s) {
        if (c == '{') ++open;
        if (c == '}') ++close;
    }
    return {open, close};
}

std::string fuzz_text(std::uint64_t seed) {
    SplitMix64 rng(seed);
    static const std::vector<std::string> pieces = {
        "<think>",  "</think>", "\\boxed{", "}",          "{",     "plain text ",
        "1",        "2",        "\n",       "response 1", " ",     "Two responses are equally good.",
        "\\boxed{", "nested {deep} ",        "answer",     "<think>inner</think>"};
    std::string out;
    const int parts = 1 + static_cast<int>(rng.next_below(12));
    for (int i = 0; i < parts; ++i)
        out += pieces[static_cast<std::size_t>(rng.next_below(pieces.size()))];
    return out;
}

}  // namespace

TEST_CASE("parse extracts think block and boxed answer") {
    const auto parsed = parse_structured_output("<think>x</think> \\boxed{42}");
    REQUIRE(parsed.think.has_value());
    CHECK(*parsed.think == "x");
    REQUIRE(parsed.answer.has_value());
    CHECK(*parsed.answer == "42");
    CHECK(parsed.format_ok);
}

TEST_CASE("boxed answer without think block is not format_ok") {
    const auto parsed = parse_structured_output("\\boxed{42}");
    CHECK(!parsed.think.has_value());
    REQUIRE(parsed.answer.has_value());
    CHECK(*parsed.answer == "42");
    CHECK(!parsed.format_ok);
}

TEST_CASE("balanced braces in boxed content are preserved") {
    const auto parsed = parse_structured_output("<think>a</think> \\boxed{\\frac{1}{2}}");
    REQUIRE(parsed.answer.has_value());
    CHECK(*parsed.answer == "\\frac{1}{2}");
    // Oracle: character-level brace counting over the extracted string.
    const auto [open, close] = brace_counts(*parsed.answer);
    CHECK(open == close);
    CHECK(parsed.format_ok);
}

TEST_CASE("last boxed occurrence wins") {
    const auto parsed =
        parse_structured_output("<think>t</think> \\boxed{first} then \\boxed{second}");
    REQUIRE(parsed.answer.has_value());
    CHECK(*parsed.answer == "second");
}

TEST_CASE("unbalanced trailing box does not shadow an earlier balanced one") {
    const auto parsed = parse_structured_output("\\boxed{ok} \\boxed{truncated");
    REQUIRE(parsed.answer.has_value());
    CHECK(*parsed.answer == "ok");
}

TEST_CASE("box inside the think span is not the final answer") {
    const auto inside_only = parse_structured_output("<think>\\boxed{1}</think>");
    CHECK(inside_only.think.has_value());
    CHECK(!inside_only.answer.has_value());
    CHECK(!inside_only.format_ok);

    const auto both = parse_structured_output("<think>\\boxed{1}</think>\\boxed{2}");
    REQUIRE(both.answer.has_value());
    CHECK(*both.answer == "2");
    CHECK(both.format_ok);
}

TEST_CASE("only the first think block is honored") {
    const auto parsed =
        parse_structured_output("<think>a</think> mid <think>b</think> \\boxed{1}");
    REQUIRE(parsed.think.has_value());
    CHECK(*parsed.think == "a");
    CHECK(parsed.think->find(std::string(kThinkClose)) == std::string::npos);
}

TEST_CASE("unclosed think block is absent") {
    const auto parsed = parse_structured_output("<think>never closed \\boxed{9}");
    CHECK(!parsed.think.has_value());
    REQUIRE(parsed.answer.has_value());  // no think span, so the box counts
    CHECK(*parsed.answer == "9");
    CHECK(!parsed.format_ok);
}

TEST_CASE("empty input parses to nothing") {
    const auto parsed = parse_structured_output("");
    CHECK(!parsed.think.has_value());
    CHECK(!parsed.answer.has_value());
    CHECK(!parsed.format_ok);
}

TEST_CASE("fuzz: format_ok implies both parts present, answers stay balanced") {
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        const auto parsed = parse_structured_output(fuzz_text(seed));
        if (parsed.format_ok) {
            CHECK(parsed.think.has_value());
            CHECK(parsed.answer.has_value());
        }
        if (parsed.answer) {
            const auto [open, close] = brace_counts(*parsed.answer);
            CHECK(open == close);
        }
        if (parsed.think) {
            CHECK(parsed.think->find(std::string(kThinkClose)) == std::string::npos);
        }
    }
}

TEST_CASE("idempotence: canonical reconstruction reparses to the same parts") {
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        const auto parsed = parse_structured_output(fuzz_text(seed));
        if (!parsed.format_ok) continue;
        const std::string canonical =
            "<think>" + *parsed.think + "</think>\n\\boxed{" + *parsed.answer + "}";
        const auto reparsed = parse_structured_output(canonical);
        REQUIRE(reparsed.format_ok);
        CHECK(*reparsed.think == *parsed.think);
        CHECK(*reparsed.answer == *parsed.answer);
    }
}

TEST_CASE("verdict normalization aliases") {
    CHECK(normalize_preference_verdict("1") == PreferenceVerdict::Response1);
    CHECK(normalize_preference_verdict("Response 2") == PreferenceVerdict::Response2);
    CHECK(normalize_preference_verdict("answer 1") == PreferenceVerdict::Response1);
    CHECK(normalize_preference_verdict("  RESPONSE 1. ") == PreferenceVerdict::Response1);
    CHECK(normalize_preference_verdict("Two responses are equally good.") ==
          PreferenceVerdict::Tie);
    CHECK(normalize_preference_verdict("the second one is better") ==
          PreferenceVerdict::Unparseable);
    CHECK(normalize_preference_verdict("") == PreferenceVerdict::Unparseable);
    CHECK(normalize_preference_verdict("3") == PreferenceVerdict::Unparseable);
    CHECK(normalize_preference_verdict("12") == PreferenceVerdict::Unparseable);
}

TEST_CASE("tie label survives casing and punctuation variants") {
    const std::vector<std::string> variants = {
        "Two responses are equally good.", "two responses are equally good",
        "TWO RESPONSES ARE EQUALLY GOOD!", "  Two responses are equally good.  ",
        "I think they are equally good"};
    for (const auto& v : variants) CHECK(normalize_preference_verdict(v) == PreferenceVerdict::Tie);
}

TEST_CASE("canonical verdict text round-trips through the normalizer") {
    for (const auto v : {PreferenceVerdict::Response1, PreferenceVerdict::Response2,
                         PreferenceVerdict::Tie}) {
        CHECK(normalize_preference_verdict(canonical_verdict_text(v)) == v);
    }
}

TEST_CASE("response verdict salvages the last non-empty line when no box exists") {
    // Fixed prose corpus pinning the salvage rule.
    struct Case {
        const char* raw;
        PreferenceVerdict expected;
    };
    const Case corpus[] = {
        {"I compared both.\nResponse 1", PreferenceVerdict::Response1},
        {"Let me think...\n\nanswer 2\n\n", PreferenceVerdict::Response2},
        {"Well.\nTwo responses are equally good.", PreferenceVerdict::Tie},
        {"The first response describes the image more faithfully.",
         PreferenceVerdict::Unparseable},
        {"Both look fine to me\nhard to say", PreferenceVerdict::Unparseable},
        {"", PreferenceVerdict::Unparseable},
    };
    for (const auto& c : corpus) {
        CHECK(response_verdict(parse_structured_output(c.raw)) == c.expected);
    }
    // A boxed answer always takes precedence over the salvage path.
    CHECK(response_verdict(parse_structured_output("prose\n\\boxed{2}\nResponse 1")) ==
          PreferenceVerdict::Response2);
}

TEST_CASE("match_answer exact mode") {
    CHECK(match_answer("B", "b", MatchMode::Exact));
    CHECK(match_answer("  yes ", "yes", MatchMode::Exact));
    CHECK(!match_answer("yes", "no", MatchMode::Exact));
    CHECK(!match_answer("", "x", MatchMode::Exact));
    CHECK(!match_answer("  ", "x", MatchMode::Exact));
}

TEST_CASE("match_answer normalized mode: accepted numeric syntaxes") {
    // Oracle listing the numeric syntaxes the normalizer accepts: strtod
    // decimal and scientific forms consuming the whole trimmed string.
    CHECK(match_answer("0.50", "0.5", MatchMode::Normalized));
    CHECK(match_answer(".5", "0.5", MatchMode::Normalized));
    CHECK(match_answer("5e-1", "0.5", MatchMode::Normalized));
    CHECK(match_answer("+42", "42", MatchMode::Normalized));
    CHECK(match_answer("42.0", "42", MatchMode::Normalized));
    CHECK(match_answer("-0", "0", MatchMode::Normalized));
    CHECK(match_answer("1000000", "1000000.0000001", MatchMode::Normalized));  // inside 1e-6

    // Syntaxes that are NOT evaluated: fractions, thousands separators,
    // trailing garbage. These fall back to exact comparison.
    CHECK(!match_answer("1/2", "0.5", MatchMode::Normalized));
    CHECK(!match_answer("1,000", "1000", MatchMode::Normalized));
    CHECK(!match_answer("0.5.", "0.5", MatchMode::Normalized));
    CHECK(!match_answer("half", "0.5", MatchMode::Normalized));
    // Relative tolerance is 1e-6, not absolute.
    CHECK(!match_answer("1000000", "1000010", MatchMode::Normalized));
    // Non-numeric on either side falls back to case-folded equality.
    CHECK(match_answer("Paris", "paris", MatchMode::Normalized));
}
