// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace critic_arena {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kBoxedPrefix = "\\boxed{";

enum class PreferenceVerdict { Response1, Response2, Tie, Unparseable };

// File/wire encoding of a gold verdict: "1", "2", "tie".
std::string_view verdict_label(PreferenceVerdict v);
std::optional<PreferenceVerdict> verdict_from_label(std::string_view label);

// The answer text a correctly formatted judge emits for a verdict: "1", "2",
// or the verbatim tie sentence. Unparseable has no canonical text.
std::string_view canonical_verdict_text(PreferenceVerdict v);

// One model generation decomposed against the think-then-answer contract.
//
// think    content of the first <think>...</think> span, if well formed.
// answer   content of the last balanced \boxed{...} outside the think span.
// format_ok  true iff both were extracted.
struct ParsedResponse {
    std::string raw_text;
    std::optional<std::string> think;
    std::optional<std::string> answer;
    bool format_ok = false;
};

// Total: never fails, absence is an empty optional. Only the first <think>
// opening and its first closing delimiter form the think span; later
// delimiters are literal text. Boxed extraction uses character-level brace
// counting, so the extracted answer always has balanced braces. A box whose
// \boxed{ starts inside the think span does not count as the final answer.
ParsedResponse parse_structured_output(std::string_view raw);

// Maps an extracted answer to a verdict. Case-insensitive; leading/trailing
// whitespace and punctuation are trimmed and inner whitespace runs collapse
// to one space. "1" / "response 1" / "answer 1" (and the 2-forms) map to the
// response verdicts; anything containing "equally good" is a Tie; everything
// else is Unparseable.
PreferenceVerdict normalize_preference_verdict(std::string_view answer);

// Verdict of a full response: the boxed answer when present, otherwise the
// last non-empty line of the raw output (salvage for near-format outputs;
// format_ok stays false for those).
PreferenceVerdict response_verdict(const ParsedResponse& parsed);

// Last line of text containing a non-whitespace character, or "" if none.
std::string_view last_nonempty_line(std::string_view text);

enum class MatchMode { Exact, Normalized };

// Exact: byte equality after whitespace trim + ASCII case fold.
// Normalized: when both sides parse fully as finite numbers (strtod syntax:
// decimal or scientific; no fractions like "1/2"), numeric equality within
// relative tolerance 1e-6; otherwise falls back to Exact. Total: empty input
// after trimming never matches.
bool match_answer(std::string_view pred, std::string_view gold, MatchMode mode);

inline constexpr double kMatchRelTolerance = 1e-6;

}  // namespace critic_arena
