// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/structured_output.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>

#include "critic_arena/templates.hpp"

namespace critic_arena {

namespace {

constexpr auto npos = std::string_view::npos;

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string_view trim_ws(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

// Lowercase, strip surrounding whitespace/punctuation, collapse inner
// whitespace runs to single spaces.
std::string canonicalize_verdict_text(std::string_view s) {
    std::string lower = ascii_lower(s);
    std::string_view v = lower;
    while (!v.empty() && (is_space(v.front()) || is_punct(v.front()))) v.remove_prefix(1);
    while (!v.empty() && (is_space(v.back()) || is_punct(v.back()))) v.remove_suffix(1);
    std::string out;
    out.reserve(v.size());
    bool in_ws = false;
    for (unsigned char c : v) {
        if (is_space(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

// Balanced-brace content span starting right after "\boxed{" at open_brace.
// Returns nullopt when the braces never balance.
std::optional<std::string_view> balanced_content(std::string_view raw, std::size_t open_brace) {
    int depth = 1;
    for (std::size_t i = open_brace + 1; i < raw.size(); ++i) {
        if (raw[i] == '{') ++depth;
        if (raw[i] == '}') {
            if (--depth == 0) return raw.substr(open_brace + 1, i - open_brace - 1);
        }
    }
    return std::nullopt;
}

std::optional<double> parse_full_number(std::string_view s) {
    std::string buf(s);
    const char* begin = buf.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) return std::nullopt;
    return value;
}

}  // namespace

std::string_view verdict_label(PreferenceVerdict v) {
    switch (v) {
        case PreferenceVerdict::Response1: return "1";
        case PreferenceVerdict::Response2: return "2";
        case PreferenceVerdict::Tie: return "tie";
        case PreferenceVerdict::Unparseable: return "unparseable";
    }
    return "unparseable";
}

std::optional<PreferenceVerdict> verdict_from_label(std::string_view label) {
    if (label == "1") return PreferenceVerdict::Response1;
    if (label == "2") return PreferenceVerdict::Response2;
    if (label == "tie" || label == "0") return PreferenceVerdict::Tie;
    return std::nullopt;
}

std::string_view canonical_verdict_text(PreferenceVerdict v) {
    switch (v) {
        case PreferenceVerdict::Response1: return "1";
        case PreferenceVerdict::Response2: return "2";
        case PreferenceVerdict::Tie: return kTieSentence;
        case PreferenceVerdict::Unparseable: return "";
    }
    return "";
}

ParsedResponse parse_structured_output(std::string_view raw) {
    ParsedResponse out;
    out.raw_text.assign(raw);

    // Think span: first opening delimiter, first closing delimiter after it.
    std::size_t think_begin = npos;
    std::size_t think_end = npos;
    const std::size_t open = raw.find(kThinkOpen);
    if (open != npos) {
        const std::size_t close = raw.find(kThinkClose, open + kThinkOpen.size());
        if (close != npos) {
            think_begin = open + kThinkOpen.size();
            think_end = close;
            out.think = std::string(raw.substr(think_begin, think_end - think_begin));
        }
    }

    // Last balanced box whose \boxed{ starts outside the think span.
    std::size_t search = 0;
    for (;;) {
        const std::size_t pos = raw.find(kBoxedPrefix, search);
        if (pos == npos) break;
        search = pos + 1;
        if (think_begin != npos && pos >= think_begin && pos < think_end) continue;
        if (const auto content = balanced_content(raw, pos + kBoxedPrefix.size() - 1)) {
            out.answer = std::string(*content);
        }
    }

    out.format_ok = out.think.has_value() && out.answer.has_value();
    return out;
}

PreferenceVerdict normalize_preference_verdict(std::string_view answer) {
    const std::string canon = canonicalize_verdict_text(answer);
    if (canon.find("equally good") != std::string::npos) return PreferenceVerdict::Tie;
    if (canon == "1" || canon == "response 1" || canon == "answer 1")
        return PreferenceVerdict::Response1;
    if (canon == "2" || canon == "response 2" || canon == "answer 2")
        return PreferenceVerdict::Response2;
    return PreferenceVerdict::Unparseable;
}

PreferenceVerdict response_verdict(const ParsedResponse& parsed) {
    if (parsed.answer) return normalize_preference_verdict(*parsed.answer);
    return normalize_preference_verdict(last_nonempty_line(parsed.raw_text));
}

std::string_view last_nonempty_line(std::string_view text) {
    while (!text.empty()) {
        const std::size_t nl = text.rfind('\n');
        const std::string_view line = nl == npos ? text : text.substr(nl + 1);
        if (!trim_ws(line).empty()) return line;
        if (nl == npos) break;
        text = text.substr(0, nl);
    }
    return {};
}

bool match_answer(std::string_view pred, std::string_view gold, MatchMode mode) {
    const std::string_view p = trim_ws(pred);
    const std::string_view g = trim_ws(gold);
    if (p.empty() || g.empty()) return false;

    if (mode == MatchMode::Normalized) {
        const auto a = parse_full_number(p);
        const auto b = parse_full_number(g);
        if (a && b && std::isfinite(*a) && std::isfinite(*b)) {
            if (*a == *b) return true;
            return std::fabs(*a - *b) <=
                   kMatchRelTolerance * std::max(std::fabs(*a), std::fabs(*b));
        }
    }
    return ascii_lower(p) == ascii_lower(g);
}

}  // namespace critic_arena
