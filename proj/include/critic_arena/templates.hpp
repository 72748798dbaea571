// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace critic_arena {

// Embedded prompt resources. These are contracts: downstream reward checks
// and trained judges depend on the exact bytes, so any change must bump
// kTemplateVersion and is a breaking change for existing caches.
inline constexpr std::string_view kTemplateVersion = "1";

// Pairwise judge prompt. Three "{}" slots, in order: question, response 1,
// response 2. The "<image>" line is a placeholder the model client maps to a
// multimodal content part (or forwards verbatim to text-only endpoints).
extern const std::string_view kJudgePromptTemplate;

// System template that elicits think-then-answer output.
extern const std::string_view kThinkingTemplate;

// Verbatim tie verdict sentence. Judges must emit it exactly; the verdict
// normalizer accepts any casing/punctuation variant around "equally good".
extern const std::string_view kTieSentence;

inline constexpr std::string_view kImagePlaceholder = "<image>";

// Substitutes question/responses into kJudgePromptTemplate. Values may be
// multi-line; a value containing the placeholder sigil "{}" is rejected with
// TemplateError rather than escaped.
std::string render_judge_prompt(std::string_view question, std::string_view response_1,
                                std::string_view response_2);

}  // namespace critic_arena
