// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/templates.hpp"

#include <string_view>

#include "critic_arena/errors.hpp"

namespace critic_arena {

const std::string_view kJudgePromptTemplate =
    "<image>\n"
    "You are provided with an image and a question for this image. Please review the "
    "corresponding responses and choose which response is better for the given question. "
    "Your answer should be the response index if one response is better and \"Two responses "
    "are equally good.\" if the responses are equally good. Answer with response number or "
    "\"Two responses are equally good.\" directly.\n"
    "Your task is provided as follows:\n"
    "Question: {}\n"
    "Response 1: {}\n"
    "Response 2: {}";

const std::string_view kThinkingTemplate =
    "You FIRST think about the reasoning process as an internal monologue and then provide "
    "the final answer. The reasoning process MUST BE enclosed within <think> </think> tags. "
    "The final answer MUST BE put in \\boxed{}";

const std::string_view kTieSentence = "Two responses are equally good.";

namespace {
constexpr std::string_view kSlot = "{}";
}

std::string render_judge_prompt(std::string_view question, std::string_view response_1,
                                std::string_view response_2) {
    const std::string_view values[3] = {question, response_1, response_2};
    const char* names[3] = {"question", "response_1", "response_2"};
    for (int i = 0; i < 3; ++i) {
        if (values[i].find(kSlot) != std::string_view::npos) {
            throw TemplateError(std::string(names[i]) +
                                " contains the placeholder sigil \"{}\" and cannot be "
                                "substituted unambiguously");
        }
    }

    std::string out;
    out.reserve(kJudgePromptTemplate.size() + question.size() + response_1.size() +
                response_2.size());
    std::string_view rest = kJudgePromptTemplate;
    for (const std::string_view value : values) {
        const auto slot = rest.find(kSlot);
        out.append(rest.substr(0, slot));
        out.append(value);
        rest.remove_prefix(slot + kSlot.size());
    }
    out.append(rest);
    return out;
}

}  // namespace critic_arena
