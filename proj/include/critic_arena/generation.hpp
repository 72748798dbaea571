// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "critic_arena/structured_output.hpp"

namespace critic_arena {

enum class SystemTemplate { Thinking, None };

struct GenerationParams {
    std::string model;
    double temperature = 0.9;
    int max_tokens = 2048;
    SystemTemplate system_template = SystemTemplate::Thinking;
    std::optional<std::int64_t> seed_hint;  // mixed with sample_index per request
};

struct EndpointMeta {
    std::string model;
    std::string finish_reason;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

// One sampled completion. (prompt_id, sample_index) identifies the draw;
// reproducibility comes from the cache, not from endpoint randomness.
struct Generation {
    std::string prompt_id;
    int sample_index = 0;
    std::string raw_text;
    ParsedResponse parsed;
    EndpointMeta meta;
};

inline Generation make_generation(std::string prompt_id, int sample_index, std::string raw_text,
                                  EndpointMeta meta = {}) {
    Generation g;
    g.prompt_id = std::move(prompt_id);
    g.sample_index = sample_index;
    g.parsed = parse_structured_output(raw_text);
    g.raw_text = std::move(raw_text);
    g.meta = std::move(meta);
    return g;
}

bool operator==(const EndpointMeta& a, const EndpointMeta& b);
bool operator==(const Generation& a, const Generation& b);

}  // namespace critic_arena
