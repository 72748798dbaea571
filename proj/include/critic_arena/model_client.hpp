// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critic_arena/generation.hpp"
#include "critic_arena/generation_cache.hpp"

namespace critic_arena {

inline constexpr const char* kEndpointEnvVar = "CRITIC_ARENA_ENDPOINT";
inline constexpr const char* kApiKeyEnvVar = "CRITIC_ARENA_API_KEY";

struct ClientConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string api_key;   // bearer token; empty sends no Authorization header

    int max_concurrency = 8;  // in-flight request bound, client-wide
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{500};  // doubles per attempt
    std::chrono::milliseconds request_timeout{120000};

    // When false the "<image>" placeholder line is sent as literal text and
    // an image warning is counted instead of attaching a content part.
    bool multimodal_images = true;

    // Fills base_url/api_key from CRITIC_ARENA_ENDPOINT / CRITIC_ARENA_API_KEY
    // unless already set.
    void apply_env();
};

// Blocking chat-completion client with retries, exponential backoff and a
// deterministic generation cache. Safe to call from multiple threads; the
// in-flight request count never exceeds max_concurrency.
class ModelClient {
public:
    ModelClient(ClientConfig cfg, std::shared_ptr<GenerationCache> cache);
    ~ModelClient();

    // Returns samples 0..n-1 in index order. Cached samples are served
    // without network calls; only missing indices are fetched. prompt_id is
    // a reporting label; when empty it is derived from the prompt hash.
    std::vector<Generation> generate_n(const std::string& prompt,
                                       const std::optional<std::string>& image_ref, int n,
                                       const GenerationParams& params,
                                       const std::string& prompt_id = "");

    // Renders the judge prompt with cand_a as Response 1 and cand_b as
    // Response 2, samples one completion (cached) and normalizes the verdict.
    PreferenceVerdict judge_pair(const std::string& question,
                                 const std::optional<std::string>& image_ref,
                                 const std::string& cand_a, const std::string& cand_b,
                                 const GenerationParams& critic_params);

    std::size_t requests_sent() const;
    std::size_t image_warnings() const;
    GenerationCache& cache();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace critic_arena
