// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/model_client.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "critic_arena/concurrency.hpp"
#include "critic_arena/errors.hpp"
#include "critic_arena/rng.hpp"
#include "critic_arena/templates.hpp"

namespace critic_arena {

using json = nlohmann::json;

namespace {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port
    std::string path_prefix;
};

ParsedUrl split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    const std::size_t authority_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto slash = base_url.find('/', authority_begin);
    ParsedUrl out;
    if (slash == std::string::npos) {
        out.host_port = base_url;
    } else {
        out.host_port = base_url.substr(0, slash);
        out.path_prefix = base_url.substr(slash);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    return out;
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

// Strips one exact "<image>" placeholder line; used when the image travels
// as a content part instead.
std::string without_image_line(const std::string& prompt) {
    const std::string line = std::string(kImagePlaceholder) + "\n";
    if (prompt.rfind(line, 0) == 0) return prompt.substr(line.size());
    const auto pos = prompt.find("\n" + line);
    if (pos != std::string::npos) {
        std::string out = prompt;
        out.erase(pos + 1, line.size());
        return out;
    }
    if (prompt == kImagePlaceholder) return "";
    return prompt;
}

}  // namespace

void ClientConfig::apply_env() {
    if (base_url.empty()) {
        if (const char* endpoint = std::getenv(kEndpointEnvVar)) base_url = endpoint;
    }
    if (api_key.empty()) {
        if (const char* key = std::getenv(kApiKeyEnvVar)) api_key = key;
    }
}

struct ModelClient::Impl {
    ClientConfig cfg;
    ParsedUrl url;
    std::shared_ptr<GenerationCache> cache;

    std::atomic<std::size_t> requests_sent{0};
    std::atomic<std::size_t> image_warnings{0};

    // Client-wide in-flight bound across concurrent public calls.
    std::mutex slots_mutex;
    std::condition_variable slots_cv;
    int slots_in_use = 0;

    Impl(ClientConfig c, std::shared_ptr<GenerationCache> cache_)
        : cfg(std::move(c)), url(split_base_url(cfg.base_url)), cache(std::move(cache_)) {}

    struct SlotGuard {
        Impl& impl;
        explicit SlotGuard(Impl& i) : impl(i) {
            std::unique_lock<std::mutex> lock(impl.slots_mutex);
            impl.slots_cv.wait(lock,
                               [&] { return impl.slots_in_use < impl.cfg.max_concurrency; });
            ++impl.slots_in_use;
        }
        ~SlotGuard() {
            {
                std::lock_guard<std::mutex> lock(impl.slots_mutex);
                --impl.slots_in_use;
            }
            impl.slots_cv.notify_one();
        }
    };

    json build_messages(const std::string& prompt, const std::optional<std::string>& image_ref,
                        const GenerationParams& params) {
        json messages = json::array();
        if (params.system_template == SystemTemplate::Thinking)
            messages.push_back({{"role", "system"}, {"content", std::string(kThinkingTemplate)}});

        if (image_ref && cfg.multimodal_images) {
            const json content = json::array(
                {{{"type", "image_url"}, {"image_url", {{"url", *image_ref}}}},
                 {{"type", "text"}, {"text", without_image_line(prompt)}}});
            messages.push_back({{"role", "user"}, {"content", content}});
        } else {
            if (image_ref && !cfg.multimodal_images) image_warnings.fetch_add(1);
            messages.push_back({{"role", "user"}, {"content", prompt}});
        }
        return messages;
    }

    // One completion with bounded retries. Throws EndpointError.
    Generation fetch(const std::string& prompt, const std::optional<std::string>& image_ref,
                     const GenerationParams& params, const std::string& prompt_id,
                     int sample_index) {
        json body = {{"model", params.model},
                     {"messages", build_messages(prompt, image_ref, params)},
                     {"temperature", params.temperature},
                     {"max_tokens", params.max_tokens}};
        if (params.seed_hint) {
            body["seed"] = static_cast<std::int64_t>(derive_stream(
                static_cast<std::uint64_t>(*params.seed_hint),
                static_cast<std::uint64_t>(sample_index), 0x73616D706C65ull));
        }
        const std::string payload = body.dump();

        httplib::Headers headers;
        if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

        int last_status = 0;
        std::string last_message = "transport failure";
        for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(cfg.backoff_base * (1 << (attempt - 2)));
            }

            httplib::Result res;
            {
                SlotGuard slot(*this);
                httplib::Client http(url.host_port);
                http.set_connection_timeout(std::chrono::milliseconds(cfg.request_timeout));
                http.set_read_timeout(std::chrono::milliseconds(cfg.request_timeout));
                requests_sent.fetch_add(1);
                res = http.Post(url.path_prefix + "/v1/chat/completions", headers, payload,
                                "application/json");
            }

            if (!res) {
                last_status = 0;
                last_message = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_status = res->status;
                last_message = res->body.substr(0, 256);
                if (retryable_status(res->status)) continue;
                throw EndpointError(res->status, attempt, last_message);
            }

            try {
                const json reply = json::parse(res->body);
                const json& choice = reply.at("choices").at(0);
                EndpointMeta meta;
                meta.model = reply.value("model", params.model);
                meta.finish_reason = choice.value("finish_reason", "");
                if (reply.contains("usage")) {
                    meta.prompt_tokens = reply.at("usage").value("prompt_tokens", 0);
                    meta.completion_tokens = reply.at("usage").value("completion_tokens", 0);
                }
                return make_generation(prompt_id, sample_index,
                                       choice.at("message").at("content").get<std::string>(),
                                       std::move(meta));
            } catch (const json::exception& e) {
                throw EndpointError(res->status, attempt,
                                    std::string("malformed completion payload: ") + e.what());
            }
        }
        throw EndpointError(last_status, cfg.max_attempts, last_message);
    }
};

ModelClient::ModelClient(ClientConfig cfg, std::shared_ptr<GenerationCache> cache)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(cache))) {}

ModelClient::~ModelClient() = default;

std::vector<Generation> ModelClient::generate_n(const std::string& prompt,
                                                const std::optional<std::string>& image_ref,
                                                int n, const GenerationParams& params,
                                                const std::string& prompt_id) {
    if (n <= 0) throw std::invalid_argument("n must be positive");
    std::string label = prompt_id;
    if (label.empty()) {
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(prompt)));
        label.assign(hex);
    }

    CacheKey base;
    base.model = params.model;
    base.prompt = prompt;
    base.image_ref = image_ref.value_or("");
    base.temperature = params.temperature;
    base.max_tokens = params.max_tokens;
    base.system_template = params.system_template;
    base.seed_hint = params.seed_hint;

    std::vector<std::optional<Generation>> slots(static_cast<std::size_t>(n));
    std::vector<int> missing;
    for (int i = 0; i < n; ++i) {
        CacheKey key = base;
        key.sample_index = i;
        if (auto hit = impl_->cache->lookup(key)) {
            slots[static_cast<std::size_t>(i)] = std::move(*hit);
        } else {
            missing.push_back(i);
        }
    }

    if (!missing.empty()) {
        parallel_for(missing.size(), impl_->cfg.max_concurrency, [&](std::size_t m) {
            const int index = missing[m];
            Generation gen = impl_->fetch(prompt, image_ref, params, label, index);
            CacheKey key = base;
            key.sample_index = index;
            impl_->cache->insert(key, gen);
            slots[static_cast<std::size_t>(index)] = std::move(gen);
        });
    }

    std::vector<Generation> out;
    out.reserve(static_cast<std::size_t>(n));
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

PreferenceVerdict ModelClient::judge_pair(const std::string& question,
                                          const std::optional<std::string>& image_ref,
                                          const std::string& cand_a, const std::string& cand_b,
                                          const GenerationParams& critic_params) {
    if (cand_a.empty() || cand_b.empty())
        throw std::invalid_argument("judge_pair candidates must be non-empty");
    const std::string prompt = render_judge_prompt(question, cand_a, cand_b);
    const auto generations = generate_n(prompt, image_ref, 1, critic_params);
    return response_verdict(generations.front().parsed);
}

std::size_t ModelClient::requests_sent() const { return impl_->requests_sent.load(); }

std::size_t ModelClient::image_warnings() const { return impl_->image_warnings.load(); }

GenerationCache& ModelClient::cache() { return *impl_->cache; }

}  // namespace critic_arena
