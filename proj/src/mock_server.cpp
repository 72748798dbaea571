// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/mock_server.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "critic_arena/errors.hpp"
#include "critic_arena/rng.hpp"
#include "critic_arena/structured_output.hpp"
#include "critic_arena/templates.hpp"

namespace critic_arena {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kPolicyStream = 0x706F6C6963ull;
constexpr std::uint64_t kWrongStream = 0x77726F6E67ull;
constexpr std::uint64_t kCriticStream = 0x6372697469ull;
constexpr std::uint64_t kFlipStream = 0x666C6970ull;

MockBehavior behavior_from_json(const json& j) {
    MockBehavior b;
    const std::string mode = j.value("mode", "echo");
    if (mode == "script") b.kind = MockBehavior::Kind::Script;
    else if (mode == "policy") b.kind = MockBehavior::Kind::Policy;
    else if (mode == "critic") b.kind = MockBehavior::Kind::Critic;
    else if (mode == "echo") b.kind = MockBehavior::Kind::Echo;
    else throw ConfigError("unknown mock behavior mode: " + mode);

    if (j.contains("responses")) b.script = j.at("responses").get<std::vector<std::string>>();
    b.p_correct = j.value("p_correct", b.p_correct);
    b.wrong_pool = j.value("wrong_pool", b.wrong_pool);
    b.q_accuracy = j.value("q_accuracy", b.q_accuracy);
    b.think_block = j.value("think_block", b.think_block);
    return b;
}

// Flattens a chat-completion "content" that may be a string or a list of
// typed parts.
std::string content_text(const json& content) {
    if (content.is_string()) return content.get<std::string>();
    std::string out;
    if (content.is_array()) {
        for (const auto& part : content) {
            if (part.value("type", "") == "text") {
                if (!out.empty()) out += '\n';
                out += part.value("text", "");
            }
        }
    }
    return out;
}

std::string user_text(const json& body) {
    std::string out;
    if (!body.contains("messages")) return out;
    for (const auto& msg : body.at("messages")) {
        if (msg.value("role", "") != "user") continue;
        if (!out.empty()) out += '\n';
        out += content_text(msg.value("content", json()));
    }
    return out;
}

std::string extract_gold(const std::string& text) {
    const auto pos = text.find("[gold=");
    if (pos == std::string::npos) return "";
    const auto end = text.find(']', pos);
    if (end == std::string::npos) return "";
    return text.substr(pos + 6, end - pos - 6);
}

std::string wrap_reply(const MockBehavior& b, const std::string& answer,
                       const std::string& note) {
    std::string out;
    if (b.think_block) out += "<think>" + note + "</think>\n";
    out += "\\boxed{" + answer + "}";
    return out;
}

}  // namespace

std::string gold_marker(const std::string& answer) { return "[gold=" + answer + "]"; }

MockScenario MockScenario::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    MockScenario s;
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("fault_schedule"))
        s.fault_schedule = j.at("fault_schedule").get<std::vector<int>>();
    if (j.contains("delay_ms"))
        s.delay_ms_schedule = j.at("delay_ms").get<std::vector<int>>();
    if (j.contains("models"))
        for (const auto& [name, spec] : j.at("models").items())
            s.models[name] = behavior_from_json(spec);
    if (j.contains("default")) s.fallback = behavior_from_json(j.at("default"));
    return s;
}

MockScenario MockScenario::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open scenario file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

struct MockServer::Impl {
    MockScenario scenario;
    httplib::Server server;
    std::thread serve_thread;

    std::atomic<int> requests{0};
    std::atomic<int> in_flight{0};
    std::atomic<int> high_water{0};
    std::unordered_map<std::string, std::atomic<int>> script_cursors;

    explicit Impl(MockScenario s) : scenario(std::move(s)) {
        for (const auto& [name, behavior] : scenario.models) script_cursors[name];
        script_cursors["__default__"];
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(req, res);
                    });
        server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"status", "ok"}}.dump(), "application/json");
        });
    }

    const MockBehavior& behavior_for(const std::string& model, std::string& cursor_key) {
        const auto it = scenario.models.find(model);
        if (it != scenario.models.end()) {
            cursor_key = model;
            return it->second;
        }
        cursor_key = "__default__";
        return scenario.fallback;
    }

    std::string reply_text(const MockBehavior& b, const std::string& cursor_key,
                           const json& body, int request_index) {
        const std::string text = user_text(body);
        std::uint64_t seed = scenario.seed;
        bool seeded = false;
        if (body.contains("seed") && body.at("seed").is_number()) {
            seed = static_cast<std::uint64_t>(body.at("seed").get<std::int64_t>());
            seeded = true;
        }
        // Unseeded requests fall back to arrival order so scripted runs are
        // still deterministic for a serial client.
        const std::uint64_t base =
            seeded ? seed : derive_stream(scenario.seed, 0x756E736564ull,
                                          static_cast<std::uint64_t>(request_index));

        switch (b.kind) {
            case MockBehavior::Kind::Script: {
                if (b.script.empty()) return wrap_reply(b, "no-script", "empty script");
                const int i = script_cursors[cursor_key].fetch_add(1);
                return b.script[static_cast<std::size_t>(i) % b.script.size()];
            }
            case MockBehavior::Kind::Policy: {
                const std::string gold = extract_gold(text);
                const bool correct =
                    to_unit_double(derive_stream(base, kPolicyStream, 0)) < b.p_correct;
                if (!gold.empty() && correct)
                    return wrap_reply(b, gold, "the answer follows from the question.");
                const std::uint64_t w = derive_stream(base, kWrongStream, 1) %
                                        static_cast<std::uint64_t>(std::max(1, b.wrong_pool));
                return wrap_reply(b, "wrong_" + std::to_string(w),
                                  "a plausible but mistaken derivation.");
            }
            case MockBehavior::Kind::Critic: {
                const std::string gold = extract_gold(text);
                const auto pos1 = text.find("Response 1: ");
                const auto pos2 = text.find("\nResponse 2: ", pos1);
                PreferenceVerdict truth = PreferenceVerdict::Tie;
                if (!gold.empty() && pos1 != std::string::npos && pos2 != std::string::npos) {
                    const std::string r1 = text.substr(pos1 + 12, pos2 - pos1 - 12);
                    const std::string r2 = text.substr(pos2 + 13);
                    const auto a1 = parse_structured_output(r1).answer;
                    const auto a2 = parse_structured_output(r2).answer;
                    const bool ok1 = a1 && match_answer(*a1, gold, MatchMode::Exact);
                    const bool ok2 = a2 && match_answer(*a2, gold, MatchMode::Exact);
                    if (ok1 && !ok2) truth = PreferenceVerdict::Response1;
                    if (ok2 && !ok1) truth = PreferenceVerdict::Response2;
                }
                PreferenceVerdict verdict = truth;
                const bool truthful =
                    to_unit_double(derive_stream(base, kCriticStream, 2)) < b.q_accuracy;
                if (!truthful) {
                    if (truth == PreferenceVerdict::Response1)
                        verdict = PreferenceVerdict::Response2;
                    else if (truth == PreferenceVerdict::Response2)
                        verdict = PreferenceVerdict::Response1;
                    else
                        verdict = (derive_stream(base, kFlipStream, 3) & 1)
                                      ? PreferenceVerdict::Response1
                                      : PreferenceVerdict::Response2;
                }
                return wrap_reply(b, std::string(canonical_verdict_text(verdict)),
                                  "weighed both responses against the image.");
            }
            case MockBehavior::Kind::Echo:
                return wrap_reply(b, std::string(last_nonempty_line(text)), "echo");
        }
        return wrap_reply(b, "unreachable", "");
    }

    void handle(const httplib::Request& req, httplib::Response& res) {
        const int index = requests.fetch_add(1);
        const int now = in_flight.fetch_add(1) + 1;
        int seen = high_water.load();
        while (now > seen && !high_water.compare_exchange_weak(seen, now)) {
        }

        if (index < static_cast<int>(scenario.delay_ms_schedule.size()) &&
            scenario.delay_ms_schedule[static_cast<std::size_t>(index)] > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(
                scenario.delay_ms_schedule[static_cast<std::size_t>(index)]));
        }

        struct Departure {
            std::atomic<int>& counter;
            ~Departure() { counter.fetch_sub(1); }
        } departure{in_flight};

        if (index < static_cast<int>(scenario.fault_schedule.size())) {
            const int forced = scenario.fault_schedule[static_cast<std::size_t>(index)];
            if (forced != 0 && forced != 200) {
                res.status = forced;
                res.set_content(json{{"error", {{"message", "scripted fault"}}}}.dump(),
                                "application/json");
                return;
            }
        }

        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(json{{"error", {{"message", "invalid JSON"}}}}.dump(),
                            "application/json");
            return;
        }

        const std::string model = body.value("model", "");
        std::string cursor_key;
        const MockBehavior& behavior = behavior_for(model, cursor_key);
        const std::string content = reply_text(behavior, cursor_key, body, index);

        const json reply = {
            {"id", "mock-" + std::to_string(index)},
            {"object", "chat.completion"},
            {"model", model},
            {"choices",
             json::array({{{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", content}}},
                           {"finish_reason", "stop"}}})},
            {"usage",
             {{"prompt_tokens", static_cast<int>(user_text(body).size() / 4)},
              {"completion_tokens", static_cast<int>(content.size() / 4)}}}};
        res.set_content(reply.dump(), "application/json");
    }
};

MockServer::MockServer(MockScenario scenario)
    : impl_(std::make_unique<Impl>(std::move(scenario))) {}

MockServer::~MockServer() { stop(); }

int MockServer::start() {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server failed to bind a port");
    impl_->serve_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void MockServer::stop() {
    if (impl_ && impl_->serve_thread.joinable()) {
        impl_->server.stop();
        impl_->serve_thread.join();
    }
}

std::string MockServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

int MockServer::request_count() const { return impl_->requests.load(); }

int MockServer::high_water_concurrency() const { return impl_->high_water.load(); }

}  // namespace critic_arena
