// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace critic_arena {

// Behavior of one mocked model.
//
// script  replies from a fixed list, cycling, in request-arrival order.
// policy  answers questions whose text embeds "[gold=...]": emits the gold
//         answer with probability p_correct, otherwise "wrong_<i>" drawn
//         from a pool of wrong_pool distinct strings.
// critic  parses a judge prompt (gold marker + two response blocks), works
//         out the truthful verdict (correct side wins, tie when both sides
//         are equally correct) and emits it with probability q_accuracy,
//         otherwise a flipped verdict.
// echo    boxes the last non-empty line of the user message.
//
// Decisions are driven by the request's "seed" field when present, so a
// seeded client gets reproducible draws.
struct MockBehavior {
    enum class Kind { Script, Policy, Critic, Echo };

    Kind kind = Kind::Echo;
    std::vector<std::string> script;
    double p_correct = 0.3;
    int wrong_pool = 4;
    double q_accuracy = 1.0;
    bool think_block = true;  // wrap replies in <think>...</think>
};

struct MockScenario {
    std::unordered_map<std::string, MockBehavior> models;  // by request model name
    MockBehavior fallback;

    // Consumed per request in arrival order: HTTP status to force (0 or 200
    // passes through) and artificial handling delay.
    std::vector<int> fault_schedule;
    std::vector<int> delay_ms_schedule;

    std::uint64_t seed = 0;  // RNG fallback for requests without a seed field

    static MockScenario from_file(const std::string& path);
    static MockScenario from_json_text(const std::string& text);
};

// In-process chat-completion endpoint speaking the same wire protocol as the
// real client target: POST /v1/chat/completions, OpenAI-style body.
class MockServer {
public:
    explicit MockServer(MockScenario scenario);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds an ephemeral port and serves on a background thread.
    // Returns the bound port.
    int start();
    void stop();

    std::string base_url() const;
    int port() const { return port_; }

    int request_count() const;
    int high_water_concurrency() const;  // max simultaneous in-flight requests

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

// The marker the mock policy/critic read the ground truth from; test fixtures
// embed `[gold=<answer>]` in question text.
std::string gold_marker(const std::string& answer);

}  // namespace critic_arena
