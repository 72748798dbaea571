// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "critic_arena/reward.hpp"

namespace critic_arena {

struct ServiceConfig {
    RewardConfig reward;
    std::size_t max_payload_bytes = 8ull * 1024 * 1024;  // 413 beyond this

    // Alpha overrides and internal errors are reported here; defaults to
    // stderr.
    std::function<void(const std::string&)> log;
};

// Stateless scoring service.
//
//   POST /v1/score   {"groups":[{"gold":"1"|"2"|"tie","rollouts":[text...]}],
//                     "alpha"?: number}  ->  mirrored shapes with rewards,
//                     advantages (null for size-1 groups) and breakdowns.
//   GET  /v1/health  {"status":"ok","alpha":...}
//
// 400 carries a field path for schema violations, 422 flags invalid gold
// labels, 500 exposes only an opaque error id.
class RewardService {
public:
    explicit RewardService(ServiceConfig cfg = {});
    ~RewardService();

    RewardService(const RewardService&) = delete;
    RewardService& operator=(const RewardService&) = delete;

    // Blocking serve loop; returns false if the address cannot be bound.
    bool serve(const std::string& host, int port);

    // Test entry: binds an ephemeral port, serves on a background thread and
    // returns the port.
    int start(const std::string& host = "127.0.0.1");
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// The /v1/score handler body, exposed for equivalence testing: request JSON
// text in, (status, response JSON text) out.
std::pair<int, std::string> score_request_json(const std::string& body,
                                               const ServiceConfig& cfg);

}  // namespace critic_arena
