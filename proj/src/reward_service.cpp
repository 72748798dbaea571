// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/reward_service.hpp"

#include <iostream>
#include <thread>
#include <variant>

#include "httplib.h"
#include "json.hpp"

#include "critic_arena/errors.hpp"
#include "critic_arena/rng.hpp"

namespace critic_arena {

using json = nlohmann::json;

namespace {

json error_body(const std::string& message, const std::string& field = "") {
    json err = {{"message", message}};
    if (!field.empty()) err["field"] = field;
    return json{{"error", err}};
}

struct ValidationFailure {
    int status;
    json body;
};

// Parses and validates a ScoreRequest. Returns groups + effective config or
// a failure with the HTTP status and diagnostics.
std::variant<std::pair<std::vector<RolloutGroup>, RewardConfig>, ValidationFailure>
parse_score_request(const std::string& body, const ServiceConfig& cfg) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        return ValidationFailure{400, error_body(std::string("invalid JSON: ") + e.what())};
    }
    if (!j.is_object()) return ValidationFailure{400, error_body("body must be an object", "$")};
    if (!j.contains("groups") || !j.at("groups").is_array())
        return ValidationFailure{400, error_body("missing or non-array field", "groups")};

    RewardConfig reward = cfg.reward;
    if (j.contains("alpha")) {
        if (!j.at("alpha").is_number())
            return ValidationFailure{400, error_body("alpha must be a number", "alpha")};
        reward.alpha = j.at("alpha").get<double>();
        if (!(reward.alpha >= 0.0 && reward.alpha <= 1.0))
            return ValidationFailure{400, error_body("alpha must be in [0, 1]", "alpha")};
        if (cfg.log)
            cfg.log("alpha override: " + std::to_string(reward.alpha));
    }

    std::vector<RolloutGroup> groups;
    groups.reserve(j.at("groups").size());
    for (std::size_t g = 0; g < j.at("groups").size(); ++g) {
        const std::string path = "groups[" + std::to_string(g) + "]";
        const json& jg = j.at("groups").at(g);
        if (!jg.is_object())
            return ValidationFailure{400, error_body("group must be an object", path)};
        if (!jg.contains("gold") || !jg.at("gold").is_string())
            return ValidationFailure{400,
                                     error_body("missing or non-string field", path + ".gold")};
        const auto gold = verdict_from_label(jg.at("gold").get<std::string>());
        if (!gold || jg.at("gold").get<std::string>() == "0")
            return ValidationFailure{
                422, error_body("gold must be \"1\", \"2\", or \"tie\"", path + ".gold")};
        if (!jg.contains("rollouts") || !jg.at("rollouts").is_array() ||
            jg.at("rollouts").empty())
            return ValidationFailure{
                400, error_body("missing, non-array, or empty field", path + ".rollouts")};

        RolloutGroup group;
        group.gold = *gold;
        group.rollouts.reserve(jg.at("rollouts").size());
        for (std::size_t r = 0; r < jg.at("rollouts").size(); ++r) {
            const json& roll = jg.at("rollouts").at(r);
            if (!roll.is_string())
                return ValidationFailure{
                    400, error_body("rollout must be a string",
                                    path + ".rollouts[" + std::to_string(r) + "]")};
            group.rollouts.push_back(parse_structured_output(roll.get<std::string>()));
        }
        groups.push_back(std::move(group));
    }
    return std::make_pair(std::move(groups), reward);
}

json score_response_body(const std::vector<std::vector<RewardBreakdown>>& scored) {
    json out_groups = json::array();
    for (const auto& group : scored) {
        json rewards = json::array();
        json advantages = json::array();
        json breakdown = json::array();
        for (const auto& b : group) {
            rewards.push_back(b.r);
            if (b.advantage) advantages.push_back(*b.advantage);
            else advantages.push_back(nullptr);
            breakdown.push_back({{"r_pref", b.r_pref}, {"r_format", b.r_format}});
        }
        out_groups.push_back({{"rewards", rewards},
                              {"advantages", advantages},
                              {"breakdown", breakdown}});
    }
    return json{{"groups", out_groups}};
}

void default_log(const std::string& message) { std::cerr << "[reward-service] " << message << "\n"; }

}  // namespace

std::pair<int, std::string> score_request_json(const std::string& body,
                                               const ServiceConfig& cfg) {
    auto parsed = parse_score_request(body, cfg);
    if (std::holds_alternative<ValidationFailure>(parsed)) {
        const auto& failure = std::get<ValidationFailure>(parsed);
        return {failure.status, failure.body.dump()};
    }
    auto& [groups, reward] = std::get<0>(parsed);
    try {
        const auto scored = batch_score(groups, reward);
        return {200, score_response_body(scored).dump()};
    } catch (const std::exception& e) {
        // Inputs were validated, so this is unexpected; keep details private.
        const std::uint64_t error_id = fnv1a64(e.what());
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(error_id));
        if (cfg.log) cfg.log("error " + std::string(hex) + ": " + e.what());
        return {500, error_body("internal error; reference " + std::string(hex)).dump()};
    }
}

struct RewardService::Impl {
    ServiceConfig cfg;
    httplib::Server server;
    std::thread serve_thread;

    explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
        if (!cfg.log) cfg.log = default_log;
        server.set_payload_max_length(cfg.max_payload_bytes);
        server.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
            const auto [status, body] = score_request_json(req.body, cfg);
            res.status = status;
            res.set_content(body, "application/json");
        });
        server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"status", "ok"}, {"alpha", cfg.reward.alpha}}.dump(),
                            "application/json");
        });
    }
};

RewardService::RewardService(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
    impl_->cfg.reward.validate();
}

RewardService::~RewardService() { stop(); }

bool RewardService::serve(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int RewardService::start(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) throw std::runtime_error("reward service failed to bind a port");
    impl_->serve_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void RewardService::stop() {
    if (impl_ && impl_->serve_thread.joinable()) {
        impl_->server.stop();
        impl_->serve_thread.join();
    }
}

}  // namespace critic_arena
