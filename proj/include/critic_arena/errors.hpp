// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace critic_arena {

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input record. Carries the 1-based line number and the field that
// failed validation.
struct SchemaError : std::runtime_error {
    SchemaError(std::size_t line_no_, std::string field_, const std::string& message)
        : std::runtime_error("line " + std::to_string(line_no_) + ", field '" + field_ +
                             "': " + message),
          line_no(line_no_),
          field(std::move(field_)) {}

    std::size_t line_no;
    std::string field;
};

// A substitution value contains the template's own placeholder sigil.
struct TemplateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GroupTooSmall : std::runtime_error {
    explicit GroupTooSmall(std::size_t size)
        : std::runtime_error("rollout group must have at least 2 elements, got " +
                             std::to_string(size)),
          size(size) {}

    std::size_t size;
};

struct EmptyCandidates : std::runtime_error {
    EmptyCandidates() : std::runtime_error("candidate list is empty") {}
};

struct KTooLarge : std::runtime_error {
    KTooLarge(int k_, std::size_t available)
        : std::runtime_error("k=" + std::to_string(k_) + " exceeds cached candidate count " +
                             std::to_string(available)),
          k(k_) {}

    int k;
};

// Endpoint failure after the retry budget is exhausted (or a non-retryable
// status). status is 0 for transport-level failures.
struct EndpointError : std::runtime_error {
    EndpointError(int status_, int attempt_, const std::string& message)
        : std::runtime_error("endpoint error (status " + std::to_string(status_) + ", attempt " +
                             std::to_string(attempt_) + "): " + message),
          status(status_),
          attempt(attempt_) {}

    int status;
    int attempt;
};

struct CacheCorruption : std::runtime_error {
    explicit CacheCorruption(std::string key_, const std::string& message)
        : std::runtime_error("cache record for key " + key_ + " is corrupt: " + message),
          key(std::move(key_)) {}

    std::string key;
};

}  // namespace critic_arena
