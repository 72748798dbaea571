// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "critic_arena/generation.hpp"

namespace critic_arena {

// Identity of one sampled draw. Everything that can change the completion is
// part of the key; sample_index distinguishes repeated draws of the same
// prompt.
struct CacheKey {
    std::string model;
    std::string prompt;
    std::string image_ref;  // "" when absent
    double temperature = 0.9;
    int max_tokens = 2048;
    SystemTemplate system_template = SystemTemplate::Thinking;
    std::optional<std::int64_t> seed_hint;
    int sample_index = 0;

    std::string canonical() const;        // stable, unambiguous serialization
    std::uint64_t content_hash() const;   // fnv1a64(canonical())
};

// Append-only generation store.
//
// Layout per model tag:
//   <root>/<model-tag>/generations.jsonl   one record per line
//   <root>/<model-tag>/index.bin           (key_hash, offset, length) triples
//
// Records carry the full canonical key (collision guard) and an fnv1a64
// checksum over key + payload; a checksum mismatch raises CacheCorruption.
// The index is an accelerator only: missing or truncated index files are
// healed by scanning the jsonl tail. Appends are serialized per shard;
// lookups may run concurrently.
class GenerationCache {
public:
    explicit GenerationCache(std::string root_dir);
    ~GenerationCache();

    GenerationCache(const GenerationCache&) = delete;
    GenerationCache& operator=(const GenerationCache&) = delete;

    std::optional<Generation> lookup(const CacheKey& key);
    void insert(const CacheKey& key, const Generation& generation);

    std::size_t size() const;  // records across loaded shards
    const std::string& root() const { return root_; }

private:
    struct Shard;
    Shard& shard_for(const std::string& model);

    std::string root_;
    mutable std::mutex shards_mutex_;
    std::map<std::string, std::unique_ptr<Shard>> shards_;
};

}  // namespace critic_arena
