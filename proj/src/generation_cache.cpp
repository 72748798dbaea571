// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/generation_cache.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "critic_arena/errors.hpp"
#include "critic_arena/rng.hpp"

namespace critic_arena {

namespace fs = std::filesystem;
using json = nlohmann::json;

bool operator==(const EndpointMeta& a, const EndpointMeta& b) {
    return a.model == b.model && a.finish_reason == b.finish_reason &&
           a.prompt_tokens == b.prompt_tokens && a.completion_tokens == b.completion_tokens;
}

bool operator==(const Generation& a, const Generation& b) {
    return a.prompt_id == b.prompt_id && a.sample_index == b.sample_index &&
           a.raw_text == b.raw_text && a.meta == b.meta;
}

namespace {

// Length-prefixed fields make the serialization injective.
void append_field(std::string& out, std::string_view value) {
    out += std::to_string(value.size());
    out += ':';
    out += value;
    out += '|';
}

std::string sanitize_model_tag(const std::string& model) {
    std::string tag;
    tag.reserve(model.size());
    for (const char c : model) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        tag.push_back(keep ? c : '_');
    }
    return tag.empty() ? std::string("default") : tag;
}

json generation_to_json(const Generation& g) {
    return {{"prompt_id", g.prompt_id},
            {"sample_index", g.sample_index},
            {"raw_text", g.raw_text},
            {"meta",
             {{"model", g.meta.model},
              {"finish_reason", g.meta.finish_reason},
              {"prompt_tokens", g.meta.prompt_tokens},
              {"completion_tokens", g.meta.completion_tokens}}}};
}

Generation generation_from_json(const json& j) {
    EndpointMeta meta;
    meta.model = j.at("meta").at("model").get<std::string>();
    meta.finish_reason = j.at("meta").at("finish_reason").get<std::string>();
    meta.prompt_tokens = j.at("meta").at("prompt_tokens").get<int>();
    meta.completion_tokens = j.at("meta").at("completion_tokens").get<int>();
    return make_generation(j.at("prompt_id").get<std::string>(),
                           j.at("sample_index").get<int>(),
                           j.at("raw_text").get<std::string>(), std::move(meta));
}

std::string checksum_hex(std::string_view key, std::string_view payload) {
    std::string buf;
    buf.reserve(key.size() + payload.size() + 1);
    buf.append(key);
    buf.push_back('\n');
    buf.append(payload);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf)));
    return std::string(hex);
}

struct IndexEntry {
    std::uint64_t hash;
    std::uint64_t offset;
    std::uint64_t length;
};

}  // namespace

std::string CacheKey::canonical() const {
    std::string out;
    append_field(out, model);
    append_field(out, prompt);
    append_field(out, image_ref);
    char num[64];
    std::snprintf(num, sizeof(num), "%.17g", temperature);
    append_field(out, num);
    append_field(out, std::to_string(max_tokens));
    append_field(out, system_template == SystemTemplate::Thinking ? "thinking" : "none");
    append_field(out, seed_hint ? std::to_string(*seed_hint) : "-");
    append_field(out, std::to_string(sample_index));
    return out;
}

std::uint64_t CacheKey::content_hash() const { return fnv1a64(canonical()); }

struct GenerationCache::Shard {
    fs::path jsonl_path;
    fs::path index_path;
    std::unordered_map<std::uint64_t, IndexEntry> entries;
    std::mutex mutex;

    void open(const fs::path& dir) {
        fs::create_directories(dir);
        jsonl_path = dir / "generations.jsonl";
        index_path = dir / "index.bin";
        load_index();
    }

    void load_index() {
        entries.clear();
        std::uint64_t indexed_end = 0;
        {
            std::ifstream in(index_path, std::ios::binary);
            IndexEntry e{};
            while (in.read(reinterpret_cast<char*>(&e), sizeof(e))) {
                entries[e.hash] = e;
                indexed_end = std::max(indexed_end, e.offset + e.length);
            }
        }
        // Heal the tail: records appended after the last index write (or a
        // missing index altogether) are recovered from the jsonl.
        std::error_code ec;
        const auto file_size = fs::file_size(jsonl_path, ec);
        if (ec || file_size <= indexed_end) return;

        std::ifstream in(jsonl_path, std::ios::binary);
        in.seekg(static_cast<std::streamoff>(indexed_end));
        std::ofstream index_out(index_path, std::ios::binary | std::ios::app);
        std::string line;
        std::uint64_t offset = indexed_end;
        while (std::getline(in, line)) {
            const std::uint64_t length = line.size() + 1;
            try {
                const json j = json::parse(line);
                const std::uint64_t hash = fnv1a64(j.at("key").get<std::string>());
                const IndexEntry e{hash, offset, length};
                entries[hash] = e;
                index_out.write(reinterpret_cast<const char*>(&e), sizeof(e));
            } catch (const json::exception&) {
                // Torn trailing write; everything before it is intact.
                break;
            }
            offset += length;
        }
    }
};

GenerationCache::GenerationCache(std::string root_dir) : root_(std::move(root_dir)) {
    fs::create_directories(root_);
}

GenerationCache::~GenerationCache() = default;

GenerationCache::Shard& GenerationCache::shard_for(const std::string& model) {
    const std::string tag = sanitize_model_tag(model);
    std::lock_guard<std::mutex> lock(shards_mutex_);
    auto it = shards_.find(tag);
    if (it == shards_.end()) {
        auto shard = std::make_unique<Shard>();
        shard->open(fs::path(root_) / tag);
        it = shards_.emplace(tag, std::move(shard)).first;
    }
    return *it->second;
}

std::optional<Generation> GenerationCache::lookup(const CacheKey& key) {
    Shard& shard = shard_for(key.model);
    const std::string canonical = key.canonical();
    const std::uint64_t hash = fnv1a64(canonical);

    IndexEntry entry{};
    {
        std::lock_guard<std::mutex> lock(shard.mutex);
        const auto it = shard.entries.find(hash);
        if (it == shard.entries.end()) return std::nullopt;
        entry = it->second;
    }

    std::ifstream in(shard.jsonl_path, std::ios::binary);
    if (!in) return std::nullopt;
    in.seekg(static_cast<std::streamoff>(entry.offset));
    std::string line;
    if (!std::getline(in, line))
        throw CacheCorruption(canonical, "indexed offset is past end of " +
                                             shard.jsonl_path.string());

    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw CacheCorruption(canonical, std::string("unparseable record: ") + e.what());
    }
    const std::string stored_key = j.at("key").get<std::string>();
    if (stored_key != canonical) return std::nullopt;  // hash collision: treat as miss

    const std::string payload = j.at("generation").dump();
    if (j.at("checksum").get<std::string>() != checksum_hex(stored_key, payload))
        throw CacheCorruption(canonical, "checksum mismatch");
    return generation_from_json(j.at("generation"));
}

void GenerationCache::insert(const CacheKey& key, const Generation& generation) {
    Shard& shard = shard_for(key.model);
    const std::string canonical = key.canonical();

    const json payload = generation_to_json(generation);
    const json record = {{"key", canonical},
                         {"checksum", checksum_hex(canonical, payload.dump())},
                         {"generation", payload}};
    const std::string line = record.dump();

    std::lock_guard<std::mutex> lock(shard.mutex);
    std::error_code ec;
    const auto existing = fs::file_size(shard.jsonl_path, ec);
    const std::uint64_t offset = ec ? 0 : existing;

    std::ofstream out(shard.jsonl_path, std::ios::binary | std::ios::app);
    out << line << '\n';
    out.flush();
    if (!out) throw FileError("append to " + shard.jsonl_path.string() + " failed");

    const IndexEntry entry{fnv1a64(canonical), offset, line.size() + 1};
    std::ofstream index_out(shard.index_path, std::ios::binary | std::ios::app);
    index_out.write(reinterpret_cast<const char*>(&entry), sizeof(entry));
    index_out.flush();
    shard.entries[entry.hash] = entry;
}

std::size_t GenerationCache::size() const {
    std::lock_guard<std::mutex> lock(shards_mutex_);
    std::size_t total = 0;
    for (const auto& [tag, shard] : shards_) total += shard->entries.size();
    return total;
}

}  // namespace critic_arena
