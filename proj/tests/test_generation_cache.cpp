// SPDX-License-Identifier: Apache-2.0
#include "critic_arena/generation_cache.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "critic_arena/errors.hpp"
#include "test_support.hpp"

using namespace critic_arena;
using critic_arena::test::TempDir;
namespace fs = std::filesystem;

namespace {

CacheKey key_for(int sample_index, const std::string& prompt = "what is 2+2?") {
    CacheKey key;
    key.model = "test-model";
    key.prompt = prompt;
    key.temperature = 0.9;
    key.max_tokens = 128;
    key.seed_hint = 42;
    key.sample_index = sample_index;
    return key;
}

}  // namespace

TEST_CASE("insert then lookup returns the stored generation") {
    TempDir dir;
    GenerationCache cache(dir.file("cache"));
    const auto gen = make_generation("p0", 3, "<think>t</think>\\boxed{4}");
    cache.insert(key_for(3), gen);
    const auto hit = cache.lookup(key_for(3));
    REQUIRE(hit.has_value());
    CHECK(*hit == gen);
    CHECK(hit->parsed.format_ok);
    CHECK(!cache.lookup(key_for(4)).has_value());
}

TEST_CASE("cache keys separate every parameter") {
    TempDir dir;
    GenerationCache cache(dir.file("cache"));
    cache.insert(key_for(0), make_generation("p", 0, "a"));

    CacheKey other = key_for(0);
    other.temperature = 0.7;
    CHECK(!cache.lookup(other).has_value());
    other = key_for(0);
    other.seed_hint = std::nullopt;
    CHECK(!cache.lookup(other).has_value());
    other = key_for(0);
    other.image_ref = "img.png";
    CHECK(!cache.lookup(other).has_value());
    other = key_for(0);
    other.system_template = SystemTemplate::None;
    CHECK(!cache.lookup(other).has_value());
}

TEST_CASE("canonical keys are injective over field boundaries") {
    CacheKey a = key_for(0, "ab");
    CacheKey b = key_for(0, "a");
    b.image_ref = "b";
    CHECK(a.canonical() != b.canonical());
}

TEST_CASE("cache survives reopen, with and without the index file") {
    TempDir dir;
    const auto root = dir.file("cache");
    const auto gen = make_generation("p0", 0, "payload");
    {
        GenerationCache cache(root);
        cache.insert(key_for(0), gen);
        cache.insert(key_for(1), make_generation("p0", 1, "payload2"));
    }
    {
        GenerationCache cache(root);
        const auto hit = cache.lookup(key_for(0));
        REQUIRE(hit.has_value());
        CHECK(hit->raw_text == "payload");
    }
    // Drop the index: the jsonl is the source of truth.
    fs::remove(fs::path(root) / "test-model" / "index.bin");
    {
        GenerationCache cache(root);
        REQUIRE(cache.lookup(key_for(1)).has_value());
        CHECK(cache.lookup(key_for(1))->raw_text == "payload2");
    }
}

TEST_CASE("a truncated index is healed from the jsonl tail") {
    TempDir dir;
    const auto root = dir.file("cache");
    {
        GenerationCache cache(root);
        for (int i = 0; i < 4; ++i) cache.insert(key_for(i), make_generation("p", i, "txt"));
    }
    const auto index_path = fs::path(root) / "test-model" / "index.bin";
    fs::resize_file(index_path, fs::file_size(index_path) / 2);
    GenerationCache cache(root);
    for (int i = 0; i < 4; ++i) CHECK(cache.lookup(key_for(i)).has_value());
}

TEST_CASE("checksum mismatch raises CacheCorruption") {
    TempDir dir;
    const auto root = dir.file("cache");
    {
        GenerationCache cache(root);
        cache.insert(key_for(0), make_generation("p", 0, "original text"));
    }
    const auto jsonl = fs::path(root) / "test-model" / "generations.jsonl";
    std::string content;
    {
        std::ifstream in(jsonl, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        content = buf.str();
    }
    const auto pos = content.find("original text");
    REQUIRE(pos != std::string::npos);
    content[pos] = 'X';
    {
        std::ofstream out(jsonl, std::ios::binary | std::ios::trunc);
        out << content;
    }
    GenerationCache cache(root);
    CHECK_THROWS_AS(cache.lookup(key_for(0)), CacheCorruption);
}

TEST_CASE("models shard into separate directories") {
    TempDir dir;
    GenerationCache cache(dir.file("cache"));
    CacheKey a = key_for(0);
    a.model = "org/model:v1";
    cache.insert(a, make_generation("p", 0, "x"));
    CHECK(fs::exists(fs::path(dir.file("cache")) / "org_model_v1" / "generations.jsonl"));
    CHECK(cache.lookup(a).has_value());
}
