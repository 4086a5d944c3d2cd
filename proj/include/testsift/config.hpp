#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "testsift/core.hpp"

namespace testsift {

struct RagConfig {
    std::string enabled = "auto";  // "on" | "off" | "auto"
    std::size_t k = 4;             // chunks appended per section
    std::size_t chunk_lines = 120;
    std::filesystem::path index_path = "out/index.bin";
    std::size_t embedding_dimension = 256;
};

struct BackendConfig {
    std::string kind = "mock-rule";  // mock-rule | mock-script | openai | ollama
    std::string model_id = "mock";
    std::string profile = "finetuned";  // finetuned | local
    std::optional<double> temperature;  // overrides the profile value
    std::optional<double> top_p;
    std::optional<int> top_k;
    std::string credential_env = "TESTSIFT_API_KEY";
    std::string base_url;
    std::filesystem::path script_path;  // completions for mock-script
    int requests_per_minute = 0;        // 0 = unlimited
};

struct PipelineConfig {
    std::string adapter = "brace";
    std::filesystem::path source_root;
    std::string tokenizer = "approx";
    TokenBudget budgets;
    BackendConfig backend;
    RagConfig rag;
    int shots = 0;
    std::string mode = "five-query";  // five-query | single-query
    std::filesystem::path output_dir = "out";
    int concurrency = 1;
    std::uint64_t seed = 42;
    bool strict = false;
};

/// Loads a JSON config file; unknown keys are rejected to catch typos.
/// Throws ConfigError on malformed input or invariant violations.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view text);
void validate_config(const PipelineConfig& config);

}  // namespace testsift
