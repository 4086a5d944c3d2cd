#include "testsift/config.hpp"

#include <set>

#include <json.hpp>

namespace testsift {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read_into(const json& obj, const char* key, T& target) {
    if (auto it = obj.find(key); it != obj.end()) {
        try {
            target = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type");
        }
    }
}

void read_path(const json& obj, const char* key, std::filesystem::path& target) {
    std::string s = target.string();
    read_into(obj, key, s);
    target = s;
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
    json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (root.is_discarded() || !root.is_object()) {
        throw ConfigError("config file is not a JSON object");
    }
    reject_unknown_keys(root,
                        {"adapter", "source_root", "tokenizer", "budgets", "backend", "rag",
                         "shots", "mode", "output_dir", "concurrency", "seed", "strict"},
                        "top level");

    PipelineConfig config;
    read_into(root, "adapter", config.adapter);
    read_path(root, "source_root", config.source_root);
    read_into(root, "tokenizer", config.tokenizer);
    read_into(root, "shots", config.shots);
    read_into(root, "mode", config.mode);
    read_path(root, "output_dir", config.output_dir);
    read_into(root, "concurrency", config.concurrency);
    read_into(root, "seed", config.seed);
    read_into(root, "strict", config.strict);

    if (auto it = root.find("budgets"); it != root.end()) {
        reject_unknown_keys(*it, {"mut", "tests", "input", "large_suite"}, "budgets");
        read_into(*it, "mut", config.budgets.mut_max);
        read_into(*it, "tests", config.budgets.tests_max);
        read_into(*it, "input", config.budgets.input_max);
        read_into(*it, "large_suite", config.budgets.large_suite_threshold);
    }
    if (auto it = root.find("backend"); it != root.end()) {
        reject_unknown_keys(*it,
                            {"kind", "model_id", "profile", "temperature", "top_p", "top_k",
                             "credential_env", "base_url", "script", "requests_per_minute"},
                            "backend");
        BackendConfig& b = config.backend;
        read_into(*it, "kind", b.kind);
        read_into(*it, "model_id", b.model_id);
        read_into(*it, "profile", b.profile);
        if (it->contains("temperature")) b.temperature = (*it)["temperature"].get<double>();
        if (it->contains("top_p")) b.top_p = (*it)["top_p"].get<double>();
        if (it->contains("top_k")) b.top_k = (*it)["top_k"].get<int>();
        read_into(*it, "credential_env", b.credential_env);
        read_into(*it, "base_url", b.base_url);
        read_path(*it, "script", b.script_path);
        read_into(*it, "requests_per_minute", b.requests_per_minute);
    }
    if (auto it = root.find("rag"); it != root.end()) {
        reject_unknown_keys(*it, {"enabled", "k", "chunk_lines", "index_path", "dimension"},
                            "rag");
        RagConfig& r = config.rag;
        read_into(*it, "enabled", r.enabled);
        read_into(*it, "k", r.k);
        read_into(*it, "chunk_lines", r.chunk_lines);
        read_path(*it, "index_path", r.index_path);
        read_into(*it, "dimension", r.embedding_dimension);
    }

    validate_config(config);
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path.string());
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

void validate_config(const PipelineConfig& config) {
    const TokenBudget& b = config.budgets;
    if (b.mut_max == 0 || b.tests_max == 0 || b.input_max == 0) {
        throw ConfigError("budgets must be positive");
    }
    if (!(b.input_max < b.mut_max && b.mut_max < b.tests_max)) {
        throw ConfigError("budgets must satisfy input < mut < tests");
    }
    if (config.shots != 0 && config.shots != 3 && config.shots != 6 && config.shots != 9) {
        throw ConfigError("shots must be one of 0, 3, 6, 9");
    }
    if (config.mode != "five-query" && config.mode != "single-query") {
        throw ConfigError("mode must be 'five-query' or 'single-query'");
    }
    if (config.adapter != "brace") {
        throw ConfigError("unknown adapter '" + config.adapter + "'");
    }
    if (config.tokenizer != "approx" && config.tokenizer != "char") {
        throw ConfigError("unknown tokenizer '" + config.tokenizer + "'");
    }
    static const std::set<std::string> kinds = {"mock-rule", "mock-script", "openai", "ollama"};
    if (!kinds.count(config.backend.kind)) {
        throw ConfigError("unknown backend kind '" + config.backend.kind + "'");
    }
    if (config.backend.profile != "finetuned" && config.backend.profile != "local") {
        throw ConfigError("backend profile must be 'finetuned' or 'local'");
    }
    if (config.rag.enabled != "on" && config.rag.enabled != "off" &&
        config.rag.enabled != "auto") {
        throw ConfigError("rag.enabled must be 'on', 'off' or 'auto'");
    }
    if (config.rag.k == 0) throw ConfigError("rag.k must be positive");
    if (config.rag.chunk_lines == 0) throw ConfigError("rag.chunk_lines must be positive");
    if (config.concurrency < 1) throw ConfigError("concurrency must be at least 1");
}

}  // namespace testsift
