#include <iostream>

#include <CLI11.hpp>

#include "testsift/commands.hpp"

namespace {

using namespace testsift;

struct Overrides {
    std::optional<std::string> source_root;
    std::optional<std::string> output_dir;
    std::optional<std::string> mode;
    std::optional<int> shots;
    std::optional<std::uint64_t> seed;
    std::optional<int> concurrency;
    std::optional<std::string> rag;
    std::optional<std::string> backend_kind;
    std::optional<std::string> model_id;
    std::optional<std::string> script;
    std::optional<std::string> tokenizer;
    bool strict = false;
};

PipelineConfig effective_config(const std::string& config_path, const Overrides& o) {
    PipelineConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (o.source_root) config.source_root = *o.source_root;
    if (o.output_dir) config.output_dir = *o.output_dir;
    if (o.mode) config.mode = *o.mode;
    if (o.shots) config.shots = *o.shots;
    if (o.seed) config.seed = *o.seed;
    if (o.concurrency) config.concurrency = *o.concurrency;
    if (o.rag) config.rag.enabled = *o.rag;
    if (o.backend_kind) config.backend.kind = *o.backend_kind;
    if (o.model_id) config.backend.model_id = *o.model_id;
    if (o.script) config.backend.script_path = *o.script;
    if (o.tokenizer) config.tokenizer = *o.tokenizer;
    if (o.strict) config.strict = true;
    validate_config(config);
    return config;
}

void add_override_options(CLI::App* cmd, Overrides& o, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--source-root", o.source_root, "Source tree for the language adapter");
    cmd->add_option("--output-dir", o.output_dir, "Directory for command outputs");
    cmd->add_option("--mode", o.mode, "Prompt mode: five-query or single-query");
    cmd->add_option("--shots", o.shots, "Few-shot exemplars: 0, 3, 6 or 9");
    cmd->add_option("--seed", o.seed, "Seed for randomized steps");
    cmd->add_option("--concurrency", o.concurrency, "Worker pool size");
    cmd->add_option("--rag", o.rag, "Retrieval augmentation: on, off or auto");
    cmd->add_option("--backend", o.backend_kind,
                    "Backend kind: mock-rule, mock-script, openai or ollama");
    cmd->add_option("--model", o.model_id, "Backend model id");
    cmd->add_option("--script", o.script, "Completions script for the mock-script backend");
    cmd->add_option("--tokenizer", o.tokenizer, "Token counter: approx or char");
    cmd->add_flag("--strict", o.strict, "Reject scenarios that exceed a token budget");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"testsift: triage captured execution scenarios against a test suite and "
                 "generate candidate unit tests"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    std::string corpus_path, predictions_path, out_path, audit_path, manifest_path, out_dir;
    EvaluateOptions eval_options;

    CLI::App* extract = app.add_subcommand("extract", "Write prompt ingredients per scenario");
    extract->add_option("corpus", corpus_path, "Scenario corpus (JSONL)")->required();
    extract->add_option("--out", out_path, "Ingredients output file");
    add_override_options(extract, overrides, config_path);

    CLI::App* index = app.add_subcommand("index", "Build the retrieval index");
    add_override_options(index, overrides, config_path);

    CLI::App* classify = app.add_subcommand("classify", "Classify scenarios with the backend");
    classify->add_option("corpus", corpus_path, "Scenario corpus (JSONL)")->required();
    classify->add_option("--out", out_path, "Predictions output file");
    classify->add_option("--audit", audit_path, "Audit log output file");
    add_override_options(classify, overrides, config_path);

    CLI::App* generate = app.add_subcommand("generate", "Generate tests for not-yet-tested "
                                                        "scenarios");
    generate->add_option("predictions", predictions_path, "Predictions file")->required();
    generate->add_option("corpus", corpus_path, "Scenario corpus (JSONL)")->required();
    generate->add_option("--out-dir", out_dir, "Directory for generated tests");
    add_override_options(generate, overrides, config_path);

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against ground "
                                                        "truth");
    evaluate->add_option("predictions", predictions_path, "Predictions file")->required();
    evaluate->add_option("corpus", corpus_path, "Labeled scenario corpus")->required();
    evaluate->add_flag("--baseline", eval_options.baseline, "Also run the random baseline");
    evaluate->add_option("--baseline-runs", eval_options.baseline_runs,
                         "Repetitions for the random baseline");
    evaluate->add_flag("--sweep", eval_options.sweep, "Run a temperature sweep");
    evaluate->add_option("--temperatures", eval_options.temperatures,
                         "Temperatures for the sweep");
    evaluate->add_option("--repetitions", eval_options.repetitions,
                         "Repetitions per sweep temperature");
    std::string eval_audit;
    evaluate->add_option("--accounting", eval_audit,
                         "Audit log to summarize into accounting.csv");
    add_override_options(evaluate, overrides, config_path);

    CLI::App* finetune = app.add_subcommand("finetune-export",
                                            "Export fine-tuning records and a split manifest");
    finetune->add_option("corpus", corpus_path, "Labeled scenario corpus")->required();
    finetune->add_option("--out", out_path, "Records output file");
    finetune->add_option("--manifest", manifest_path, "Manifest output file");
    add_override_options(finetune, overrides, config_path);

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = effective_config(config_path, overrides);
        auto in_output_dir = [&](const std::string& name) {
            return config.output_dir / name;
        };
        if (extract->parsed()) {
            std::filesystem::path out =
                out_path.empty() ? in_output_dir("ingredients.jsonl") : std::filesystem::path(out_path);
            return cmd_extract(config, corpus_path, out, std::cout);
        }
        if (index->parsed()) {
            return cmd_index(config, std::cout);
        }
        if (classify->parsed()) {
            std::filesystem::path out =
                out_path.empty() ? in_output_dir("predictions.jsonl") : std::filesystem::path(out_path);
            std::filesystem::path audit =
                audit_path.empty() ? in_output_dir("audit.jsonl") : std::filesystem::path(audit_path);
            return cmd_classify(config, corpus_path, out, audit, std::cout);
        }
        if (generate->parsed()) {
            std::filesystem::path dir = out_dir.empty() ? in_output_dir("generated") : std::filesystem::path(out_dir);
            return cmd_generate(config, predictions_path, corpus_path, dir, std::cout);
        }
        if (evaluate->parsed()) {
            if (!eval_audit.empty()) eval_options.audit_log = eval_audit;
            return cmd_evaluate(config, predictions_path, corpus_path, eval_options, std::cout);
        }
        if (finetune->parsed()) {
            std::filesystem::path out =
                out_path.empty() ? in_output_dir("finetune.jsonl") : std::filesystem::path(out_path);
            std::filesystem::path manifest =
                manifest_path.empty() ? in_output_dir("finetune_manifest.json") : std::filesystem::path(manifest_path);
            return cmd_finetune_export(config, corpus_path, out, manifest, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
