#pragma once

#include <iosfwd>
#include <memory>

#include "testsift/analyzer.hpp"
#include "testsift/config.hpp"
#include "testsift/eval.hpp"
#include "testsift/extractor.hpp"
#include "testsift/rag.hpp"
#include "testsift/source_model.hpp"
#include "testsift/testgen.hpp"

namespace testsift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some scenarios unclassified / ungenerated
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;

/// Backend selected by the config. Rule-mode mocks answer from the given
/// corpus; scripted mocks load their completions from backend.script ("rules",
/// "sequence", "fingerprints", "fallback").
std::unique_ptr<LlmBackend> make_backend(const PipelineConfig& config,
                                         std::span<const ExecutionScenario> corpus);

LlmParams params_from_config(const PipelineConfig& config);

/// Mock toolchain run verdicts loaded from the backend script file
/// ("run_rules", "default_run").
void configure_mock_toolchain(MockToolchain& toolchain, const PipelineConfig& config);

struct RagContext {
    const VectorIndex* index = nullptr;
    const EmbeddingBackend* backend = nullptr;
    std::size_t k = 4;
    bool always = false;  // true: augment every scenario; false: only large suites
};

struct ScenarioResult {
    std::string id;
    std::optional<AnswerVector> answers;
    std::optional<ScenarioClass> predicted;
    bool rag_used = false;
    std::string error;  // set when unclassified
};

/// The classification engine: extract, optionally augment, render, query,
/// vote for every scenario, optionally in parallel. Per-scenario failures
/// mark the scenario unclassified instead of aborting the batch.
std::vector<ScenarioResult> classify_scenarios(
    const SourceModel& model, std::span<const ExecutionScenario> scenarios, LlmBackend& backend,
    const Tokenizer& tok, const TokenBudget& budgets, PromptMode mode, int shots,
    const RagContext* rag, const LlmParams& params, int concurrency, AuditLog* audit,
    TokenBucket* bucket);

// ---------------------------------------------------------------------------
// Command entry points (shared by the CLI and the acceptance suite). All
// return process exit codes and log human-readable progress to `log`.
// ---------------------------------------------------------------------------

int cmd_extract(const PipelineConfig& config, const std::filesystem::path& corpus_in,
                const std::filesystem::path& out_file, std::ostream& log);

int cmd_index(const PipelineConfig& config, std::ostream& log);

int cmd_classify(const PipelineConfig& config, const std::filesystem::path& corpus_in,
                 const std::filesystem::path& predictions_out,
                 const std::filesystem::path& audit_out, std::ostream& log);

int cmd_generate(const PipelineConfig& config, const std::filesystem::path& predictions_in,
                 const std::filesystem::path& corpus_in, const std::filesystem::path& out_dir,
                 std::ostream& log);

struct EvaluateOptions {
    bool baseline = false;
    int baseline_runs = 10;
    bool sweep = false;
    std::vector<double> temperatures = {0.0, 0.75, 1.5, 2.0};
    int repetitions = 3;
    std::filesystem::path audit_log;  // when set, also emit accounting.csv
};

int cmd_evaluate(const PipelineConfig& config, const std::filesystem::path& predictions_in,
                 const std::filesystem::path& corpus_in, const EvaluateOptions& options,
                 std::ostream& log);

int cmd_finetune_export(const PipelineConfig& config, const std::filesystem::path& corpus_in,
                        const std::filesystem::path& records_out,
                        const std::filesystem::path& manifest_out, std::ostream& log);

// Predictions file helpers.
struct PredictionRow {
    std::string id;
    std::optional<ScenarioClass> predicted;
    std::optional<AnswerVector> answers;
};

std::string serialize_prediction_row(const PredictionRow& row, const std::string& error = "");

struct PredictionsParseResult {
    std::vector<PredictionRow> rows;
    std::vector<CorpusDiagnostic> diagnostics;
};

PredictionsParseResult parse_predictions(std::string_view text);

/// Seeded, class-balanced fine-tuning split: max(1, floor(ratio * N / 3))
/// scenarios per class go to the fine-tuning side, the rest to validation.
/// Throws InputError when a class has no members or a scenario is unlabeled.
struct FinetuneSplit {
    std::vector<std::size_t> finetune;    // indices into the corpus
    std::vector<std::size_t> validation;  // complement, in corpus order
};

FinetuneSplit finetune_split(std::span<const ExecutionScenario> corpus, double ratio,
                             std::uint64_t seed);

}  // namespace testsift
