#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "testsift/analyzer.hpp"
#include "testsift/source_model.hpp"

namespace testsift {

inline constexpr int kMaxGenerationRetry = 5;

enum class RunVerdict { FailureTriggered, NoFailure, RunDiagnostic };

struct SyntaxResult {
    bool ok = false;
    std::string diagnostic;
};

struct CompileResult {
    bool ok = false;
    std::string diagnostic;
};

struct RunResult {
    RunVerdict verdict = RunVerdict::NoFailure;
    std::string diagnostic;
};

/// Syntax / compile / execute oracles for generated tests. Calls must not
/// mutate the scenario corpus; the bundled mock is deterministic per
/// test text.
class Toolchain {
public:
    virtual ~Toolchain() = default;
    virtual SyntaxResult check_syntax(const std::string& test_text) = 0;
    virtual CompileResult compile(std::span<const std::string> suite_texts,
                                  const std::string& test_text) = 0;
    virtual RunResult run(const std::string& test_text) = 0;
};

/// Offline toolchain over the reference brace language. Syntax: exactly one
/// method with balanced braces and at least one assert line. Compile: every
/// called identifier resolves against the source model (when one is given).
/// Run: ordered substring rules, then a default verdict.
class MockToolchain final : public Toolchain {
public:
    MockToolchain() = default;
    explicit MockToolchain(const SourceModel* model) : model_(model) {}

    void add_run_rule(std::string match_substring, RunVerdict verdict, std::string diagnostic = "");
    void set_default_run(RunVerdict verdict, std::string diagnostic = "");

    SyntaxResult check_syntax(const std::string& test_text) override;
    CompileResult compile(std::span<const std::string> suite_texts,
                          const std::string& test_text) override;
    RunResult run(const std::string& test_text) override;

private:
    const SourceModel* model_ = nullptr;
    struct RunRule {
        std::string match;
        RunVerdict verdict;
        std::string diagnostic;
    };
    std::vector<RunRule> run_rules_;
    RunVerdict default_verdict_ = RunVerdict::FailureTriggered;
    std::string default_diagnostic_;
};

struct RetryCounters {
    int syntax = 0;
    int compile = 0;
    int assert_fix = 0;

    int total() const { return syntax + compile + assert_fix; }
    bool operator==(const RetryCounters&) const = default;
};

/// test_text is present exactly when a run triggered the failure.
struct GenerationOutcome {
    std::optional<std::string> test_text;
    RetryCounters retries;
    std::vector<std::pair<std::string, std::string>> transcript;  // (prompt, completion)
};

/// Bounded-retry generation loop: prompt for one failing test, then repair
/// on syntax errors, compile errors, or runs that do not trigger the
/// failure, until a run fails or any counter reaches kMaxGenerationRetry.
/// prior_transcript (the classification exchange) is prepended to every
/// prompt to continue the conversation over a stateless backend.
GenerationOutcome generate_test(const PromptIngredients& ing, LlmBackend& backend, Toolchain& tc,
                                const LlmParams& params, const Tokenizer& tok,
                                std::span<const std::pair<std::string, std::string>>
                                    prior_transcript = {},
                                std::span<const std::string> suite_texts = {});

}  // namespace testsift
