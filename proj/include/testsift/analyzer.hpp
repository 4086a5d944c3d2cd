#pragma once

#include <chrono>
#include <memory>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "testsift/core.hpp"
#include "testsift/prompt.hpp"

namespace testsift {

struct LlmParams {
    double temperature = 2.0;
    double top_p = 1.0;
    std::optional<int> top_k;
    std::string model_id;
    int max_transport_retries = 2;
};

/// temperature 2.0, top_p 1: the fine-tuned-model profile.
LlmParams finetuned_profile(std::string model_id = "");
/// temperature 0.75, top_p 0.9, top_k 40: the local-model profile.
LlmParams local_profile(std::string model_id = "");

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const std::string& prompt, const LlmParams& params) = 0;
    virtual bool deterministic() const = 0;
    virtual std::string_view name() const = 0;
};

std::uint64_t prompt_fingerprint(std::string_view prompt);

/// Offline deterministic backend. Completions come, in precedence order,
/// from: a FIFO sequence, an exact fingerprint map, ordered substring rules,
/// ground-truth rule mode (answers with the expected-answer row of the
/// scenario whose call text appears in the prompt's last MUT Input section),
/// and finally a fixed fallback. Never performs network activity.
class MockOracleBackend final : public LlmBackend {
public:
    MockOracleBackend() = default;

    /// Rule mode over a labeled corpus.
    static std::unique_ptr<MockOracleBackend> rule_mode(std::vector<ExecutionScenario> scenarios);

    void add_fingerprint(std::uint64_t fp, std::string completion);
    void add_rule(std::string match_substring, std::string completion);
    void push_sequence(std::string completion);
    void set_fallback(std::string completion);
    void set_scenarios(std::vector<ExecutionScenario> scenarios);

    std::string complete(const std::string& prompt, const LlmParams& params) override;
    bool deterministic() const override { return true; }
    std::string_view name() const override { return "mock"; }

    int calls() const { return calls_; }

private:
    std::vector<std::string> sequence_;
    std::size_t sequence_pos_ = 0;
    std::map<std::uint64_t, std::string> by_fingerprint_;
    std::vector<std::pair<std::string, std::string>> rules_;
    std::vector<ExecutionScenario> scenarios_;
    std::optional<std::string> fallback_;
    int calls_ = 0;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Completion parsing (never throws; totality over arbitrary completions)
// ---------------------------------------------------------------------------

/// Scans for the first balanced JSON-ish object carrying Q1..Q5 (keys
/// case-insensitive, values YES/NO case-insensitive, prose and code fences
/// around it tolerated).
std::optional<AnswerVector> parse_answer_vector(std::string_view completion);

/// First digit 1|2|3 in the completion.
std::optional<ScenarioClass> parse_single_answer(std::string_view completion);

// ---------------------------------------------------------------------------
// Querying
// ---------------------------------------------------------------------------

/// Parse-failure re-queries on top of the first attempt.
inline constexpr int kMaxParseRetries = 3;

struct QueryOutcome {
    std::optional<AnswerVector> answers;
    std::optional<ScenarioClass> single;
    std::vector<std::string> raw_completions;  // one per backend call

    bool unclassified() const { return !answers && !single; }
};

/// Asks the five queries and parses the answer object; re-queries up to
/// kMaxParseRetries times on parse failure, then reports the scenario
/// unclassifiable (raw completions preserved). Throws ConfigError when the
/// bundle mode is not FiveQuery; BackendError propagates.
QueryOutcome query_answers(LlmBackend& backend, const PromptBundle& bundle,
                           const LlmParams& params);

/// Single-query variant: maps the first digit 1|2|3 to a class.
QueryOutcome query_single(LlmBackend& backend, const PromptBundle& bundle,
                          const LlmParams& params);

// ---------------------------------------------------------------------------
// Rate limiting and audit logging
// ---------------------------------------------------------------------------

/// Token bucket: capacity tokens, refilled at refill_per_second. acquire()
/// blocks until a token is available; a zero rate disables limiting.
class TokenBucket {
public:
    TokenBucket(double capacity, double refill_per_second);
    void acquire();
    bool try_acquire();

private:
    double available();
    double capacity_;
    double refill_per_second_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct AuditEntry {
    std::string scenario_id;
    std::string model;
    std::string mode;  // "five-query" | "single-query"
    bool rag = false;
    std::uint64_t fingerprint = 0;
    double temperature = 0.0;
    double top_p = 0.0;
    std::optional<int> top_k;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    double latency_ms = 0.0;
    std::string completion;
};

std::string serialize_audit_entry(const AuditEntry& e);

/// Thread-safe JSONL sink for backend request/response accounting.
class AuditLog {
public:
    explicit AuditLog(std::string path);
    ~AuditLog();
    void record(const AuditEntry& entry);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace testsift
