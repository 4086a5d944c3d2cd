#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace testsift {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A reference did not resolve against the source model.
struct LookupError : Error {
    using Error::Error;
};

/// Bad configuration (flags, config file, backend setup).
struct ConfigError : Error {
    using Error::Error;
};

/// Bad input data (corpus files, predictions files, labels).
struct InputError : Error {
    using Error::Error;
};

/// A labeling precondition failed while building a corpus.
struct ValidationError : Error {
    using Error::Error;
};

/// The LLM backend failed after exhausting its transport retries.
struct BackendError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Scenario classes and answers
// ---------------------------------------------------------------------------

enum class ScenarioClass { AlreadyTested, NeedTest, ErrorProne };

inline constexpr std::array<ScenarioClass, 3> kAllClasses = {
    ScenarioClass::AlreadyTested, ScenarioClass::NeedTest, ScenarioClass::ErrorProne};

/// Tie-break priority: ErrorProne > NeedTest > AlreadyTested.
constexpr int class_priority(ScenarioClass c) {
    switch (c) {
        case ScenarioClass::AlreadyTested: return 0;
        case ScenarioClass::NeedTest: return 1;
        case ScenarioClass::ErrorProne: return 2;
    }
    return -1;
}

std::string_view to_string(ScenarioClass c);
std::optional<ScenarioClass> scenario_class_from_string(std::string_view s);

enum class Answer : std::uint8_t { No = 0, Yes = 1 };

inline std::string_view to_string(Answer a) { return a == Answer::Yes ? "YES" : "NO"; }

/// The five YES/NO answers to queries Q1..Q5, in order.
struct AnswerVector {
    std::array<Answer, 5> q{};

    Answer& operator[](std::size_t i) { return q[i]; }
    Answer operator[](std::size_t i) const { return q[i]; }
    bool operator==(const AnswerVector&) const = default;
};

constexpr AnswerVector make_answers(Answer q1, Answer q2, Answer q3, Answer q4, Answer q5) {
    return AnswerVector{{q1, q2, q3, q4, q5}};
}

// ---------------------------------------------------------------------------
// Scenario data model
// ---------------------------------------------------------------------------

/// Identifies a method (or a test method) by container + name + signature.
struct MethodRef {
    std::string container;
    std::string name;
    std::string signature;

    auto operator<=>(const MethodRef&) const = default;
};

using TestRef = MethodRef;

/// Maximum number of captured context lines on each side of the call.
inline constexpr std::size_t kMaxContextLines = 10;

/// A captured call with up to kMaxContextLines of surrounding source on each
/// side. Construction truncates to the lines nearest the call.
struct MethodInvocation {
    std::string call_text;
    std::vector<std::string> context_before;
    std::vector<std::string> context_after;

    bool operator==(const MethodInvocation&) const = default;
};

MethodInvocation make_invocation(std::string call_text,
                                 std::vector<std::string> context_before = {},
                                 std::vector<std::string> context_after = {});

/// One captured execution scenario: input + focal method + test-suite slice.
struct ExecutionScenario {
    std::string id;
    MethodInvocation input;
    MethodRef focal_ref;
    std::vector<TestRef> suite_refs;
    std::optional<ScenarioClass> ground_truth;

    bool operator==(const ExecutionScenario&) const = default;
};

/// Per-section token caps plus the large-suite threshold that drives RAG
/// auto-enablement.
struct TokenBudget {
    std::size_t mut_max = 3000;
    std::size_t tests_max = 4000;
    std::size_t input_max = 1000;
    std::size_t large_suite_threshold = 16000;
};

// ---------------------------------------------------------------------------
// Corpus format (newline-delimited JSON records, one scenario per line)
// ---------------------------------------------------------------------------

struct CorpusDiagnostic {
    std::size_t line = 0;  // 1-based line number in the stream
    std::string message;
};

struct CorpusParseResult {
    std::vector<ExecutionScenario> scenarios;
    std::vector<CorpusDiagnostic> diagnostics;
};

/// Parses a corpus stream. Well-formed records become scenarios; malformed
/// records (bad JSON, missing fields, duplicate ids) become diagnostics.
CorpusParseResult parse_corpus(std::istream& in);
CorpusParseResult parse_corpus(std::string_view text);

std::string serialize_scenario(const ExecutionScenario& s);
std::string serialize_corpus(std::span<const ExecutionScenario> scenarios);
void serialize_corpus(std::span<const ExecutionScenario> scenarios, std::ostream& out);

// ---------------------------------------------------------------------------
// Small shared utilities
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit hash; stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view data);

std::vector<std::string> split_lines(std::string_view text);
std::string join_lines(std::span<const std::string> lines);

/// Writes a file atomically (temp file + rename).
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace testsift
