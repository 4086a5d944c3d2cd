#include "testsift/analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "testsift/voter.hpp"

namespace testsift {

using ordered_json = nlohmann::ordered_json;

LlmParams finetuned_profile(std::string model_id) {
    LlmParams p;
    p.temperature = 2.0;
    p.top_p = 1.0;
    p.model_id = std::move(model_id);
    return p;
}

LlmParams local_profile(std::string model_id) {
    LlmParams p;
    p.temperature = 0.75;
    p.top_p = 0.9;
    p.top_k = 40;
    p.model_id = std::move(model_id);
    return p;
}

std::uint64_t prompt_fingerprint(std::string_view prompt) { return fnv1a64(prompt); }

// ---------------------------------------------------------------------------
// MockOracleBackend
// ---------------------------------------------------------------------------

std::unique_ptr<MockOracleBackend> MockOracleBackend::rule_mode(
    std::vector<ExecutionScenario> scenarios) {
    auto backend = std::make_unique<MockOracleBackend>();
    backend->set_scenarios(std::move(scenarios));
    return backend;
}

void MockOracleBackend::add_fingerprint(std::uint64_t fp, std::string completion) {
    by_fingerprint_[fp] = std::move(completion);
}

void MockOracleBackend::add_rule(std::string match_substring, std::string completion) {
    rules_.emplace_back(std::move(match_substring), std::move(completion));
}

void MockOracleBackend::push_sequence(std::string completion) {
    sequence_.push_back(std::move(completion));
}

void MockOracleBackend::set_fallback(std::string completion) {
    fallback_ = std::move(completion);
}

void MockOracleBackend::set_scenarios(std::vector<ExecutionScenario> scenarios) {
    scenarios_ = std::move(scenarios);
}

namespace {

// Body of the last "## MUT Input" section; the whole prompt when the heading
// is absent (few-shot examples use deeper headings, so the last match is
// always the scenario's own section).
std::string_view last_input_section(std::string_view prompt) {
    constexpr std::string_view heading = "## MUT Input\n";
    std::size_t pos = prompt.rfind(heading);
    if (pos == std::string_view::npos) return prompt;
    std::size_t body = pos + heading.size();
    std::size_t end = prompt.find("\n## ", body);
    if (end == std::string_view::npos) end = prompt.size();
    return prompt.substr(body, end - body);
}

}  // namespace

std::string MockOracleBackend::complete(const std::string& prompt, const LlmParams&) {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (sequence_pos_ < sequence_.size()) return sequence_[sequence_pos_++];
    if (auto it = by_fingerprint_.find(prompt_fingerprint(prompt)); it != by_fingerprint_.end()) {
        return it->second;
    }
    for (const auto& [match, completion] : rules_) {
        if (prompt.find(match) != std::string::npos) return completion;
    }
    if (!scenarios_.empty()) {
        std::string_view input = last_input_section(prompt);
        const ExecutionScenario* best = nullptr;
        for (const auto& s : scenarios_) {
            if (s.input.call_text.empty()) continue;
            if (input.find(s.input.call_text) == std::string_view::npos) continue;
            if (!best || s.input.call_text.size() > best->input.call_text.size()) best = &s;
        }
        if (best && best->ground_truth) {
            bool single = prompt.find("you should answer a number") != std::string::npos;
            if (single) return std::to_string(class_priority(*best->ground_truth) + 1);
            return answers_json(expected_answers(*best->ground_truth));
        }
    }
    if (fallback_) return *fallback_;
    throw BackendError("mock backend has no completion for this prompt");
}

// ---------------------------------------------------------------------------
// Completion parsing
// ---------------------------------------------------------------------------

namespace {

bool match_keyword_at(std::string_view text, std::size_t pos, std::string_view keyword) {
    if (pos + keyword.size() > text.size()) return false;
    for (std::size_t i = 0; i < keyword.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) != keyword[i]) return false;
    }
    return true;
}

// Lenient per-object extraction: for each Qi find a following yes/no token.
std::optional<AnswerVector> extract_from_object(std::string_view object) {
    AnswerVector v;
    for (std::size_t qi = 0; qi < 5; ++qi) {
        std::string key = "q" + std::to_string(qi + 1);
        std::optional<Answer> answer;
        for (std::size_t pos = 0; pos + key.size() <= object.size(); ++pos) {
            if (!match_keyword_at(object, pos, key)) continue;
            std::size_t after = pos + key.size();
            // The first alphabetic token after the key must be yes or no.
            while (after < object.size() &&
                   !std::isalpha(static_cast<unsigned char>(object[after]))) {
                ++after;
            }
            if (match_keyword_at(object, after, "yes")) {
                answer = Answer::Yes;
            } else if (match_keyword_at(object, after, "no")) {
                answer = Answer::No;
            }
            break;
        }
        if (!answer) return std::nullopt;
        v[qi] = *answer;
    }
    return v;
}

}  // namespace

std::optional<AnswerVector> parse_answer_vector(std::string_view completion) {
    for (std::size_t open = 0; open < completion.size(); ++open) {
        if (completion[open] != '{') continue;
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = open; i < completion.size(); ++i) {
            char c = completion[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    auto v = extract_from_object(completion.substr(open, i - open + 1));
                    if (v) return v;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

std::optional<ScenarioClass> parse_single_answer(std::string_view completion) {
    for (char c : completion) {
        switch (c) {
            case '1': return ScenarioClass::AlreadyTested;
            case '2': return ScenarioClass::NeedTest;
            case '3': return ScenarioClass::ErrorProne;
            default: break;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Querying
// ---------------------------------------------------------------------------

QueryOutcome query_answers(LlmBackend& backend, const PromptBundle& bundle,
                           const LlmParams& params) {
    if (bundle.mode != PromptMode::FiveQuery) {
        throw ConfigError("query_answers requires a five-query prompt bundle");
    }
    QueryOutcome out;
    for (int attempt = 0; attempt <= kMaxParseRetries; ++attempt) {
        std::string completion = backend.complete(bundle.text, params);
        out.raw_completions.push_back(completion);
        if (auto v = parse_answer_vector(completion)) {
            out.answers = *v;
            break;
        }
    }
    return out;
}

QueryOutcome query_single(LlmBackend& backend, const PromptBundle& bundle,
                          const LlmParams& params) {
    if (bundle.mode != PromptMode::SingleQuery) {
        throw ConfigError("query_single requires a single-query prompt bundle");
    }
    QueryOutcome out;
    for (int attempt = 0; attempt <= kMaxParseRetries; ++attempt) {
        std::string completion = backend.complete(bundle.text, params);
        out.raw_completions.push_back(completion);
        if (auto c = parse_single_answer(completion)) {
            out.single = *c;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TokenBucket
// ---------------------------------------------------------------------------

TokenBucket::TokenBucket(double capacity, double refill_per_second)
    : capacity_(std::max(1.0, capacity)),
      refill_per_second_(refill_per_second),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

double TokenBucket::available() {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
    return tokens_;
}

bool TokenBucket::try_acquire() {
    std::lock_guard lock(mutex_);
    if (refill_per_second_ <= 0.0) return true;
    if (available() >= 1.0) {
        tokens_ -= 1.0;
        return true;
    }
    return false;
}

void TokenBucket::acquire() {
    while (!try_acquire()) {
        double deficit;
        {
            std::lock_guard lock(mutex_);
            deficit = std::max(0.0, 1.0 - tokens_);
        }
        auto wait = std::chrono::duration<double>(deficit / refill_per_second_);
        std::this_thread::sleep_for(
            std::max(std::chrono::duration<double>(0.001), wait));
    }
}

// ---------------------------------------------------------------------------
// Audit log
// ---------------------------------------------------------------------------

std::string serialize_audit_entry(const AuditEntry& e) {
    char fp[20];
    std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(e.fingerprint));
    ordered_json rec;
    rec["scenario_id"] = e.scenario_id;
    rec["model"] = e.model;
    rec["mode"] = e.mode;
    rec["rag"] = e.rag;
    rec["fingerprint"] = fp;
    rec["temperature"] = e.temperature;
    rec["top_p"] = e.top_p;
    if (e.top_k) {
        rec["top_k"] = *e.top_k;
    } else {
        rec["top_k"] = nullptr;
    }
    rec["prompt_tokens"] = e.prompt_tokens;
    rec["completion_tokens"] = e.completion_tokens;
    rec["latency_ms"] = e.latency_ms;
    rec["completion"] = e.completion;
    return rec.dump();
}

struct AuditLog::Impl {
    std::ofstream out;
    std::mutex mutex;
};

AuditLog::AuditLog(std::string path) : impl_(std::make_unique<Impl>()) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    impl_->out.open(p, std::ios::trunc);
    if (!impl_->out) throw InputError("cannot open audit log: " + path);
}

AuditLog::~AuditLog() = default;

void AuditLog::record(const AuditEntry& entry) {
    std::lock_guard lock(impl_->mutex);
    impl_->out << serialize_audit_entry(entry) << '\n';
    impl_->out.flush();
}

}  // namespace testsift
