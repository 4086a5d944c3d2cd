#include "testsift/testgen.hpp"

#include <algorithm>
#include <set>

namespace testsift {

namespace {

constexpr std::string_view kSyntaxRepair =
    "The test case has a syntax error. Fix the test case and reply with only the corrected "
    "test case. Error:\n";
constexpr std::string_view kCompileRepair =
    "The test case does not compile. Fix the test case and reply with only the corrected "
    "test case. Error:\n";
constexpr std::string_view kAssertRepair =
    "The test case runs but does not trigger the failure. Correct the assertions so the test "
    "case reveals the faulty behavior, and reply with only the corrected test case.";

/// Diagnostics are capped before they enter a repair prompt.
constexpr std::size_t kDiagnosticTokenCap = 500;

std::string conversation_prompt(
    std::span<const std::pair<std::string, std::string>> transcript, std::string_view next) {
    std::string text;
    for (const auto& [prompt, completion] : transcript) {
        text += prompt;
        text += "\n\n";
        text += completion;
        text += "\n\n";
    }
    text += next;
    return text;
}

// Test text from a completion: the first fenced code block when present,
// otherwise the whole completion, trimmed either way.
std::string extract_test_text(const std::string& completion) {
    std::string text = completion;
    std::size_t fence = completion.find("```");
    if (fence != std::string::npos) {
        std::size_t start = completion.find('\n', fence);
        if (start != std::string::npos) {
            std::size_t end = completion.find("```", start);
            if (end != std::string::npos) text = completion.substr(start + 1, end - start - 1);
        }
    }
    std::size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = text.find_last_not_of(" \t\r\n");
    return text.substr(b, e - b + 1);
}

}  // namespace

void MockToolchain::add_run_rule(std::string match_substring, RunVerdict verdict,
                                 std::string diagnostic) {
    run_rules_.push_back({std::move(match_substring), verdict, std::move(diagnostic)});
}

void MockToolchain::set_default_run(RunVerdict verdict, std::string diagnostic) {
    default_verdict_ = verdict;
    default_diagnostic_ = std::move(diagnostic);
}

SyntaxResult MockToolchain::check_syntax(const std::string& test_text) {
    AdaptResult parsed = adapt_brace_language({{"candidate", test_text}});
    if (!parsed.diagnostics.empty()) {
        const auto& d = parsed.diagnostics.front();
        return {false, d.message + " at line " + std::to_string(d.line)};
    }
    const auto& methods = parsed.model.methods();
    if (methods.empty()) return {false, "no method declaration found"};
    if (methods.size() > 1) {
        return {false,
                "expected exactly one test method, found " + std::to_string(methods.size())};
    }
    for (const auto& line : split_lines(methods.front().body_text)) {
        std::size_t b = line.find_first_not_of(" \t");
        if (b != std::string::npos && line.compare(b, 6, "assert") == 0) {
            return {true, ""};
        }
    }
    return {false, "test method has no assert"};
}

CompileResult MockToolchain::compile(std::span<const std::string> suite_texts,
                                     const std::string& test_text) {
    if (!model_) return {true, ""};
    std::set<std::string> known;
    for (const auto& decl : model_->methods()) known.insert(decl.ref.name);
    for (const auto& text : suite_texts) {
        AdaptResult parsed = adapt_brace_language({{"suite", text}});
        for (const auto& decl : parsed.model.methods()) known.insert(decl.ref.name);
    }
    std::size_t open = test_text.find('{');
    std::size_t close = test_text.rfind('}');
    std::string body = (open != std::string::npos && close != std::string::npos && close > open)
                           ? test_text.substr(open, close - open + 1)
                           : test_text;
    for (const auto& name : call_identifiers(body)) {
        if (!known.count(name)) return {false, "unresolved reference '" + name + "'"};
    }
    return {true, ""};
}

RunResult MockToolchain::run(const std::string& test_text) {
    for (const auto& rule : run_rules_) {
        if (test_text.find(rule.match) != std::string::npos) {
            return {rule.verdict, rule.diagnostic};
        }
    }
    return {default_verdict_, default_diagnostic_};
}

GenerationOutcome generate_test(const PromptIngredients& ing, LlmBackend& backend, Toolchain& tc,
                                const LlmParams& params, const Tokenizer& tok,
                                std::span<const std::pair<std::string, std::string>>
                                    prior_transcript,
                                std::span<const std::string> suite_texts) {
    GenerationOutcome outcome;
    outcome.transcript.assign(prior_transcript.begin(), prior_transcript.end());

    auto exchange = [&](std::string_view instruction) {
        std::string full = conversation_prompt(outcome.transcript, instruction);
        std::string completion = backend.complete(full, params);
        outcome.transcript.emplace_back(std::string(instruction), completion);
        return extract_test_text(completion);
    };
    auto repair = [&](std::string_view prefix, const std::string& diagnostic) {
        std::string instruction(prefix);
        instruction += truncate_to_budget(diagnostic, tok, kDiagnosticTokenCap);
        return exchange(instruction);
    };

    std::string candidate = exchange(render_testgen_prompt(ing, tok));
    RetryCounters& r = outcome.retries;
    while (r.syntax < kMaxGenerationRetry && r.compile < kMaxGenerationRetry &&
           r.assert_fix < kMaxGenerationRetry) {
        SyntaxResult syn = tc.check_syntax(candidate);
        if (!syn.ok) {
            ++r.syntax;
            candidate = repair(kSyntaxRepair, syn.diagnostic);
            continue;
        }
        CompileResult comp = tc.compile(suite_texts, candidate);
        if (!comp.ok) {
            ++r.compile;
            candidate = repair(kCompileRepair, comp.diagnostic);
            continue;
        }
        RunResult run = tc.run(candidate);
        if (run.verdict != RunVerdict::FailureTriggered) {
            ++r.assert_fix;
            std::string instruction(kAssertRepair);
            if (!run.diagnostic.empty()) {
                instruction += "\n";
                instruction += truncate_to_budget(run.diagnostic, tok, kDiagnosticTokenCap);
            }
            candidate = exchange(instruction);
            continue;
        }
        outcome.test_text = candidate;
        break;
    }
    return outcome;
}

}  // namespace testsift
