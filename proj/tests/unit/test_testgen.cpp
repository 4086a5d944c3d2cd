#include <doctest.h>

#include "testsift/testgen.hpp"
#include "helpers.hpp"

using namespace testsift;

namespace {

const std::string kGoodTest =
    "@test\n"
    "testReveals() {\n"
    "    assert focal(0) == 1;\n"
    "}";

const std::string kPassingTest =
    "@test\n"
    "testPasses() {\n"
    "    assert focal(1) == 1;\n"
    "}";

const std::string kBrokenTest = "@test\ntestBroken() {\n    assert focal(0) == 1;\n";

PromptIngredients tiny_ingredients() {
    PromptIngredients ing;
    ing.mut_text = "focal(x) { return 1 / x; }";
    ing.input_text = "focal(0)";
    return ing;
}

SourceModel tiny_model() {
    return adapt_brace_language({{"m.bl", "focal(x) {\n    return 1 / x;\n}\n"}}).model;
}

}  // namespace

TEST_CASE("mock toolchain syntax checks the miniature test grammar") {
    MockToolchain tc;
    CHECK(tc.check_syntax(kGoodTest).ok);

    SyntaxResult unbalanced = tc.check_syntax(kBrokenTest);
    CHECK(!unbalanced.ok);
    CHECK(unbalanced.diagnostic.find("unbalanced braces") != std::string::npos);

    SyntaxResult empty = tc.check_syntax("just prose, no method");
    CHECK(!empty.ok);
    CHECK(empty.diagnostic.find("no method") != std::string::npos);

    SyntaxResult two = tc.check_syntax("a() {\n    assert 1;\n}\nb() {\n    assert 1;\n}");
    CHECK(!two.ok);
    CHECK(two.diagnostic.find("exactly one") != std::string::npos);

    SyntaxResult no_assert = tc.check_syntax("t() {\n    focal(1);\n}");
    CHECK(!no_assert.ok);
    CHECK(no_assert.diagnostic.find("assert") != std::string::npos);
}

TEST_CASE("mock toolchain compiles by name resolution against the model") {
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    CHECK(tc.compile({}, kGoodTest).ok);
    CompileResult missing =
        tc.compile({}, "t() {\n    assert missingMethod(1) == 2;\n}");
    CHECK(!missing.ok);
    CHECK(missing.diagnostic.find("missingMethod") != std::string::npos);
    // Names declared in the suite texts are visible too.
    std::vector<std::string> suite{"helper(x) {\n    return x;\n}"};
    CHECK(tc.compile(suite, "t() {\n    assert helper(1) == 1;\n}").ok);
}

TEST_CASE("run rules pick the first matching verdict") {
    MockToolchain tc;
    tc.add_run_rule("focal(1)", RunVerdict::NoFailure);
    tc.set_default_run(RunVerdict::FailureTriggered);
    CHECK(tc.run(kPassingTest).verdict == RunVerdict::NoFailure);
    CHECK(tc.run(kGoodTest).verdict == RunVerdict::FailureTriggered);
}

TEST_CASE("generation happy path: first candidate triggers the failure") {
    MockOracleBackend backend;
    backend.set_fallback(kGoodTest);
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    ApproxTokenizer tok;
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok);
    REQUIRE(out.test_text.has_value());
    CHECK(*out.test_text == kGoodTest);
    CHECK(out.retries == RetryCounters{0, 0, 0});
    CHECK(backend.calls() == 1);
    // Replaying the returned test reproduces the failing verdict.
    CHECK(tc.run(*out.test_text).verdict == RunVerdict::FailureTriggered);
}

TEST_CASE("generation stuck on syntax: five retries, then empty outcome") {
    MockOracleBackend backend;
    backend.set_fallback(kBrokenTest);
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    ApproxTokenizer tok;
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok);
    CHECK(!out.test_text.has_value());
    CHECK(out.retries == RetryCounters{kMaxGenerationRetry, 0, 0});
    CHECK(backend.calls() == 1 + out.retries.total());
}

TEST_CASE("generation mixed path: syntax x2, passing run x1, then success") {
    MockOracleBackend backend;
    backend.push_sequence(kBrokenTest);
    backend.push_sequence(kBrokenTest);
    backend.push_sequence(kPassingTest);
    backend.push_sequence(kGoodTest);
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    tc.add_run_rule("focal(1)", RunVerdict::NoFailure);
    tc.set_default_run(RunVerdict::FailureTriggered);
    ApproxTokenizer tok;
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok);
    REQUIRE(out.test_text.has_value());
    CHECK(out.retries == RetryCounters{2, 0, 1});
    CHECK(backend.calls() == 1 + out.retries.total());
    CHECK(backend.calls() == 4);
}

TEST_CASE("compile failures drive the compile counter") {
    MockOracleBackend backend;
    backend.push_sequence("t() {\n    assert ghost(1) == 2;\n}");
    backend.push_sequence(kGoodTest);
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    ApproxTokenizer tok;
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok);
    REQUIRE(out.test_text.has_value());
    CHECK(out.retries == RetryCounters{0, 1, 0});
}

TEST_CASE("repair prompts carry the diagnostic and continue the conversation") {
    MockOracleBackend backend;
    backend.push_sequence(kBrokenTest);
    backend.push_sequence(kGoodTest);
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    ApproxTokenizer tok;
    std::vector<std::pair<std::string, std::string>> prior{{"classification prompt",
                                                            "classification answer"}};
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok, prior);
    REQUIRE(out.test_text.has_value());
    // Transcript: prior exchange + initial generation + one repair.
    REQUIRE(out.transcript.size() == 3);
    CHECK(out.transcript[0].first == "classification prompt");
    CHECK(out.transcript[1].first.find("Use MUT Input to generate only one test case") !=
          std::string::npos);
    CHECK(out.transcript[2].first.find("syntax error") != std::string::npos);
    CHECK(out.transcript[2].first.find("unbalanced braces") != std::string::npos);
}

TEST_CASE("oversized diagnostics are capped before entering a repair prompt") {
    MockOracleBackend backend;
    backend.push_sequence("t() {\n    assert ghost" + std::string(8000, 'x') +
                          "(1) == 2;\n}");
    backend.push_sequence(kGoodTest);
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    ApproxTokenizer tok;
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok);
    REQUIRE(out.test_text.has_value());
    REQUIRE(out.transcript.size() == 2);
    // 500 tokens under the approx tokenizer is 2000 characters.
    CHECK(out.transcript[1].first.size() <
          2000 + std::string("The test case does not compile.").size() + 120);
}

TEST_CASE("fenced completions are unwrapped into test text") {
    MockOracleBackend backend;
    backend.set_fallback("Here you go:\n```\n" + kGoodTest + "\n```\nGood luck!");
    SourceModel model = tiny_model();
    MockToolchain tc(&model);
    ApproxTokenizer tok;
    GenerationOutcome out =
        generate_test(tiny_ingredients(), backend, tc, finetuned_profile(), tok);
    REQUIRE(out.test_text.has_value());
    CHECK(*out.test_text == kGoodTest);
}
