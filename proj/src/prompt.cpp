#include "testsift/prompt.hpp"

#include <array>

#include <json.hpp>

#include "testsift/voter.hpp"

namespace testsift {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 5> kQueries = {
    "Is MUT Input a similar scenario compared with MUT Tests?",
    "Does MUT Input cover more lines or branches than MUT Tests?",
    "Will MUT work differently when executed under MUT Input?",
    "Does MUT still produce correct results when executed under MUT Input?",
    "Will MUT Input reveal any bug in MUT?",
};

constexpr std::string_view kFiveQueryTask =
    "Given the MUT, MUT Tests and MUT Input sections above, answer the five queries in the "
    "Queries section. For each query, give a binary YES or NO answer. Respond with a single "
    "JSON object whose keys are Q1, Q2, Q3, Q4 and Q5 and whose values are YES or NO. Do NOT "
    "explain your answers.";

constexpr std::string_view kSingleQuery =
    "Given MUT, MUT Input and MUT Tests, you should answer a number indicating its priority "
    "for testing. Answer 1 if MUT Input is already-tested. Answer 2 if MUT Input is "
    "need-test. Answer 3 if MUT Input is error-prone. Do NOT explain your answer.";

constexpr std::string_view kTestgenInstruction =
    "Use MUT Input to generate only one test case with an assertion for MUT but do not catch "
    "exceptions.";

PromptIngredients make_exemplar_ingredients(std::string mut, std::string tests,
                                            std::string input) {
    static const ApproxTokenizer tok;
    PromptIngredients ing;
    ing.mut_tokens = tok.count(mut);
    ing.tests_tokens = tok.count(tests);
    ing.input_tokens = tok.count(input);
    ing.mut_text = std::move(mut);
    ing.tests_text = std::move(tests);
    ing.input_text = std::move(input);
    return ing;
}

FewShotExemplar exemplar(ScenarioClass label, std::string mut, std::string tests,
                         std::string input) {
    return FewShotExemplar{
        make_exemplar_ingredients(std::move(mut), std::move(tests), std::move(input)),
        expected_answers(label), label};
}

std::vector<FewShotExemplar> build_exemplars() {
    using SC = ScenarioClass;
    std::vector<FewShotExemplar> pool;
    pool.push_back(exemplar(
        SC::AlreadyTested,
        "max(a, b) {\n    if (a > b) { return a; }\n    return b;\n}",
        "@test\ntestMaxLeft() {\n    assert max(9, 2) == 9;\n}\n\n@test\ntestMaxRight() {\n"
        "    assert max(2, 9) == 9;\n}",
        "max(7, 3)"));
    pool.push_back(exemplar(
        SC::NeedTest,
        "clampPercent(x) {\n    if (x > 100) { return 100; }\n    if (x < 0) { return 0; }\n"
        "    return x;\n}",
        "@test\ntestClampMid() {\n    assert clampPercent(50) == 50;\n}",
        "clampPercent(250)"));
    pool.push_back(exemplar(
        SC::ErrorProne,
        "dayName(i) {\n    // names has exactly 7 entries, no bounds check\n    return "
        "names(i);\n}",
        "@test\ntestDayNameMonday() {\n    assert dayName(0) == \"Mon\";\n}",
        "dayName(7)"));
    pool.push_back(exemplar(
        SC::AlreadyTested,
        "isEven(n) {\n    return n % 2 == 0;\n}",
        "@test\ntestEven() {\n    assert isEven(2);\n}\n\n@test\ntestOdd() {\n    assert "
        "isEven(3) == 0;\n}",
        "isEven(10)"));
    pool.push_back(exemplar(
        SC::NeedTest,
        "splitPair(s) {\n    return before(s, \":\");\n}",
        "@test\ntestSplitSimple() {\n    assert splitPair(\"a:b\") == \"a\";\n}",
        "splitPair(\"a:b:c\")"));
    pool.push_back(exemplar(
        SC::ErrorProne,
        "divide(a, b) {\n    return a / b;\n}",
        "@test\ntestDivide() {\n    assert divide(8, 2) == 4;\n}",
        "divide(5, 0)"));
    pool.push_back(exemplar(
        SC::AlreadyTested,
        "trimEnds(s) {\n    return stripLeft(stripRight(s));\n}",
        "@test\ntestTrimPadded() {\n    assert trimEnds(\" x \") == \"x\";\n}",
        "trimEnds(\"  y  \")"));
    pool.push_back(exemplar(
        SC::NeedTest,
        "parseBool(s) {\n    if (lower(s) == \"true\") { return 1; }\n    return 0;\n}",
        "@test\ntestParseTrue() {\n    assert parseBool(\"true\") == 1;\n}",
        "parseBool(\"TRUE\")"));
    pool.push_back(exemplar(
        SC::ErrorProne,
        "firstChar(s) {\n    // assumes s is non-empty\n    return charAt(s, 0);\n}",
        "@test\ntestFirstChar() {\n    assert firstChar(\"abc\") == \"a\";\n}",
        "firstChar(\"\")"));
    return pool;
}

void append_section(std::string& text, std::string_view heading, std::string_view body,
                    std::string_view level = "##") {
    text += level;
    text += ' ';
    text += heading;
    text += "\n\n";
    text += body;
    text += "\n\n";
}

std::vector<const FewShotExemplar*> select_balanced(std::span<const FewShotExemplar> pool,
                                                    int shots) {
    const int per_class = shots / 3;
    std::array<int, 3> taken{};
    std::vector<const FewShotExemplar*> selected;
    for (const auto& ex : pool) {
        int& n = taken[static_cast<std::size_t>(class_priority(ex.label))];
        if (n < per_class) {
            ++n;
            selected.push_back(&ex);
        }
    }
    if (static_cast<int>(selected.size()) != shots) {
        throw ConfigError("exemplar pool cannot supply " + std::to_string(shots) +
                          " shots balanced across the three classes");
    }
    return selected;
}

}  // namespace

std::string_view to_string(PromptMode m) {
    return m == PromptMode::FiveQuery ? "five-query" : "single-query";
}

std::optional<PromptMode> prompt_mode_from_string(std::string_view s) {
    if (s == "five-query") return PromptMode::FiveQuery;
    if (s == "single-query") return PromptMode::SingleQuery;
    return std::nullopt;
}

std::span<const std::string_view> query_texts() { return kQueries; }
std::string_view five_query_task_text() { return kFiveQueryTask; }
std::string_view single_query_text() { return kSingleQuery; }
std::string_view testgen_instruction() { return kTestgenInstruction; }

std::span<const FewShotExemplar> bundled_exemplars() {
    static const std::vector<FewShotExemplar> pool = build_exemplars();
    return pool;
}

std::string answers_json(const AnswerVector& v) {
    std::string out = "{";
    for (std::size_t i = 0; i < 5; ++i) {
        if (i) out += ",";
        out += "\"Q" + std::to_string(i + 1) + "\":\"";
        out += to_string(v[i]);
        out += "\"";
    }
    out += "}";
    return out;
}

PromptBundle render_prompt(const PromptIngredients& ing, PromptMode mode, int shots,
                           std::span<const FewShotExemplar> exemplars, const Tokenizer& tok) {
    if (shots != 0 && shots != 3 && shots != 6 && shots != 9) {
        throw ConfigError("shots must be one of 0, 3, 6, 9; got " + std::to_string(shots));
    }

    PromptBundle bundle;
    bundle.mode = mode;
    bundle.shots = shots;

    std::string text;
    if (shots > 0) {
        auto selected = select_balanced(exemplars, shots);
        for (std::size_t i = 0; i < selected.size(); ++i) {
            const FewShotExemplar& ex = *selected[i];
            text += "## Example " + std::to_string(i + 1) + "\n\n";
            append_section(text, "MUT", ex.ingredients.mut_text, "###");
            append_section(text, "MUT Tests", ex.ingredients.tests_text, "###");
            append_section(text, "MUT Input", ex.ingredients.input_text, "###");
            std::string answer = mode == PromptMode::FiveQuery
                                     ? answers_json(ex.answers)
                                     : "Answer: " + std::to_string(class_priority(ex.label) + 1);
            append_section(text, "Answers", answer, "###");
        }
    }

    auto add = [&](std::string heading, std::string body) {
        append_section(text, heading, body);
        bundle.sections.push_back({std::move(heading), std::move(body)});
    };
    add("MUT", ing.mut_text);
    add("MUT Tests", ing.tests_text);
    add("MUT Input", ing.input_text);
    if (mode == PromptMode::FiveQuery) {
        add("Task", std::string(kFiveQueryTask));
        std::string queries;
        for (std::size_t i = 0; i < kQueries.size(); ++i) {
            if (i) queries += '\n';
            queries += "Q" + std::to_string(i + 1) + ": ";
            queries += kQueries[i];
        }
        add("Queries", std::move(queries));
    } else {
        add("Task", std::string(kSingleQuery));
    }

    while (!text.empty() && text.back() == '\n') text.pop_back();
    bundle.total_tokens = tok.count(text);
    bundle.text = std::move(text);
    return bundle;
}

PromptBundle render_prompt(const PromptIngredients& ing, PromptMode mode, int shots,
                           const Tokenizer& tok) {
    return render_prompt(ing, mode, shots, bundled_exemplars(), tok);
}

FinetuneRecord render_finetune_record(const PromptIngredients& ing, ScenarioClass truth,
                                      const Tokenizer& tok) {
    PromptBundle bundle = render_prompt(ing, PromptMode::FiveQuery, 0, {}, tok);
    return FinetuneRecord{std::move(bundle.text), expected_answers(truth)};
}

std::string serialize_finetune_record(const FinetuneRecord& rec) {
    ordered_json responses;
    for (std::size_t i = 0; i < 5; ++i) {
        responses["Q" + std::to_string(i + 1)] = std::string(to_string(rec.responses[i]));
    }
    ordered_json out{{"prompt", rec.prompt}, {"responses", std::move(responses)}};
    return out.dump();
}

std::optional<FinetuneRecord> parse_finetune_record(std::string_view line) {
    ordered_json rec = ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) return std::nullopt;
    auto prompt = rec.find("prompt");
    auto responses = rec.find("responses");
    if (prompt == rec.end() || !prompt->is_string() || responses == rec.end() ||
        !responses->is_object()) {
        return std::nullopt;
    }
    FinetuneRecord out;
    out.prompt = prompt->get<std::string>();
    for (std::size_t i = 0; i < 5; ++i) {
        auto it = responses->find("Q" + std::to_string(i + 1));
        if (it == responses->end() || !it->is_string()) return std::nullopt;
        std::string v = it->get<std::string>();
        if (v == "YES") {
            out.responses[i] = Answer::Yes;
        } else if (v == "NO") {
            out.responses[i] = Answer::No;
        } else {
            return std::nullopt;
        }
    }
    return out;
}

std::string render_testgen_prompt(const PromptIngredients& ing, const Tokenizer& tok,
                                  std::size_t context_window) {
    std::string text(kTestgenInstruction);
    text += "\n\n## MUT Input\n\n";
    text += ing.input_text;
    if (tok.count(text) > context_window) {
        throw ConfigError("test generation prompt exceeds the context window (" +
                          std::to_string(tok.count(text)) + " > " +
                          std::to_string(context_window) + " tokens)");
    }
    return text;
}

}  // namespace testsift
