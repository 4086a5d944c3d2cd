#include "testsift/extractor.hpp"

#include <algorithm>

namespace testsift {

namespace {

constexpr std::string_view kPartSeparator = "\n\n";

std::string join_parts(std::span<const std::string> parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += kPartSeparator;
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string_view to_string(Section s) {
    switch (s) {
        case Section::Mut: return "MUT";
        case Section::Tests: return "TESTS";
        case Section::Input: return "INPUT";
    }
    return "?";
}

SectionExtract extract_mut(const SourceModel& model, const MethodRef& focal, const Tokenizer& tok,
                           const TokenBudget& budget) {
    const MethodDecl& decl = model.resolve(focal);
    std::vector<std::string> parts{decl.body_text};
    for (const auto& callee : direct_same_container_callees(model, focal)) {
        parts.push_back(callee.body_text);
    }

    SectionExtract out;
    std::string full = join_parts(parts);
    out.pre_budget_tokens = tok.count(full);
    if (out.pre_budget_tokens <= budget.mut_max) {
        out.text = std::move(full);
        out.tokens = out.pre_budget_tokens;
        return out;
    }

    out.truncated = true;
    // Drop whole trailing callee bodies first; never split one mid-method.
    while (parts.size() > 1 && tok.count(join_parts(parts)) > budget.mut_max) {
        parts.pop_back();
    }
    std::string text = join_parts(parts);
    if (tok.count(text) > budget.mut_max) {
        text = truncate_to_budget(text, tok, budget.mut_max);
    }
    out.tokens = tok.count(text);
    out.text = std::move(text);
    return out;
}

SectionExtract extract_tests(const SourceModel& model, const MethodRef& focal,
                             const Tokenizer& tok, const TokenBudget& budget) {
    std::set<MethodRef> callers = callers_within(model, focal, kTestSelectionDepth);
    std::vector<const MethodDecl*> tests;
    for (const auto& ref : callers) {
        const MethodDecl* decl = model.find(ref);
        if (decl && decl->is_test) tests.push_back(decl);
    }
    std::sort(tests.begin(), tests.end(), [](const MethodDecl* a, const MethodDecl* b) {
        return std::tie(a->file, a->span_begin) < std::tie(b->file, b->span_begin);
    });

    std::vector<std::string> parts;
    parts.reserve(tests.size());
    for (const MethodDecl* t : tests) parts.push_back(t->body_text);

    SectionExtract out;
    std::string full = join_parts(parts);
    out.pre_budget_tokens = tok.count(full);
    if (out.pre_budget_tokens <= budget.tests_max) {
        out.text = std::move(full);
        out.tokens = out.pre_budget_tokens;
        return out;
    }
    out.truncated = true;
    out.text = truncate_to_budget(full, tok, budget.tests_max);
    out.tokens = tok.count(out.text);
    return out;
}

SectionExtract extract_input(const ExecutionScenario& scenario, const Tokenizer& tok,
                             const TokenBudget& budget) {
    if (scenario.input.call_text.empty()) {
        throw InputError("scenario '" + scenario.id + "' has an empty call_text");
    }
    std::vector<std::string> lines = scenario.input.context_before;
    lines.push_back(scenario.input.call_text);
    lines.insert(lines.end(), scenario.input.context_after.begin(),
                 scenario.input.context_after.end());

    SectionExtract out;
    std::string full = join_lines(lines);
    out.pre_budget_tokens = tok.count(full);
    if (out.pre_budget_tokens <= budget.input_max) {
        out.text = std::move(full);
        out.tokens = out.pre_budget_tokens;
        return out;
    }
    out.truncated = true;
    out.text = truncate_to_budget(full, tok, budget.input_max);
    out.tokens = tok.count(out.text);
    return out;
}

Extraction extract_ingredients(const SourceModel& model, const ExecutionScenario& scenario,
                               const Tokenizer& tok, const TokenBudget& budget) {
    SectionExtract mut = extract_mut(model, scenario.focal_ref, tok, budget);
    SectionExtract tests = extract_tests(model, scenario.focal_ref, tok, budget);
    SectionExtract input = extract_input(scenario, tok, budget);

    Extraction out;
    out.pre_mut_tokens = mut.pre_budget_tokens;
    out.pre_tests_tokens = tests.pre_budget_tokens;
    out.pre_input_tokens = input.pre_budget_tokens;

    PromptIngredients& ing = out.ingredients;
    ing.mut_text = std::move(mut.text);
    ing.tests_text = std::move(tests.text);
    ing.input_text = std::move(input.text);
    ing.mut_tokens = mut.tokens;
    ing.tests_tokens = tests.tokens;
    ing.input_tokens = input.tokens;
    if (mut.truncated) ing.truncated.insert(Section::Mut);
    if (tests.truncated) ing.truncated.insert(Section::Tests);
    if (input.truncated) ing.truncated.insert(Section::Input);
    return out;
}

}  // namespace testsift
