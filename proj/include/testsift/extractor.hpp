#pragma once

#include <set>
#include <string>

#include "testsift/core.hpp"
#include "testsift/source_model.hpp"
#include "testsift/tokenizer.hpp"

namespace testsift {

enum class Section { Mut, Tests, Input };

std::string_view to_string(Section s);

/// One extracted prompt section with its post-budget token count, the
/// pre-budget count, and whether the budget forced truncation.
struct SectionExtract {
    std::string text;
    std::size_t tokens = 0;
    std::size_t pre_budget_tokens = 0;
    bool truncated = false;
};

/// The three scenario-specific prompt sections after budget enforcement.
/// `truncated` names exactly the sections whose pre-budget token count
/// exceeded their budget.
struct PromptIngredients {
    std::string mut_text;
    std::string tests_text;
    std::string input_text;
    std::size_t mut_tokens = 0;
    std::size_t tests_tokens = 0;
    std::size_t input_tokens = 0;
    std::set<Section> truncated;

    bool operator==(const PromptIngredients&) const = default;
};

/// Focal declaration plus the bodies of its direct same-container callees, in
/// declaration order. Over budget, whole trailing callee bodies are dropped;
/// the focal body itself is tail-truncated only when it alone exceeds the
/// budget. Throws LookupError for an unresolved focal.
SectionExtract extract_mut(const SourceModel& model, const MethodRef& focal, const Tokenizer& tok,
                           const TokenBudget& budget);

/// Bodies of test-marked methods that reach the focal within 3 call levels,
/// in declaration order, tail-truncated to the tests budget. No matching
/// tests is legal and yields an empty section.
SectionExtract extract_tests(const SourceModel& model, const MethodRef& focal,
                             const Tokenizer& tok, const TokenBudget& budget);

/// Context-before lines, the call text, and context-after lines joined by
/// newlines, tail-truncated to the input budget. Throws InputError when the
/// call text is empty.
SectionExtract extract_input(const ExecutionScenario& scenario, const Tokenizer& tok,
                             const TokenBudget& budget);

/// Number of call levels a test may sit above the focal method.
inline constexpr std::size_t kTestSelectionDepth = 3;

struct Extraction {
    PromptIngredients ingredients;
    std::size_t pre_mut_tokens = 0;
    std::size_t pre_tests_tokens = 0;
    std::size_t pre_input_tokens = 0;
};

Extraction extract_ingredients(const SourceModel& model, const ExecutionScenario& scenario,
                               const Tokenizer& tok, const TokenBudget& budget);

}  // namespace testsift
