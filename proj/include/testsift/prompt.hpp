#pragma once

#include <span>
#include <vector>

#include "testsift/core.hpp"
#include "testsift/extractor.hpp"
#include "testsift/tokenizer.hpp"

namespace testsift {

enum class PromptMode { FiveQuery, SingleQuery };

std::string_view to_string(PromptMode m);
std::optional<PromptMode> prompt_mode_from_string(std::string_view s);

/// The five fixed queries, in order Q1..Q5.
std::span<const std::string_view> query_texts();

/// Task instruction for the five-query template: binary YES/NO answers as a
/// JSON object keyed Q1..Q5, no explanations.
std::string_view five_query_task_text();

/// The single-query variant: answer a number 1|2|3 for the class.
std::string_view single_query_text();

/// Generation instruction issued after classification.
std::string_view testgen_instruction();

/// A labeled scenario shipped as prompt prefix material. The answers always
/// equal the expected-answer row for the label.
struct FewShotExemplar {
    PromptIngredients ingredients;
    AnswerVector answers;
    ScenarioClass label;
};

/// Nine small self-contained exemplars, three per class, in class-rotating
/// order (already-tested, need-test, error-prone, already-tested, ...).
std::span<const FewShotExemplar> bundled_exemplars();

struct PromptSection {
    std::string heading;
    std::string body;
};

struct PromptBundle {
    std::vector<PromptSection> sections;
    PromptMode mode = PromptMode::FiveQuery;
    int shots = 0;
    std::size_t total_tokens = 0;
    std::string text;
};

/// `{"Q1":"YES",...,"Q5":"NO"}` for the given vector.
std::string answers_json(const AnswerVector& v);

/// Renders the five-section template (or the single-query variant). With
/// shots > 0, shots/3 exemplars per class are taken from the pool and placed
/// before the scenario sections. Throws ConfigError when the pool cannot
/// supply a balanced selection or shots is not one of {0, 3, 6, 9}.
PromptBundle render_prompt(const PromptIngredients& ing, PromptMode mode, int shots,
                           std::span<const FewShotExemplar> exemplars, const Tokenizer& tok);

PromptBundle render_prompt(const PromptIngredients& ing, PromptMode mode, int shots,
                           const Tokenizer& tok);

struct FinetuneRecord {
    std::string prompt;
    AnswerVector responses;
};

/// Pairs the zero-shot five-query prompt with the expected-answer row for
/// the ground-truth class.
FinetuneRecord render_finetune_record(const PromptIngredients& ing, ScenarioClass truth,
                                      const Tokenizer& tok);

/// One JSON record per line: {"prompt": ..., "responses": {"Q1": ...}}.
std::string serialize_finetune_record(const FinetuneRecord& rec);
std::optional<FinetuneRecord> parse_finetune_record(std::string_view line);

/// Prompt for generating one failing test case, continuing the
/// classification conversation. Throws ConfigError when the rendered text
/// exceeds the context window.
std::string render_testgen_prompt(const PromptIngredients& ing, const Tokenizer& tok,
                                  std::size_t context_window = 16000);

}  // namespace testsift
