#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "testsift/analyzer.hpp"
#include "testsift/commands.hpp"
#include "testsift/eval.hpp"
#include "testsift/extractor.hpp"
#include "testsift/prompt.hpp"
#include "testsift/rag.hpp"
#include "testsift/source_model.hpp"
#include "testsift/voter.hpp"

namespace py = pybind11;
using namespace testsift;

namespace {

ScenarioClass class_from_arg(const std::string& name) {
    auto c = scenario_class_from_string(name);
    if (!c) throw py::value_error("unknown scenario class: " + name);
    return *c;
}

AnswerVector answers_from_arg(const std::vector<std::string>& answers) {
    if (answers.size() != 5) throw py::value_error("expected exactly five answers");
    AnswerVector v;
    for (std::size_t i = 0; i < 5; ++i) {
        if (answers[i] == "YES") {
            v[i] = Answer::Yes;
        } else if (answers[i] == "NO") {
            v[i] = Answer::No;
        } else {
            throw py::value_error("answers must be YES or NO, got: " + answers[i]);
        }
    }
    return v;
}

std::vector<std::string> answers_to_list(const AnswerVector& v) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < 5; ++i) out.emplace_back(to_string(v[i]));
    return out;
}

py::dict report_to_dict(const MetricsReport& report) {
    py::dict out;
    for (ScenarioClass c : kAllClasses) {
        const ClassMetrics& m = report.for_class(c);
        py::dict cls;
        cls["precision"] = m.precision;
        cls["recall"] = m.recall;
        cls["f1"] = m.f1;
        out[std::string(to_string(c)).c_str()] = cls;
    }
    out["not_yet_tested_avg_f1"] = report.not_yet_tested_avg_f1;
    out["total_avg_f1"] = report.total_avg_f1;
    out["runs"] = report.runs;
    return out;
}

}  // namespace

PYBIND11_MODULE(_testsift, m) {
    m.doc() = "Scenario triage against a test suite: extraction, prompting, truth-table "
              "voting, retrieval and scoring.";

    py::register_exception<Error>(m, "TestsiftError");

    py::class_<MethodRef>(m, "MethodRef")
        .def(py::init<std::string, std::string, std::string>(), py::arg("container"),
             py::arg("name"), py::arg("signature"))
        .def_readwrite("container", &MethodRef::container)
        .def_readwrite("name", &MethodRef::name)
        .def_readwrite("signature", &MethodRef::signature)
        .def("__repr__", [](const MethodRef& r) {
            return "MethodRef(" + r.container + "::" + r.name + r.signature + ")";
        });

    py::class_<ExecutionScenario>(m, "ExecutionScenario")
        .def_readonly("id", &ExecutionScenario::id)
        .def_readonly("focal", &ExecutionScenario::focal_ref)
        .def_property_readonly("call_text",
                               [](const ExecutionScenario& s) { return s.input.call_text; })
        .def_property_readonly("ground_truth", [](const ExecutionScenario& s) -> py::object {
            if (!s.ground_truth) return py::none();
            return py::str(std::string(to_string(*s.ground_truth)));
        });

    py::class_<SourceModel>(m, "SourceModel")
        .def_property_readonly("method_count",
                               [](const SourceModel& m_) { return m_.methods().size(); })
        .def("method_names", [](const SourceModel& m_) {
            std::vector<std::string> names;
            for (const auto& d : m_.methods()) names.push_back(d.ref.name);
            return names;
        });

    py::class_<PromptIngredients>(m, "PromptIngredients")
        .def_readonly("mut_text", &PromptIngredients::mut_text)
        .def_readonly("tests_text", &PromptIngredients::tests_text)
        .def_readonly("input_text", &PromptIngredients::input_text)
        .def_readonly("mut_tokens", &PromptIngredients::mut_tokens)
        .def_readonly("tests_tokens", &PromptIngredients::tests_tokens)
        .def_readonly("input_tokens", &PromptIngredients::input_tokens)
        .def_property_readonly("truncated", [](const PromptIngredients& ing) {
            std::vector<std::string> out;
            for (Section s : ing.truncated) out.emplace_back(to_string(s));
            return out;
        });

    py::class_<PromptBundle>(m, "PromptBundle")
        .def_readonly("text", &PromptBundle::text)
        .def_readonly("total_tokens", &PromptBundle::total_tokens)
        .def_property_readonly("mode", [](const PromptBundle& b) {
            return std::string(to_string(b.mode));
        });

    py::class_<LlmBackend, std::shared_ptr<LlmBackend>>(m, "LlmBackend")
        .def("complete", [](LlmBackend& backend, const std::string& prompt) {
            return backend.complete(prompt, finetuned_profile());
        });

    m.def("parse_corpus", [](const std::string& text) {
        CorpusParseResult result = parse_corpus(std::string_view(text));
        std::vector<std::pair<std::size_t, std::string>> diags;
        for (const auto& d : result.diagnostics) diags.emplace_back(d.line, d.message);
        return py::make_tuple(result.scenarios, diags);
    });
    m.def("serialize_corpus", [](const std::vector<ExecutionScenario>& scenarios) {
        return serialize_corpus(scenarios);
    });

    m.def("adapt_source", [](const std::map<std::string, std::string>& files) {
        AdaptResult r = adapt_brace_language(files);
        if (!r.diagnostics.empty()) {
            throw Error("adapter diagnostics: " + r.diagnostics.front().file + ":" +
                        std::to_string(r.diagnostics.front().line) + ": " +
                        r.diagnostics.front().message);
        }
        return r.model;
    });
    m.def("adapt_source_dir",
          [](const std::string& root) { return adapt_directory(root).model; });

    m.def(
        "extract_ingredients",
        [](const SourceModel& model, const ExecutionScenario& scenario) {
            ApproxTokenizer tok;
            return extract_ingredients(model, scenario, tok, TokenBudget{}).ingredients;
        },
        py::arg("model"), py::arg("scenario"));

    m.def(
        "render_prompt",
        [](const PromptIngredients& ing, const std::string& mode, int shots) {
            auto parsed = prompt_mode_from_string(mode);
            if (!parsed) throw py::value_error("unknown prompt mode: " + mode);
            ApproxTokenizer tok;
            return render_prompt(ing, *parsed, shots, tok);
        },
        py::arg("ingredients"), py::arg("mode") = "five-query", py::arg("shots") = 0);

    m.def("match_count", [](const std::vector<std::string>& answers, const std::string& cls) {
        return match_count(answers_from_arg(answers), class_from_arg(cls));
    });
    m.def("classify", [](const std::vector<std::string>& answers) {
        return std::string(to_string(classify(answers_from_arg(answers))));
    });
    m.def("expected_answers", [](const std::string& cls) {
        return answers_to_list(expected_answers(class_from_arg(cls)));
    });

    m.def("rule_mock", [](const std::vector<ExecutionScenario>& scenarios) {
        std::shared_ptr<LlmBackend> backend = MockOracleBackend::rule_mode(scenarios);
        return backend;
    });
    m.def("scripted_mock",
          [](const std::vector<std::pair<std::string, std::string>>& rules,
             const std::string& fallback) {
              auto mock = std::make_shared<MockOracleBackend>();
              for (const auto& [match, completion] : rules) mock->add_rule(match, completion);
              if (!fallback.empty()) mock->set_fallback(fallback);
              return std::static_pointer_cast<LlmBackend>(mock);
          },
          py::arg("rules"), py::arg("fallback") = "");

    m.def("query_answers", [](LlmBackend& backend, const PromptBundle& bundle) -> py::object {
        QueryOutcome out = query_answers(backend, bundle, finetuned_profile());
        if (!out.answers) return py::none();
        return py::cast(answers_to_list(*out.answers));
    });
    m.def("parse_answer_vector", [](const std::string& completion) -> py::object {
        auto v = parse_answer_vector(completion);
        if (!v) return py::none();
        return py::cast(answers_to_list(*v));
    });

    m.def("cosine_similarity",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return cosine_similarity(a, b);
          });

    m.def("score", [](const std::vector<std::pair<std::string, py::object>>& pairs) {
        std::vector<Prediction> predictions;
        for (const auto& [truth, predicted] : pairs) {
            std::optional<ScenarioClass> p;
            if (!predicted.is_none()) p = class_from_arg(predicted.cast<std::string>());
            predictions.emplace_back(class_from_arg(truth), p);
        }
        return report_to_dict(score(predictions));
    });
    m.def(
        "random_baseline",
        [](std::size_t already_tested, std::size_t need_test, std::size_t error_prone,
           int runs, std::uint64_t seed) {
            return report_to_dict(
                random_baseline({already_tested, need_test, error_prone}, runs, seed));
        },
        py::arg("already_tested"), py::arg("need_test"), py::arg("error_prone"),
        py::arg("runs") = 10, py::arg("seed") = 42);

    m.attr("__version__") = "0.1.0";
}
