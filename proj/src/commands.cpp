#include "testsift/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "testsift/http_backend.hpp"
#include "testsift/prompt.hpp"
#include "testsift/voter.hpp"

namespace testsift {

using ordered_json = nlohmann::ordered_json;

namespace {

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start)
            .count();
    }
};

AdaptResult load_model(const PipelineConfig& config, std::ostream& log) {
    AdaptResult adapted = adapt_directory(config.source_root);
    for (const auto& d : adapted.diagnostics) {
        log << "adapter: " << d.file << ":" << d.line << ": " << d.message << "\n";
    }
    return adapted;
}

CorpusParseResult load_corpus(const std::filesystem::path& path, std::ostream& log) {
    CorpusParseResult corpus = parse_corpus(read_file(path.string()));
    for (const auto& d : corpus.diagnostics) {
        log << "corpus: line " << d.line << ": " << d.message << "\n";
    }
    return corpus;
}

void run_parallel(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    int count = std::min<int>(workers, static_cast<int>(n));
    threads.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Per-scenario decorator: rate-limits, times and audit-logs every call.
class InstrumentedBackend final : public LlmBackend {
public:
    InstrumentedBackend(LlmBackend& inner, const Tokenizer& tok, AuditLog* audit,
                        TokenBucket* bucket, std::string scenario_id, std::string mode, bool rag)
        : inner_(inner),
          tok_(tok),
          audit_(audit),
          bucket_(bucket),
          scenario_id_(std::move(scenario_id)),
          mode_(std::move(mode)),
          rag_(rag) {}

    std::string complete(const std::string& prompt, const LlmParams& params) override {
        if (bucket_) bucket_->acquire();
        Clock clock;
        std::string completion = inner_.complete(prompt, params);
        if (audit_) {
            AuditEntry entry;
            entry.scenario_id = scenario_id_;
            entry.model = params.model_id.empty() ? std::string(inner_.name()) : params.model_id;
            entry.mode = mode_;
            entry.rag = rag_;
            entry.fingerprint = prompt_fingerprint(prompt);
            entry.temperature = params.temperature;
            entry.top_p = params.top_p;
            entry.top_k = params.top_k;
            entry.prompt_tokens = tok_.count(prompt);
            entry.completion_tokens = tok_.count(completion);
            entry.latency_ms = clock.ms();
            entry.completion = completion;
            audit_->record(entry);
        }
        return completion;
    }
    bool deterministic() const override { return inner_.deterministic(); }
    std::string_view name() const override { return inner_.name(); }

private:
    LlmBackend& inner_;
    const Tokenizer& tok_;
    AuditLog* audit_;
    TokenBucket* bucket_;
    std::string scenario_id_;
    std::string mode_;
    bool rag_;
};

ordered_json load_script(const std::filesystem::path& path) {
    if (path.empty()) throw ConfigError("mock-script backend requires backend.script");
    ordered_json script =
        ordered_json::parse(read_file(path.string()), nullptr, /*allow_exceptions=*/false);
    if (script.is_discarded() || !script.is_object()) {
        throw ConfigError("backend script is not a JSON object: " + path.string());
    }
    return script;
}

}  // namespace

std::unique_ptr<LlmBackend> make_backend(const PipelineConfig& config,
                                         std::span<const ExecutionScenario> corpus) {
    const BackendConfig& b = config.backend;
    if (b.kind == "mock-rule") {
        auto mock = std::make_unique<MockOracleBackend>();
        mock->set_scenarios(std::vector<ExecutionScenario>(corpus.begin(), corpus.end()));
        return mock;
    }
    if (b.kind == "mock-script") {
        auto mock = std::make_unique<MockOracleBackend>();
        ordered_json script = load_script(b.script_path);
        if (script.contains("sequence")) {
            for (const auto& v : script["sequence"]) mock->push_sequence(v.get<std::string>());
        }
        if (script.contains("fingerprints")) {
            for (const auto& [key, value] : script["fingerprints"].items()) {
                mock->add_fingerprint(std::stoull(key, nullptr, 16), value.get<std::string>());
            }
        }
        if (script.contains("rules")) {
            for (const auto& rule : script["rules"]) {
                mock->add_rule(rule.at("match").get<std::string>(),
                               rule.at("completion").get<std::string>());
            }
        }
        if (script.contains("fallback")) {
            mock->set_fallback(script["fallback"].get<std::string>());
        }
        if (script.contains("scenarios_from_corpus") &&
            script["scenarios_from_corpus"].get<bool>()) {
            mock->set_scenarios(std::vector<ExecutionScenario>(corpus.begin(), corpus.end()));
        }
        return mock;
    }
    if (b.kind == "openai" || b.kind == "ollama") {
        HttpBackendOptions options;
        options.api = b.kind == "openai" ? HttpApi::OpenAiChat : HttpApi::OllamaGenerate;
        if (!b.base_url.empty()) {
            options.base_url = b.base_url;
        } else if (b.kind == "openai") {
            options.base_url = "https://api.openai.com";
        }
        options.credential_env = b.kind == "openai" ? b.credential_env : "";
        return std::make_unique<HttpChatBackend>(options);
    }
    throw ConfigError("unknown backend kind '" + b.kind + "'");
}

LlmParams params_from_config(const PipelineConfig& config) {
    const BackendConfig& b = config.backend;
    LlmParams params =
        b.profile == "local" ? local_profile(b.model_id) : finetuned_profile(b.model_id);
    if (b.temperature) params.temperature = *b.temperature;
    if (b.top_p) params.top_p = *b.top_p;
    if (b.top_k) params.top_k = *b.top_k;
    return params;
}

void configure_mock_toolchain(MockToolchain& toolchain, const PipelineConfig& config) {
    if (config.backend.script_path.empty()) return;
    ordered_json script = load_script(config.backend.script_path);
    auto verdict_of = [](const std::string& name) {
        if (name == "failure-triggered") return RunVerdict::FailureTriggered;
        if (name == "no-failure") return RunVerdict::NoFailure;
        if (name == "diagnostic") return RunVerdict::RunDiagnostic;
        throw ConfigError("unknown run verdict '" + name + "'");
    };
    if (script.contains("run_rules")) {
        for (const auto& rule : script["run_rules"]) {
            toolchain.add_run_rule(rule.at("match").get<std::string>(),
                                   verdict_of(rule.at("verdict").get<std::string>()),
                                   rule.value("diagnostic", ""));
        }
    }
    if (script.contains("default_run")) {
        toolchain.set_default_run(verdict_of(script["default_run"].get<std::string>()));
    }
}

std::vector<ScenarioResult> classify_scenarios(
    const SourceModel& model, std::span<const ExecutionScenario> scenarios, LlmBackend& backend,
    const Tokenizer& tok, const TokenBudget& budgets, PromptMode mode, int shots,
    const RagContext* rag, const LlmParams& params, int concurrency, AuditLog* audit,
    TokenBucket* bucket) {
    std::vector<ScenarioResult> results(scenarios.size());
    run_parallel(scenarios.size(), concurrency, [&](std::size_t i) {
        const ExecutionScenario& scenario = scenarios[i];
        ScenarioResult& result = results[i];
        result.id = scenario.id;
        try {
            Extraction extraction = extract_ingredients(model, scenario, tok, budgets);
            PromptIngredients ingredients = std::move(extraction.ingredients);
            bool use_rag = rag && rag->index && rag->backend &&
                           (rag->always ||
                            extraction.pre_tests_tokens > budgets.large_suite_threshold);
            if (use_rag) {
                ingredients = augment_ingredients(ingredients, *rag->index, rag->k,
                                                  *rag->backend, tok, budgets);
                result.rag_used = true;
            }
            PromptBundle bundle = render_prompt(ingredients, mode, shots, tok);
            InstrumentedBackend instrumented(backend, tok, audit, bucket, scenario.id,
                                             std::string(to_string(mode)), result.rag_used);
            if (mode == PromptMode::FiveQuery) {
                QueryOutcome outcome = query_answers(instrumented, bundle, params);
                if (outcome.answers) {
                    result.answers = outcome.answers;
                    result.predicted = classify(*outcome.answers);
                } else {
                    result.error = "no parsable answer object after " +
                                   std::to_string(1 + kMaxParseRetries) + " completions";
                }
            } else {
                QueryOutcome outcome = query_single(instrumented, bundle, params);
                if (outcome.single) {
                    result.predicted = outcome.single;
                } else {
                    result.error = "no classification digit after " +
                                   std::to_string(1 + kMaxParseRetries) + " completions";
                }
            }
        } catch (const Error& e) {
            result.error = e.what();
            result.predicted.reset();
            result.answers.reset();
        }
    });
    return results;
}

// ---------------------------------------------------------------------------
// Prediction rows
// ---------------------------------------------------------------------------

std::string serialize_prediction_row(const PredictionRow& row, const std::string& error) {
    ordered_json rec;
    rec["id"] = row.id;
    if (row.predicted) {
        rec["predicted"] = std::string(to_string(*row.predicted));
    } else {
        rec["predicted"] = nullptr;
    }
    if (row.answers) {
        ordered_json answers;
        for (std::size_t i = 0; i < 5; ++i) {
            answers["Q" + std::to_string(i + 1)] = std::string(to_string((*row.answers)[i]));
        }
        rec["answers"] = std::move(answers);
    } else {
        rec["answers"] = nullptr;
    }
    rec["unclassified"] = !row.predicted.has_value();
    if (!error.empty()) rec["error"] = error;
    return rec.dump();
}

PredictionsParseResult parse_predictions(std::string_view text) {
    PredictionsParseResult result;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json rec = ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
            !rec["id"].is_string()) {
            result.diagnostics.push_back({line_no, "malformed prediction record"});
            continue;
        }
        PredictionRow row;
        row.id = rec["id"].get<std::string>();
        if (rec.contains("predicted") && rec["predicted"].is_string()) {
            row.predicted = scenario_class_from_string(rec["predicted"].get<std::string>());
            if (!row.predicted) {
                result.diagnostics.push_back({line_no, "unknown predicted class"});
                continue;
            }
        }
        if (rec.contains("answers") && rec["answers"].is_object()) {
            AnswerVector v;
            bool ok = true;
            for (std::size_t i = 0; i < 5 && ok; ++i) {
                auto it = rec["answers"].find("Q" + std::to_string(i + 1));
                if (it == rec["answers"].end() || !it->is_string()) {
                    ok = false;
                    break;
                }
                std::string s = it->get<std::string>();
                if (s == "YES") {
                    v[i] = Answer::Yes;
                } else if (s == "NO") {
                    v[i] = Answer::No;
                } else {
                    ok = false;
                }
            }
            if (ok) row.answers = v;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

int cmd_extract(const PipelineConfig& config, const std::filesystem::path& corpus_in,
                const std::filesystem::path& out_file, std::ostream& log) {
    AdaptResult adapted = load_model(config, log);
    CorpusParseResult corpus = load_corpus(corpus_in, log);
    auto tok = make_tokenizer(config.tokenizer);

    std::ostringstream out;
    for (const auto& scenario : corpus.scenarios) {
        Extraction extraction =
            extract_ingredients(adapted.model, scenario, *tok, config.budgets);
        const PromptIngredients& ing = extraction.ingredients;
        if (config.strict && !ing.truncated.empty()) {
            log << "strict mode: scenario '" << scenario.id << "' exceeds its token budget in";
            for (Section s : ing.truncated) log << ' ' << to_string(s);
            log << "\n";
            return kExitInput;
        }
        ordered_json rec;
        rec["id"] = scenario.id;
        rec["mut"] = ing.mut_text;
        rec["tests"] = ing.tests_text;
        rec["input"] = ing.input_text;
        rec["mut_tokens"] = ing.mut_tokens;
        rec["tests_tokens"] = ing.tests_tokens;
        rec["input_tokens"] = ing.input_tokens;
        rec["pre_mut_tokens"] = extraction.pre_mut_tokens;
        rec["pre_tests_tokens"] = extraction.pre_tests_tokens;
        rec["pre_input_tokens"] = extraction.pre_input_tokens;
        ordered_json truncated = ordered_json::array();
        for (Section s : ing.truncated) truncated.push_back(std::string(to_string(s)));
        rec["truncated"] = std::move(truncated);
        out << rec.dump() << '\n';
    }
    write_file_atomic(out_file.string(), out.str());
    log << "wrote " << corpus.scenarios.size() << " ingredient records to " << out_file.string()
        << "\n";
    return corpus.diagnostics.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// index
// ---------------------------------------------------------------------------

int cmd_index(const PipelineConfig& config, std::ostream& log) {
    AdaptResult adapted = load_model(config, log);
    TrigramEmbeddingBackend embedder(config.rag.embedding_dimension);
    Clock clock;
    std::vector<CodeChunk> chunks = chunk_model(adapted.model, config.rag.chunk_lines);
    VectorIndex index = build_index(chunks, embedder);
    save_index(index, config.rag.index_path);
    double seconds = clock.ms() / 1000.0;
    double rate = seconds > 0.0 ? static_cast<double>(chunks.size()) / seconds : 0.0;
    log << "indexed " << chunks.size() << " chunks to " << config.rag.index_path.string()
        << " (" << static_cast<long>(rate) << " chunks/sec)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

int cmd_classify(const PipelineConfig& config, const std::filesystem::path& corpus_in,
                 const std::filesystem::path& predictions_out,
                 const std::filesystem::path& audit_out, std::ostream& log) {
    AdaptResult adapted = load_model(config, log);
    CorpusParseResult corpus = load_corpus(corpus_in, log);
    if (corpus.scenarios.empty()) {
        write_file_atomic(predictions_out.string(), "");
        write_file_atomic(audit_out.string(), "");
        log << "empty corpus; wrote empty predictions\n";
        return corpus.diagnostics.empty() ? kExitOk : kExitPartial;
    }

    std::unique_ptr<LlmBackend> backend = make_backend(config, corpus.scenarios);
    LlmParams params = params_from_config(config);
    auto tok = make_tokenizer(config.tokenizer);
    PromptMode mode = *prompt_mode_from_string(config.mode);

    // RAG setup: reuse a persisted index when present, otherwise build one.
    VectorIndex index;
    TrigramEmbeddingBackend embedder(config.rag.embedding_dimension);
    RagContext rag_context;
    const RagContext* rag = nullptr;
    if (config.rag.enabled != "off") {
        if (std::filesystem::exists(config.rag.index_path)) {
            index = load_index(config.rag.index_path);
        } else {
            index = build_index(chunk_model(adapted.model, config.rag.chunk_lines), embedder);
        }
        if (index.dimension != embedder.dimension()) {
            throw ConfigError("index dimension does not match rag.dimension");
        }
        rag_context.index = &index;
        rag_context.backend = &embedder;
        rag_context.k = config.rag.k;
        rag_context.always = config.rag.enabled == "on";
        rag = &rag_context;
    }

    AuditLog audit(audit_out.string());
    std::optional<TokenBucket> bucket;
    if (config.backend.requests_per_minute > 0) {
        bucket.emplace(config.backend.requests_per_minute,
                       config.backend.requests_per_minute / 60.0);
    }

    std::vector<ScenarioResult> results = classify_scenarios(
        adapted.model, corpus.scenarios, *backend, *tok, config.budgets, mode, config.shots, rag,
        params, config.concurrency, &audit, bucket ? &*bucket : nullptr);

    std::ostringstream out;
    std::size_t unclassified = 0;
    for (const auto& r : results) {
        if (!r.predicted) ++unclassified;
        out << serialize_prediction_row({r.id, r.predicted, r.answers}, r.error) << '\n';
    }
    write_file_atomic(predictions_out.string(), out.str());
    log << "classified " << results.size() - unclassified << "/" << results.size()
        << " scenarios (" << unclassified << " unclassified); predictions in "
        << predictions_out.string() << "\n";
    if (unclassified > 0 || !corpus.diagnostics.empty()) return kExitPartial;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

namespace {

std::string sanitize_filename(const std::string& id) {
    std::string out;
    for (char c : id) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    }
    return out;
}

}  // namespace

int cmd_generate(const PipelineConfig& config, const std::filesystem::path& predictions_in,
                 const std::filesystem::path& corpus_in, const std::filesystem::path& out_dir,
                 std::ostream& log) {
    AdaptResult adapted = load_model(config, log);
    CorpusParseResult corpus = load_corpus(corpus_in, log);
    PredictionsParseResult predictions = parse_predictions(read_file(predictions_in.string()));
    for (const auto& d : predictions.diagnostics) {
        log << "predictions: line " << d.line << ": " << d.message << "\n";
    }

    std::map<std::string, const ExecutionScenario*> by_id;
    for (const auto& s : corpus.scenarios) by_id[s.id] = &s;

    std::unique_ptr<LlmBackend> backend = make_backend(config, corpus.scenarios);
    LlmParams params = params_from_config(config);
    auto tok = make_tokenizer(config.tokenizer);
    MockToolchain toolchain(&adapted.model);
    configure_mock_toolchain(toolchain, config);

    std::filesystem::create_directories(out_dir);
    std::ostringstream outcomes;
    std::size_t attempted = 0, generated = 0;
    RetryCounters retry_totals;
    std::size_t stuck_syntax = 0, stuck_compile = 0, stuck_assert = 0;

    for (const auto& row : predictions.rows) {
        if (!row.predicted || *row.predicted == ScenarioClass::AlreadyTested) continue;
        auto it = by_id.find(row.id);
        if (it == by_id.end()) {
            log << "predictions: unknown scenario id '" << row.id << "'\n";
            continue;
        }
        const ExecutionScenario& scenario = *it->second;
        ++attempted;

        ordered_json rec;
        rec["id"] = row.id;
        try {
            Extraction extraction =
                extract_ingredients(adapted.model, scenario, *tok, config.budgets);
            // Continue the classification conversation: replay its exchange
            // ahead of the generation prompt.
            PromptBundle classification =
                render_prompt(extraction.ingredients, PromptMode::FiveQuery, config.shots, *tok);
            std::vector<std::pair<std::string, std::string>> prior;
            if (row.answers) {
                prior.emplace_back(classification.text, answers_json(*row.answers));
            }
            GenerationOutcome outcome =
                generate_test(extraction.ingredients, *backend, toolchain, params, *tok, prior);

            retry_totals.syntax += outcome.retries.syntax;
            retry_totals.compile += outcome.retries.compile;
            retry_totals.assert_fix += outcome.retries.assert_fix;

            rec["generated"] = outcome.test_text.has_value();
            rec["retries"] = ordered_json{{"syntax", outcome.retries.syntax},
                                          {"compile", outcome.retries.compile},
                                          {"assert", outcome.retries.assert_fix}};
            std::filesystem::path transcript_file =
                out_dir / (sanitize_filename(row.id) + ".transcript.txt");
            std::ostringstream transcript;
            for (const auto& [prompt, completion] : outcome.transcript) {
                transcript << ">>> prompt\n" << prompt << "\n<<< completion\n" << completion
                           << "\n";
            }
            write_file_atomic(transcript_file.string(), transcript.str());
            rec["transcript"] = transcript_file.string();
            if (outcome.test_text) {
                ++generated;
                std::filesystem::path test_file =
                    out_dir / (sanitize_filename(row.id) + ".test.txt");
                write_file_atomic(test_file.string(), *outcome.test_text + "\n");
                rec["file"] = test_file.string();
            } else {
                rec["file"] = nullptr;
                if (outcome.retries.syntax >= kMaxGenerationRetry) ++stuck_syntax;
                if (outcome.retries.compile >= kMaxGenerationRetry) ++stuck_compile;
                if (outcome.retries.assert_fix >= kMaxGenerationRetry) ++stuck_assert;
            }
        } catch (const Error& e) {
            rec["generated"] = false;
            rec["file"] = nullptr;
            rec["error"] = e.what();
        }
        outcomes << rec.dump() << '\n';
    }

    write_file_atomic((out_dir / "outcomes.jsonl").string(), outcomes.str());
    log << "generation funnel: " << attempted << " attempted, " << generated
        << " failure-triggering tests\n"
        << "  retries: syntax " << retry_totals.syntax << ", compile " << retry_totals.compile
        << ", assert " << retry_totals.assert_fix << "\n"
        << "  stuck: syntax " << stuck_syntax << ", compile " << stuck_compile << ", assert "
        << stuck_assert << "\n";
    return generated == attempted ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

std::vector<ScenarioClass> require_labels(std::span<const ExecutionScenario> scenarios) {
    std::vector<std::string> missing;
    std::vector<ScenarioClass> labels;
    labels.reserve(scenarios.size());
    for (const auto& s : scenarios) {
        if (!s.ground_truth) {
            missing.push_back(s.id);
        } else {
            labels.push_back(*s.ground_truth);
        }
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& id : missing) {
            if (!names.empty()) names += ", ";
            names += id;
        }
        throw InputError("corpus scenarios lack ground_truth: " + names);
    }
    return labels;
}

}  // namespace

int cmd_evaluate(const PipelineConfig& config, const std::filesystem::path& predictions_in,
                 const std::filesystem::path& corpus_in, const EvaluateOptions& options,
                 std::ostream& log) {
    CorpusParseResult corpus = load_corpus(corpus_in, log);
    if (corpus.scenarios.empty()) throw InputError("corpus is empty");
    std::vector<ScenarioClass> labels = require_labels(corpus.scenarios);

    PredictionsParseResult predictions = parse_predictions(read_file(predictions_in.string()));
    std::map<std::string, std::optional<ScenarioClass>> predicted_by_id;
    for (const auto& row : predictions.rows) predicted_by_id[row.id] = row.predicted;

    std::vector<Prediction> joined;
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < corpus.scenarios.size(); ++i) {
        auto it = predicted_by_id.find(corpus.scenarios[i].id);
        if (it == predicted_by_id.end()) {
            missing.push_back(corpus.scenarios[i].id);
            continue;
        }
        joined.emplace_back(labels[i], it->second);
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& id : missing) {
            if (!names.empty()) names += ", ";
            names += id;
        }
        throw InputError("predictions missing for scenarios: " + names);
    }

    MetricsReport report = score(joined);
    log << metrics_table(report);
    std::filesystem::path csv_path = config.output_dir / "metrics.csv";
    write_file_atomic(csv_path.string(), metrics_csv(report));
    log << "metrics CSV written to " << csv_path.string() << "\n";

    if (options.baseline) {
        std::array<std::size_t, 3> counts{};
        for (ScenarioClass c : labels) counts[static_cast<std::size_t>(class_priority(c))]++;
        MetricsReport baseline = random_baseline(counts, options.baseline_runs, config.seed);
        log << "random baseline (" << options.baseline_runs << " runs):\n"
            << metrics_table(baseline);
        std::filesystem::path baseline_path = config.output_dir / "baseline.csv";
        write_file_atomic(baseline_path.string(), metrics_csv(baseline));
        log << "baseline CSV written to " << baseline_path.string() << "\n";
    }

    if (options.sweep) {
        AdaptResult adapted = load_model(config, log);
        std::unique_ptr<LlmBackend> backend = make_backend(config, corpus.scenarios);
        auto tok = make_tokenizer(config.tokenizer);
        PromptMode mode = *prompt_mode_from_string(config.mode);
        LlmParams base = params_from_config(config);

        auto run_cell = [&](double temperature, int) -> std::optional<double> {
            LlmParams params = base;
            params.temperature = temperature;
            try {
                std::vector<ScenarioResult> results = classify_scenarios(
                    adapted.model, corpus.scenarios, *backend, *tok, config.budgets, mode,
                    config.shots, nullptr, params, config.concurrency, nullptr, nullptr);
                std::vector<Prediction> cell;
                cell.reserve(results.size());
                for (std::size_t i = 0; i < results.size(); ++i) {
                    cell.emplace_back(labels[i], results[i].predicted);
                }
                return score(cell).total_avg_f1;
            } catch (const Error& e) {
                log << "sweep cell (temperature " << temperature << ") failed: " << e.what()
                    << "\n";
                return std::nullopt;
            }
        };
        std::vector<SweepRow> rows = sweep(options.temperatures, options.repetitions, run_cell);
        std::filesystem::path sweep_path = config.output_dir / "sweep.csv";
        write_file_atomic(sweep_path.string(), sweep_csv(rows));
        log << "sweep CSV written to " << sweep_path.string() << "\n";
    }

    if (!options.audit_log.empty()) {
        std::vector<AuditRecord> records =
            parse_audit_log(read_file(options.audit_log.string()));
        std::vector<AccountingGroup> groups = accounting(records);
        std::filesystem::path accounting_path = config.output_dir / "accounting.csv";
        write_file_atomic(accounting_path.string(), accounting_csv(groups));
        log << "accounting over " << records.size() << " backend calls written to "
            << accounting_path.string() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// finetune-export
// ---------------------------------------------------------------------------

FinetuneSplit finetune_split(std::span<const ExecutionScenario> corpus, double ratio,
                             std::uint64_t seed) {
    std::array<std::vector<std::size_t>, 3> by_class;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus[i].ground_truth) {
            throw InputError("scenario '" + corpus[i].id + "' lacks ground_truth");
        }
        by_class[static_cast<std::size_t>(class_priority(*corpus[i].ground_truth))].push_back(i);
    }
    for (std::size_t c = 0; c < 3; ++c) {
        if (by_class[c].empty()) {
            throw InputError(std::string("class '") + std::string(to_string(kAllClasses[c])) +
                             "' has no scenarios; cannot build a balanced split");
        }
    }
    // Balanced fine-tuning side: the same count from every class.
    auto per_class = static_cast<std::size_t>(ratio * static_cast<double>(corpus.size()) / 3.0);
    per_class = std::max<std::size_t>(1, per_class);
    std::mt19937_64 rng(seed);
    FinetuneSplit split;
    std::set<std::size_t> chosen;
    for (auto& indices : by_class) {
        std::shuffle(indices.begin(), indices.end(), rng);
        std::size_t take = std::min(per_class, indices.size());
        for (std::size_t i = 0; i < take; ++i) chosen.insert(indices[i]);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (chosen.count(i)) {
            split.finetune.push_back(i);
        } else {
            split.validation.push_back(i);
        }
    }
    return split;
}

int cmd_finetune_export(const PipelineConfig& config, const std::filesystem::path& corpus_in,
                        const std::filesystem::path& records_out,
                        const std::filesystem::path& manifest_out, std::ostream& log) {
    AdaptResult adapted = load_model(config, log);
    CorpusParseResult corpus = load_corpus(corpus_in, log);
    if (corpus.scenarios.empty()) throw InputError("corpus is empty");

    FinetuneSplit split = finetune_split(corpus.scenarios, 0.05, config.seed);
    auto tok = make_tokenizer(config.tokenizer);

    std::ostringstream records;
    for (std::size_t i : split.finetune) {
        const ExecutionScenario& scenario = corpus.scenarios[i];
        Extraction extraction =
            extract_ingredients(adapted.model, scenario, *tok, config.budgets);
        FinetuneRecord record =
            render_finetune_record(extraction.ingredients, *scenario.ground_truth, *tok);
        records << serialize_finetune_record(record) << '\n';
    }
    write_file_atomic(records_out.string(), records.str());

    ordered_json manifest;
    ordered_json finetune_ids = ordered_json::array();
    for (std::size_t i : split.finetune) finetune_ids.push_back(corpus.scenarios[i].id);
    ordered_json validation_ids = ordered_json::array();
    for (std::size_t i : split.validation) validation_ids.push_back(corpus.scenarios[i].id);
    manifest["finetune"] = std::move(finetune_ids);
    manifest["validation"] = std::move(validation_ids);
    write_file_atomic(manifest_out.string(), manifest.dump(2) + "\n");

    log << "exported " << split.finetune.size() << " fine-tune records ("
        << split.validation.size() << " validation scenarios) to " << records_out.string()
        << "\n";
    return kExitOk;
}

}  // namespace testsift
