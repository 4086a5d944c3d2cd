#include <doctest.h>

#include <fstream>
#include <sstream>

#include "testsift/commands.hpp"
#include "testsift/voter.hpp"
#include "helpers.hpp"

using namespace testsift;

namespace {

PipelineConfig mock_config(const std::filesystem::path& out_dir) {
    PipelineConfig config;
    config.source_root = test::data_dir() / "fixture";
    config.output_dir = out_dir;
    config.rag.index_path = out_dir / "index.bin";
    config.concurrency = 2;
    return config;
}

std::filesystem::path mini_corpus() { return test::data_dir() / "mini_corpus.jsonl"; }

}  // namespace

TEST_CASE("config parsing applies defaults and rejects unknown keys") {
    PipelineConfig config = parse_config(R"json({"source_root": "src", "shots": 3})json");
    CHECK(config.source_root == "src");
    CHECK(config.shots == 3);
    CHECK(config.budgets.mut_max == 3000);
    CHECK(config.backend.kind == "mock-rule");
    CHECK_THROWS_AS(parse_config(R"json({"shotz": 3})json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
}

TEST_CASE("config validation enforces the budget ordering and enums") {
    CHECK_THROWS_AS(parse_config(R"json({"budgets": {"mut": 100, "tests": 50, "input": 10}})json"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"json({"shots": 4})json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"json({"mode": "zero-query"})json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"json({"backend": {"kind": "telnet"}})json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"json({"rag": {"enabled": "sometimes"}})json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"json({"concurrency": 0})json"), ConfigError);
}

TEST_CASE("prediction rows round-trip") {
    PredictionRow row;
    row.id = "s-1";
    row.predicted = ScenarioClass::NeedTest;
    row.answers = expected_answers(ScenarioClass::NeedTest);
    std::string line = serialize_prediction_row(row);
    PredictionsParseResult parsed = parse_predictions(line + "\n");
    CHECK(parsed.diagnostics.empty());
    REQUIRE(parsed.rows.size() == 1);
    CHECK(parsed.rows[0].id == "s-1");
    CHECK(parsed.rows[0].predicted == ScenarioClass::NeedTest);
    CHECK(parsed.rows[0].answers == expected_answers(ScenarioClass::NeedTest));

    PredictionRow unclassified;
    unclassified.id = "s-2";
    std::string line2 = serialize_prediction_row(unclassified, "backend gave up");
    CHECK(line2.find("\"unclassified\":true") != std::string::npos);
    CHECK(line2.find("backend gave up") != std::string::npos);
    PredictionsParseResult parsed2 = parse_predictions(line2);
    REQUIRE(parsed2.rows.size() == 1);
    CHECK(!parsed2.rows[0].predicted.has_value());
}

TEST_CASE("cmd_classify on the bundled corpus reproduces every label, byte-identically") {
    test::TempDir dir("classify");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    int rc1 = cmd_classify(config, mini_corpus(), dir.path / "p1.jsonl",
                           dir.path / "a1.jsonl", log);
    int rc2 = cmd_classify(config, mini_corpus(), dir.path / "p2.jsonl",
                           dir.path / "a2.jsonl", log);
    CHECK(rc1 == kExitOk);
    CHECK(rc2 == kExitOk);
    std::string p1 = read_file((dir.path / "p1.jsonl").string());
    CHECK(p1 == read_file((dir.path / "p2.jsonl").string()));

    CorpusParseResult corpus = parse_corpus(read_file(mini_corpus().string()));
    PredictionsParseResult predictions = parse_predictions(p1);
    REQUIRE(predictions.rows.size() == corpus.scenarios.size());
    for (std::size_t i = 0; i < corpus.scenarios.size(); ++i) {
        CHECK(predictions.rows[i].id == corpus.scenarios[i].id);
        CHECK(predictions.rows[i].predicted == corpus.scenarios[i].ground_truth);
    }
}

TEST_CASE("cmd_classify with an empty corpus writes empty predictions and exits 0") {
    test::TempDir dir("classify_empty");
    PipelineConfig config = mock_config(dir.path);
    std::filesystem::path corpus = dir.path / "empty.jsonl";
    write_file_atomic(corpus.string(), "");
    std::ostringstream log;
    int rc = cmd_classify(config, corpus, dir.path / "p.jsonl", dir.path / "a.jsonl", log);
    CHECK(rc == kExitOk);
    CHECK(read_file((dir.path / "p.jsonl").string()).empty());
}

TEST_CASE("cmd_classify marks scenarios unclassified when the mock cannot answer") {
    test::TempDir dir("classify_partial");
    PipelineConfig config = mock_config(dir.path);
    config.backend.kind = "mock-script";
    config.backend.script_path = dir.path / "script.json";
    // Only the ipv6 scenario gets a completion; everything else falls through.
    write_file_atomic(config.backend.script_path.string(),
                      R"json({"rules": [{"match": "asNode(\"[::1]:6379\")", )json"
                      R"json("completion": "{\"Q1\":\"NO\",\"Q2\":\"YES\",\"Q3\":\"YES\",)json"
                      R"json(\"Q4\":\"NO\",\"Q5\":\"YES\"}"}]})json");
    std::ostringstream log;
    int rc = cmd_classify(config, mini_corpus(), dir.path / "p.jsonl", dir.path / "a.jsonl",
                          log);
    CHECK(rc == kExitPartial);
    PredictionsParseResult predictions =
        parse_predictions(read_file((dir.path / "p.jsonl").string()));
    REQUIRE(predictions.rows.size() == 12);
    CHECK(predictions.rows[0].predicted == ScenarioClass::ErrorProne);
    for (std::size_t i = 1; i < predictions.rows.size(); ++i) {
        CHECK(!predictions.rows[i].predicted.has_value());
    }
}

TEST_CASE("unlabeled corpora classify via the scripted backend") {
    test::TempDir dir("classify_unlabeled");
    PipelineConfig config = mock_config(dir.path);
    config.backend.kind = "mock-script";
    config.backend.script_path = dir.path / "script.json";
    write_file_atomic(config.backend.script_path.string(),
                      R"json({"rules": [{"match": "wrapLine(\"tabs\there\", 2)", )json"
                      R"json("completion": "{\"Q1\":\"NO\",\"Q2\":\"YES\",\"Q3\":\"NO\",)json"
                      R"json(\"Q4\":\"YES\",\"Q5\":\"NO\"}"}]})json");
    std::filesystem::path corpus = dir.path / "corpus.jsonl";
    write_file_atomic(corpus.string(),
                      R"json({"id":"unlabeled-1","call_text":"wrapLine(\"tabs\there\", 2)",)json"
                      R"json("context_before":[],"context_after":[],"focal":)json"
                      R"json({"container":"text_wrap.bl","name":"wrapLine",)json"
                      R"json("signature":"(text,width)"},"suite":[]})json"
                      "\n");
    std::ostringstream log;
    int rc = cmd_classify(config, corpus, dir.path / "p.jsonl", dir.path / "a.jsonl", log);
    CHECK(rc == kExitOk);
    PredictionsParseResult predictions =
        parse_predictions(read_file((dir.path / "p.jsonl").string()));
    REQUIRE(predictions.rows.size() == 1);
    CHECK(predictions.rows[0].predicted == ScenarioClass::NeedTest);
}

TEST_CASE("cmd_extract writes one record per scenario and honors strict mode") {
    test::TempDir dir("extract");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    int rc = cmd_extract(config, mini_corpus(), dir.path / "ing.jsonl", log);
    CHECK(rc == kExitOk);
    std::string first = read_file((dir.path / "ing.jsonl").string());
    CHECK(std::count(first.begin(), first.end(), '\n') == 12);
    // Rerun is byte-identical.
    rc = cmd_extract(config, mini_corpus(), dir.path / "ing2.jsonl", log);
    CHECK(rc == kExitOk);
    CHECK(first == read_file((dir.path / "ing2.jsonl").string()));
}

TEST_CASE("strict extraction aborts on a budget overflow, naming the scenario") {
    test::TempDir dir("extract_strict");
    // A fixture whose focal method alone exceeds the MUT budget.
    std::filesystem::path src = dir.path / "src";
    std::filesystem::create_directories(src);
    std::string body = "huge(x) {\n";
    for (int i = 0; i < 1500; ++i) body += "    filler_statement_" + std::to_string(i) + "(x);\n";
    body += "}\n";
    write_file_atomic((src / "huge.bl").string(), body);
    std::filesystem::path corpus = dir.path / "corpus.jsonl";
    write_file_atomic(corpus.string(),
                      R"json({"id":"big","call_text":"huge(1)","context_before":[],)json"
                      R"json("context_after":[],"focal":{"container":"huge.bl","name":"huge",)json"
                      R"json("signature":"(x)"},"suite":[]})json"
                      "\n");
    PipelineConfig config = mock_config(dir.path);
    config.source_root = src;
    config.strict = true;
    std::ostringstream log;
    int rc = cmd_extract(config, corpus, dir.path / "ing.jsonl", log);
    CHECK(rc == kExitInput);
    CHECK(log.str().find("big") != std::string::npos);
    // Without strict mode the scenario is kept, flagged.
    config.strict = false;
    rc = cmd_extract(config, corpus, dir.path / "ing.jsonl", log);
    CHECK(rc == kExitOk);
    CHECK(read_file((dir.path / "ing.jsonl").string()).find("\"truncated\":[\"MUT\"]") !=
          std::string::npos);
}

TEST_CASE("cmd_index persists a reloadable, reproducible index") {
    test::TempDir dir("index_cmd");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    CHECK(cmd_index(config, log) == kExitOk);
    VectorIndex index = load_index(config.rag.index_path);
    CHECK(index.entries.size() == 24);  // one chunk per fixture method
    std::string bytes = read_file(config.rag.index_path.string());
    CHECK(cmd_index(config, log) == kExitOk);
    CHECK(bytes == read_file(config.rag.index_path.string()));
}

TEST_CASE("cmd_evaluate reports perfect scores for the rule-mock predictions") {
    test::TempDir dir("evaluate");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    REQUIRE(cmd_classify(config, mini_corpus(), dir.path / "p.jsonl", dir.path / "a.jsonl",
                         log) == kExitOk);
    EvaluateOptions options;
    int rc = cmd_evaluate(config, dir.path / "p.jsonl", mini_corpus(), options, log);
    CHECK(rc == kExitOk);
    std::string csv = read_file((dir.path / "metrics.csv").string());
    CHECK(csv.find("total,avg_f1,1.000000") != std::string::npos);
}

TEST_CASE("cmd_evaluate rejects unlabeled corpora, naming the offenders") {
    test::TempDir dir("evaluate_unlabeled");
    PipelineConfig config = mock_config(dir.path);
    std::filesystem::path corpus = dir.path / "corpus.jsonl";
    write_file_atomic(corpus.string(),
                      R"json({"id":"nolabel","call_text":"f(1)","context_before":[],)json"
                      R"json("context_after":[],"focal":{"container":"a","name":"f",)json"
                      R"json("signature":"(x)"},"suite":[]})json"
                      "\n");
    write_file_atomic((dir.path / "p.jsonl").string(),
                      R"json({"id":"nolabel","predicted":"need-test","answers":null,)json"
                      R"json("unclassified":false})json"
                      "\n");
    std::ostringstream log;
    CHECK_THROWS_WITH_AS(
        cmd_evaluate(config, dir.path / "p.jsonl", corpus, EvaluateOptions{}, log),
        doctest::Contains("nolabel"), InputError);
}

TEST_CASE("sweep over the rule mock is flat at every temperature") {
    test::TempDir dir("evaluate_sweep");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    REQUIRE(cmd_classify(config, mini_corpus(), dir.path / "p.jsonl", dir.path / "a.jsonl",
                         log) == kExitOk);
    EvaluateOptions options;
    options.sweep = true;
    options.repetitions = 2;
    int rc = cmd_evaluate(config, dir.path / "p.jsonl", mini_corpus(), options, log);
    CHECK(rc == kExitOk);
    std::string csv = read_file((dir.path / "sweep.csv").string());
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 temperatures
    CHECK(csv.find("0.750000,1.000000,0.000000,2") != std::string::npos);
}

TEST_CASE("an empty source tree indexes to an empty index") {
    test::TempDir dir("index_empty");
    std::filesystem::create_directories(dir.path / "src");
    PipelineConfig config = mock_config(dir.path);
    config.source_root = dir.path / "src";
    std::ostringstream log;
    CHECK(cmd_index(config, log) == kExitOk);
    CHECK(load_index(config.rag.index_path).entries.empty());
}

TEST_CASE("finetune_split balances classes and partitions the corpus") {
    std::vector<ExecutionScenario> corpus;
    for (int i = 0; i < 60; ++i) {
        ExecutionScenario s;
        s.id = "s" + std::to_string(i);
        s.input = make_invocation("f(" + std::to_string(i) + ")");
        s.focal_ref = {"a.bl", "f", "(x)"};
        s.ground_truth = kAllClasses[static_cast<std::size_t>(i % 3)];
        corpus.push_back(std::move(s));
    }
    FinetuneSplit split = finetune_split(corpus, 0.05, 42);
    REQUIRE(split.finetune.size() == 3);  // one per class at 5% of 60
    std::array<int, 3> per_class{};
    for (std::size_t i : split.finetune) {
        per_class[class_priority(*corpus[i].ground_truth)]++;
    }
    CHECK(per_class == std::array<int, 3>{1, 1, 1});
    CHECK(split.finetune.size() + split.validation.size() == corpus.size());
    std::set<std::size_t> all(split.finetune.begin(), split.finetune.end());
    all.insert(split.validation.begin(), split.validation.end());
    CHECK(all.size() == corpus.size());  // disjoint partition
    // Seeded: same seed, same split; different seed, (very likely) different.
    FinetuneSplit again = finetune_split(corpus, 0.05, 42);
    CHECK(split.finetune == again.finetune);

    std::vector<ExecutionScenario> lopsided(corpus.begin(), corpus.begin() + 2);
    CHECK_THROWS_AS(finetune_split(lopsided, 0.05, 1), InputError);
}

TEST_CASE("cmd_finetune_export writes records that round-trip plus a manifest") {
    test::TempDir dir("finetune");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    int rc = cmd_finetune_export(config, mini_corpus(), dir.path / "records.jsonl",
                                 dir.path / "manifest.json", log);
    CHECK(rc == kExitOk);
    std::string records = read_file((dir.path / "records.jsonl").string());
    CHECK(std::count(records.begin(), records.end(), '\n') == 3);  // 12 scenarios -> 1/class
    for (const auto& line : split_lines(records)) {
        if (line.empty()) continue;
        CHECK(parse_finetune_record(line).has_value());
    }
    std::string manifest = read_file((dir.path / "manifest.json").string());
    CorpusParseResult corpus = parse_corpus(read_file(mini_corpus().string()));
    for (const auto& s : corpus.scenarios) {
        CHECK(manifest.find("\"" + s.id + "\"") != std::string::npos);
    }
}

TEST_CASE("cmd_generate runs the funnel for not-yet-tested predictions only") {
    test::TempDir dir("generate");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream log;
    REQUIRE(cmd_classify(config, mini_corpus(), dir.path / "p.jsonl", dir.path / "a.jsonl",
                         log) == kExitOk);
    config.backend.kind = "mock-script";
    config.backend.script_path = test::data_dir() / "scripts" / "generate_demo.json";
    int rc = cmd_generate(config, dir.path / "p.jsonl", mini_corpus(), dir.path / "gen", log);
    CHECK(rc == kExitOk);
    CHECK(log.str().find("8 attempted, 8 failure-triggering") != std::string::npos);
    CHECK(std::filesystem::exists(dir.path / "gen" / "s-asnode-ipv6.test.txt"));
    CHECK(!std::filesystem::exists(dir.path / "gen" / "s-asnode-v4-new.test.txt"));
    std::string outcomes = read_file((dir.path / "gen" / "outcomes.jsonl").string());
    CHECK(std::count(outcomes.begin(), outcomes.end(), '\n') == 8);
}

TEST_CASE("all-already-tested predictions generate nothing and exit 0") {
    test::TempDir dir("generate_none");
    PipelineConfig config = mock_config(dir.path);
    std::ostringstream predictions;
    CorpusParseResult corpus = parse_corpus(read_file(mini_corpus().string()));
    for (const auto& s : corpus.scenarios) {
        PredictionRow row;
        row.id = s.id;
        row.predicted = ScenarioClass::AlreadyTested;
        predictions << serialize_prediction_row(row) << "\n";
    }
    write_file_atomic((dir.path / "p.jsonl").string(), predictions.str());
    std::ostringstream log;
    int rc = cmd_generate(config, dir.path / "p.jsonl", mini_corpus(), dir.path / "gen", log);
    CHECK(rc == kExitOk);
    CHECK(log.str().find("0 attempted") != std::string::npos);
}

TEST_CASE("make_backend wires profiles and rejects unknown kinds") {
    PipelineConfig config;
    config.backend.profile = "local";
    config.backend.temperature = 0.3;
    LlmParams params = params_from_config(config);
    CHECK(params.temperature == 0.3);
    CHECK(params.top_k == 40);
    config.backend.kind = "bogus";
    CHECK_THROWS_AS(make_backend(config, {}), ConfigError);
}
