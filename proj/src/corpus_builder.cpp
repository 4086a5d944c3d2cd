#include "testsift/corpus_builder.hpp"

#include <cctype>
#include <sstream>

#include <json.hpp>

namespace testsift {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Mini-language interpreter
// ---------------------------------------------------------------------------

namespace {

struct RunOutput {
    PassFail status = PassFail::Pass;
    std::string signature;  // '1'/'0' per if evaluated; '!' appended on failure
};

struct Interp {
    std::string_view text;
    std::size_t pos = 0;
    std::map<std::string, long long> env;
    std::string signature;

    struct Failure {};

    void skip_space() {
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '/' && pos + 1 < text.size() && text[pos + 1] == '/') {
                while (pos < text.size() && text[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    bool eat(std::string_view s) {
        skip_space();
        if (text.substr(pos, s.size()) == s) {
            pos += s.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view s) {
        if (!eat(s)) throw ValidationError("mini-language parse error: expected '" +
                                           std::string(s) + "'");
    }

    std::string ident() {
        skip_space();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_')) {
            ++pos;
        }
        if (start == pos) throw ValidationError("mini-language parse error: identifier expected");
        return std::string(text.substr(start, pos - start));
    }

    bool peek_digit() {
        skip_space();
        return pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]));
    }

    long long primary() {
        skip_space();
        if (eat("(")) {
            long long v = expr();
            expect(")");
            return v;
        }
        if (eat("-")) return -primary();
        if (peek_digit()) {
            long long v = 0;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                v = v * 10 + (text[pos] - '0');
                ++pos;
            }
            return v;
        }
        std::string name = ident();
        auto it = env.find(name);
        if (it == env.end()) throw Failure{};  // unknown name: runtime failure
        return it->second;
    }

    long long mul() {
        long long v = primary();
        for (;;) {
            skip_space();
            if (eat("*")) {
                v *= primary();
            } else if (pos < text.size() && text[pos] == '/' &&
                       (pos + 1 >= text.size() || text[pos + 1] != '/')) {
                ++pos;
                long long d = primary();
                if (d == 0) throw Failure{};
                v /= d;
            } else if (eat("%")) {
                long long d = primary();
                if (d == 0) throw Failure{};
                v %= d;
            } else {
                return v;
            }
        }
    }

    long long add() {
        long long v = mul();
        for (;;) {
            if (eat("+")) {
                v += mul();
            } else if (eat("-")) {
                v -= mul();
            } else {
                return v;
            }
        }
    }

    long long expr() {
        long long v = add();
        skip_space();
        if (eat("==")) return v == add();
        if (eat("!=")) return v != add();
        if (eat("<=")) return v <= add();
        if (eat(">=")) return v >= add();
        if (eat("<")) return v < add();
        if (eat(">")) return v > add();
        return v;
    }

    // Runs statements until '}' ; returns the value of a reached return.
    std::optional<long long> block() {
        for (;;) {
            skip_space();
            if (pos >= text.size()) throw ValidationError("mini-language parse error: unterminated block");
            if (eat("}")) return std::nullopt;
            if (eat("if")) {
                expect("(");
                long long cond = expr();
                expect(")");
                expect("{");
                signature += cond ? '1' : '0';
                if (cond) {
                    auto v = block();
                    if (v) return v;
                } else {
                    skip_block();
                }
            } else if (eat("return")) {
                long long v = expr();
                eat(";");
                return v;
            } else if (eat("assert")) {
                long long v = expr();
                eat(";");
                if (!v) throw Failure{};
            } else {
                throw ValidationError("mini-language parse error: unknown statement at offset " +
                                      std::to_string(pos));
            }
        }
    }

    // Skips a balanced { ... } body without executing it (the '{' has been
    // consumed already).
    void skip_block() {
        int depth = 1;
        while (pos < text.size() && depth > 0) {
            char c = text[pos];
            if (c == '{') ++depth;
            if (c == '}') --depth;
            if (c == '"') {
                ++pos;
                while (pos < text.size() && text[pos] != '"') ++pos;
            }
            ++pos;
        }
    }
};

std::vector<long long> parse_int_args(const std::string& call_text) {
    std::size_t open = call_text.find('(');
    std::size_t close = call_text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ValidationError("unsupported input '" + call_text + "': no argument list");
    }
    std::string args = call_text.substr(open + 1, close - open - 1);
    std::vector<long long> out;
    std::istringstream in(args);
    std::string piece;
    while (std::getline(in, piece, ',')) {
        std::size_t b = piece.find_first_not_of(" \t");
        std::size_t e = piece.find_last_not_of(" \t");
        if (b == std::string::npos) {
            throw ValidationError("unsupported input '" + call_text + "': empty argument");
        }
        piece = piece.substr(b, e - b + 1);
        try {
            std::size_t used = 0;
            long long v = std::stoll(piece, &used);
            if (used != piece.size()) throw std::invalid_argument(piece);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("unsupported input '" + call_text +
                                  "': non-integer argument '" + piece + "'");
        }
    }
    return out;
}

RunOutput run_method(const MethodDecl& method, const MethodInvocation& input) {
    std::vector<long long> args = parse_int_args(input.call_text);

    // Parse the header to bind parameters.
    Interp interp;
    interp.text = method.body_text;
    std::string name = interp.ident();
    interp.expect("(");
    std::vector<std::string> params;
    for (;;) {
        interp.skip_space();
        if (interp.eat(")")) break;
        params.push_back(interp.ident());
        interp.eat(",");
    }
    interp.expect("{");
    if (params.size() != args.size()) {
        throw ValidationError("input '" + input.call_text + "' has " +
                              std::to_string(args.size()) + " arguments; method '" + name +
                              "' takes " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) interp.env[params[i]] = args[i];

    RunOutput out;
    try {
        interp.block();
        out.signature = interp.signature;
    } catch (const Interp::Failure&) {
        out.status = PassFail::Fail;
        out.signature = interp.signature + "!";
    }
    return out;
}

ExecutionScenario scenario_from(const BugRecord& rec, const MethodDecl& method,
                                MethodInvocation input, ScenarioClass label) {
    ExecutionScenario s;
    s.id = rec.provenance + "#" + std::string(to_string(label));
    s.input = std::move(input);
    s.focal_ref = method.ref;
    s.suite_refs = rec.suite;
    s.ground_truth = label;
    return s;
}

}  // namespace

MiniLangOracle::MiniLangOracle(MethodDecl coverage_method)
    : coverage_method_(std::move(coverage_method)) {}

void MiniLangOracle::bind_suite_invocation(const TestRef& test, MethodInvocation input) {
    suite_inputs_[test] = std::move(input);
}

PassFail MiniLangOracle::passes(const MethodDecl& variant, const MethodInvocation& input) {
    return run_method(variant, input).status;
}

std::string MiniLangOracle::branch_signature(const MethodInvocation& input) {
    return run_method(coverage_method_, input).signature;
}

bool MiniLangOracle::branch_coverage_increases(std::span<const TestRef> suite,
                                               const MethodInvocation& input) {
    std::string sig = branch_signature(input);
    for (const auto& test : suite) {
        auto it = suite_inputs_.find(test);
        if (it == suite_inputs_.end()) continue;
        if (branch_signature(it->second) == sig) return false;
    }
    return true;
}

std::optional<MethodInvocation> MiniLangOracle::suite_invocation(const TestRef& test) {
    auto it = suite_inputs_.find(test);
    if (it == suite_inputs_.end()) return std::nullopt;
    return it->second;
}

ExecutionScenario make_error_prone(const BugRecord& rec, ExecutionOracle& oracle) {
    if (oracle.passes(rec.buggy_method, rec.trigger_input) != PassFail::Fail) {
        throw ValidationError("record '" + rec.provenance +
                              "': trigger input passes on the buggy method, not a "
                              "reproducing bug");
    }
    return scenario_from(rec, rec.buggy_method, rec.trigger_input, ScenarioClass::ErrorProne);
}

ExecutionScenario make_need_test(const BugRecord& rec, ExecutionOracle& oracle) {
    if (oracle.passes(rec.fixed_method, rec.trigger_input) != PassFail::Pass) {
        throw ValidationError("record '" + rec.provenance +
                              "': fixed method still fails under the trigger input");
    }
    return scenario_from(rec, rec.fixed_method, rec.trigger_input, ScenarioClass::NeedTest);
}

ExecutionScenario make_already_tested(const BugRecord& rec, const MethodInvocation& new_input,
                                      ExecutionOracle& oracle) {
    for (const auto& test : rec.suite) {
        auto existing = oracle.suite_invocation(test);
        if (existing && existing->call_text == new_input.call_text) {
            throw ValidationError("record '" + rec.provenance +
                                  "': clause (ii) violated, input duplicates suite test '" +
                                  test.name + "'");
        }
    }
    if (oracle.passes(rec.buggy_method, new_input) != PassFail::Pass) {
        throw ValidationError("record '" + rec.provenance +
                              "': clause (iii) violated, input fails on the method");
    }
    if (oracle.branch_coverage_increases(rec.suite, new_input)) {
        throw ValidationError("record '" + rec.provenance +
                              "': clause (iv) violated, input increases branch coverage");
    }
    return scenario_from(rec, rec.buggy_method, new_input, ScenarioClass::AlreadyTested);
}

// ---------------------------------------------------------------------------
// Bug-record file format
// ---------------------------------------------------------------------------

namespace {

ordered_json ref_json(const MethodRef& r) {
    return ordered_json{{"container", r.container}, {"name", r.name}, {"signature", r.signature}};
}

std::optional<MethodRef> ref_from(const ordered_json& v) {
    if (!v.is_object() || !v.contains("container") || !v.contains("name") ||
        !v.contains("signature")) {
        return std::nullopt;
    }
    if (!v["container"].is_string() || !v["name"].is_string() || !v["signature"].is_string()) {
        return std::nullopt;
    }
    return MethodRef{v["container"].get<std::string>(), v["name"].get<std::string>(),
                     v["signature"].get<std::string>()};
}

MethodDecl decl_from_body(const MethodRef& ref, const std::string& body) {
    MethodDecl d;
    d.ref = ref;
    d.file = ref.container;
    d.span_begin = 1;
    d.span_end = split_lines(body).size();
    d.body_text = body;
    return d;
}

}  // namespace

std::string serialize_bug_record(const BugRecord& rec) {
    ordered_json out;
    out["provenance"] = rec.provenance;
    out["method"] = ref_json(rec.buggy_method.ref);
    out["buggy_body"] = rec.buggy_method.body_text;
    out["fixed_body"] = rec.fixed_method.body_text;
    out["trigger"] = ordered_json{{"call_text", rec.trigger_input.call_text},
                                  {"context_before", rec.trigger_input.context_before},
                                  {"context_after", rec.trigger_input.context_after}};
    ordered_json suite = ordered_json::array();
    for (const auto& t : rec.suite) suite.push_back(ref_json(t));
    out["suite"] = std::move(suite);
    return out.dump();
}

BugRecordParseResult parse_bug_records(std::string_view text) {
    BugRecordParseResult result;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json rec = ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded() || !rec.is_object()) {
            result.diagnostics.push_back({line_no, "malformed record: not valid JSON"});
            continue;
        }
        auto fail = [&](const std::string& message) {
            result.diagnostics.push_back({line_no, message});
        };
        if (!rec.contains("provenance") || !rec["provenance"].is_string()) {
            fail("missing required field 'provenance'");
            continue;
        }
        auto ref = rec.contains("method") ? ref_from(rec["method"]) : std::nullopt;
        if (!ref) {
            fail("missing required field 'method'");
            continue;
        }
        if (!rec.contains("buggy_body") || !rec["buggy_body"].is_string() ||
            !rec.contains("fixed_body") || !rec["fixed_body"].is_string()) {
            fail("missing required field 'buggy_body'/'fixed_body'");
            continue;
        }
        auto trig = rec.find("trigger");
        if (trig == rec.end() || !trig->is_object() || !trig->contains("call_text") ||
            !(*trig)["call_text"].is_string()) {
            fail("missing required field 'trigger'");
            continue;
        }
        BugRecord out;
        out.provenance = rec["provenance"].get<std::string>();
        out.buggy_method = decl_from_body(*ref, rec["buggy_body"].get<std::string>());
        out.fixed_method = decl_from_body(*ref, rec["fixed_body"].get<std::string>());
        std::vector<std::string> before, after;
        if (trig->contains("context_before") && (*trig)["context_before"].is_array()) {
            for (const auto& v : (*trig)["context_before"]) {
                if (v.is_string()) before.push_back(v.get<std::string>());
            }
        }
        if (trig->contains("context_after") && (*trig)["context_after"].is_array()) {
            for (const auto& v : (*trig)["context_after"]) {
                if (v.is_string()) after.push_back(v.get<std::string>());
            }
        }
        out.trigger_input = make_invocation((*trig)["call_text"].get<std::string>(),
                                            std::move(before), std::move(after));
        if (out.trigger_input.call_text.empty()) {
            fail("trigger call_text must be non-empty");
            continue;
        }
        if (rec.contains("suite") && rec["suite"].is_array()) {
            bool bad = false;
            for (const auto& v : rec["suite"]) {
                auto t = ref_from(v);
                if (!t) {
                    bad = true;
                    break;
                }
                out.suite.push_back(std::move(*t));
            }
            if (bad) {
                fail("malformed entry in 'suite'");
                continue;
            }
        }
        result.records.push_back(std::move(out));
    }
    return result;
}

}  // namespace testsift
