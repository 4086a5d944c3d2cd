#include "testsift/core.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace testsift {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ScenarioClass c) {
    switch (c) {
        case ScenarioClass::AlreadyTested: return "already-tested";
        case ScenarioClass::NeedTest: return "need-test";
        case ScenarioClass::ErrorProne: return "error-prone";
    }
    return "?";
}

std::optional<ScenarioClass> scenario_class_from_string(std::string_view s) {
    if (s == "already-tested") return ScenarioClass::AlreadyTested;
    if (s == "need-test") return ScenarioClass::NeedTest;
    if (s == "error-prone") return ScenarioClass::ErrorProne;
    return std::nullopt;
}

MethodInvocation make_invocation(std::string call_text, std::vector<std::string> context_before,
                                 std::vector<std::string> context_after) {
    MethodInvocation inv;
    inv.call_text = std::move(call_text);
    // Keep the lines nearest the call: the tail of the before-context and the
    // head of the after-context.
    if (context_before.size() > kMaxContextLines) {
        context_before.erase(context_before.begin(),
                             context_before.end() - static_cast<long>(kMaxContextLines));
    }
    if (context_after.size() > kMaxContextLines) {
        context_after.resize(kMaxContextLines);
    }
    inv.context_before = std::move(context_before);
    inv.context_after = std::move(context_after);
    return inv;
}

namespace {

const char* require_string(const ordered_json& rec, const char* field) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string()) return nullptr;
    return it->get_ptr<const std::string*>()->c_str();
}

std::optional<std::vector<std::string>> read_string_array(const ordered_json& rec,
                                                          const char* field) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_array()) return std::nullopt;
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string()) return std::nullopt;
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::optional<MethodRef> read_ref(const ordered_json& v) {
    if (!v.is_object()) return std::nullopt;
    const char* container = require_string(v, "container");
    const char* name = require_string(v, "name");
    const char* signature = require_string(v, "signature");
    if (!container || !name || !signature) return std::nullopt;
    return MethodRef{container, name, signature};
}

ordered_json ref_to_json(const MethodRef& r) {
    return ordered_json{{"container", r.container}, {"name", r.name}, {"signature", r.signature}};
}

// Parses one corpus record; returns a diagnostic message on failure.
std::optional<std::string> parse_record(const ordered_json& rec, ExecutionScenario& out) {
    if (!rec.is_object()) return "record is not an object";
    const char* id = require_string(rec, "id");
    if (!id) return "missing required field 'id'";
    out.id = id;

    const char* call_text = require_string(rec, "call_text");
    if (!call_text) return "missing required field 'call_text'";

    auto before = read_string_array(rec, "context_before");
    if (!before) return "missing required field 'context_before'";
    auto after = read_string_array(rec, "context_after");
    if (!after) return "missing required field 'context_after'";
    out.input = make_invocation(call_text, std::move(*before), std::move(*after));

    auto focal_it = rec.find("focal");
    if (focal_it == rec.end()) return "missing required field 'focal'";
    auto focal = read_ref(*focal_it);
    if (!focal) return "malformed field 'focal'";
    out.focal_ref = std::move(*focal);

    auto suite_it = rec.find("suite");
    if (suite_it == rec.end() || !suite_it->is_array()) return "missing required field 'suite'";
    out.suite_refs.clear();
    for (const auto& v : *suite_it) {
        auto ref = read_ref(v);
        if (!ref) return "malformed entry in 'suite'";
        out.suite_refs.push_back(std::move(*ref));
    }

    out.ground_truth.reset();
    if (auto gt = rec.find("ground_truth"); gt != rec.end()) {
        if (!gt->is_string()) return "malformed field 'ground_truth'";
        auto cls = scenario_class_from_string(gt->get<std::string>());
        if (!cls) return "unknown ground_truth value '" + gt->get<std::string>() + "'";
        out.ground_truth = *cls;
    }
    return std::nullopt;
}

}  // namespace

CorpusParseResult parse_corpus(std::istream& in) {
    CorpusParseResult result;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json rec = ordered_json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded()) {
            result.diagnostics.push_back({line_no, "malformed record: not valid JSON"});
            continue;
        }
        ExecutionScenario s;
        if (auto err = parse_record(rec, s)) {
            result.diagnostics.push_back({line_no, *err});
            continue;
        }
        if (std::find(seen_ids.begin(), seen_ids.end(), s.id) != seen_ids.end()) {
            result.diagnostics.push_back({line_no, "duplicate id '" + s.id + "'"});
            continue;
        }
        seen_ids.push_back(s.id);
        result.scenarios.push_back(std::move(s));
    }
    return result;
}

CorpusParseResult parse_corpus(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_corpus(in);
}

std::string serialize_scenario(const ExecutionScenario& s) {
    ordered_json rec;
    rec["id"] = s.id;
    rec["call_text"] = s.input.call_text;
    rec["context_before"] = s.input.context_before;
    rec["context_after"] = s.input.context_after;
    rec["focal"] = ref_to_json(s.focal_ref);
    ordered_json suite = ordered_json::array();
    for (const auto& t : s.suite_refs) suite.push_back(ref_to_json(t));
    rec["suite"] = std::move(suite);
    if (s.ground_truth) rec["ground_truth"] = std::string(to_string(*s.ground_truth));
    return rec.dump();
}

std::string serialize_corpus(std::span<const ExecutionScenario> scenarios) {
    std::ostringstream out;
    serialize_corpus(scenarios, out);
    return out.str();
}

void serialize_corpus(std::span<const ExecutionScenario> scenarios, std::ostream& out) {
    for (const auto& s : scenarios) out << serialize_scenario(s) << '\n';
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::string join_lines(std::span<const std::string> lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write file: " + path);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace testsift
