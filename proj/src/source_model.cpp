#include "testsift/source_model.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>

namespace testsift {

namespace {

struct Token {
    enum Kind { Ident, Number, Punct } kind;
    std::string text;
    std::size_t line;  // 1-based
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Lexes the mini language: identifiers, numbers and single-char punctuation,
// skipping `//` comments and double-quoted string literals.
std::vector<Token> lex(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size();) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (c == '"') {
            ++i;
            while (i < text.size() && text[i] != '"') {
                if (text[i] == '\\' && i + 1 < text.size()) ++i;
                if (text[i] == '\n') ++line;
                ++i;
            }
            if (i < text.size()) ++i;  // closing quote
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (is_ident_start(c)) {
            std::size_t start = i;
            while (i < text.size() && is_ident_char(text[i])) ++i;
            tokens.push_back({Token::Ident, std::string(text.substr(start, i - start)), line});
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            tokens.push_back({Token::Number, std::string(text.substr(start, i - start)), line});
        } else {
            tokens.push_back({Token::Punct, std::string(1, c), line});
            ++i;
        }
    }
    return tokens;
}

const std::set<std::string>& control_keywords() {
    static const std::set<std::string> kw = {"if",     "else", "while", "for",   "do",
                                             "switch", "case", "return", "assert"};
    return kw;
}

struct RawDecl {
    std::string name;
    std::vector<std::string> params;
    std::size_t header_line = 0;
    std::size_t end_line = 0;
    bool is_test = false;
    std::vector<std::string> calls;  // identifiers in occurrence order
};

std::string make_signature(const std::vector<std::string>& params) {
    std::string sig = "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) sig += ",";
        sig += params[i];
    }
    sig += ")";
    return sig;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Checks brace balance; returns the offending line on failure.
std::optional<std::size_t> unbalanced_brace_line(const std::vector<Token>& tokens) {
    std::vector<std::size_t> open_lines;
    for (const auto& t : tokens) {
        if (t.kind != Token::Punct) continue;
        if (t.text == "{") {
            open_lines.push_back(t.line);
        } else if (t.text == "}") {
            if (open_lines.empty()) return t.line;
            open_lines.pop_back();
        }
    }
    if (!open_lines.empty()) return open_lines.back();
    return std::nullopt;
}

// Parses top-level declarations out of a lexed file. Assumes balanced braces.
std::vector<RawDecl> parse_decls(const std::vector<Token>& tokens,
                                 const std::vector<std::string>& raw_lines) {
    std::vector<RawDecl> decls;
    std::size_t depth = 0;
    for (std::size_t i = 0; i < tokens.size();) {
        const Token& t = tokens[i];
        if (t.kind == Token::Punct && t.text == "{") {
            ++depth;
            ++i;
            continue;
        }
        if (t.kind == Token::Punct && t.text == "}") {
            if (depth) --depth;
            ++i;
            continue;
        }
        if (depth != 0 || t.kind != Token::Ident || i + 1 >= tokens.size() ||
            tokens[i + 1].text != "(") {
            ++i;
            continue;
        }
        // Candidate header: ident ( ident, ident, ... ) {
        std::size_t j = i + 2;
        std::vector<std::string> params;
        bool ok = true;
        while (j < tokens.size() && tokens[j].text != ")") {
            if (tokens[j].kind == Token::Ident) {
                params.push_back(tokens[j].text);
            } else if (tokens[j].text != ",") {
                ok = false;
                break;
            }
            ++j;
        }
        if (!ok || j + 1 >= tokens.size() || tokens[j + 1].text != "{") {
            ++i;
            continue;
        }

        RawDecl decl;
        decl.name = t.text;
        decl.params = std::move(params);
        decl.header_line = t.line;

        // Walk the body, collecting call identifiers.
        std::size_t body_depth = 1;
        std::size_t k = j + 2;
        for (; k < tokens.size() && body_depth > 0; ++k) {
            const Token& bt = tokens[k];
            if (bt.kind == Token::Punct && bt.text == "{") {
                ++body_depth;
            } else if (bt.kind == Token::Punct && bt.text == "}") {
                --body_depth;
                if (body_depth == 0) decl.end_line = bt.line;
            } else if (bt.kind == Token::Ident && k + 1 < tokens.size() &&
                       tokens[k + 1].text == "(" && !control_keywords().count(bt.text)) {
                decl.calls.push_back(bt.text);
            }
        }

        // The nearest non-blank line above the header marks a test.
        for (std::size_t ln = decl.header_line; ln > 1;) {
            --ln;
            std::string above = trim(raw_lines[ln - 1]);
            if (above.empty()) continue;
            decl.is_test = (above == "@test");
            break;
        }

        decls.push_back(std::move(decl));
        i = k;
    }
    return decls;
}

}  // namespace

SourceModel::SourceModel(std::vector<MethodDecl> methods, std::vector<CallEdge> edges,
                         std::map<std::string, std::string> files)
    : methods_(std::move(methods)), edges_(std::move(edges)), files_(std::move(files)) {
    for (std::size_t i = 0; i < methods_.size(); ++i) {
        index_.emplace(methods_[i].ref, i);
    }
}

const MethodDecl* SourceModel::find(const MethodRef& ref) const {
    auto it = index_.find(ref);
    return it == index_.end() ? nullptr : &methods_[it->second];
}

const MethodDecl& SourceModel::resolve(const MethodRef& ref) const {
    const MethodDecl* decl = find(ref);
    if (!decl) {
        throw LookupError("unresolved method: " + ref.container + "::" + ref.name +
                          ref.signature);
    }
    return *decl;
}

std::vector<std::string> call_identifiers(std::string_view body_text) {
    std::vector<std::string> out;
    auto tokens = lex(body_text);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i].kind == Token::Ident && tokens[i + 1].text == "(" &&
            !control_keywords().count(tokens[i].text)) {
            out.push_back(tokens[i].text);
        }
    }
    return out;
}

AdaptResult adapt_brace_language(const std::map<std::string, std::string>& files) {
    AdaptResult result;
    std::vector<MethodDecl> methods;
    std::vector<AdapterDiagnostic> diags;
    struct PendingCalls {
        MethodRef caller;
        std::vector<std::string> names;
    };
    std::vector<PendingCalls> pending;

    for (const auto& [file_id, text] : files) {
        auto tokens = lex(text);
        if (auto bad_line = unbalanced_brace_line(tokens)) {
            diags.push_back({file_id, *bad_line, "unbalanced braces"});
            continue;
        }
        auto raw_lines = split_lines(text);
        for (auto& raw : parse_decls(tokens, raw_lines)) {
            MethodDecl decl;
            decl.ref = MethodRef{file_id, raw.name, make_signature(raw.params)};
            decl.file = file_id;
            decl.span_begin = raw.header_line;
            decl.span_end = raw.end_line;
            decl.is_test = raw.is_test;
            std::vector<std::string> span(raw_lines.begin() + (raw.header_line - 1),
                                          raw_lines.begin() + raw.end_line);
            decl.body_text = join_lines(span);
            bool duplicate = std::any_of(methods.begin(), methods.end(), [&](const MethodDecl& m) {
                return m.ref == decl.ref;
            });
            if (duplicate) {
                diags.push_back({file_id, raw.header_line,
                                 "duplicate declaration '" + raw.name + "'"});
                continue;
            }
            pending.push_back({decl.ref, std::move(raw.calls)});
            methods.push_back(std::move(decl));
        }
    }

    // Resolve calls: by name within the file first, then across files; all
    // candidates get an edge, anything else is external.
    std::map<std::string, std::vector<std::size_t>> by_name;
    for (std::size_t i = 0; i < methods.size(); ++i) by_name[methods[i].ref.name].push_back(i);

    std::vector<CallEdge> edges;
    for (const auto& p : pending) {
        std::set<std::pair<MethodRef, bool>> seen;
        for (const auto& name : p.names) {
            std::vector<const MethodDecl*> candidates;
            if (auto it = by_name.find(name); it != by_name.end()) {
                for (std::size_t idx : it->second) {
                    if (methods[idx].file == p.caller.container) candidates.push_back(&methods[idx]);
                }
                if (candidates.empty()) {
                    for (std::size_t idx : it->second) candidates.push_back(&methods[idx]);
                }
            }
            if (candidates.empty()) {
                CallEdge edge{p.caller, MethodRef{"", name, ""}, true};
                if (seen.emplace(edge.callee, true).second) edges.push_back(std::move(edge));
                continue;
            }
            for (const MethodDecl* target : candidates) {
                if (seen.emplace(target->ref, false).second) {
                    edges.push_back({p.caller, target->ref, false});
                }
            }
        }
    }

    result.model = SourceModel(std::move(methods), std::move(edges),
                               std::map<std::string, std::string>(files));
    result.diagnostics = std::move(diags);
    return result;
}

AdaptResult adapt_directory(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::exists(root)) throw InputError("source root does not exist: " + root.string());
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), root).generic_string();
        files[rel] = read_file(entry.path().string());
    }
    return adapt_brace_language(files);
}

std::set<MethodRef> callers_within(const SourceModel& model, const MethodRef& target,
                                   std::size_t depth) {
    model.resolve(target);
    std::map<MethodRef, std::vector<MethodRef>> reverse;
    for (const auto& e : model.call_edges()) {
        if (!e.external) reverse[e.callee].push_back(e.caller);
    }
    std::set<MethodRef> visited{target};
    std::set<MethodRef> result;
    std::deque<std::pair<MethodRef, std::size_t>> queue{{target, 0}};
    while (!queue.empty()) {
        auto [node, dist] = queue.front();
        queue.pop_front();
        if (dist == depth) continue;
        auto it = reverse.find(node);
        if (it == reverse.end()) continue;
        for (const auto& caller : it->second) {
            if (visited.insert(caller).second) {
                result.insert(caller);
                queue.emplace_back(caller, dist + 1);
            }
        }
    }
    return result;
}

std::vector<MethodDecl> direct_same_container_callees(const SourceModel& model,
                                                      const MethodRef& m) {
    const MethodDecl& decl = model.resolve(m);
    std::vector<MethodDecl> out;
    std::set<MethodRef> seen;
    for (const auto& e : model.call_edges()) {
        if (e.external || e.caller != m) continue;
        if (e.callee.container != decl.ref.container) continue;
        if (e.callee == m) continue;
        if (!seen.insert(e.callee).second) continue;
        if (const MethodDecl* callee = model.find(e.callee)) out.push_back(*callee);
    }
    std::sort(out.begin(), out.end(), [](const MethodDecl& a, const MethodDecl& b) {
        return std::tie(a.file, a.span_begin) < std::tie(b.file, b.span_begin);
    });
    return out;
}

}  // namespace testsift
