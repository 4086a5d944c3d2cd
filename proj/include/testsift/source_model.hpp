#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "testsift/core.hpp"

namespace testsift {

/// One declared method: where it lives and its exact source text.
struct MethodDecl {
    MethodRef ref;
    std::string file;
    std::size_t span_begin = 0;  // 1-based, inclusive
    std::size_t span_end = 0;
    std::string body_text;  // file text over [span_begin, span_end]
    bool is_test = false;
};

/// caller -> callee edge; external marks calls that resolve to no declared
/// method (library calls, constructors, typos).
struct CallEdge {
    MethodRef caller;
    MethodRef callee;
    bool external = false;

    bool operator==(const CallEdge&) const = default;
};

struct AdapterDiagnostic {
    std::string file;
    std::size_t line = 0;
    std::string message;
};

/// Immutable language-agnostic view of a codebase: declarations, call edges
/// and raw file texts. Produced by a language adapter.
class SourceModel {
public:
    SourceModel() = default;
    SourceModel(std::vector<MethodDecl> methods, std::vector<CallEdge> edges,
                std::map<std::string, std::string> files);

    const std::vector<MethodDecl>& methods() const { return methods_; }
    const std::vector<CallEdge>& call_edges() const { return edges_; }
    const std::map<std::string, std::string>& files() const { return files_; }

    /// nullptr when the ref does not resolve.
    const MethodDecl* find(const MethodRef& ref) const;
    /// Throws LookupError when the ref does not resolve.
    const MethodDecl& resolve(const MethodRef& ref) const;

private:
    std::vector<MethodDecl> methods_;
    std::vector<CallEdge> edges_;
    std::map<std::string, std::string> files_;
    std::map<MethodRef, std::size_t> index_;
};

struct AdaptResult {
    SourceModel model;
    std::vector<AdapterDiagnostic> diagnostics;
};

/// Reference adapter for a minimal brace-delimited language:
///   name(param, param) { body }
/// with `//` line comments and an `@test` marker line immediately above a
/// declaration. The container of a declaration is its file id. Calls are
/// resolved by name within the file first, then across files; all matching
/// candidates get an edge; unmatched calls become external edges. Files with
/// unbalanced braces contribute no methods and yield a diagnostic.
AdaptResult adapt_brace_language(const std::map<std::string, std::string>& files);

/// Reads every regular file under root (file id = relative path, '/'
/// separators) and adapts it.
AdaptResult adapt_directory(const std::filesystem::path& root);

/// Methods from which target is reachable along <= depth call edges.
/// Cycle-safe (visited-set bounded). Throws LookupError for unknown targets.
std::set<MethodRef> callers_within(const SourceModel& model, const MethodRef& target,
                                   std::size_t depth);

/// Callees at edge distance exactly 1 that share the focal method's
/// container, in declaration order, deduplicated.
std::vector<MethodDecl> direct_same_container_callees(const SourceModel& model,
                                                      const MethodRef& m);

/// Identifiers followed by an argument list inside a body, excluding control
/// keywords, comments and string literals. Shared by the adapter and the
/// mock toolchain's name resolution.
std::vector<std::string> call_identifiers(std::string_view body_text);

}  // namespace testsift
