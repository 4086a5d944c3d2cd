#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "testsift/core.hpp"
#include "testsift/source_model.hpp"

namespace testsift::test {

inline std::filesystem::path data_dir() { return TESTSIFT_DATA_DIR; }

/// Scratch directory removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("testsift_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

/// Builds a model directly from declarations and explicit same-container
/// call edges; handy when tests need bodies with exact character counts.
inline SourceModel make_model(std::vector<MethodDecl> methods, std::vector<CallEdge> edges) {
    std::map<std::string, std::string> files;
    for (const auto& m : methods) files.emplace(m.file, "");
    return SourceModel(std::move(methods), std::move(edges), std::move(files));
}

inline MethodDecl make_decl(std::string container, std::string name, std::string body,
                            std::size_t span_begin = 1, bool is_test = false) {
    MethodDecl d;
    d.ref = MethodRef{container, std::move(name), "()"};
    d.file = std::move(container);
    d.span_begin = span_begin;
    d.span_end = span_begin + split_lines(body).size() - 1;
    d.body_text = std::move(body);
    d.is_test = is_test;
    return d;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
    static constexpr std::string_view alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _(){};\n";
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    std::size_t n = len(rng);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out += alphabet[pick(rng)];
    return out;
}

}  // namespace testsift::test
