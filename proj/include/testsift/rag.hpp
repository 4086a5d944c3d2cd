#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "testsift/extractor.hpp"
#include "testsift/source_model.hpp"

namespace testsift {

enum class ChunkKind { Source, Test };

struct CodeChunk {
    std::string file;
    std::size_t span_begin = 0;
    std::size_t span_end = 0;
    std::string text;
    ChunkKind kind = ChunkKind::Source;

    bool operator==(const CodeChunk&) const = default;
};

/// Deterministic text-to-vector embedding with a fixed dimension.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Offline embedding: L2-normalized character-trigram frequencies hashed into
/// a fixed dimension. Deterministic across runs and platforms.
class TrigramEmbeddingBackend final : public EmbeddingBackend {
public:
    explicit TrigramEmbeddingBackend(std::size_t dimension = 256);
    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
};

struct VectorIndex {
    std::size_t dimension = 0;
    std::vector<std::pair<CodeChunk, std::vector<double>>> entries;
};

/// One chunk per method declaration (kind follows is_test); bodies longer
/// than chunk_lines are split at line boundaries into consecutive chunks.
std::vector<CodeChunk> chunk_model(const SourceModel& model, std::size_t chunk_lines = 120);

/// dot(a,b) / (|a| * |b|). Throws Error on dimension mismatch or a zero
/// vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

VectorIndex build_index(std::span<const CodeChunk> chunks, const EmbeddingBackend& backend);

struct ScoredChunk {
    CodeChunk chunk;
    double score = 0.0;
};

/// Top-k entries by non-increasing score; ties broken by (file, span begin)
/// ascending. Fewer than k when the index is smaller; empty index gives an
/// empty result.
std::vector<ScoredChunk> retrieve_top_k(const VectorIndex& index, std::string_view query_text,
                                        std::size_t k, const EmbeddingBackend& backend);

/// Appends retrieved Source chunks to the MUT section and Test chunks to the
/// tests section (skipping chunks already present verbatim), then re-applies
/// the section budgets.
PromptIngredients augment_ingredients(const PromptIngredients& ing, const VectorIndex& index,
                                      std::size_t k, const EmbeddingBackend& backend,
                                      const Tokenizer& tok, const TokenBudget& budget);

/// Flat binary index file: header (magic, version, dimension, count) then
/// per-entry metadata + vector. Stable for byte-identical rebuilds.
void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace testsift
