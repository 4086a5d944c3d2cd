#include "testsift/rag.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace testsift {

TrigramEmbeddingBackend::TrigramEmbeddingBackend(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::vector<double> TrigramEmbeddingBackend::embed(std::string_view text) const {
    std::vector<double> v(dimension_, 0.0);
    if (text.empty()) return v;
    if (text.size() < 3) {
        v[fnv1a64(text) % dimension_] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
            v[fnv1a64(text.substr(i, 3)) % dimension_] += 1.0;
        }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

std::vector<CodeChunk> chunk_model(const SourceModel& model, std::size_t chunk_lines) {
    if (chunk_lines == 0) throw ConfigError("chunk budget must be positive");
    std::vector<CodeChunk> chunks;
    for (const auto& decl : model.methods()) {
        ChunkKind kind = decl.is_test ? ChunkKind::Test : ChunkKind::Source;
        auto lines = split_lines(decl.body_text);
        for (std::size_t offset = 0; offset < lines.size(); offset += chunk_lines) {
            std::size_t n = std::min(chunk_lines, lines.size() - offset);
            std::span<const std::string> slice(lines.data() + offset, n);
            CodeChunk chunk;
            chunk.file = decl.file;
            chunk.span_begin = decl.span_begin + offset;
            chunk.span_end = decl.span_begin + offset + n - 1;
            chunk.text = join_lines(slice);
            chunk.kind = kind;
            chunks.push_back(std::move(chunk));
        }
    }
    return chunks;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error("cosine similarity: dimension mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error("cosine similarity undefined for a zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

VectorIndex build_index(std::span<const CodeChunk> chunks, const EmbeddingBackend& backend) {
    VectorIndex index;
    index.dimension = backend.dimension();
    index.entries.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        index.entries.emplace_back(chunk, backend.embed(chunk.text));
    }
    return index;
}

std::vector<ScoredChunk> retrieve_top_k(const VectorIndex& index, std::string_view query_text,
                                        std::size_t k, const EmbeddingBackend& backend) {
    if (index.entries.empty() || k == 0) return {};
    if (backend.dimension() != index.dimension) {
        throw ConfigError("index dimension does not match the embedding backend");
    }
    std::vector<double> query = backend.embed(query_text);
    std::vector<ScoredChunk> scored;
    scored.reserve(index.entries.size());
    for (const auto& [chunk, vec] : index.entries) {
        scored.push_back({chunk, cosine_similarity(query, vec)});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.chunk.file, a.chunk.span_begin) <
               std::tie(b.chunk.file, b.chunk.span_begin);
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

namespace {

struct RebudgetResult {
    std::string text;
    std::size_t tokens = 0;
    bool truncated = false;
};

RebudgetResult append_chunks(const std::string& base, const std::vector<ScoredChunk>& retrieved,
                             ChunkKind kind, const Tokenizer& tok, std::size_t cap) {
    std::string text = base;
    for (const auto& sc : retrieved) {
        if (sc.chunk.kind != kind) continue;
        if (text.find(sc.chunk.text) != std::string::npos) continue;
        if (!text.empty()) text += "\n\n";
        text += sc.chunk.text;
    }
    RebudgetResult out;
    if (tok.count(text) > cap) {
        out.truncated = true;
        text = truncate_to_budget(text, tok, cap);
    }
    out.tokens = tok.count(text);
    out.text = std::move(text);
    return out;
}

}  // namespace

PromptIngredients augment_ingredients(const PromptIngredients& ing, const VectorIndex& index,
                                      std::size_t k, const EmbeddingBackend& backend,
                                      const Tokenizer& tok, const TokenBudget& budget) {
    if (index.entries.empty()) return ing;
    std::string query = ing.mut_text + "\n" + ing.tests_text + "\n" + ing.input_text;
    // Pull enough candidates that each kind can still fill k entries.
    std::vector<ScoredChunk> retrieved =
        retrieve_top_k(index, query, index.entries.size(), backend);
    std::array<std::size_t, 2> kept{};
    std::vector<ScoredChunk> limited;
    for (auto& sc : retrieved) {
        std::size_t slot = sc.chunk.kind == ChunkKind::Source ? 0 : 1;
        if (kept[slot] < k) {
            ++kept[slot];
            limited.push_back(std::move(sc));
        }
    }

    PromptIngredients out = ing;
    RebudgetResult mut = append_chunks(ing.mut_text, limited, ChunkKind::Source, tok,
                                       budget.mut_max);
    out.mut_text = std::move(mut.text);
    out.mut_tokens = mut.tokens;
    if (mut.truncated) out.truncated.insert(Section::Mut);

    RebudgetResult tests = append_chunks(ing.tests_text, limited, ChunkKind::Test, tok,
                                         budget.tests_max);
    out.tests_text = std::move(tests.text);
    out.tests_tokens = tests.tokens;
    if (tests.truncated) out.truncated.insert(Section::Tests);
    return out;
}

namespace {

constexpr char kIndexMagic[4] = {'T', 'S', 'I', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    return value;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    auto n = read_pod<std::uint64_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write index file: " + path.string());
        out.write(kIndexMagic, sizeof(kIndexMagic));
        write_pod<std::uint32_t>(out, kIndexVersion);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(index.dimension));
        write_pod<std::uint64_t>(out, index.entries.size());
        for (const auto& [chunk, vec] : index.entries) {
            write_string(out, chunk.file);
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(chunk.span_begin));
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(chunk.span_end));
            write_pod<std::uint8_t>(out, chunk.kind == ChunkKind::Test ? 1 : 0);
            write_string(out, chunk.text);
            for (double x : vec) write_pod<double>(out, x);
        }
    }
    std::filesystem::rename(tmp, path);
}

VectorIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read index file: " + path.string());
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
        throw InputError("not an index file: " + path.string());
    }
    auto version = read_pod<std::uint32_t>(in);
    if (version != kIndexVersion) {
        throw InputError("unsupported index version " + std::to_string(version));
    }
    VectorIndex index;
    index.dimension = read_pod<std::uint32_t>(in);
    auto count = read_pod<std::uint64_t>(in);
    index.entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        CodeChunk chunk;
        chunk.file = read_string(in);
        chunk.span_begin = read_pod<std::uint32_t>(in);
        chunk.span_end = read_pod<std::uint32_t>(in);
        chunk.kind = read_pod<std::uint8_t>(in) ? ChunkKind::Test : ChunkKind::Source;
        chunk.text = read_string(in);
        std::vector<double> vec(index.dimension);
        for (auto& x : vec) x = read_pod<double>(in);
        if (!in) throw InputError("truncated index file: " + path.string());
        index.entries.emplace_back(std::move(chunk), std::move(vec));
    }
    return index;
}

}  // namespace testsift
