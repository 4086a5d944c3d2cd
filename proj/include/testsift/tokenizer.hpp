#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace testsift {

/// Token counting abstraction. Implementations must be monotone in prefix
/// length and satisfy count("") == 0 and
/// count(a + b) <= count(a) + count(b) + 1.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string_view name() const = 0;
};

/// Default model-agnostic approximation: ceil(characters / 4).
class ApproxTokenizer final : public Tokenizer {
public:
    std::size_t count(std::string_view text) const override { return (text.size() + 3) / 4; }
    std::string_view name() const override { return "approx"; }
};

/// One token per character; handy for tests with exact token arithmetic.
class CharTokenizer final : public Tokenizer {
public:
    std::size_t count(std::string_view text) const override { return text.size(); }
    std::string_view name() const override { return "char"; }
};

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name);

/// Longest prefix of text whose token count fits the budget (binary search
/// over the monotone count).
std::string truncate_to_budget(std::string_view text, const Tokenizer& tok, std::size_t budget);

}  // namespace testsift
