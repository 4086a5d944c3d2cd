#include "testsift/tokenizer.hpp"

#include "testsift/core.hpp"

namespace testsift {

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name) {
    if (name == "approx") return std::make_unique<ApproxTokenizer>();
    if (name == "char") return std::make_unique<CharTokenizer>();
    throw ConfigError("unknown tokenizer: " + std::string(name));
}

std::string truncate_to_budget(std::string_view text, const Tokenizer& tok, std::size_t budget) {
    if (tok.count(text) <= budget) return std::string(text);
    std::size_t lo = 0, hi = text.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (tok.count(text.substr(0, mid)) <= budget) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return std::string(text.substr(0, lo));
}

}  // namespace testsift
