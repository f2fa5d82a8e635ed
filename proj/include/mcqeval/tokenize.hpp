#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcqeval {

enum class TokenizerKind { chars, whitespace };

const char* tokenizer_name(TokenizerKind k);
std::optional<TokenizerKind> tokenizer_from_name(std::string_view name);

/// A token sequence with per-token UTF-8 byte lengths. Concatenating the
/// tokens reproduces the source string for both shipped tokenizers.
struct TokenizedSequence {
    std::vector<std::string> tokens;
    std::vector<int> byte_lengths;
    int total_chars = 0; // Unicode scalars in the source text

    std::string text() const;
    void append(std::string_view token);
    bool empty() const { return tokens.empty(); }
    std::size_t size() const { return tokens.size(); }
};

// chars: one token per Unicode scalar. whitespace: maximal non-space runs,
// each with its preceding whitespace run attached, so "A. ok" becomes
// ["A.", " ok"]; trailing whitespace with no following run is its own token.
TokenizedSequence tokenize(std::string_view text, TokenizerKind kind);

} // namespace mcqeval
