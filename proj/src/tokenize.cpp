#include "mcqeval/tokenize.hpp"

#include <cctype>

#include "mcqeval/text.hpp"

namespace mcqeval {

const char* tokenizer_name(TokenizerKind k) {
    return k == TokenizerKind::chars ? "char" : "whitespace";
}

std::optional<TokenizerKind> tokenizer_from_name(std::string_view name) {
    if (name == "char") return TokenizerKind::chars;
    if (name == "whitespace") return TokenizerKind::whitespace;
    return std::nullopt;
}

std::string TokenizedSequence::text() const {
    std::string out;
    for (const auto& t : tokens) out += t;
    return out;
}

void TokenizedSequence::append(std::string_view token) {
    tokens.emplace_back(token);
    byte_lengths.push_back(static_cast<int>(token.size()));
    total_chars += static_cast<int>(utf8_scalar_count(token));
}

namespace {

bool is_space_byte(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

} // namespace

TokenizedSequence tokenize(std::string_view text, TokenizerKind kind) {
    TokenizedSequence seq;
    seq.total_chars = static_cast<int>(utf8_scalar_count(text));
    if (kind == TokenizerKind::chars) {
        for (auto& scalar : utf8_scalars(text)) {
            seq.byte_lengths.push_back(static_cast<int>(scalar.size()));
            seq.tokens.push_back(std::move(scalar));
        }
        return seq;
    }
    // whitespace: [space run][non-space run] pairs; a trailing space run with
    // nothing after it stands alone so the round-trip stays exact.
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        while (i < text.size() && is_space_byte(text[i])) ++i;
        while (i < text.size() && !is_space_byte(text[i])) ++i;
        const auto tok = text.substr(start, i - start);
        seq.tokens.emplace_back(tok);
        seq.byte_lengths.push_back(static_cast<int>(tok.size()));
    }
    return seq;
}

} // namespace mcqeval
