#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xvars {

/// Word-level tokenizer with a closed vocabulary. Words are split on
/// whitespace; the characters . , ? ! : ; ( ) " become tokens of their own.
/// Unknown words map to <unk>.
class Tokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnknown = 1;
    static constexpr int kEndOfText = 2;

    /// Special tokens, prompt scaffolding and every canonical label and
    /// question word, followed by the sorted remaining words of `corpus`.
    static Tokenizer build(std::span<const std::string> corpus);
    static Tokenizer from_tokens(std::vector<std::string> tokens);
    static Tokenizer load(const std::filesystem::path& path);

    /// Splits text into word/punctuation pieces (the pre-tokenisation step).
    static std::vector<std::string> split(std::string_view text);

    std::vector<int> encode(std::string_view text) const;
    /// DecodeFailure on ids outside the vocabulary. <eos>/<pad> are dropped.
    std::string decode(std::span<const int> ids) const;

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(int id) const;
    int id(std::string_view token) const;

    const std::vector<std::string>& tokens() const { return tokens_; }
    void save(const std::filesystem::path& path) const;

private:
    explicit Tokenizer(std::vector<std::string> tokens);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace xvars
