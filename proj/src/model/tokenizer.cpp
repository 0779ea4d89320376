#include "xvars/model/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "xvars/common/error.hpp"
#include "xvars/model/labels.hpp"

namespace xvars {
namespace {

constexpr std::string_view kSplitPunctuation = ".,?!:;()\"";
constexpr std::string_view kNoSpaceBefore = ".,?!:;)";

const std::vector<std::string>& base_vocabulary() {
    static const std::vector<std::string> base = [] {
        std::vector<std::string> v = {"<pad>", "<unk>", "<eos>", "USER", "Assistant"};
        for (char c : kSplitPunctuation) v.emplace_back(1, c);
        v.emplace_back("+");
        auto add_words = [&](std::string_view text) {
            for (auto& w : Tokenizer::split(text)) {
                if (std::find(v.begin(), v.end(), w) == v.end()) v.push_back(w);
            }
        };
        for (auto name : kFoulTypeNames) add_words(name);
        for (auto name : kSeverityNames) add_words(name);
        add_words("Is it a foul or not? Why?");
        add_words("What card would you give? Why?");
        add_words("Did the defender stop a promising attack or a goal-scoring opportunity?");
        add_words("Could the referee have given an advantage?");
        return v;
    }();
    return base;
}

}  // namespace

Tokenizer::Tokenizer(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
            fail(ErrorCode::InvalidArgument, "tokenizer: duplicate token '" + tokens_[i] + "'");
        }
    }
    if (tokens_.size() < 3 || tokens_[kPad] != "<pad>" || tokens_[kUnknown] != "<unk>" ||
        tokens_[kEndOfText] != "<eos>") {
        fail(ErrorCode::InvalidArgument, "tokenizer: vocabulary must start with <pad>, <unk>, <eos>");
    }
}

std::vector<std::string> Tokenizer::split(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(std::move(word));
            word.clear();
        }
    };
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            flush();
        } else if (kSplitPunctuation.find(c) != std::string_view::npos) {
            flush();
            out.emplace_back(1, c);
        } else {
            word.push_back(c);
        }
    }
    flush();
    return out;
}

Tokenizer Tokenizer::build(std::span<const std::string> corpus) {
    std::vector<std::string> tokens = base_vocabulary();
    std::set<std::string> known(tokens.begin(), tokens.end());
    std::set<std::string> extra;
    for (const auto& text : corpus) {
        for (auto& w : split(text)) {
            if (!known.count(w)) extra.insert(std::move(w));
        }
    }
    tokens.insert(tokens.end(), extra.begin(), extra.end());
    return Tokenizer(std::move(tokens));
}

Tokenizer Tokenizer::from_tokens(std::vector<std::string> tokens) { return Tokenizer(std::move(tokens)); }

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::MissingFile, "missing vocabulary file " + path.string());
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        tokens.push_back(line);
    }
    return Tokenizer(std::move(tokens));
}

void Tokenizer::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write " + path.string());
    }
    for (const auto& t : tokens_) {
        out << t << '\n';
    }
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
    std::vector<int> ids;
    for (const auto& w : split(text)) {
        ids.push_back(id(w));
    }
    return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
    std::string out;
    bool glue_next = true;
    for (int id : ids) {
        if (id < 0 || id >= size()) {
            fail(ErrorCode::DecodeFailure, "token id " + std::to_string(id) + " outside vocabulary of " +
                                               std::to_string(size()));
        }
        if (id == kEndOfText || id == kPad) {
            continue;
        }
        const auto& piece = tokens_[static_cast<std::size_t>(id)];
        const bool no_space = piece.size() == 1 && kNoSpaceBefore.find(piece[0]) != std::string_view::npos;
        if (!glue_next && !no_space) {
            out.push_back(' ');
        }
        out += piece;
        glue_next = piece == "(";
    }
    return out;
}

const std::string& Tokenizer::token(int id) const {
    if (id < 0 || id >= size()) {
        fail(ErrorCode::DecodeFailure, "token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

int Tokenizer::id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnknown : it->second;
}

}  // namespace xvars
