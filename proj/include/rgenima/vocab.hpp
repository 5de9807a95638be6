#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rgenima {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kImg = 3;

/// Closed word-level vocabulary; ids 0-3 are <PAD> <BOS> <EOS> <IMG>.
class Vocab {
public:
    Vocab();
    /// Reserved tokens, then first-seen order of whitespace-delimited words.
    static Vocab from_corpus(const std::vector<std::string>& lines);

    TokenId add(std::string_view word);
    std::size_t size() const { return words_.size(); }
    const std::string& word(TokenId id) const { return words_.at(id); }
    bool contains(std::string_view word) const { return ids_.contains(std::string(word)); }
    TokenId id(std::string_view word) const;  // throws UnknownToken

    /// Word ids followed by <EOS>.
    TokenSequence tokenize(std::string_view text) const;
    /// Word ids only.
    TokenSequence encode_words(std::string_view text) const;
    /// Space-joined words; a trailing <EOS> is dropped.
    std::string detokenize(const TokenSequence& ids) const;

    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> ids_;
};

/// Every word the prompt grammar can emit for this panel: template words,
/// labels, gene names, SNP ids, genotype digits and punctuation.
std::vector<std::string> corpus_lines_for_panel(const std::vector<std::string>& genes,
                                                const std::vector<std::string>& snps);

}  // namespace rgenima
