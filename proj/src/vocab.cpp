#include "rgenima/vocab.hpp"

#include "rgenima/error.hpp"
#include "rgenima/genome.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

Vocab::Vocab() {
    for (const char* w : {"<PAD>", "<BOS>", "<EOS>", "<IMG>"}) add(w);
}

TokenId Vocab::add(std::string_view word) {
    auto [it, inserted] = ids_.emplace(std::string(word), static_cast<TokenId>(words_.size()));
    if (inserted) words_.emplace_back(word);
    return it->second;
}

Vocab Vocab::from_corpus(const std::vector<std::string>& lines) {
    Vocab v;
    for (const auto& line : lines) {
        for (const auto& w : split(line, ' ')) {
            if (!w.empty()) v.add(w);
        }
    }
    return v;
}

TokenId Vocab::id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    if (it == ids_.end()) throw Error(Errc::UnknownToken, "'" + std::string(word) + "'");
    return it->second;
}

TokenSequence Vocab::encode_words(std::string_view text) const {
    TokenSequence out;
    for (const auto& w : split(text, ' ')) {
        if (!w.empty()) out.push_back(id(w));
    }
    return out;
}

TokenSequence Vocab::tokenize(std::string_view text) const {
    TokenSequence out = encode_words(text);
    out.push_back(kEos);
    return out;
}

std::string Vocab::detokenize(const TokenSequence& ids) const {
    std::string out;
    std::size_t n = ids.size();
    if (n > 0 && ids[n - 1] == kEos) --n;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += ' ';
        out += word(ids[i]);
    }
    return out;
}

void Vocab::save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& w : words_) out += w + "\n";
    detail::write_file(path, out);
}

Vocab Vocab::load(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() < 4 || lines[0] != "<PAD>" || lines[1] != "<BOS>" || lines[2] != "<EOS>" || lines[3] != "<IMG>") {
        throw Error(Errc::Parse, path.string() + ": reserved tokens missing");
    }
    Vocab v;
    for (std::size_t i = 4; i < lines.size(); ++i) {
        if (v.add(lines[i]) != i) throw Error(Errc::Parse, path.string() + ": duplicate token " + lines[i]);
    }
    return v;
}

std::vector<std::string> corpus_lines_for_panel(const std::vector<std::string>& genes,
                                                const std::vector<std::string>& snps) {
    std::vector<std::string> lines;
    lines.push_back(build_prompt("GENE", true, "NC").text);
    for (Stage s : {Stage::NC, Stage::SMC, Stage::MCI, Stage::AD}) lines.push_back(target_text(stage_name(s)));
    lines.push_back("GENE : = ; | 0 1 2");
    std::string g;
    for (const auto& name : genes) g += name + " ";
    lines.push_back(g);
    std::string s;
    for (const auto& id : snps) s += id + " ";
    lines.push_back(s);
    return lines;
}

}  // namespace rgenima
