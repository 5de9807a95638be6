#include "rgenima/genome.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "rgenima/error.hpp"
#include "rgenima/rng.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::NC: return "NC";
        case Stage::SMC: return "SMC";
        case Stage::MCI: return "MCI";
        case Stage::AD: return "AD";
    }
    return "?";
}

std::optional<Stage> try_parse_stage(std::string_view s) {
    if (s == "NC") return Stage::NC;
    if (s == "SMC") return Stage::SMC;
    if (s == "MCI") return Stage::MCI;
    if (s == "AD") return Stage::AD;
    return std::nullopt;
}

Stage parse_stage(std::string_view s) {
    auto st = try_parse_stage(s);
    if (!st) throw Error(Errc::UnknownStage, "'" + std::string(s) + "'");
    return *st;
}

GenePanel::GenePanel(std::vector<Gene> genes) : genes_(std::move(genes)) {
    std::unordered_set<std::string> names, snps;
    for (const auto& g : genes_) {
        if (!names.insert(g.name).second) throw Error(Errc::Parse, "duplicate gene " + g.name);
        for (const auto& s : g.snps) {
            if (!snps.insert(s).second) throw Error(Errc::Parse, "duplicate snp " + s);
        }
    }
}

std::vector<std::string> GenePanel::gene_names() const {
    std::vector<std::string> out;
    for (const auto& g : genes_) out.push_back(g.name);
    return out;
}

std::size_t GenePanel::total_snps() const {
    std::size_t n = 0;
    for (const auto& g : genes_) n += g.snps.size();
    return n;
}

long GenePanel::index_of(std::string_view gene) const {
    for (std::size_t i = 0; i < genes_.size(); ++i) {
        if (genes_[i].name == gene) return static_cast<long>(i);
    }
    return -1;
}

std::vector<Genotype> GenotypeMatrix::column(std::size_t c) const {
    std::vector<Genotype> out(n_subjects());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = at(s, c);
    return out;
}

void GenotypeMatrix::set_column(std::size_t c, std::span<const Genotype> values) {
    for (std::size_t s = 0; s < n_subjects(); ++s) at(s, c) = values[s];
}

void GenotypeMatrix::validate(const GenePanel& panel) const {
    if (stages.size() != subjects.size()) throw Error(Errc::ShapeMismatch, "stage count != subject count");
    if (cells.size() != subjects.size() * columns.size()) throw Error(Errc::ShapeMismatch, "cell count");
    if (columns.size() != panel.total_snps()) throw Error(Errc::ShapeMismatch, "column count != panel SNPs");
    std::size_t c = 0;
    for (const auto& g : panel.genes()) {
        for (const auto& s : g.snps) {
            if (columns[c].gene != g.name || columns[c].snp_id != s) {
                throw Error(Errc::ShapeMismatch, "column " + std::to_string(c) + " is not " + g.name + ":" + s);
            }
            ++c;
        }
    }
    for (Genotype v : cells) {
        if (v != kMissing && (v < 0 || v > 2)) throw Error(Errc::Parse, "genotype outside {0,1,2,NA}");
    }
}

GenePanel panel_from_columns(const std::vector<SnpColumn>& columns) {
    std::vector<Gene> genes;
    for (const auto& c : columns) {
        if (genes.empty() || genes.back().name != c.gene) genes.push_back({c.gene, {}});
        genes.back().snps.push_back(c.snp_id);
    }
    return GenePanel(std::move(genes));
}

void QcThresholds::validate() const {
    auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_open_unit(missingness_max) || !in_open_unit(maf_min) || !in_open_unit(hwe_p_min)) {
        throw Error(Errc::Config, "qc thresholds must lie in (0,1)");
    }
}

const char* qc_reason_name(QcReason r) {
    switch (r) {
        case QcReason::Missingness: return "missingness";
        case QcReason::Maf: return "maf";
        case QcReason::Hwe: return "hwe";
    }
    return "?";
}

double column_missingness(std::span<const Genotype> col) {
    if (col.empty()) throw Error(Errc::EmptyColumn, "missingness of empty column");
    const auto missing = std::count(col.begin(), col.end(), kMissing);
    return static_cast<double>(missing) / static_cast<double>(col.size());
}

namespace {

// Alternate-allele frequency over called genotypes; {freq, called count}.
std::pair<double, std::size_t> alt_frequency(std::span<const Genotype> col) {
    std::size_t called = 0;
    std::size_t alt = 0;
    for (Genotype g : col) {
        if (g == kMissing) continue;
        ++called;
        alt += static_cast<std::size_t>(g);
    }
    if (called == 0) return {0.0, 0};
    return {static_cast<double>(alt) / (2.0 * static_cast<double>(called)), called};
}

}  // namespace

std::vector<Genotype> impute_column(std::span<const Genotype> col) {
    const auto [p_alt, called] = alt_frequency(col);
    if (called == 0) throw Error(Errc::AllMissing, "cannot impute an all-missing column");
    const auto fill = static_cast<Genotype>(std::clamp(std::round(2.0 * p_alt), 0.0, 2.0));
    std::vector<Genotype> out(col.begin(), col.end());
    for (auto& g : out) {
        if (g == kMissing) g = fill;
    }
    return out;
}

double column_maf(std::span<const Genotype> col) {
    if (col.empty()) throw Error(Errc::EmptyColumn, "maf of empty column");
    if (std::find(col.begin(), col.end(), kMissing) != col.end()) {
        throw Error(Errc::MissingGenotype, "maf requires an imputed column");
    }
    const double p = alt_frequency(col).first;
    return std::min(p, 1.0 - p);
}

std::vector<HetProbability> hwe_het_distribution(std::int64_t n_aa, std::int64_t n_ab, std::int64_t n_bb) {
    if (n_aa < 0 || n_ab < 0 || n_bb < 0) throw Error(Errc::NegativeCount, "genotype counts must be >= 0");
    const std::int64_t n = n_aa + n_ab + n_bb;
    if (n == 0) throw Error(Errc::EmptyColumn, "HWE test on zero genotypes");

    const std::int64_t rare = std::min(2 * n_aa + n_ab, 2 * n_bb + n_ab);
    const std::int64_t lo = rare % 2;
    const std::size_t slots = static_cast<std::size_t>((rare - lo) / 2 + 1);
    std::vector<double> prob(slots, 0.0);
    auto slot = [lo](std::int64_t het) { return static_cast<std::size_t>((het - lo) / 2); };

    // Start at the most probable het count and walk outwards with the ratio
    // P(h-2)/P(h) = h(h-1) / (4 (rare_hom+1)(common_hom+1)).
    std::int64_t mid = static_cast<std::int64_t>(
        static_cast<double>(rare) * static_cast<double>(2 * n - rare) / static_cast<double>(2 * n));
    if ((mid % 2) != lo) ++mid;
    mid = std::min(mid, rare);
    prob[slot(mid)] = 1.0;

    {
        std::int64_t het = mid;
        std::int64_t hom_r = (rare - mid) / 2;
        std::int64_t hom_c = n - mid - hom_r;
        while (het >= lo + 2) {
            const double ratio = static_cast<double>(het) * static_cast<double>(het - 1) /
                                 (4.0 * static_cast<double>(hom_r + 1) * static_cast<double>(hom_c + 1));
            prob[slot(het - 2)] = prob[slot(het)] * ratio;
            het -= 2;
            ++hom_r;
            ++hom_c;
        }
    }
    {
        std::int64_t het = mid;
        std::int64_t hom_r = (rare - mid) / 2;
        std::int64_t hom_c = n - mid - hom_r;
        while (het + 2 <= rare) {
            const double ratio = 4.0 * static_cast<double>(hom_r) * static_cast<double>(hom_c) /
                                 (static_cast<double>(het + 2) * static_cast<double>(het + 1));
            prob[slot(het + 2)] = prob[slot(het)] * ratio;
            het += 2;
            --hom_r;
            --hom_c;
        }
    }

    double total = 0.0;
    for (double p : prob) total += p;
    std::vector<HetProbability> out(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        out[i] = {lo + 2 * static_cast<std::int64_t>(i), prob[i] / total};
    }
    return out;
}

double hwe_exact_p(std::int64_t n_aa, std::int64_t n_ab, std::int64_t n_bb) {
    const auto dist = hwe_het_distribution(n_aa, n_ab, n_bb);
    double observed = 0.0;
    for (const auto& d : dist) {
        if (d.het == n_ab) observed = d.probability;
    }
    const double cutoff = observed * (1.0 + 1e-12);
    double p = 0.0;
    for (const auto& d : dist) {
        if (d.probability <= cutoff) p += d.probability;
    }
    return std::min(p, 1.0);
}

namespace {

double column_hwe_p(std::span<const Genotype> col) {
    std::int64_t c[3] = {0, 0, 0};
    for (Genotype g : col) ++c[g];
    return hwe_exact_p(c[0], c[1], c[2]);
}

}  // namespace

QcResult run_qc(const GenotypeMatrix& m, const GenePanel& panel, const QcThresholds& t) {
    t.validate();
    m.validate(panel);

    const std::size_t n_cols = m.n_snps();
    std::vector<std::optional<QcDrop>> drop(n_cols);
    std::vector<std::vector<Genotype>> imputed(n_cols);

    for (std::size_t c = 0; c < n_cols; ++c) {
        const auto col = m.column(c);
        const double miss = column_missingness(col);
        if (miss > t.missingness_max) {
            drop[c] = QcDrop{m.columns[c].snp_id, QcReason::Missingness, miss};
            continue;
        }
        imputed[c] = impute_column(col);
        const double maf = column_maf(imputed[c]);
        if (maf < t.maf_min) {
            drop[c] = QcDrop{m.columns[c].snp_id, QcReason::Maf, maf};
            continue;
        }
        const double p = column_hwe_p(imputed[c]);
        if (p < t.hwe_p_min) drop[c] = QcDrop{m.columns[c].snp_id, QcReason::Hwe, p};
    }

    QcResult r;
    r.matrix.subjects = m.subjects;
    r.matrix.stages = m.stages;
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (drop[c]) {
            r.report.dropped.push_back(*drop[c]);
        } else {
            kept.push_back(c);
            r.matrix.columns.push_back(m.columns[c]);
        }
    }
    r.matrix.cells.resize(m.n_subjects() * kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) r.matrix.set_column(k, imputed[kept[k]]);
    r.panel = panel_from_columns(r.matrix.columns);
    return r;
}

SubjectGenome subject_genome(const GenotypeMatrix& m, const GenePanel& panel, std::size_t subject) {
    SubjectGenome g;
    g.subject_id = m.subjects.at(subject);
    std::size_t c = 0;
    for (const auto& gene : panel.genes()) {
        GeneBlock b{gene.name, gene.snps, {}};
        for (std::size_t i = 0; i < gene.snps.size(); ++i) b.values.push_back(m.at(subject, c++));
        g.blocks.push_back(std::move(b));
    }
    return g;
}

SubjectGenome permute_gene_blocks(const SubjectGenome& g, std::uint64_t seed) {
    SubjectGenome out = g;
    Rng rng(seed);
    for (std::size_t i = out.blocks.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(out.blocks[i - 1], out.blocks[j]);
    }
    return out;
}

std::string serialize_genome(const SubjectGenome& g) {
    std::string out;
    for (std::size_t b = 0; b < g.blocks.size(); ++b) {
        const auto& block = g.blocks[b];
        if (b > 0) out += " | ";
        out += "GENE " + block.gene + " :";
        for (std::size_t i = 0; i < block.snps.size(); ++i) {
            const Genotype v = block.values[i];
            if (v == kMissing) throw Error(Errc::MissingGenotype, block.snps[i] + " of " + g.subject_id);
            if (i > 0) out += " ;";
            out += " " + block.snps[i] + " = " + std::to_string(static_cast<int>(v));
        }
    }
    return out;
}

SubjectGenome parse_genome(std::string_view text) {
    const auto words = split(text, ' ');
    SubjectGenome g;
    std::size_t i = 0;
    auto expect = [&](std::string_view w) {
        if (i >= words.size() || words[i] != w) {
            throw Error(Errc::Parse, "expected '" + std::string(w) + "' at word " + std::to_string(i));
        }
        ++i;
    };
    auto take = [&]() -> const std::string& {
        if (i >= words.size() || words[i].empty()) throw Error(Errc::Parse, "unexpected end at word " + std::to_string(i));
        return words[i++];
    };
    while (true) {
        expect("GENE");
        GeneBlock b;
        b.gene = take();
        expect(":");
        while (true) {
            b.snps.push_back(take());
            expect("=");
            const std::string& v = take();
            if (v != "0" && v != "1" && v != "2") throw Error(Errc::Parse, "genotype '" + v + "'");
            b.values.push_back(static_cast<Genotype>(v[0] - '0'));
            if (i < words.size() && words[i] == ";") {
                ++i;
                continue;
            }
            break;
        }
        g.blocks.push_back(std::move(b));
        if (i == words.size()) break;
        expect("|");
    }
    return g;
}

namespace {

constexpr std::string_view kTemplateHead =
    "A chat between a curious user and an artificial intelligence assistant . "
    "The assistant gives helpful , detailed , and polite answers . "
    "Genome Information : ";
constexpr std::string_view kTemplateImage = " Brain Image :";
constexpr std::string_view kTemplateTail =
    " . Your task is to classify the disease of the subject based on their Brain Image and Genome Information . "
    "Choose one of the following labels : [ NC , SMC , MCI , AD ] .";

std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (c == ' ') {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

}  // namespace

std::string target_text(std::string_view label) {
    if (!try_parse_stage(label)) throw Error(Errc::UnknownLabel, "'" + std::string(label) + "'");
    return "This subject is " + std::string(label) + " .";
}

PromptRecord build_prompt(std::string_view genome_text, bool multimodal, std::optional<std::string_view> label) {
    if (genome_text.empty()) throw Error(Errc::Parse, "empty genome text");
    PromptRecord r;
    r.text.reserve(kTemplateHead.size() + genome_text.size() + kTemplateTail.size() + 16);
    r.text += kTemplateHead;
    r.text += genome_text;
    r.text += kTemplateImage;
    if (multimodal) {
        r.anchor_pos = word_count(r.text);
        r.text += ' ';
        r.text += kImageToken;
    }
    r.text += kTemplateTail;
    if (label) r.target = target_text(*label);
    return r;
}

GenotypeMatrix read_genotypes(const std::filesystem::path& path) {
    const TsvTable t = read_tsv(path, {"subject_id", "stage"});
    GenotypeMatrix m;
    for (std::size_t c = 2; c < t.header.size(); ++c) {
        const auto& h = t.header[c];
        const auto colon = h.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == h.size()) {
            throw Error(Errc::Parse, path.string() + ": column '" + h + "' is not GENE:RSID");
        }
        m.columns.push_back({h.substr(0, colon), h.substr(colon + 1)});
    }
    m.cells.reserve(t.rows.size() * m.columns.size());
    for (const auto& row : t.rows) {
        m.subjects.push_back(row[0]);
        m.stages.push_back(row[1] == "NA" ? std::nullopt : std::optional<Stage>(parse_stage(row[1])));
        for (std::size_t c = 2; c < row.size(); ++c) {
            const auto& v = row[c];
            if (v == "NA") {
                m.cells.push_back(kMissing);
            } else if (v == "0" || v == "1" || v == "2") {
                m.cells.push_back(static_cast<Genotype>(v[0] - '0'));
            } else {
                throw Error(Errc::Parse, path.string() + ": genotype '" + v + "' for " + row[0]);
            }
        }
    }
    return m;
}

void write_genotypes(const GenotypeMatrix& m, const std::filesystem::path& path) {
    std::string out = "subject_id\tstage";
    for (const auto& c : m.columns) out += "\t" + c.gene + ":" + c.snp_id;
    out += "\n";
    for (std::size_t s = 0; s < m.n_subjects(); ++s) {
        out += m.subjects[s];
        out += "\t";
        out += m.stages[s] ? stage_name(*m.stages[s]) : "NA";
        for (std::size_t c = 0; c < m.n_snps(); ++c) {
            const Genotype g = m.at(s, c);
            out += g == kMissing ? "\tNA" : "\t" + std::to_string(static_cast<int>(g));
        }
        out += "\n";
    }
    detail::write_file(path, out);
}

GenePanel read_gene_panel(const std::filesystem::path& path) {
    const TsvTable t = read_tsv(path, {"gene_name", "snp_id"});
    std::vector<SnpColumn> cols;
    for (const auto& row : t.rows) cols.push_back({row[0], row[1]});
    // A gene split into two non-adjacent runs is rejected by the panel's
    // uniqueness check.
    return panel_from_columns(cols);
}

void write_gene_panel(const GenePanel& p, const std::filesystem::path& path) {
    std::string out = "gene_name\tsnp_id\n";
    for (const auto& g : p.genes()) {
        for (const auto& s : g.snps) out += g.name + "\t" + s + "\n";
    }
    detail::write_file(path, out);
}

std::vector<std::string> read_gene_set(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingArtifact, path.string() + " does not exist");
    const std::string text = detail::read_file(path);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (seen.insert(line).second) out.push_back(line);
    }
    return out;
}

void write_gene_set(const std::vector<std::string>& genes, const std::filesystem::path& path) {
    std::string out;
    for (const auto& g : genes) out += g + "\n";
    detail::write_file(path, out);
}

void write_qc_report(const QcReport& r, const std::filesystem::path& path) {
    std::string out = "snp_id\treason\tstatistic\n";
    for (const auto& d : r.dropped) {
        out += d.snp_id + "\t" + qc_reason_name(d.reason) + "\t" + format_g17(d.statistic) + "\n";
    }
    detail::write_file(path, out);
}

}  // namespace rgenima
