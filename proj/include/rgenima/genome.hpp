#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rgenima {

enum class Stage : std::uint8_t { NC = 0, SMC = 1, MCI = 2, AD = 3 };
inline constexpr std::size_t kNumStages = 4;

const char* stage_name(Stage s);
/// Throws UnknownStage.
Stage parse_stage(std::string_view s);
std::optional<Stage> try_parse_stage(std::string_view s);

/// Alternate-allele count; kMissing marks an absent call.
using Genotype = std::int8_t;
inline constexpr Genotype kMissing = -1;

struct Gene {
    std::string name;
    std::vector<std::string> snps;
    friend bool operator==(const Gene&, const Gene&) = default;
};

/// Ordered gene blocks; SNP order inside a gene never changes.
class GenePanel {
public:
    GenePanel() = default;
    explicit GenePanel(std::vector<Gene> genes);

    const std::vector<Gene>& genes() const { return genes_; }
    std::size_t size() const { return genes_.size(); }
    std::size_t total_snps() const;
    long index_of(std::string_view gene) const;
    std::vector<std::string> gene_names() const;

    friend bool operator==(const GenePanel&, const GenePanel&) = default;

private:
    std::vector<Gene> genes_;
};

struct SnpColumn {
    std::string gene;
    std::string snp_id;
    friend bool operator==(const SnpColumn&, const SnpColumn&) = default;
};

/// Subjects x SNPs, columns in panel-flattened order.
struct GenotypeMatrix {
    std::vector<std::string> subjects;
    std::vector<std::optional<Stage>> stages;
    std::vector<SnpColumn> columns;
    std::vector<Genotype> cells;  // row-major, subjects x columns

    std::size_t n_subjects() const { return subjects.size(); }
    std::size_t n_snps() const { return columns.size(); }
    Genotype& at(std::size_t s, std::size_t c) { return cells[s * columns.size() + c]; }
    Genotype at(std::size_t s, std::size_t c) const { return cells[s * columns.size() + c]; }
    std::vector<Genotype> column(std::size_t c) const;
    void set_column(std::size_t c, std::span<const Genotype> values);

    /// Throws unless the cell domain and column layout agree with `panel`.
    void validate(const GenePanel& panel) const;

    friend bool operator==(const GenotypeMatrix&, const GenotypeMatrix&) = default;
};

/// Gene panel implied by a matrix's column order.
GenePanel panel_from_columns(const std::vector<SnpColumn>& columns);

struct QcThresholds {
    double missingness_max = 0.95;
    double maf_min = 0.05;
    double hwe_p_min = 1e-6;

    void validate() const;
};

enum class QcReason { Missingness, Maf, Hwe };
const char* qc_reason_name(QcReason r);

struct QcDrop {
    std::string snp_id;
    QcReason reason;
    double statistic;
};

struct QcReport {
    std::vector<QcDrop> dropped;
};

struct QcResult {
    GenotypeMatrix matrix;
    GenePanel panel;
    QcReport report;
};

double column_missingness(std::span<const Genotype> col);
/// Fills missing calls with round(2 p_alt), half away from zero.
std::vector<Genotype> impute_column(std::span<const Genotype> col);
double column_maf(std::span<const Genotype> col);

struct HetProbability {
    std::int64_t het = 0;
    double probability = 0.0;
};

/// Conditional distribution of the heterozygote count given the allele
/// counts, normalized to 1. Ascending het order.
std::vector<HetProbability> hwe_het_distribution(std::int64_t n_aa, std::int64_t n_ab, std::int64_t n_bb);

/// Exact two-sided HWE p-value (sum of configurations no more probable than
/// the observed one).
double hwe_exact_p(std::int64_t n_aa, std::int64_t n_ab, std::int64_t n_bb);

/// Missingness, then imputation and MAF, then HWE, each step strict.
QcResult run_qc(const GenotypeMatrix& m, const GenePanel& panel, const QcThresholds& t);

struct GeneBlock {
    std::string gene;
    std::vector<std::string> snps;
    std::vector<Genotype> values;
    friend bool operator==(const GeneBlock&, const GeneBlock&) = default;
};

struct SubjectGenome {
    std::string subject_id;
    std::vector<GeneBlock> blocks;
    friend bool operator==(const SubjectGenome&, const SubjectGenome&) = default;
};

SubjectGenome subject_genome(const GenotypeMatrix& m, const GenePanel& panel, std::size_t subject);

/// Fisher-Yates over gene blocks; SNPs inside a block are untouched.
SubjectGenome permute_gene_blocks(const SubjectGenome& g, std::uint64_t seed);

/// "GENE name : snp = v ; snp = v | GENE ..."
std::string serialize_genome(const SubjectGenome& g);
/// Inverse of serialize_genome (subject id is not carried by the text).
SubjectGenome parse_genome(std::string_view text);

struct PromptRecord {
    std::string subject_id;
    std::string text;
    std::optional<std::size_t> anchor_pos;  // word index of <IMG>
    std::string target;
};

inline constexpr std::string_view kImageToken = "<IMG>";

/// Prompt template with the genetic text substituted; the image placeholder is
/// the <IMG> anchor when multimodal and empty otherwise. Words are separated
/// by single spaces so whitespace tokenization reproduces the text.
PromptRecord build_prompt(std::string_view genome_text, bool multimodal, std::optional<std::string_view> label);

/// "This subject is <label> ."
std::string target_text(std::string_view label);

// File formats
GenotypeMatrix read_genotypes(const std::filesystem::path& path);
void write_genotypes(const GenotypeMatrix& m, const std::filesystem::path& path);
GenePanel read_gene_panel(const std::filesystem::path& path);
void write_gene_panel(const GenePanel& p, const std::filesystem::path& path);
std::vector<std::string> read_gene_set(const std::filesystem::path& path);
void write_gene_set(const std::vector<std::string>& genes, const std::filesystem::path& path);
void write_qc_report(const QcReport& r, const std::filesystem::path& path);

}  // namespace rgenima
