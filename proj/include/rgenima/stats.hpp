#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rgenima/attribution.hpp"
#include "rgenima/genome.hpp"

namespace rgenima {

// ---------------------------------------------------------------- bootstrap

/// B replicate means; replicate b resamples n values with replacement from a
/// stream seeded by derive_seed(seed, b). Output is independent of `threads`.
std::vector<double> bootstrap_means(std::span<const double> x, std::size_t n_bootstrap, std::uint64_t seed,
                                    unsigned threads = 1);

/// Linear interpolation between order statistics at rank (n-1) p / 100.
double percentile(std::vector<double> values, double p);

/// boot_mean / max(ci_hi - ci_lo, eps).
double stability_score(double boot_mean, double ci_lo, double ci_hi, double eps = 1e-12);

struct StabilityConfig {
    std::size_t n_bootstrap = 1000;
    double ci_lo = 2.5;
    double ci_hi = 97.5;
    double selection_threshold = 0.5;
    std::size_t top_k_genes = 45;
    std::size_t top_k_rois = 10;
    double epsilon_width = 1e-12;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const;
};

struct StabilityRecord {
    std::uint32_t roi_id = 0;
    std::string gene;
    double boot_mean = 0.0;
    double ci_lo_value = 0.0;
    double ci_hi_value = 0.0;
    double stability = 0.0;
};

/// Replicate means for every (roi, gene) pair of a group, [pair][b]. All
/// pairs share the subject draws of replicate b, i.e. pair i equals
/// bootstrap_means(pair i, B, derive_seed(cfg.seed, stage)).
std::vector<std::vector<double>> group_replicates(const GroupSamples& group, const StabilityConfig& cfg);

/// Records for one group sorted by stability descending, ties by (roi, gene).
std::vector<StabilityRecord> stability_records(const GroupSamples& group,
                                               const std::vector<std::vector<double>>& replicates,
                                               const StabilityConfig& cfg);

std::map<Stage, std::vector<StabilityRecord>> stability_table(const std::vector<GroupSamples>& groups,
                                                              const StabilityConfig& cfg);

// ---------------------------------------------------------------- selection

struct FeatureFrequency {
    std::string name;
    std::size_t count = 0;
    double frequency = 0.0;
    bool selected = false;
};

/// scores[b][f] over `names`; per iteration the top_k by score (ties by name)
/// are counted; selected iff count > threshold * B. Output sorted by name.
std::vector<FeatureFrequency> select_stable_features(const std::vector<std::vector<double>>& scores,
                                                     const std::vector<std::string>& names, std::size_t top_k,
                                                     double threshold);

/// Per-iteration gene scores (mean over ROIs) and ROI scores (mean over
/// genes) from group replicates, shaped [b][feature].
std::vector<std::vector<double>> gene_iteration_scores(const GroupSamples& group,
                                                       const std::vector<std::vector<double>>& replicates);
std::vector<std::vector<double>> roi_iteration_scores(const GroupSamples& group,
                                                      const std::vector<std::vector<double>>& replicates);

// ---------------------------------------------------------------- enrichment

/// P(X = k) for X ~ Hypergeometric(population N, K successes, n draws).
double hypergeom_pmf(std::int64_t k, std::int64_t K, std::int64_t n, std::int64_t N);
/// P(X >= a), exact summation in log-factorial arithmetic.
double hypergeom_tail(std::int64_t a, std::int64_t K, std::int64_t n, std::int64_t N);

struct ContingencyTable {
    std::int64_t a = 0;  // selected and reference
    std::int64_t b = 0;  // selected only
    std::int64_t c = 0;  // reference only
    std::int64_t d = 0;  // neither
};

struct EnrichmentResult {
    ContingencyTable table;
    double p = 1.0;
    double odds_ratio = 0.0;
    bool corrected = false;  // Haldane-Anscombe +0.5 applied
};

/// One-sided ("greater") Fisher exact test with the sample odds ratio.
EnrichmentResult fisher_enrichment(const std::vector<std::string>& selected, const std::vector<std::string>& reference,
                                   const std::vector<std::string>& universe);

std::string format_enrichment(const EnrichmentResult& r);

// ---------------------------------------------------------------- metrics

using Confusion = std::array<std::array<std::uint64_t, kNumStages>, kNumStages>;  // [true][pred]

struct ClassMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0, specificity = 0.0;
    bool precision_undefined = false, recall_undefined = false, f1_undefined = false, specificity_undefined = false;
};

struct ClassificationReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::uint64_t total = 0;
    std::array<ClassMetrics, kNumStages> per_class{};
};

/// Rows are true classes in [NC, SMC, MCI, AD] order. `unparseable[c]`
/// counts class-c samples whose prediction could not be parsed; they count
/// as errors (false negatives of c).
ClassificationReport classification_metrics(const Confusion& confusion,
                                            const std::array<std::uint64_t, kNumStages>& unparseable = {});

void write_metrics(const ClassificationReport& r, const std::filesystem::path& path);
void write_confusion(const Confusion& c, const std::array<std::uint64_t, kNumStages>& unparseable,
                     const std::filesystem::path& path);

// ---------------------------------------------------------------- files

void write_stability(const std::map<Stage, std::vector<StabilityRecord>>& table, const std::filesystem::path& path);
std::map<Stage, std::vector<StabilityRecord>> read_stability(const std::filesystem::path& path);

}  // namespace rgenima
