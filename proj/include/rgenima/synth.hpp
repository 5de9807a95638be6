#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rgenima/genome.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

/// A stage-specific imaging and genetic effect.
struct PlantedEffect {
    Stage stage = Stage::AD;
    std::uint32_t roi_id = 0;
    std::string gene;
    double effect = 0.0;
};

/// Parses "AD:3:G01:2.0"; lists are comma separated.
std::vector<PlantedEffect> parse_planted(std::string_view text);
std::string format_planted(const std::vector<PlantedEffect>& planted);

struct SynthSpec {
    std::array<std::size_t, kNumStages> subjects_per_stage{60, 60, 60, 60};
    std::size_t n_genes = 10;
    std::size_t snps_per_gene = 5;
    std::size_t n_rois = 12;
    std::uint32_t cell_size = 8;          // voxels per ROI cell edge
    double base_intensity = 1.0;
    double smooth_noise_sd = 0.15;        // amplitude of the low-frequency field
    double white_noise_sd = 0.05;
    double gene_effect_scale = 0.15;      // allele-frequency shift per unit effect
    double missing_rate = 0.01;
    double absent_roi_rate = 0.0;
    std::size_t qc_violations_per_kind = 0;
    std::vector<PlantedEffect> planted;
};

struct SynthCohort {
    GenePanel panel;
    RoiTable rois;
    GenotypeMatrix genotypes;
    std::vector<Volume> volumes;       // one per subject, genotype row order
    std::vector<LabelVolume> labels;
    std::vector<std::string> qc_violations;  // SNP ids planted to fail QC
};

/// Seed-deterministic cohort: HWE genotypes with stage-shifted allele
/// frequencies in planted genes, and smooth-noise volumes where planted ROIs
/// carry a stage-dependent intensity ramp whose mean equals the effect size.
SynthCohort synth_cohort(const SynthSpec& spec, std::uint64_t seed);

}  // namespace rgenima
