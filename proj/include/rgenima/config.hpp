#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rgenima/dataset.hpp"
#include "rgenima/genome.hpp"
#include "rgenima/model.hpp"
#include "rgenima/stats.hpp"
#include "rgenima/synth.hpp"
#include "rgenima/train.hpp"

namespace rgenima {

/// Input locations. Empty entries resolve to the artifact a previous
/// subcommand wrote under `out`.
struct PathConfig {
    std::string out = "run";
    std::string genotypes;
    std::string gene_panel;
    std::string roi_table;
    std::string volumes;          // directory of <subject>.rvol
    std::string labels;           // directory of <subject>.rvol label maps
    std::string reference_genes;  // one gene per line; empty: planted genes
};

struct PlotConfig {
    std::string rois = "stable";  // "stable" or comma-separated ROI ids
    std::string stage = "AD";
};

struct RunConfig {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    PathConfig paths;
    SynthSpec synth;
    QcThresholds qc;
    DatasetConfig dataset;
    ModelConfig model;
    TrainConfig train;
    StabilityConfig stability;
    std::vector<Stage> stability_stages{Stage::SMC, Stage::MCI, Stage::AD};
    PlotConfig plot;
};

/// Sectioned key=value text; '#' starts a comment. Keys not listed by
/// format_config are rejected (Config).
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value. parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& c);

}  // namespace rgenima
