#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rgenima/model.hpp"

namespace rgenima {

/// Residual-aware rollout: per layer average heads, mix half-and-half with
/// the identity, renormalize rows, and multiply from the first layer up.
Mat attention_rollout(const std::vector<std::vector<Mat>>& attention);

struct RoiGeneAttentionMap {
    std::string subject_id;
    Stage stage = Stage::NC;
    std::vector<std::uint32_t> roi_ids;
    std::vector<std::string> genes;
    Mat weights;  // roi x gene

    double at(std::size_t roi, std::size_t gene) const { return weights(static_cast<Eigen::Index>(roi), static_cast<Eigen::Index>(gene)); }
};

/// a(r, g): mean rollout mass from image rows of ROI r to genetic columns of
/// gene g. Every ROI in `roi_ids` and gene in `genes` must have positions.
RoiGeneAttentionMap roi_gene_weights(const Mat& rollout, const std::vector<SpanLabel>& spans,
                                     const std::vector<std::uint32_t>& roi_ids, const std::vector<std::string>& genes);

/// X(r,g) for one stage: a(s,r,g) over that stage's subjects sorted by id.
struct GroupSamples {
    Stage stage = Stage::NC;
    std::vector<std::uint32_t> roi_ids;
    std::vector<std::string> genes;
    std::vector<std::string> subjects;
    std::vector<std::vector<double>> samples;  // [roi * genes + gene][subject]

    const std::vector<double>& pair(std::size_t roi, std::size_t gene) const { return samples[roi * genes.size() + gene]; }
};

GroupSamples aggregate_group(const std::vector<RoiGeneAttentionMap>& maps, Stage stage);

void write_attention(const std::vector<RoiGeneAttentionMap>& maps, const std::filesystem::path& path);
std::vector<RoiGeneAttentionMap> read_attention(const std::filesystem::path& path);

}  // namespace rgenima
