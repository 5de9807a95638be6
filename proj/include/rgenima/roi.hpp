#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rgenima/volume_io.hpp"

namespace rgenima {

/// Inclusive voxel box.
struct Box {
    std::uint32_t x0 = 0, x1 = 0, y0 = 0, y1 = 0, z0 = 0, z1 = 0;

    Dims extent() const { return {x1 - x0 + 1, y1 - y0 + 1, z1 - z0 + 1}; }
    friend bool operator==(const Box&, const Box&) = default;
};

/// One atlas region cropped to its tight bounding box. Voxels inside the box
/// but outside the region's mask are zero.
struct RoiExtract {
    std::uint32_t roi_id = 0;
    Box bbox;
    Volume masked;
};

/// Exactly N cubes of S^3 voxels in RoiTable order; absent regions are zero.
struct RoiPatchSet {
    std::string subject_id;
    std::uint32_t patch_size = 0;
    std::uint32_t n_rois = 0;
    std::vector<float> voxels;          // n_rois * patch_size^3, patch-major
    std::vector<std::uint8_t> present;  // n_rois flags

    std::size_t patch_volume() const { return std::size_t{patch_size} * patch_size * patch_size; }
    std::span<const float> patch(std::size_t i) const {
        return {voxels.data() + i * patch_volume(), patch_volume()};
    }
    std::span<float> patch(std::size_t i) { return {voxels.data() + i * patch_volume(), patch_volume()}; }

    friend bool operator==(const RoiPatchSet&, const RoiPatchSet&) = default;
};

/// One extract per table id present in `labels`, in table order.
std::vector<RoiExtract> segment_rois(const Volume& v, const LabelVolume& labels, const RoiTable& table);

/// Align-corners trilinear resampling of the extract's box onto an s^3 grid
/// (x slowest). An axis of extent 1, or s == 1, samples the axis midpoint.
std::vector<double> resample_trilinear(const RoiExtract& e, std::uint32_t s);

/// Builds the fixed-length patch sequence. Input order does not matter.
RoiPatchSet assemble_patch_set(const std::vector<RoiExtract>& extracts, const RoiTable& table, std::uint32_t s,
                               std::string subject_id);

/// segment_rois + assemble_patch_set.
RoiPatchSet parcellate(const Volume& v, const LabelVolume& labels, const RoiTable& table, std::uint32_t s,
                       std::string subject_id);

/// RVOL dtype 2: header dims (S,S,S), then N and S as u32, N*S^3 float32,
/// then N present-mask bytes. The subject id is carried by the file name.
void write_patch_set(const RoiPatchSet& p, const std::filesystem::path& path);
RoiPatchSet read_patch_set(const std::filesystem::path& path, std::string subject_id = {});

}  // namespace rgenima
