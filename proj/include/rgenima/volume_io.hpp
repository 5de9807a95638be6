#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rgenima {

struct Dims {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::uint32_t z = 0;

    std::size_t count() const { return std::size_t{x} * y * z; }
    /// x slowest, z fastest.
    std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * y + j) * z + k;
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Single-channel scalar grid (T1 intensity).
struct Volume {
    Dims dims;
    std::vector<float> voxels;

    Volume() = default;
    explicit Volume(Dims d, float fill = 0.0f) : dims(d), voxels(d.count(), fill) {}

    float& at(std::size_t i, std::size_t j, std::size_t k) { return voxels[dims.offset(i, j, k)]; }
    float at(std::size_t i, std::size_t j, std::size_t k) const { return voxels[dims.offset(i, j, k)]; }
};

/// Atlas parcellation; 0 is background.
struct LabelVolume {
    Dims dims;
    std::vector<std::uint32_t> labels;

    LabelVolume() = default;
    explicit LabelVolume(Dims d, std::uint32_t fill = 0) : dims(d), labels(d.count(), fill) {}

    std::uint32_t& at(std::size_t i, std::size_t j, std::size_t k) { return labels[dims.offset(i, j, k)]; }
    std::uint32_t at(std::size_t i, std::size_t j, std::size_t k) const { return labels[dims.offset(i, j, k)]; }
};

struct RoiEntry {
    std::uint32_t id = 0;
    std::string name;
    friend bool operator==(const RoiEntry&, const RoiEntry&) = default;
};

/// Ordered ROI list; its order is the token order everywhere downstream.
class RoiTable {
public:
    RoiTable() = default;
    explicit RoiTable(std::vector<RoiEntry> entries);

    const std::vector<RoiEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::uint32_t max_id() const { return entries_.empty() ? 0 : entries_.back().id; }
    /// Index of `id` in table order, or -1.
    long index_of(std::uint32_t id) const;

private:
    std::vector<RoiEntry> entries_;
};

/// RVOL dtype codes. 2 is the patch-set extension used by roi.hpp.
enum class RvolDType : std::uint8_t { Float32 = 0, UInt32 = 1, PatchSet = 2 };

inline constexpr std::size_t kRvolHeaderSize = 20;

Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& v, const std::filesystem::path& path);
LabelVolume read_labels(const std::filesystem::path& path);
void write_labels(const LabelVolume& l, const std::filesystem::path& path);

/// Throws LabelOutOfRange when a label exceeds the table's maximum id.
void validate_labels(const LabelVolume& l, const RoiTable& t);

RoiTable read_roi_table(const std::filesystem::path& path);
void write_roi_table(const RoiTable& t, const std::filesystem::path& path);

namespace detail {

// Little-endian packing helpers shared by the RVOL-family writers.
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);
std::uint16_t get_u16(const std::string& in, std::size_t at);
std::uint32_t get_u32(const std::string& in, std::size_t at);
float get_f32(const std::string& in, std::size_t at);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

std::string rvol_header(RvolDType dtype, Dims dims);
/// Validates magic, version and dtype; returns dims. Checks payload size
/// against `bytes` is left to the caller.
Dims parse_rvol_header(const std::string& bytes, RvolDType expected);

}  // namespace detail

}  // namespace rgenima
