#include "rgenima/roi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgenima/error.hpp"

namespace rgenima {

std::vector<RoiExtract> segment_rois(const Volume& v, const LabelVolume& labels, const RoiTable& table) {
    if (!(v.dims == labels.dims)) throw Error(Errc::DimsMismatch, "volume and label dims differ");

    constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
    std::vector<Box> boxes(table.size(), Box{kUnset, 0, kUnset, 0, kUnset, 0});
    std::vector<bool> seen(table.size(), false);

    const Dims d = v.dims;
    for (std::uint32_t i = 0; i < d.x; ++i) {
        for (std::uint32_t j = 0; j < d.y; ++j) {
            for (std::uint32_t k = 0; k < d.z; ++k) {
                const std::uint32_t id = labels.at(i, j, k);
                if (id == 0) continue;
                const long idx = table.index_of(id);
                if (idx < 0) throw Error(Errc::UnknownLabel, "label id " + std::to_string(id));
                Box& b = boxes[idx];
                b.x0 = std::min(b.x0, i), b.x1 = std::max(b.x1, i);
                b.y0 = std::min(b.y0, j), b.y1 = std::max(b.y1, j);
                b.z0 = std::min(b.z0, k), b.z1 = std::max(b.z1, k);
                seen[idx] = true;
            }
        }
    }

    std::vector<RoiExtract> out;
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (!seen[r]) continue;
        RoiExtract e;
        e.roi_id = table.entries()[r].id;
        e.bbox = boxes[r];
        e.masked = Volume(e.bbox.extent(), 0.0f);
        const Box& b = e.bbox;
        for (std::uint32_t i = b.x0; i <= b.x1; ++i) {
            for (std::uint32_t j = b.y0; j <= b.y1; ++j) {
                for (std::uint32_t k = b.z0; k <= b.z1; ++k) {
                    if (labels.at(i, j, k) == e.roi_id) e.masked.at(i - b.x0, j - b.y0, k - b.z0) = v.at(i, j, k);
                }
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

struct AxisSample {
    std::uint32_t lo = 0;
    double t = 0.0;
};

// Source index and interpolation fraction for each output index on one axis.
std::vector<AxisSample> axis_samples(std::uint32_t m, std::uint32_t s) {
    std::vector<AxisSample> out(s);
    for (std::uint32_t k = 0; k < s; ++k) {
        const double c = s > 1 ? static_cast<double>(k) * (m - 1) / (s - 1) : 0.5 * (m - 1);
        if (m == 1) {
            out[k] = {0, 0.0};
            continue;
        }
        auto lo = static_cast<std::uint32_t>(std::floor(c));
        lo = std::min(lo, m - 2);
        out[k] = {lo, c - lo};
    }
    return out;
}

}  // namespace

std::vector<double> resample_trilinear(const RoiExtract& e, std::uint32_t s) {
    const Dims m = e.masked.dims;
    if (m.x == 0 || m.y == 0 || m.z == 0) throw Error(Errc::DegenerateBox, "empty extract box");
    if (s == 0) throw Error(Errc::ShapeMismatch, "patch size must be positive");

    const auto sx = axis_samples(m.x, s);
    const auto sy = axis_samples(m.y, s);
    const auto sz = axis_samples(m.z, s);
    auto src = [&](std::uint32_t i, std::uint32_t j, std::uint32_t k) {
        return static_cast<double>(e.masked.at(std::min(i, m.x - 1), std::min(j, m.y - 1), std::min(k, m.z - 1)));
    };

    std::vector<double> out(std::size_t{s} * s * s);
    std::size_t o = 0;
    for (const auto& ax : sx) {
        for (const auto& ay : sy) {
            for (const auto& az : sz) {
                double c[2][2];
                for (int di = 0; di < 2; ++di) {
                    for (int dj = 0; dj < 2; ++dj) {
                        const double v0 = src(ax.lo + di, ay.lo + dj, az.lo);
                        const double v1 = src(ax.lo + di, ay.lo + dj, az.lo + 1);
                        c[di][dj] = v0 * (1.0 - az.t) + v1 * az.t;
                    }
                }
                const double c0 = c[0][0] * (1.0 - ay.t) + c[0][1] * ay.t;
                const double c1 = c[1][0] * (1.0 - ay.t) + c[1][1] * ay.t;
                out[o++] = c0 * (1.0 - ax.t) + c1 * ax.t;
            }
        }
    }
    return out;
}

RoiPatchSet assemble_patch_set(const std::vector<RoiExtract>& extracts, const RoiTable& table, std::uint32_t s,
                               std::string subject_id) {
    RoiPatchSet p;
    p.subject_id = std::move(subject_id);
    p.patch_size = s;
    p.n_rois = static_cast<std::uint32_t>(table.size());
    p.voxels.assign(p.n_rois * p.patch_volume(), 0.0f);
    p.present.assign(p.n_rois, 0);

    for (const auto& e : extracts) {
        const long idx = table.index_of(e.roi_id);
        if (idx < 0) throw Error(Errc::UnknownLabel, "roi id " + std::to_string(e.roi_id));
        if (p.present[idx]) throw Error(Errc::DuplicateRoi, "roi id " + std::to_string(e.roi_id));
        p.present[idx] = 1;
        const auto cube = resample_trilinear(e, s);
        auto dst = p.patch(idx);
        std::transform(cube.begin(), cube.end(), dst.begin(), [](double x) { return static_cast<float>(x); });
    }
    return p;
}

RoiPatchSet parcellate(const Volume& v, const LabelVolume& labels, const RoiTable& table, std::uint32_t s,
                       std::string subject_id) {
    return assemble_patch_set(segment_rois(v, labels, table), table, s, std::move(subject_id));
}

void write_patch_set(const RoiPatchSet& p, const std::filesystem::path& path) {
    const std::uint32_t s = p.patch_size;
    std::string out = detail::rvol_header(RvolDType::PatchSet, {s, s, s});
    detail::put_u32(out, p.n_rois);
    detail::put_u32(out, s);
    for (float f : p.voxels) detail::put_f32(out, f);
    for (std::uint8_t b : p.present) out.push_back(static_cast<char>(b ? 1 : 0));
    detail::write_file(path, out);
}

RoiPatchSet read_patch_set(const std::filesystem::path& path, std::string subject_id) {
    const std::string bytes = detail::read_file(path);
    const Dims d = detail::parse_rvol_header(bytes, RvolDType::PatchSet);
    if (bytes.size() < kRvolHeaderSize + 8) throw Error(Errc::TruncatedData, "patch-set header at byte offset 20");
    RoiPatchSet p;
    p.subject_id = std::move(subject_id);
    p.n_rois = detail::get_u32(bytes, kRvolHeaderSize);
    p.patch_size = detail::get_u32(bytes, kRvolHeaderSize + 4);
    if (d.x != p.patch_size || d.y != p.patch_size || d.z != p.patch_size) {
        throw Error(Errc::ShapeMismatch, "patch size disagrees with dims at byte offset 24");
    }
    const std::size_t payload = kRvolHeaderSize + 8;
    const std::size_t n_vox = p.n_rois * p.patch_volume();
    if (bytes.size() < payload + 4 * n_vox + p.n_rois) {
        throw Error(Errc::TruncatedData, "payload short at byte offset " + std::to_string(bytes.size()));
    }
    p.voxels.resize(n_vox);
    for (std::size_t i = 0; i < n_vox; ++i) {
        const std::size_t off = payload + 4 * i;
        p.voxels[i] = detail::get_f32(bytes, off);
        if (!std::isfinite(p.voxels[i])) {
            throw Error(Errc::NonFiniteVoxel, "voxel at byte offset " + std::to_string(off));
        }
    }
    p.present.resize(p.n_rois);
    for (std::size_t i = 0; i < p.n_rois; ++i) p.present[i] = static_cast<std::uint8_t>(bytes[payload + 4 * n_vox + i]);
    return p;
}

}  // namespace rgenima
