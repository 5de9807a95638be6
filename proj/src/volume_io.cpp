#include "rgenima/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rgenima/error.hpp"
#include "rgenima/tsv.hpp"

namespace rgenima {

namespace {

constexpr std::uint16_t kVersion = 1;

std::string at_offset(std::size_t off) { return " at byte offset " + std::to_string(off); }

}  // namespace

RoiTable::RoiTable(std::vector<RoiEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].id == 0) {
            throw Error(Errc::Parse, "roi id 0 is reserved for background");
        }
        if (i > 0 && entries_[i].id <= entries_[i - 1].id) {
            throw Error(Errc::Parse, "roi ids must be unique and ascending (id " +
                                         std::to_string(entries_[i].id) + ")");
        }
    }
}

long RoiTable::index_of(std::uint32_t id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const RoiEntry& e, std::uint32_t v) { return e.id < v; });
    if (it == entries_.end() || it->id != id) return -1;
    return static_cast<long>(it - entries_.begin());
}

namespace detail {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint16_t get_u16(const std::string& in, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(in[at]) |
                                      (static_cast<unsigned char>(in[at + 1]) << 8));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(in[at + b]);
    return v;
}

float get_f32(const std::string& in, std::size_t at) { return std::bit_cast<float>(get_u32(in, at)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(Errc::IoFailure, "short write to " + path.string());
}

std::string rvol_header(RvolDType dtype, Dims dims) {
    std::string out = "RVOL";
    put_u16(out, kVersion);
    out.push_back(static_cast<char>(dtype));
    out.push_back('\0');
    put_u32(out, dims.x);
    put_u32(out, dims.y);
    put_u32(out, dims.z);
    return out;
}

Dims parse_rvol_header(const std::string& bytes, RvolDType expected) {
    if (bytes.size() < 4) throw Error(Errc::TruncatedData, "missing magic" + at_offset(bytes.size()));
    if (bytes.compare(0, 4, "RVOL") != 0) throw Error(Errc::BadMagic, "expected RVOL" + at_offset(0));
    if (bytes.size() < kRvolHeaderSize) {
        throw Error(Errc::TruncatedData, "header incomplete" + at_offset(bytes.size()));
    }
    const std::uint16_t version = get_u16(bytes, 4);
    if (version != kVersion) {
        throw Error(Errc::BadVersion, "version " + std::to_string(version) + at_offset(4));
    }
    const auto dtype = static_cast<std::uint8_t>(bytes[6]);
    if (dtype != static_cast<std::uint8_t>(expected)) {
        throw Error(Errc::DTypeMismatch, "dtype code " + std::to_string(dtype) + at_offset(6));
    }
    Dims d{get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16)};
    if (d.x == 0 || d.y == 0 || d.z == 0) {
        throw Error(Errc::Parse, "zero dimension" + at_offset(8));
    }
    return d;
}

}  // namespace detail

Volume read_volume(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    Volume v;
    v.dims = detail::parse_rvol_header(bytes, RvolDType::Float32);
    const std::size_t need = kRvolHeaderSize + 4 * v.dims.count();
    if (bytes.size() < need) throw Error(Errc::TruncatedData, "payload short" + at_offset(bytes.size()));
    v.voxels.resize(v.dims.count());
    for (std::size_t i = 0; i < v.voxels.size(); ++i) {
        const std::size_t off = kRvolHeaderSize + 4 * i;
        v.voxels[i] = detail::get_f32(bytes, off);
        if (!std::isfinite(v.voxels[i])) throw Error(Errc::NonFiniteVoxel, "voxel" + at_offset(off));
    }
    return v;
}

void write_volume(const Volume& v, const std::filesystem::path& path) {
    if (v.voxels.size() != v.dims.count()) throw Error(Errc::ShapeMismatch, "voxel count != dims");
    std::string out = detail::rvol_header(RvolDType::Float32, v.dims);
    out.reserve(out.size() + 4 * v.voxels.size());
    for (float f : v.voxels) detail::put_f32(out, f);
    detail::write_file(path, out);
}

LabelVolume read_labels(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    LabelVolume l;
    l.dims = detail::parse_rvol_header(bytes, RvolDType::UInt32);
    const std::size_t need = kRvolHeaderSize + 4 * l.dims.count();
    if (bytes.size() < need) throw Error(Errc::TruncatedData, "payload short" + at_offset(bytes.size()));
    l.labels.resize(l.dims.count());
    for (std::size_t i = 0; i < l.labels.size(); ++i) {
        l.labels[i] = detail::get_u32(bytes, kRvolHeaderSize + 4 * i);
    }
    return l;
}

void write_labels(const LabelVolume& l, const std::filesystem::path& path) {
    if (l.labels.size() != l.dims.count()) throw Error(Errc::ShapeMismatch, "label count != dims");
    std::string out = detail::rvol_header(RvolDType::UInt32, l.dims);
    for (std::uint32_t v : l.labels) detail::put_u32(out, v);
    detail::write_file(path, out);
}

void validate_labels(const LabelVolume& l, const RoiTable& t) {
    const std::uint32_t max_id = t.max_id();
    for (std::size_t i = 0; i < l.labels.size(); ++i) {
        if (l.labels[i] > max_id) {
            throw Error(Errc::LabelOutOfRange, "label " + std::to_string(l.labels[i]) + " > max id " +
                                                   std::to_string(max_id) + " at voxel " + std::to_string(i));
        }
    }
}

RoiTable read_roi_table(const std::filesystem::path& path) {
    const TsvTable tsv = read_tsv(path, {"roi_id", "roi_name"});
    std::vector<RoiEntry> entries;
    for (const auto& row : tsv.rows) {
        entries.push_back({parse_u32(row[0], "roi_id"), row[1]});
    }
    return RoiTable(std::move(entries));
}

void write_roi_table(const RoiTable& t, const std::filesystem::path& path) {
    std::string out = "roi_id\troi_name\n";
    for (const auto& e : t.entries()) out += std::to_string(e.id) + "\t" + e.name + "\n";
    detail::write_file(path, out);
}

}  // namespace rgenima
