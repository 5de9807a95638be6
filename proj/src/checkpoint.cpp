#include <bit>
#include <map>

#include "rgenima/error.hpp"
#include "rgenima/model.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

namespace {

constexpr std::uint16_t kCheckpointVersion = 1;

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    detail::put_u32(out, static_cast<std::uint32_t>(bits & 0xffffffffu));
    detail::put_u32(out, static_cast<std::uint32_t>(bits >> 32));
}

double get_f64(const std::string& in, std::size_t at) {
    const std::uint64_t lo = detail::get_u32(in, at);
    const std::uint64_t hi = detail::get_u32(in, at + 4);
    return std::bit_cast<double>(lo | (hi << 32));
}

struct Reader {
    const std::string& bytes;
    std::size_t at = 0;

    void need(std::size_t n) const {
        if (at + n > bytes.size()) throw Error(Errc::TruncatedData, "checkpoint at byte offset " + std::to_string(at));
    }
    std::uint32_t u32() {
        need(4);
        const auto v = detail::get_u32(bytes, at);
        at += 4;
        return v;
    }
};

}  // namespace

void save_checkpoint(const ModelConfig& cfg, const Params& params, const std::filesystem::path& path) {
    std::string out = "RGMA";
    detail::put_u16(out, kCheckpointVersion);
    for (std::uint32_t v : {cfg.d_model, cfg.n_heads, cfg.n_layers_text, cfg.n_layers_rit, cfg.patch_size, cfg.n_rois,
                            cfg.max_seq_len, cfg.vocab_size, cfg.ff_dim}) {
        detail::put_u32(out, v);
    }
    const auto tensors = params.tensors();
    detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        detail::put_u32(out, 2);
        detail::put_u32(out, static_cast<std::uint32_t>(m->rows()));
        detail::put_u32(out, static_cast<std::uint32_t>(m->cols()));
        for (Eigen::Index i = 0; i < m->size(); ++i) put_f64(out, m->data()[i]);
    }
    detail::write_file(path, out);
}

std::pair<ModelConfig, Params> load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingArtifact, path.string() + " does not exist");
    const std::string bytes = detail::read_file(path);
    if (bytes.size() < 6 || bytes.compare(0, 4, "RGMA") != 0) throw Error(Errc::BadMagic, "expected RGMA at byte offset 0");
    if (detail::get_u16(bytes, 4) != kCheckpointVersion) throw Error(Errc::BadVersion, "at byte offset 4");
    Reader r{bytes, 6};
    ModelConfig cfg;
    cfg.d_model = r.u32();
    cfg.n_heads = r.u32();
    cfg.n_layers_text = r.u32();
    cfg.n_layers_rit = r.u32();
    cfg.patch_size = r.u32();
    cfg.n_rois = r.u32();
    cfg.max_seq_len = r.u32();
    cfg.vocab_size = r.u32();
    cfg.ff_dim = r.u32();
    Params params = Params::zeros(cfg);

    std::map<std::string, Mat*> by_name;
    for (auto& [name, m] : params.tensors()) by_name[name] = m;
    const std::uint32_t count = r.u32();
    if (count != by_name.size()) throw Error(Errc::ShapeMismatch, "checkpoint tensor count disagrees with config");
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t len = r.u32();
        r.need(len);
        const std::string name = bytes.substr(r.at, len);
        r.at += len;
        auto it = by_name.find(name);
        if (it == by_name.end()) throw Error(Errc::Parse, "unknown tensor " + name);
        const std::uint32_t rank = r.u32();
        if (rank != 2) throw Error(Errc::ShapeMismatch, name + " rank " + std::to_string(rank));
        const std::uint32_t rows = r.u32(), cols = r.u32();
        Mat& m = *it->second;
        if (rows != m.rows() || cols != m.cols()) throw Error(Errc::ShapeMismatch, name + " dims");
        r.need(8 * std::size_t{rows} * cols);
        for (Eigen::Index i = 0; i < m.size(); ++i, r.at += 8) m.data()[i] = get_f64(bytes, r.at);
    }
    if (!params.all_finite()) throw Error(Errc::NonFiniteActivation, "checkpoint holds non-finite weights");
    return {cfg, std::move(params)};
}

}  // namespace rgenima
