#include "rgenima/config.hpp"

#include <charconv>
#include <functional>
#include <limits>
#include <set>

#include "rgenima/error.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

namespace {

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Accessor helpers. `ref` maps a config to the member being edited.
template <typename T>
Field field(std::string section, std::string key, std::function<T&(RunConfig&)> ref) {
    Field f;
    f.section = std::move(section);
    f.key = std::move(key);
    const std::string what = f.section + "." + f.key;
    f.get = [ref](const RunConfig& c) {
        T& v = ref(const_cast<RunConfig&>(c));
        if constexpr (std::is_same_v<T, double>) {
            return fmt_double(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
            return v;
        } else {
            return std::to_string(v);
        }
    };
    f.set = [ref, what](RunConfig& c, const std::string& s) {
        T& v = ref(c);
        if constexpr (std::is_same_v<T, double>) {
            v = parse_double(s, what);
        } else if constexpr (std::is_same_v<T, std::string>) {
            v = s;
        } else {
            const std::uint64_t x = parse_u64(s, what);
            if (x > std::numeric_limits<T>::max()) throw Error(Errc::Config, what + " out of range: " + s);
            v = static_cast<T>(x);
        }
    };
    return f;
}

#define RG_FIELD(T, section, key, expr) field<T>(section, key, [](RunConfig& c) -> T& { return expr; })

std::string join_stages(const std::vector<Stage>& stages) {
    std::string out;
    for (Stage s : stages) {
        if (!out.empty()) out += ",";
        out += stage_name(s);
    }
    return out;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(RG_FIELD(std::uint64_t, "run", "seed", c.seed));
        f.push_back(RG_FIELD(unsigned, "run", "threads", c.threads));

        f.push_back(RG_FIELD(std::string, "paths", "out", c.paths.out));
        f.push_back(RG_FIELD(std::string, "paths", "genotypes", c.paths.genotypes));
        f.push_back(RG_FIELD(std::string, "paths", "gene_panel", c.paths.gene_panel));
        f.push_back(RG_FIELD(std::string, "paths", "roi_table", c.paths.roi_table));
        f.push_back(RG_FIELD(std::string, "paths", "volumes", c.paths.volumes));
        f.push_back(RG_FIELD(std::string, "paths", "labels", c.paths.labels));
        f.push_back(RG_FIELD(std::string, "paths", "reference_genes", c.paths.reference_genes));

        Field sps{"synth", "subjects_per_stage",
                  [](const RunConfig& c) {
                      std::string out;
                      for (std::size_t n : c.synth.subjects_per_stage) {
                          if (!out.empty()) out += ",";
                          out += std::to_string(n);
                      }
                      return out;
                  },
                  [](RunConfig& c, const std::string& s) {
                      const auto parts = split(s, ',');
                      if (parts.size() == 1) {
                          c.synth.subjects_per_stage.fill(parse_u64(trim(parts[0]), "synth.subjects_per_stage"));
                      } else if (parts.size() == kNumStages) {
                          for (std::size_t i = 0; i < kNumStages; ++i) {
                              c.synth.subjects_per_stage[i] = parse_u64(trim(parts[i]), "synth.subjects_per_stage");
                          }
                      } else {
                          throw Error(Errc::Config, "synth.subjects_per_stage needs 1 or 4 values");
                      }
                  }};
        f.push_back(std::move(sps));
        f.push_back(RG_FIELD(std::size_t, "synth", "n_genes", c.synth.n_genes));
        f.push_back(RG_FIELD(std::size_t, "synth", "snps_per_gene", c.synth.snps_per_gene));
        f.push_back(RG_FIELD(std::size_t, "synth", "n_rois", c.synth.n_rois));
        f.push_back(RG_FIELD(std::uint32_t, "synth", "cell_size", c.synth.cell_size));
        f.push_back(RG_FIELD(double, "synth", "base_intensity", c.synth.base_intensity));
        f.push_back(RG_FIELD(double, "synth", "smooth_noise_sd", c.synth.smooth_noise_sd));
        f.push_back(RG_FIELD(double, "synth", "white_noise_sd", c.synth.white_noise_sd));
        f.push_back(RG_FIELD(double, "synth", "gene_effect_scale", c.synth.gene_effect_scale));
        f.push_back(RG_FIELD(double, "synth", "missing_rate", c.synth.missing_rate));
        f.push_back(RG_FIELD(double, "synth", "absent_roi_rate", c.synth.absent_roi_rate));
        f.push_back(RG_FIELD(std::size_t, "synth", "qc_violations_per_kind", c.synth.qc_violations_per_kind));
        f.push_back(Field{"synth", "planted", [](const RunConfig& c) { return format_planted(c.synth.planted); },
                          [](RunConfig& c, const std::string& s) { c.synth.planted = parse_planted(s); }});

        f.push_back(RG_FIELD(double, "qc", "missingness_max", c.qc.missingness_max));
        f.push_back(RG_FIELD(double, "qc", "maf_min", c.qc.maf_min));
        f.push_back(RG_FIELD(double, "qc", "hwe_p_min", c.qc.hwe_p_min));

        f.push_back(Field{"dataset", "mode", [](const RunConfig& c) { return std::string(dataset_mode_name(c.dataset.mode)); },
                          [](RunConfig& c, const std::string& s) { c.dataset.mode = parse_dataset_mode(s); }});
        f.push_back(RG_FIELD(std::size_t, "dataset", "train_count", c.dataset.train_count));
        f.push_back(RG_FIELD(std::size_t, "dataset", "test_count", c.dataset.test_count));

        f.push_back(RG_FIELD(std::uint32_t, "model", "d_model", c.model.d_model));
        f.push_back(RG_FIELD(std::uint32_t, "model", "n_heads", c.model.n_heads));
        f.push_back(RG_FIELD(std::uint32_t, "model", "n_layers_text", c.model.n_layers_text));
        f.push_back(RG_FIELD(std::uint32_t, "model", "n_layers_rit", c.model.n_layers_rit));
        f.push_back(RG_FIELD(std::uint32_t, "model", "patch_size", c.model.patch_size));
        f.push_back(RG_FIELD(std::uint32_t, "model", "max_seq_len", c.model.max_seq_len));
        f.push_back(RG_FIELD(std::uint32_t, "model", "ff_dim", c.model.ff_dim));

        f.push_back(RG_FIELD(double, "train", "lr", c.train.lr));
        f.push_back(RG_FIELD(double, "train", "beta1", c.train.beta1));
        f.push_back(RG_FIELD(double, "train", "beta2", c.train.beta2));
        f.push_back(RG_FIELD(double, "train", "adam_eps", c.train.adam_eps));
        f.push_back(RG_FIELD(std::size_t, "train", "epochs", c.train.epochs));
        f.push_back(RG_FIELD(std::size_t, "train", "batch_size", c.train.batch_size));
        f.push_back(RG_FIELD(std::size_t, "train", "stage1_epochs", c.train.stage1_epochs));
        f.push_back(RG_FIELD(double, "train", "stage1_lr", c.train.stage1_lr));

        f.push_back(RG_FIELD(std::size_t, "stability", "n_bootstrap", c.stability.n_bootstrap));
        f.push_back(RG_FIELD(double, "stability", "ci_lo", c.stability.ci_lo));
        f.push_back(RG_FIELD(double, "stability", "ci_hi", c.stability.ci_hi));
        f.push_back(RG_FIELD(double, "stability", "selection_threshold", c.stability.selection_threshold));
        f.push_back(RG_FIELD(std::size_t, "stability", "top_k_genes", c.stability.top_k_genes));
        f.push_back(RG_FIELD(std::size_t, "stability", "top_k_rois", c.stability.top_k_rois));
        f.push_back(RG_FIELD(double, "stability", "epsilon_width", c.stability.epsilon_width));
        f.push_back(Field{"stability", "stages", [](const RunConfig& c) { return join_stages(c.stability_stages); },
                          [](RunConfig& c, const std::string& s) {
                              c.stability_stages.clear();
                              for (const auto& p : split(s, ',')) c.stability_stages.push_back(parse_stage(trim(p)));
                          }});

        f.push_back(RG_FIELD(std::string, "plot", "rois", c.plot.rois));
        f.push_back(RG_FIELD(std::string, "plot", "stage", c.plot.stage));
        return f;
    }();
    return table;
}

#undef RG_FIELD

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
    RunConfig c;
    std::string section;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(Errc::Parse, where + ": malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(Errc::Parse, where + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const Field* match = nullptr;
        for (const auto& f : fields()) {
            if (f.section == section && f.key == key) match = &f;
        }
        if (!match) throw Error(Errc::Config, where + ": unknown key [" + section + "] " + key);
        if (!seen.insert(section + "." + key).second) {
            throw Error(Errc::Config, where + ": duplicate key [" + section + "] " + key);
        }
        match->set(c, value);
    }
    if (c.threads == 0) throw Error(Errc::Config, "run.threads must be >= 1");
    c.qc.validate();
    c.stability.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingArtifact, "config not found: " + path.string());
    return parse_config(detail::read_file(path), path.string());
}

std::string format_config(const RunConfig& c) {
    std::string out, section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out += "\n";
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + " = " + f.get(c) + "\n";
    }
    return out;
}

}  // namespace rgenima
