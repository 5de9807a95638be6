#include "rgenima/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rgenima/error.hpp"
#include "rgenima/rng.hpp"
#include "rgenima/tsv.hpp"

namespace rgenima {

std::vector<PlantedEffect> parse_planted(std::string_view text) {
    std::vector<PlantedEffect> out;
    if (text.empty()) return out;
    for (auto item : split(text, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        if (item.empty()) continue;
        const auto parts = split(item, ':');
        if (parts.size() != 4) throw Error(Errc::Config, "planted effect '" + item + "' is not STAGE:ROI:GENE:EFFECT");
        out.push_back({parse_stage(parts[0]), parse_u32(parts[1], "planted roi"), parts[2],
                       parse_double(parts[3], "planted effect")});
    }
    return out;
}

std::string format_planted(const std::vector<PlantedEffect>& planted) {
    std::string out;
    for (const auto& p : planted) {
        if (!out.empty()) out += ",";
        out += std::string(stage_name(p.stage)) + ":" + std::to_string(p.roi_id) + ":" + p.gene + ":" +
               format_g17(p.effect);
    }
    return out;
}

namespace {

struct Grid {
    std::uint32_t cx = 1, cy = 1, cz = 1;
};

// Smallest near-cubic cell grid holding n ROIs, grown x then y then z.
Grid roi_grid(std::size_t n) {
    Grid g;
    while (std::size_t{g.cx} * g.cy * g.cz < n) {
        if (g.cx <= g.cy && g.cx <= g.cz) {
            ++g.cx;
        } else if (g.cy <= g.cz) {
            ++g.cy;
        } else {
            ++g.cz;
        }
    }
    return g;
}

std::string gene_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "G%02zu", i + 1);
    return buf;
}

// Trilinear upsampling of a coarse random lattice covering the volume.
std::vector<double> smooth_field(Dims d, Rng& rng) {
    constexpr std::uint32_t kLattice = 4;
    std::vector<double> lattice(kLattice * kLattice * kLattice);
    for (auto& v : lattice) v = rng.normal();
    auto lat = [&](std::uint32_t i, std::uint32_t j, std::uint32_t k) {
        return lattice[(i * kLattice + j) * kLattice + k];
    };
    auto coord = [](std::uint32_t i, std::uint32_t n) {
        const double c = n > 1 ? static_cast<double>(i) * (kLattice - 1) / (n - 1) : 0.0;
        const auto lo = std::min<std::uint32_t>(static_cast<std::uint32_t>(c), kLattice - 2);
        return std::pair{lo, c - lo};
    };
    std::vector<double> out(d.count());
    for (std::uint32_t i = 0; i < d.x; ++i) {
        const auto [xi, tx] = coord(i, d.x);
        for (std::uint32_t j = 0; j < d.y; ++j) {
            const auto [yi, ty] = coord(j, d.y);
            for (std::uint32_t k = 0; k < d.z; ++k) {
                const auto [zi, tz] = coord(k, d.z);
                double v = 0.0;
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        for (int c = 0; c < 2; ++c) {
                            const double w = (a ? tx : 1 - tx) * (b ? ty : 1 - ty) * (c ? tz : 1 - tz);
                            v += w * lat(xi + a, yi + b, zi + c);
                        }
                    }
                }
                out[d.offset(i, j, k)] = v;
            }
        }
    }
    return out;
}

}  // namespace

SynthCohort synth_cohort(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.n_genes == 0 || spec.snps_per_gene == 0 || spec.n_rois == 0 || spec.cell_size < 3) {
        throw Error(Errc::Config, "synthetic cohort needs genes, SNPs, ROIs and cell_size >= 3");
    }
    SynthCohort c;

    std::vector<RoiEntry> rois;
    for (std::size_t r = 0; r < spec.n_rois; ++r) {
        rois.push_back({static_cast<std::uint32_t>(r + 1), "roi_" + std::to_string(r + 1)});
    }
    c.rois = RoiTable(std::move(rois));

    std::vector<Gene> genes;
    std::size_t rs = 1000;
    for (std::size_t g = 0; g < spec.n_genes; ++g) {
        Gene gene{gene_name(g), {}};
        for (std::size_t s = 0; s < spec.snps_per_gene; ++s) gene.snps.push_back("rs" + std::to_string(++rs));
        genes.push_back(std::move(gene));
    }

    for (const auto& p : spec.planted) {
        if (c.rois.index_of(p.roi_id) < 0) throw Error(Errc::UnknownPlantTarget, "roi " + std::to_string(p.roi_id));
        const bool known = std::any_of(genes.begin(), genes.end(), [&](const Gene& g) { return g.name == p.gene; });
        if (!known) throw Error(Errc::UnknownPlantTarget, "gene " + p.gene);
    }

    // QC violators are appended to gene blocks round-robin: missingness, maf, hwe.
    enum class Violation { None, Missing, Maf, Hwe };
    std::vector<std::vector<Violation>> kinds(genes.size());
    for (std::size_t g = 0; g < genes.size(); ++g) kinds[g].assign(genes[g].snps.size(), Violation::None);
    std::size_t slot = 0;
    for (Violation v : {Violation::Missing, Violation::Maf, Violation::Hwe}) {
        for (std::size_t i = 0; i < spec.qc_violations_per_kind; ++i, ++slot) {
            const std::size_t g = slot % genes.size();
            genes[g].snps.push_back("rsq" + std::to_string(slot + 1));
            kinds[g].push_back(v);
            c.qc_violations.push_back(genes[g].snps.back());
        }
    }
    c.panel = GenePanel(genes);

    std::size_t n_subjects = 0;
    for (auto n : spec.subjects_per_stage) n_subjects += n;
    auto& m = c.genotypes;
    for (const auto& g : genes) {
        for (const auto& s : g.snps) m.columns.push_back({g.name, s});
    }
    for (std::size_t st = 0, id = 0; st < kNumStages; ++st) {
        for (std::size_t i = 0; i < spec.subjects_per_stage[st]; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "S%04zu", ++id);
            m.subjects.emplace_back(buf);
            m.stages.emplace_back(static_cast<Stage>(st));
        }
    }
    m.cells.assign(n_subjects * m.columns.size(), 0);

    // Genotypes, column by column with per-column streams.
    const std::uint64_t geno_seed = derive_seed(seed, "genotypes");
    std::size_t col = 0;
    for (std::size_t g = 0; g < genes.size(); ++g) {
        std::array<double, kNumStages> shift{};
        for (const auto& p : spec.planted) {
            if (p.gene == genes[g].name) shift[static_cast<std::size_t>(p.stage)] += spec.gene_effect_scale * p.effect;
        }
        for (std::size_t k = 0; k < genes[g].snps.size(); ++k, ++col) {
            Rng rng(derive_seed(geno_seed, col));
            const double base_p = rng.uniform(0.2, 0.5);
            const Violation v = kinds[g][k];
            const auto n_missing_violation = static_cast<std::size_t>(std::ceil(0.97 * static_cast<double>(n_subjects)));
            for (std::size_t s = 0; s < n_subjects; ++s) {
                Genotype call = 0;
                switch (v) {
                    case Violation::None: {
                        const auto st = static_cast<std::size_t>(*m.stages[s]);
                        const double p = std::clamp(base_p + shift[st], 0.02, 0.98);
                        call = static_cast<Genotype>((rng.uniform() < p) + (rng.uniform() < p));
                        if (rng.uniform() < spec.missing_rate) call = kMissing;
                        break;
                    }
                    case Violation::Missing:
                        call = s < n_missing_violation ? kMissing
                                                       : static_cast<Genotype>((rng.uniform() < 0.3) + (rng.uniform() < 0.3));
                        break;
                    case Violation::Maf: call = 0; break;
                    case Violation::Hwe: call = 1; break;
                }
                m.at(s, col) = call;
            }
        }
    }

    // Volumes.
    const Grid grid = roi_grid(spec.n_rois);
    const std::uint32_t cs = spec.cell_size;
    const Dims dims{grid.cx * cs, grid.cy * cs, grid.cz * cs};
    const std::uint64_t vol_seed = derive_seed(seed, "volumes");
    for (std::size_t s = 0; s < n_subjects; ++s) {
        Rng rng(derive_seed(vol_seed, s));
        const auto st = *m.stages[s];
        const auto field = smooth_field(dims, rng);
        Volume v(dims, 0.0f);
        LabelVolume l(dims, 0);
        for (std::size_t r = 0; r < spec.n_rois; ++r) {
            const bool absent = spec.absent_roi_rate > 0.0 && rng.uniform() < spec.absent_roi_rate;
            const std::uint32_t gx = static_cast<std::uint32_t>(r % grid.cx);
            const std::uint32_t gy = static_cast<std::uint32_t>((r / grid.cx) % grid.cy);
            const std::uint32_t gz = static_cast<std::uint32_t>(r / (std::size_t{grid.cx} * grid.cy));
            const double center = 0.5 * (cs - 1);
            const double radius_max = 0.5 * cs - 0.5;
            double radius[3];
            for (double& rad : radius) rad = std::clamp(radius_max - 0.5 - rng.uniform(0.0, 1.0), 1.5, radius_max);
            const std::uint32_t roi_id = c.rois.entries()[r].id;
            double ramp_effect = 0.0;
            for (const auto& p : spec.planted) {
                if (p.roi_id == roi_id && p.stage == st) ramp_effect += p.effect;
            }
            const double level = spec.base_intensity * (1.0 + 0.05 * static_cast<double>(r));
            if (absent) continue;
            for (std::uint32_t i = 0; i < cs; ++i) {
                for (std::uint32_t j = 0; j < cs; ++j) {
                    for (std::uint32_t k = 0; k < cs; ++k) {
                        const double dx = (i - center) / radius[0];
                        const double dy = (j - center) / radius[1];
                        const double dz = (k - center) / radius[2];
                        if (dx * dx + dy * dy + dz * dz > 1.0) continue;
                        const std::size_t X = gx * cs + i, Y = gy * cs + j, Z = gz * cs + k;
                        // Ramp 0..2 along x across the ellipsoid; mean over the
                        // symmetric region is 1, so the mean shift equals the effect.
                        const double ramp = 1.0 + dx;
                        const double value = level + ramp_effect * ramp +
                                             spec.smooth_noise_sd * field[dims.offset(X, Y, Z)] +
                                             spec.white_noise_sd * rng.normal();
                        v.at(X, Y, Z) = static_cast<float>(value);
                        l.at(X, Y, Z) = roi_id;
                    }
                }
            }
        }
        // Background tissue outside every ROI.
        for (std::size_t i = 0; i < v.voxels.size(); ++i) {
            if (l.labels[i] == 0) v.voxels[i] = static_cast<float>(0.2 * spec.base_intensity + spec.white_noise_sd * rng.normal());
        }
        c.volumes.push_back(std::move(v));
        c.labels.push_back(std::move(l));
    }
    return c;
}

}  // namespace rgenima
