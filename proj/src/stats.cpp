#include "rgenima/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include <json.hpp>

#include "rgenima/error.hpp"
#include "rgenima/rng.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

namespace {

// Runs body(b) for b in [0, n) over `threads` workers with static chunking.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F body) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        for (std::size_t b = 0; b < n; ++b) body(b);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t b = lo; b < hi; ++b) body(b);
        });
    }
    for (auto& th : pool) th.join();
}

// Incremental mean; a constant sample reproduces the constant exactly.
double running_mean(double mean, double x, std::size_t i) { return mean + (x - mean) / static_cast<double>(i + 1); }

}  // namespace

std::vector<double> bootstrap_means(std::span<const double> x, std::size_t n_bootstrap, std::uint64_t seed,
                                    unsigned threads) {
    if (x.empty()) throw Error(Errc::EmptySample, "bootstrap of an empty sample");
    std::vector<double> out(n_bootstrap);
    const std::size_t n = x.size();
    parallel_for(n_bootstrap, threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean = running_mean(mean, x[rng.below(n)], i);
        out[b] = mean;
    });
    return out;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw Error(Errc::EmptySample, "percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

double stability_score(double boot_mean, double ci_lo, double ci_hi, double eps) {
    return boot_mean / std::max(ci_hi - ci_lo, eps);
}

void StabilityConfig::validate() const {
    if (n_bootstrap < 1) throw Error(Errc::Config, "n_bootstrap must be >= 1");
    if (!(ci_lo > 0.0 && ci_lo < ci_hi && ci_hi < 100.0)) throw Error(Errc::Config, "need 0 < ci_lo < ci_hi < 100");
    if (!(selection_threshold > 0.0 && selection_threshold < 1.0)) {
        throw Error(Errc::Config, "selection_threshold must lie in (0,1)");
    }
    if (!(epsilon_width > 0.0)) throw Error(Errc::Config, "epsilon_width must be positive");
}

std::vector<std::vector<double>> group_replicates(const GroupSamples& group, const StabilityConfig& cfg) {
    const std::size_t n = group.subjects.size();
    if (n == 0) throw Error(Errc::EmptySample, std::string("empty group ") + stage_name(group.stage));
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(group.stage));
    const std::size_t B = cfg.n_bootstrap;
    std::vector<std::vector<double>> out(group.samples.size(), std::vector<double>(B));
    parallel_for(B, cfg.threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::vector<std::size_t> draws(n);
        for (auto& d : draws) d = rng.below(n);
        for (std::size_t p = 0; p < group.samples.size(); ++p) {
            const auto& x = group.samples[p];
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean = running_mean(mean, x[draws[i]], i);
            out[p][b] = mean;
        }
    });
    return out;
}

std::vector<StabilityRecord> stability_records(const GroupSamples& group,
                                               const std::vector<std::vector<double>>& replicates,
                                               const StabilityConfig& cfg) {
    std::vector<StabilityRecord> out;
    for (std::size_t r = 0; r < group.roi_ids.size(); ++r) {
        for (std::size_t g = 0; g < group.genes.size(); ++g) {
            const auto& reps = replicates[r * group.genes.size() + g];
            StabilityRecord rec;
            rec.roi_id = group.roi_ids[r];
            rec.gene = group.genes[g];
            double sum = 0.0;
            for (double v : reps) sum += v;
            rec.boot_mean = sum / static_cast<double>(reps.size());
            rec.ci_lo_value = percentile(reps, cfg.ci_lo);
            rec.ci_hi_value = percentile(reps, cfg.ci_hi);
            rec.stability = stability_score(rec.boot_mean, rec.ci_lo_value, rec.ci_hi_value, cfg.epsilon_width);
            out.push_back(std::move(rec));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const StabilityRecord& a, const StabilityRecord& b) {
        if (a.stability != b.stability) return a.stability > b.stability;
        if (a.roi_id != b.roi_id) return a.roi_id < b.roi_id;
        return a.gene < b.gene;
    });
    return out;
}

std::map<Stage, std::vector<StabilityRecord>> stability_table(const std::vector<GroupSamples>& groups,
                                                              const StabilityConfig& cfg) {
    cfg.validate();
    std::map<Stage, std::vector<StabilityRecord>> out;
    for (const auto& g : groups) out[g.stage] = stability_records(g, group_replicates(g, cfg), cfg);
    return out;
}

std::vector<FeatureFrequency> select_stable_features(const std::vector<std::vector<double>>& scores,
                                                     const std::vector<std::string>& names, std::size_t top_k,
                                                     double threshold) {
    if (top_k > names.size()) {
        throw Error(Errc::TopKExceedsFeatures, std::to_string(top_k) + " > " + std::to_string(names.size()));
    }
    std::vector<std::size_t> counts(names.size(), 0);
    std::vector<std::size_t> order(names.size());
    for (const auto& iter : scores) {
        if (iter.size() != names.size()) throw Error(Errc::ShapeMismatch, "iteration does not score every feature");
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (iter[a] != iter[b]) return iter[a] > iter[b];
            return names[a] < names[b];
        });
        for (std::size_t k = 0; k < top_k; ++k) ++counts[order[k]];
    }
    std::vector<FeatureFrequency> out;
    const double B = static_cast<double>(scores.size());
    for (std::size_t f = 0; f < names.size(); ++f) {
        const double freq = scores.empty() ? 0.0 : static_cast<double>(counts[f]) / B;
        out.push_back({names[f], counts[f], freq, static_cast<double>(counts[f]) > threshold * B});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

std::vector<std::vector<double>> gene_iteration_scores(const GroupSamples& group,
                                                       const std::vector<std::vector<double>>& replicates) {
    const std::size_t R = group.roi_ids.size(), G = group.genes.size();
    const std::size_t B = replicates.empty() ? 0 : replicates.front().size();
    std::vector<std::vector<double>> out(B, std::vector<double>(G, 0.0));
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t g = 0; g < G; ++g) {
            double s = 0.0;
            for (std::size_t r = 0; r < R; ++r) s += replicates[r * G + g][b];
            out[b][g] = s / static_cast<double>(R);
        }
    }
    return out;
}

std::vector<std::vector<double>> roi_iteration_scores(const GroupSamples& group,
                                                      const std::vector<std::vector<double>>& replicates) {
    const std::size_t R = group.roi_ids.size(), G = group.genes.size();
    const std::size_t B = replicates.empty() ? 0 : replicates.front().size();
    std::vector<std::vector<double>> out(B, std::vector<double>(R, 0.0));
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t r = 0; r < R; ++r) {
            double s = 0.0;
            for (std::size_t g = 0; g < G; ++g) s += replicates[r * G + g][b];
            out[b][r] = s / static_cast<double>(G);
        }
    }
    return out;
}

// ---------------------------------------------------------------- enrichment

namespace {

double log_choose(std::int64_t n, std::int64_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

void check_hypergeom(std::int64_t K, std::int64_t n, std::int64_t N) {
    if (N < 0 || K < 0 || n < 0 || K > N || n > N) {
        throw Error(Errc::InvalidTable, "need 0 <= K, n <= N (K=" + std::to_string(K) + ", n=" + std::to_string(n) +
                                            ", N=" + std::to_string(N) + ")");
    }
}

}  // namespace

double hypergeom_pmf(std::int64_t k, std::int64_t K, std::int64_t n, std::int64_t N) {
    check_hypergeom(K, n, N);
    if (k < std::max<std::int64_t>(0, n + K - N) || k > std::min(K, n)) return 0.0;
    return std::exp(log_choose(K, k) + log_choose(N - K, n - k) - log_choose(N, n));
}

double hypergeom_tail(std::int64_t a, std::int64_t K, std::int64_t n, std::int64_t N) {
    check_hypergeom(K, n, N);
    if (a < 0 || a > std::min(K, n)) {
        throw Error(Errc::InvalidTable, "overlap " + std::to_string(a) + " outside [0, min(K,n)]");
    }
    const std::int64_t lo = std::max<std::int64_t>(a, std::max<std::int64_t>(0, n + K - N));
    if (lo == std::max<std::int64_t>(0, n + K - N)) return 1.0;
    double p = 0.0;
    for (std::int64_t k = lo; k <= std::min(K, n); ++k) p += hypergeom_pmf(k, K, n, N);
    return std::clamp(p, 0.0, 1.0);
}

EnrichmentResult fisher_enrichment(const std::vector<std::string>& selected, const std::vector<std::string>& reference,
                                   const std::vector<std::string>& universe) {
    const std::set<std::string> u(universe.begin(), universe.end());
    const std::set<std::string> sel(selected.begin(), selected.end());
    const std::set<std::string> ref(reference.begin(), reference.end());
    for (const auto* s : {&sel, &ref}) {
        for (const auto& g : *s) {
            if (!u.contains(g)) throw Error(Errc::NotInUniverse, g);
        }
    }
    EnrichmentResult r;
    auto& t = r.table;
    for (const auto& g : sel) t.a += ref.contains(g) ? 1 : 0;
    t.b = static_cast<std::int64_t>(sel.size()) - t.a;
    t.c = static_cast<std::int64_t>(ref.size()) - t.a;
    t.d = static_cast<std::int64_t>(u.size()) - t.a - t.b - t.c;
    r.p = hypergeom_tail(t.a, static_cast<std::int64_t>(ref.size()), static_cast<std::int64_t>(sel.size()),
                         static_cast<std::int64_t>(u.size()));
    r.corrected = t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0;
    const double h = r.corrected ? 0.5 : 0.0;
    r.odds_ratio = ((t.a + h) * (t.d + h)) / ((t.b + h) * (t.c + h));
    return r;
}

std::string format_enrichment(const EnrichmentResult& r) {
    nlohmann::ordered_json j;
    j["a"] = r.table.a;
    j["b"] = r.table.b;
    j["c"] = r.table.c;
    j["d"] = r.table.d;
    j["p"] = r.p;
    j["odds_ratio"] = r.odds_ratio;
    j["corrected_flag"] = r.corrected;
    return j.dump();
}

// ---------------------------------------------------------------- metrics

ClassificationReport classification_metrics(const Confusion& confusion,
                                            const std::array<std::uint64_t, kNumStages>& unparseable) {
    ClassificationReport rep;
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < kNumStages; ++i) {
        rep.total += unparseable[i];
        for (std::size_t j = 0; j < kNumStages; ++j) rep.total += confusion[i][j];
        correct += confusion[i][i];
    }
    if (rep.total == 0) throw Error(Errc::EmptyMatrix, "confusion matrix has no samples");
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.total);

    auto ratio = [](std::uint64_t num, std::uint64_t den, bool& undefined) {
        undefined = den == 0;
        return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < kNumStages; ++c) {
        std::uint64_t tp = confusion[c][c], fp = 0, fn = unparseable[c];
        for (std::size_t k = 0; k < kNumStages; ++k) {
            if (k == c) continue;
            fp += confusion[k][c];
            fn += confusion[c][k];
        }
        const std::uint64_t tn = rep.total - tp - fp - fn;
        auto& m = rep.per_class[c];
        m.precision = ratio(tp, tp + fp, m.precision_undefined);
        m.recall = ratio(tp, tp + fn, m.recall_undefined);
        m.f1_undefined = m.precision + m.recall == 0.0;
        m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        m.specificity = ratio(tn, tn + fp, m.specificity_undefined);
        f1_sum += m.f1;
    }
    rep.macro_f1 = f1_sum / static_cast<double>(kNumStages);
    return rep;
}

void write_metrics(const ClassificationReport& r, const std::filesystem::path& path) {
    std::string out = "row\taccuracy\tmacro_f1\tprecision\trecall\tf1\tspecificity\tflags\n";
    for (std::size_t c = 0; c < kNumStages; ++c) {
        const auto& m = r.per_class[c];
        std::string flags;
        auto flag = [&](bool on, const char* name) {
            if (!on) return;
            if (!flags.empty()) flags += ",";
            flags += name;
        };
        flag(m.precision_undefined, "precision_undefined");
        flag(m.recall_undefined, "recall_undefined");
        flag(m.f1_undefined, "f1_undefined");
        flag(m.specificity_undefined, "specificity_undefined");
        out += std::string(stage_name(static_cast<Stage>(c))) + "\t-\t-\t" + format_g17(m.precision) + "\t" +
               format_g17(m.recall) + "\t" + format_g17(m.f1) + "\t" + format_g17(m.specificity) + "\t" +
               (flags.empty() ? "-" : flags) + "\n";
    }
    out += "summary\t" + format_g17(r.accuracy) + "\t" + format_g17(r.macro_f1) + "\t-\t-\t-\t-\ttotal=" +
           std::to_string(r.total) + "\n";
    detail::write_file(path, out);
}

void write_confusion(const Confusion& c, const std::array<std::uint64_t, kNumStages>& unparseable,
                     const std::filesystem::path& path) {
    std::string out = "true\\pred\tNC\tSMC\tMCI\tAD\tunparseable\n";
    for (std::size_t i = 0; i < kNumStages; ++i) {
        out += stage_name(static_cast<Stage>(i));
        for (std::size_t j = 0; j < kNumStages; ++j) out += "\t" + std::to_string(c[i][j]);
        out += "\t" + std::to_string(unparseable[i]) + "\n";
    }
    detail::write_file(path, out);
}

void write_stability(const std::map<Stage, std::vector<StabilityRecord>>& table, const std::filesystem::path& path) {
    std::string out = "stage\troi_id\tgene\tboot_mean\tci_lo\tci_hi\tstability\trank\n";
    for (const auto& [stage, records] : table) {
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            out += std::string(stage_name(stage)) + "\t" + std::to_string(r.roi_id) + "\t" + r.gene + "\t" +
                   format_g17(r.boot_mean) + "\t" + format_g17(r.ci_lo_value) + "\t" + format_g17(r.ci_hi_value) +
                   "\t" + format_g17(r.stability) + "\t" + std::to_string(i + 1) + "\n";
        }
    }
    detail::write_file(path, out);
}

std::map<Stage, std::vector<StabilityRecord>> read_stability(const std::filesystem::path& path) {
    const TsvTable t =
        read_tsv(path, {"stage", "roi_id", "gene", "boot_mean", "ci_lo", "ci_hi", "stability", "rank"});
    std::map<Stage, std::vector<StabilityRecord>> out;
    for (const auto& row : t.rows) {
        StabilityRecord r;
        r.roi_id = parse_u32(row[1], "roi_id");
        r.gene = row[2];
        r.boot_mean = parse_double(row[3], "boot_mean");
        r.ci_lo_value = parse_double(row[4], "ci_lo");
        r.ci_hi_value = parse_double(row[5], "ci_hi");
        r.stability = parse_double(row[6], "stability");
        out[parse_stage(row[0])].push_back(std::move(r));
    }
    return out;
}

}  // namespace rgenima
