// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "model_fixture.hpp"
#include "oracles.hpp"
#include "rgenima/attribution.hpp"
#include "rgenima/config.hpp"
#include "rgenima/dataset.hpp"
#include "rgenima/genome.hpp"
#include "rgenima/pipeline.hpp"
#include "rgenima/roi.hpp"
#include "rgenima/stats.hpp"
#include "rgenima/synth.hpp"
#include "rgenima/tsv.hpp"

using namespace rgenima;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double max_abs_diff(const Mat& a, const oracle::Matrix& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            worst = std::max(worst, std::abs(a(i, j) - b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    return worst;
}

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rgenima_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig config_at(const std::string& file, const fs::path& out) {
    RunConfig c = load_config(fs::path(RGENIMA_SOURCE_DIR) / "configs" / file);
    c.paths.out = out.string();
    return c;
}

// Runs the subcommands in order; returns the first failing name, or "".
std::string run_steps(const RunConfig& c, const std::vector<std::string>& steps) {
    std::ostringstream log, err;
    for (const auto& s : steps) {
        if (run_subcommand(s, c, log, err) != 0) return s + " (" + err.str() + ")";
    }
    return {};
}

double summary_accuracy(const fs::path& metrics) {
    const TsvTable t = read_tsv(metrics, {"row", "accuracy"});
    for (const auto& row : t.rows) {
        if (row[0] == "summary") return parse_double(row[1], "accuracy");
    }
    throw Error(Errc::Parse, "no summary row in " + metrics.string());
}

// ---------------------------------------------------------------- 1

Outcome kernels() {
    Timer timer;
    Rng rng(101);
    double worst = 0.0;
    std::size_t self_n = 0, cross_n = 0, nll_n = 0, roll_n = 0;
    for (int i = 0; i < 100; ++i, ++self_n) {
        const std::uint32_t heads = 1 + static_cast<std::uint32_t>(rng.below(3));
        const auto d = static_cast<Eigen::Index>(heads * (1 + rng.below(4)));
        const BlockParams b = fixture::random_block(d, rng);
        const Mat x = fixture::random_mat(static_cast<Eigen::Index>(1 + rng.below(7)), d, rng);
        const bool causal = i % 2 == 0;
        const auto got = self_attention(x, b, heads, causal);
        const auto want = oracle::attention(fixture::to_oracle(x), fixture::to_oracle(x), fixture::to_oracle(b.wq),
                                            fixture::to_oracle(b.wk), fixture::to_oracle(b.wv),
                                            fixture::to_oracle(b.wo), heads, causal);
        worst = std::max(worst, max_abs_diff(got.y, want.y));
        for (std::uint32_t h = 0; h < heads; ++h) worst = std::max(worst, max_abs_diff(got.weights[h], want.weights[h]));
    }
    for (int i = 0; i < 100; ++i, ++cross_n) {
        const std::uint32_t heads = 1 + static_cast<std::uint32_t>(rng.below(3));
        const auto d = static_cast<Eigen::Index>(heads * (1 + rng.below(4)));
        const BlockParams b = fixture::random_block(d, rng);
        const Mat q = fixture::random_mat(static_cast<Eigen::Index>(1 + rng.below(6)), d, rng);
        const Mat kv = fixture::random_mat(static_cast<Eigen::Index>(1 + rng.below(6)), d, rng);
        const auto got = cross_attention(q, kv, b, heads);
        const auto want = oracle::attention(fixture::to_oracle(q), fixture::to_oracle(kv), fixture::to_oracle(b.wq),
                                            fixture::to_oracle(b.wk), fixture::to_oracle(b.wv),
                                            fixture::to_oracle(b.wo), heads, false);
        worst = std::max(worst, max_abs_diff(got.y, want.y));
        for (std::uint32_t h = 0; h < heads; ++h) worst = std::max(worst, max_abs_diff(got.weights[h], want.weights[h]));
    }
    for (int i = 0; i < 100; ++i, ++nll_n) {
        ForwardTrace t;
        const auto len = static_cast<Eigen::Index>(2 + rng.below(8));
        const auto vocab = static_cast<Eigen::Index>(2 + rng.below(12));
        t.logits = fixture::random_mat(len, vocab, rng, 3.0);
        for (Eigen::Index p = 0; p < len; ++p) t.tokens.push_back(static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(vocab))));
        for (Eigen::Index p = 1; p < len; ++p) {
            if (p == len - 1 || rng.uniform() < 0.5) t.target_positions.push_back(static_cast<std::size_t>(p));
        }
        const double want = oracle::nll(fixture::to_oracle(t.logits), t.tokens, t.target_positions);
        worst = std::max(worst, std::abs(nll_loss(t) - want));
    }
    for (int i = 0; i < 100; ++i, ++roll_n) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(8));
        const std::size_t layers = 1 + rng.below(4), heads = 1 + rng.below(3);
        std::vector<std::vector<Mat>> att(layers);
        std::vector<std::vector<oracle::Matrix>> oatt(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            for (std::size_t h = 0; h < heads; ++h) {
                Mat a(n, n);
                for (Eigen::Index r = 0; r < n; ++r) {
                    for (Eigen::Index c = 0; c < n; ++c) a(r, c) = rng.uniform();
                    a.row(r) /= a.row(r).sum();
                }
                att[l].push_back(a);
                oatt[l].push_back(fixture::to_oracle(a));
            }
        }
        worst = std::max(worst, max_abs_diff(attention_rollout(att), oracle::rollout(oatt)));
    }
    const double secs = timer.seconds();
    const std::size_t least = std::min({self_n, cross_n, nll_n, roll_n});
    return {least >= 100 && worst <= 1e-10 && secs < 10.0,
            std::to_string(self_n) + " self / " + std::to_string(cross_n) + " cross / " + std::to_string(nll_n) +
                " nll / " + std::to_string(roll_n) + " rollout instances, max abs diff " + fmt("%.2e", worst) +
                " (tol 1e-10), " + fmt("%.2f", secs) + " s (limit 10 s)"};
}

// ---------------------------------------------------------------- 2

Outcome gradients() {
    Timer timer;
    const auto r = fixture::gradient_check(fixture::grad_problem(), 50, 1e-5, 202);
    const double secs = timer.seconds();
    return {r.worst <= 1e-4 && secs < 120.0,
            std::to_string(r.coordinates) + " coordinates over " + std::to_string(r.tensors) +
                " tensors, max relative error " + fmt("%.2e", r.worst) + " in " + r.worst_tensor +
                " (tol 1e-4), " + fmt("%.1f", secs) + " s (limit 120 s)"};
}

// ---------------------------------------------------------------- 3

Outcome hwe() {
    double worst_p = 0.0, worst_dist = 0.0, worst_mass = 0.0;
    std::size_t configs = 0;
    for (std::int64_t n = 1; n <= 20; ++n) {
        for (std::int64_t aa = 0; aa <= n; ++aa) {
            for (std::int64_t ab = 0; aa + ab <= n; ++ab, ++configs) {
                const std::int64_t bb = n - aa - ab;
                const auto law = oracle::hwe_law(aa, ab, bb);
                const auto dist = hwe_het_distribution(aa, ab, bb);
                double mass = 0.0;
                if (dist.size() != law.het.size()) return {false, "support size differs at " + std::to_string(n)};
                for (std::size_t i = 0; i < dist.size(); ++i) {
                    if (dist[i].het != law.het[i]) return {false, "support differs at " + std::to_string(n)};
                    worst_dist = std::max(worst_dist, std::abs(dist[i].probability - oracle::to_double(law.numer[i], law.denom)));
                    mass += dist[i].probability;
                }
                worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
                worst_p = std::max(worst_p, std::abs(hwe_exact_p(aa, ab, bb) - oracle::hwe_p(aa, ab, bb)));
            }
        }
    }
    return {worst_p <= 1e-12 && worst_dist <= 1e-12 && worst_mass <= 1e-10,
            std::to_string(configs) + " configurations with N <= 20, max |p diff| " + fmt("%.2e", worst_p) +
                ", max |pmf diff| " + fmt("%.2e", worst_dist) + " (tol 1e-12), max |mass - 1| " +
                fmt("%.2e", worst_mass) + " (tol 1e-10)"};
}

// ---------------------------------------------------------------- 4

std::vector<std::string> gene_range(int from, int to) {
    std::vector<std::string> out;
    for (int i = from; i < to; ++i) out.push_back("g" + std::to_string(i));
    return out;
}

Outcome fisher() {
    Rng rng(404);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const auto N = static_cast<int>(1 + rng.below(200));
        const auto K = static_cast<int>(rng.below(static_cast<std::uint64_t>(N + 1)));
        const auto n = static_cast<int>(rng.below(static_cast<std::uint64_t>(N + 1)));
        const int lo = std::max(0, n + K - N), hi = std::min(K, n);
        const int a = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
        // Reference is g0..g(K-1); selected takes a of them and n-a from the rest.
        auto selected = gene_range(0, a);
        for (const auto& g : gene_range(K, K + n - a)) selected.push_back(g);
        const auto r = fisher_enrichment(selected, gene_range(0, K), gene_range(0, N));
        if (r.table.a != a || r.table.a + r.table.b + r.table.c + r.table.d != N) return {false, "table mismatch"};
        worst = std::max(worst, std::abs(r.p - oracle::hypergeom_tail(a, K, n, N)));
    }
    auto sel = gene_range(0, 7);
    sel.push_back("g50");
    sel.push_back("g51");
    const auto r = fisher_enrichment(sel, gene_range(0, 45), gene_range(0, 105));
    const bool table_ok = r.table.a == 7 && r.table.b == 2 && r.table.c == 38 && r.table.d == 58;
    const bool ok = worst <= 1e-10 && table_ok && std::abs(r.p - 0.0313) <= 1e-4 && std::abs(r.odds_ratio - 5.342) <= 1e-3;
    return {ok, "1000 random tables (|U| <= 200), max |p diff| " + fmt("%.2e", worst) + " (tol 1e-10); table (" +
                    std::to_string(r.table.a) + "," + std::to_string(r.table.b) + "," + std::to_string(r.table.c) +
                    "," + std::to_string(r.table.d) + ") p = " + fmt("%.6f", r.p) + " (0.0313 +- 1e-4), OR = " +
                    fmt("%.4f", r.odds_ratio) + " (5.342 +- 1e-3); published P=0.027, OR=5.58 need the unpublished overlap"};
}

// ---------------------------------------------------------------- 5

double sample_coord(std::uint32_t k, std::uint32_t m, std::uint32_t s) {
    if (s == 1 || m == 1) return 0.5 * (m - 1);
    return static_cast<double>(k) * (m - 1) / (s - 1);
}

RoiExtract extract_of(Dims d, const std::function<double(double, double, double)>& f) {
    RoiExtract e;
    e.roi_id = 1;
    e.bbox = {0, d.x - 1, 0, d.y - 1, 0, d.z - 1};
    e.masked = Volume(d);
    for (std::uint32_t i = 0; i < d.x; ++i)
        for (std::uint32_t j = 0; j < d.y; ++j)
            for (std::uint32_t k = 0; k < d.z; ++k) e.masked.at(i, j, k) = static_cast<float>(f(i, j, k));
    return e;
}

Outcome trilinear() {
    Rng rng(505);
    double worst = 0.0;
    bool idempotent = true;
    std::size_t fields = 0;
    for (int t = 0; t < 200; ++t, ++fields) {
        // Coefficients on a 1/64 grid so the float32 voxels hold the field exactly.
        double coef[4];
        for (double& c : coef) c = std::round(rng.uniform(-2.0, 2.0) * 64.0) / 64.0;
        auto f = [&](double x, double y, double z) { return coef[0] + coef[1] * x + coef[2] * y + coef[3] * z; };
        const Dims d{1 + static_cast<std::uint32_t>(rng.below(8)), 1 + static_cast<std::uint32_t>(rng.below(8)),
                     1 + static_cast<std::uint32_t>(rng.below(8))};
        const auto e = extract_of(d, f);
        const auto s = 1 + static_cast<std::uint32_t>(rng.below(10));
        const auto out = resample_trilinear(e, s);
        std::size_t o = 0;
        for (std::uint32_t i = 0; i < s; ++i)
            for (std::uint32_t j = 0; j < s; ++j)
                for (std::uint32_t k = 0; k < s; ++k)
                    worst = std::max(worst, std::abs(out[o++] - f(sample_coord(i, d.x, s), sample_coord(j, d.y, s),
                                                                   sample_coord(k, d.z, s))));
        // Native size: an s^3 box resampled to s must return its voxels.
        const auto n = 1 + static_cast<std::uint32_t>(rng.below(8));
        const auto cube = extract_of({n, n, n}, [&](double, double, double) { return rng.normal(); });
        const auto same = resample_trilinear(cube, n);
        for (std::size_t i = 0; i < same.size(); ++i) idempotent &= same[i] == static_cast<double>(cube.masked.voxels[i]);
    }
    return {worst <= 1e-6 && idempotent, std::to_string(fields) + " linear fields, max abs error " + fmt("%.2e", worst) +
                                             " (tol 1e-6); native-size resampling " +
                                             (idempotent ? "bit-identical" : "NOT identical")};
}

// ---------------------------------------------------------------- 6 and 7

const std::vector<std::string> kToEval{"synth", "qc", "dataset", "train", "eval"};

struct DeskRun {
    fs::path root;
    RunConfig config;
    std::string error;
    double accuracy = 0.0;
    double seconds = 0.0;
};

DeskRun& desk_run() {
    static DeskRun run = [] {
        DeskRun r;
        r.root = work_dir("desk");
        r.config = config_at("desk.ini", r.root);
        Timer timer;
        r.error = run_steps(r.config, kToEval);
        r.seconds = timer.seconds();
        if (r.error.empty()) r.accuracy = summary_accuracy(RunLayout{r.root}.eval() / "metrics.tsv");
        return r;
    }();
    return run;
}

Outcome desk_learning() {
    const DeskRun& img = desk_run();
    if (!img.error.empty()) return {false, "image_gene run failed at " + img.error};
    const fs::path root = work_dir("desk_gene_only");
    RunConfig c = config_at("desk.ini", root);
    c.dataset.mode = DatasetMode::GeneOnly;
    const std::string err = run_steps(c, kToEval);
    if (!err.empty()) return {false, "gene_only run failed at " + err};
    const double gene_only = summary_accuracy(RunLayout{root}.eval() / "metrics.tsv");
    return {img.accuracy >= 0.9 && img.seconds < 600.0 && gene_only < img.accuracy,
            "image_gene held-out accuracy " + fmt("%.4f", img.accuracy) + " (>= 0.90) in " +
                fmt("%.0f", img.seconds) + " s (limit 600 s); gene_only " + fmt("%.4f", gene_only) +
                " (must be below image_gene)"};
}

Outcome attribution_recovery() {
    const DeskRun& run = desk_run();
    if (!run.error.empty()) return {false, "desk run failed at " + run.error};
    Timer timer;
    const std::string err = run_steps(run.config, {"attribute", "stability"});
    const double secs = timer.seconds();
    if (!err.empty()) return {false, "failed at " + err};
    const RunLayout L{run.root};
    const auto table = read_stability(L.stability() / "stability.tsv");
    const TsvTable genes = read_tsv(L.stability() / "genes.tsv", {"stage", "feature", "count", "frequency", "selected"});

    bool ok = secs < 300.0 && run.config.stability.n_bootstrap == 1000 && run.config.stability.selection_threshold == 0.5;
    std::string detail;
    for (Stage st : {Stage::SMC, Stage::MCI, Stage::AD}) {
        std::set<std::pair<std::uint32_t, std::string>> top5;
        const auto it = table.find(st);
        if (it != table.end()) {
            for (std::size_t i = 0; i < std::min<std::size_t>(5, it->second.size()); ++i) {
                top5.insert({it->second[i].roi_id, it->second[i].gene});
            }
        }
        std::set<std::string> stable;
        for (const auto& row : genes.rows) {
            if (row[0] == stage_name(st) && row[4] == "1") stable.insert(row[1]);
        }
        int pairs_hit = 0, genes_hit = 0, planted = 0;
        for (const auto& p : run.config.synth.planted) {
            if (p.stage != st) continue;
            ++planted;
            pairs_hit += top5.contains({p.roi_id, p.gene});
            genes_hit += stable.contains(p.gene);
        }
        ok &= pairs_hit >= 2 && genes_hit == planted;
        detail += std::string(stage_name(st)) + " " + std::to_string(pairs_hit) + "/" + std::to_string(planted) +
                  " pairs in top-5, " + std::to_string(genes_hit) + "/" + std::to_string(planted) + " genes stable; ";
    }
    return {ok, detail + "B=" + std::to_string(run.config.stability.n_bootstrap) + ", " + fmt("%.0f", secs) +
                    " s (limit 300 s)"};
}

// ---------------------------------------------------------------- 8

Outcome mixture() {
    SynthSpec spec;  // 4 x 60 subjects, 10 genes x 5 SNPs
    spec.cell_size = 3;
    const SynthCohort cohort = synth_cohort(spec, 808);
    const QcResult qc = run_qc(cohort.genotypes, cohort.panel, QcThresholds{});
    std::map<std::string, std::string> patches;
    for (const auto& s : qc.matrix.subjects) patches[s] = "patches/" + s + ".rvol";

    bool ok = true;
    std::string detail;
    for (auto [train, test] : {std::pair<std::size_t, std::size_t>{10, 2}, {768, 48}, {50000, 10000}}) {
        Timer timer;
        const Dataset d = build_dataset(qc.matrix, qc.panel, patches, {DatasetMode::Mixture, train, test, 9});
        std::size_t paired_train = 0, paired_test = 0;
        for (const auto& r : d.train) paired_train += r.anchored;
        for (const auto& r : d.test) paired_test += r.anchored;
        std::set<std::string> a, b;
        for (const auto& r : d.train) a.insert(r.subject_id);
        for (const auto& r : d.test) b.insert(r.subject_id);
        std::size_t overlap = 0;
        for (const auto& id : a) overlap += b.contains(id);
        const bool here = d.train.size() == train && d.test.size() == test && 2 * paired_train == train &&
                          2 * paired_test == test && overlap == 0;
        ok &= here;
        detail += std::to_string(d.train.size()) + "/" + std::to_string(d.test.size()) + " records, paired " +
                  std::to_string(paired_train) + "+" + std::to_string(paired_test) + ", shared subjects " +
                  std::to_string(overlap) + " (" + fmt("%.1f", timer.seconds()) + " s); ";
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

// ---------------------------------------------------------------- 9

Outcome metrics() {
    bool ok = true;
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-15; };
    Confusion diag{};
    for (std::size_t i = 0; i < kNumStages; ++i) diag[i][i] = 5 + i;
    const auto d = classification_metrics(diag);
    ok &= d.accuracy == 1.0 && d.macro_f1 == 1.0;
    for (const auto& m : d.per_class) ok &= m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0 && m.specificity == 1.0;

    Confusion two{};
    two[0][0] = 5, two[0][1] = 5, two[1][1] = 10;
    const auto t = classification_metrics(two);
    ok &= t.per_class[0].precision == 1.0 && t.per_class[0].recall == 0.5 && near(t.per_class[0].f1, 2.0 / 3.0);
    ok &= near(t.per_class[1].precision, 2.0 / 3.0) && t.per_class[1].recall == 1.0 && near(t.per_class[1].f1, 0.8);
    ok &= t.accuracy == 0.75 && near(t.per_class[0].specificity, 1.0) && near(t.per_class[1].specificity, 0.5);

    Confusion col{};
    col[0][3] = 2, col[1][3] = 3, col[3][3] = 4;
    const auto c = classification_metrics(col);
    ok &= c.per_class[3].specificity == 0.0 && near(c.per_class[3].precision, 4.0 / 9.0);

    // Hand-worked 4-class matrix.
    Confusion full{{{8, 1, 1, 0}, {2, 6, 2, 0}, {0, 1, 7, 2}, {0, 0, 1, 9}}};
    const auto f = classification_metrics(full);
    ok &= f.accuracy == 30.0 / 40.0;
    ok &= near(f.per_class[0].precision, 0.8) && near(f.per_class[0].recall, 0.8) &&
          near(f.per_class[0].specificity, 28.0 / 30.0);
    ok &= near(f.per_class[2].precision, 7.0 / 11.0) && near(f.per_class[2].recall, 0.7);
    ok &= near(f.per_class[3].f1, 2 * (9.0 / 11.0) * 0.9 / (9.0 / 11.0 + 0.9));

    const fs::path dir = work_dir("metrics");
    write_metrics(f, dir / "metrics.tsv");
    const TsvTable tsv = read_tsv(dir / "metrics.tsv", {"row"});
    std::set<std::string> columns(tsv.header.begin(), tsv.header.end());
    for (const char* col_name : {"accuracy", "macro_f1", "precision", "recall", "f1", "specificity"}) {
        ok &= columns.contains(col_name);
    }
    std::set<std::string> rows;
    for (const auto& r : tsv.rows) rows.insert(r[0]);
    ok &= rows == std::set<std::string>{"NC", "SMC", "MCI", "AD", "summary"};
    return {ok, "diagonal, two-class, single-column and 4-class fixtures; schema columns " + std::to_string(columns.size() - 1) +
                    " (accuracy, macro_f1, precision, recall, f1, specificity, flags), rows NC/SMC/MCI/AD/summary"};
}

// ---------------------------------------------------------------- 10

std::map<std::string, std::string> artifacts(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), root).generic_string();
        if (rel.rfind("logs/", 0) == 0) continue;
        out[rel] = detail::read_file(e.path());
    }
    return out;
}

Outcome determinism() {
    const auto& steps = subcommand_names();
    std::map<std::string, std::string> runs[3];
    const unsigned threads[3] = {1, 1, 3};
    for (int i = 0; i < 3; ++i) {
        const fs::path root = work_dir("determinism_" + std::to_string(i));
        RunConfig c = config_at("smoke.ini", root);
        c.threads = threads[i];
        const std::string err = run_steps(c, steps);
        if (!err.empty()) return {false, "run " + std::to_string(i) + " failed at " + err};
        runs[i] = artifacts(root);
    }
    auto differing = [](const auto& a, const auto& b) {
        std::size_t n = 0;
        for (const auto& [k, v] : a) n += !b.contains(k) || b.at(k) != v;
        return n + (a.size() != b.size());
    };
    const std::size_t same_seed = differing(runs[0], runs[1]), other_threads = differing(runs[0], runs[2]);
    return {same_seed == 0 && other_threads == 0 && !runs[0].empty(),
            std::to_string(runs[0].size()) + " artifacts over all 9 subcommands (smoke config); differing files: " +
                std::to_string(same_seed) + " on rerun, " + std::to_string(other_threads) + " with 3 threads"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"numerical kernels vs formula oracles", kernels},
        {"gradient check", gradients},
        {"HWE exact test vs enumeration", hwe},
        {"hypergeometric / Fisher suite", fisher},
        {"trilinear exactness and idempotence", trilinear},
        {"desk-scale learning", desk_learning},
        {"planted-signal attribution recovery", attribution_recovery},
        {"mixture dataset contract", mixture},
        {"metrics fixtures and schema", metrics},
        {"determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.contains(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[i].first << "): " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
