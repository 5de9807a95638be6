#include "rgenima/pipeline.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "rgenima/attribution.hpp"
#include "rgenima/dataset.hpp"
#include "rgenima/roi.hpp"
#include "rgenima/rng.hpp"
#include "rgenima/synth.hpp"
#include "rgenima/train.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/vocab.hpp"

namespace fs = std::filesystem;

namespace rgenima {

int exit_code_for(Errc c) {
    switch (c) {
        case Errc::Parse:
        case Errc::BadMagic:
        case Errc::BadVersion:
        case Errc::TruncatedData:
        case Errc::NonFiniteVoxel:
        case Errc::DTypeMismatch:
        case Errc::UnknownStage:
        case Errc::UnknownLabel:
        case Errc::UnknownToken:
        case Errc::NegativeCount:
        case Errc::MissingGenotype:
        case Errc::LabelOutOfRange:
        case Errc::DimsMismatch:
        case Errc::DuplicateRoi:
            return 2;
        case Errc::Config:
        case Errc::UnknownPlantTarget:
        case Errc::TopKExceedsFeatures:
        case Errc::UnknownRoiInFilter:
        case Errc::InsufficientSubjects:
        case Errc::NotInUniverse:
            return 3;
        case Errc::EmptyResult:
        case Errc::EmptyColumn:
        case Errc::EmptyGroup:
        case Errc::EmptySample:
        case Errc::EmptyMatrix:
        case Errc::EmptyTrace:
            return 4;
        case Errc::MissingArtifact:
        case Errc::MissingPatchSet:
        case Errc::IoFailure:
            return 5;
        default:
            return 1;
    }
}

namespace {

fs::path input_or(const std::string& configured, const fs::path& fallback) {
    const fs::path p = configured.empty() ? fallback : fs::path(configured);
    if (!fs::exists(p)) throw Error(Errc::MissingArtifact, "missing input " + p.string());
    return p;
}

fs::path need(const fs::path& p) {
    if (!fs::exists(p)) throw Error(Errc::MissingArtifact, "missing artifact " + p.string() + " (run the upstream step)");
    return p;
}

void wrote(std::ostream& log, const fs::path& p) { log << "wrote " << p.string() << "\n"; }

// Runs body(i) for i in [0, n); each index owns its output slot, so results do
// not depend on the worker count.
template <typename F>
void for_each_index(std::size_t n, unsigned threads, F body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

RunLayout layout(const RunConfig& c) { return RunLayout{fs::path(c.paths.out)}; }

RoiTable load_rois(const RunConfig& c) {
    return read_roi_table(input_or(c.paths.roi_table, layout(c).cohort() / "roi_table.tsv"));
}

struct Model {
    ModelConfig cfg;
    Params params;
    Vocab vocab;
};

Model load_model(const RunLayout& L) {
    Model m;
    std::tie(m.cfg, m.params) = load_checkpoint(need(L.model() / "checkpoint.rgma"));
    m.vocab = Vocab::load(need(L.model() / "vocab.txt"));
    if (m.vocab.size() != m.cfg.vocab_size) throw Error(Errc::ShapeMismatch, "vocab does not match checkpoint");
    return m;
}

// Patch sets referenced by records, loaded once each.
std::map<std::string, RoiPatchSet> load_patch_sets(const RunLayout& L, const std::vector<const DatasetRecord*>& recs) {
    std::map<std::string, RoiPatchSet> out;
    for (const auto* r : recs) {
        if (!r->anchored || out.contains(r->patch_set)) continue;
        out.emplace(r->patch_set, read_patch_set(need(L.root / r->patch_set), r->subject_id));
    }
    return out;
}

Mat encode_image(const RoiPatchSet& p, const Model& m) { return rit_encode(p, m.cfg, m.params).image; }

void write_features(const std::map<Stage, std::vector<FeatureFrequency>>& by_stage, const fs::path& path) {
    std::string out = "stage\tfeature\tcount\tfrequency\tselected\n";
    for (const auto& [stage, feats] : by_stage) {
        for (const auto& f : feats) {
            out += std::string(stage_name(stage)) + "\t" + f.name + "\t" + std::to_string(f.count) + "\t" +
                   format_g17(f.frequency) + "\t" + (f.selected ? "1" : "0") + "\n";
        }
    }
    detail::write_file(path, out);
}

// Selected features of one stage ("" for every stage).
std::vector<std::string> read_selected(const fs::path& path, std::optional<Stage> stage) {
    const TsvTable t = read_tsv(path, {"stage", "feature", "count", "frequency", "selected"});
    std::vector<std::string> out;
    for (const auto& row : t.rows) {
        if (stage && parse_stage(row[0]) != *stage) continue;
        if (row[4] == "1") out.push_back(row[1]);
    }
    return out;
}

}  // namespace

void cmd_synth(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const SynthCohort cohort = synth_cohort(c.synth, derive_seed(c.seed, "synth"));
    fs::create_directories(L.cohort() / "volumes");
    fs::create_directories(L.cohort() / "labels");
    write_genotypes(cohort.genotypes, L.cohort() / "genotypes.tsv");
    write_gene_panel(cohort.panel, L.cohort() / "gene_panel.tsv");
    write_roi_table(cohort.rois, L.cohort() / "roi_table.tsv");
    for (std::size_t i = 0; i < cohort.volumes.size(); ++i) {
        const std::string id = cohort.genotypes.subjects[i];
        write_volume(cohort.volumes[i], L.cohort() / "volumes" / (id + ".rvol"));
        write_labels(cohort.labels[i], L.cohort() / "labels" / (id + ".rvol"));
    }
    std::vector<std::string> planted_genes;
    for (const auto& p : c.synth.planted) planted_genes.push_back(p.gene);
    std::sort(planted_genes.begin(), planted_genes.end());
    planted_genes.erase(std::unique(planted_genes.begin(), planted_genes.end()), planted_genes.end());
    write_gene_set(planted_genes, L.cohort() / "planted_genes.txt");
    detail::write_file(L.cohort() / "planted.txt", format_planted(c.synth.planted) + "\n");
    write_gene_set(cohort.qc_violations, L.cohort() / "qc_violations.txt");
    log << "synthesized " << cohort.genotypes.subjects.size() << " subjects into " << L.cohort().string() << "\n";
}

void cmd_qc(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const GenotypeMatrix m = read_genotypes(input_or(c.paths.genotypes, L.cohort() / "genotypes.tsv"));
    const GenePanel panel = read_gene_panel(input_or(c.paths.gene_panel, L.cohort() / "gene_panel.tsv"));
    const QcResult r = run_qc(m, panel, c.qc);
    fs::create_directories(L.qc());
    write_qc_report(r.report, L.qc() / "report.tsv");
    wrote(log, L.qc() / "report.tsv");
    if (r.panel.total_snps() == 0) throw Error(Errc::EmptyResult, "no SNPs survive QC");
    write_genotypes(r.matrix, L.qc() / "genotypes.tsv");
    write_gene_panel(r.panel, L.qc() / "gene_panel.tsv");
    wrote(log, L.qc() / "genotypes.tsv");
    wrote(log, L.qc() / "gene_panel.tsv");
    log << r.report.dropped.size() << " SNPs dropped\n";
}

void cmd_dataset(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const GenotypeMatrix m = read_genotypes(need(L.qc() / "genotypes.tsv"));
    const GenePanel panel = read_gene_panel(need(L.qc() / "gene_panel.tsv"));
    std::map<std::string, std::string> patch_sets;
    if (c.dataset.mode != DatasetMode::GeneOnly) {
        const RoiTable rois = load_rois(c);
        const fs::path vol_dir = input_or(c.paths.volumes, L.cohort() / "volumes");
        const fs::path lab_dir = input_or(c.paths.labels, L.cohort() / "labels");
        fs::create_directories(L.patches());
        std::vector<RoiPatchSet> sets(m.subjects.size());
        for_each_index(m.subjects.size(), c.threads, [&](std::size_t i) {
            const std::string& id = m.subjects[i];
            const Volume v = read_volume(need(vol_dir / (id + ".rvol")));
            const LabelVolume lab = read_labels(need(lab_dir / (id + ".rvol")));
            sets[i] = parcellate(v, lab, rois, c.model.patch_size, id);
        });
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const std::string rel = "patches/" + m.subjects[i] + ".rvol";
            write_patch_set(sets[i], L.root / rel);
            patch_sets[m.subjects[i]] = rel;
        }
        log << "parcellated " << sets.size() << " subjects into " << rois.entries().size() << " ROIs\n";
    }
    DatasetConfig dc = c.dataset;
    dc.seed = derive_seed(c.seed, "dataset");
    const Dataset d = build_dataset(m, panel, patch_sets, dc);
    fs::create_directories(L.dataset());
    write_records(d.train, L.dataset() / "train.jsonl");
    write_records(d.test, L.dataset() / "test.jsonl");
    wrote(log, L.dataset() / "train.jsonl");
    wrote(log, L.dataset() / "test.jsonl");
}

void cmd_train(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const GenePanel panel = read_gene_panel(need(L.qc() / "gene_panel.tsv"));
    const auto records = read_records(need(L.dataset() / "train.jsonl"));
    if (records.empty()) throw Error(Errc::EmptyResult, "training set is empty");

    std::vector<std::string> snps;
    for (const auto& g : panel.genes()) snps.insert(snps.end(), g.snps.begin(), g.snps.end());
    const Vocab vocab = Vocab::from_corpus(corpus_lines_for_panel(panel.gene_names(), snps));

    ModelConfig mc = c.model;
    mc.vocab_size = static_cast<std::uint32_t>(vocab.size());
    const bool any_anchored = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.anchored; });
    const fs::path roi_path = c.paths.roi_table.empty() ? L.cohort() / "roi_table.tsv" : fs::path(c.paths.roi_table);
    if (any_anchored || fs::exists(roi_path)) mc.n_rois = static_cast<std::uint32_t>(load_rois(c).entries().size());
    mc.validate();

    std::vector<const DatasetRecord*> ptrs;
    for (const auto& r : records) ptrs.push_back(&r);
    const auto patch_sets = load_patch_sets(L, ptrs);
    std::vector<TrainExample> examples;
    for (const auto& r : records) {
        TrainExample ex;
        ex.input = encode_example(vocab, r.prompt, true);
        ex.stage = r.stage;
        if (r.anchored) ex.patches = &patch_sets.at(r.patch_set);
        examples.push_back(std::move(ex));
    }
    TrainConfig tc = c.train;
    tc.seed = derive_seed(c.seed, "train");
    const TrainResult res = train(mc, Params::init(mc, derive_seed(c.seed, "init")), examples, tc);

    fs::create_directories(L.model());
    save_checkpoint(mc, res.params, L.model() / "checkpoint.rgma");
    vocab.save(L.model() / "vocab.txt");
    std::string curve = "stage\tstep\tloss\n";
    for (const auto& p : res.curve) {
        curve += std::to_string(p.stage) + "\t" + std::to_string(p.step) + "\t" + format_g17(p.loss) + "\n";
    }
    detail::write_file(L.model() / "loss.tsv", curve);
    wrote(log, L.model() / "checkpoint.rgma");
    if (!res.curve.empty()) log << "final loss " << res.curve.back().loss << "\n";
}

void cmd_eval(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const Model model = load_model(L);
    const auto records = read_records(need(L.dataset() / "test.jsonl"));
    if (records.empty()) throw Error(Errc::EmptyResult, "test set is empty");
    std::vector<const DatasetRecord*> ptrs;
    for (const auto& r : records) ptrs.push_back(&r);
    const auto patch_sets = load_patch_sets(L, ptrs);

    std::vector<DecodeResult> results(records.size());
    for_each_index(records.size(), c.threads, [&](std::size_t i) {
        const auto& r = records[i];
        const ModelInput in = encode_example(model.vocab, r.prompt, false);
        Mat image;
        if (r.anchored) image = encode_image(patch_sets.at(r.patch_set), model);
        results[i] = greedy_decode(in, r.anchored ? &image : nullptr, model.cfg, model.params, model.vocab, 8);
    });

    Confusion conf{};
    std::array<std::uint64_t, kNumStages> unparseable{};
    std::string pred = "subject_id\ttrue\tpred\tgenerated\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto t = static_cast<std::size_t>(records[i].stage);
        const auto& res = results[i];
        if (res.label) {
            ++conf[t][static_cast<std::size_t>(*res.label)];
        } else {
            ++unparseable[t];
        }
        pred += records[i].subject_id + "\t" + stage_name(records[i].stage) + "\t" +
                (res.label ? stage_name(*res.label) : "UNPARSEABLE") + "\t" + model.vocab.detokenize(res.generated) +
                "\n";
    }
    const ClassificationReport rep = classification_metrics(conf, unparseable);
    fs::create_directories(L.eval());
    detail::write_file(L.eval() / "predictions.tsv", pred);
    write_confusion(conf, unparseable, L.eval() / "confusion.tsv");
    write_metrics(rep, L.eval() / "metrics.tsv");
    wrote(log, L.eval() / "metrics.tsv");
    log << "accuracy " << rep.accuracy << " macro_f1 " << rep.macro_f1 << "\n";
}

void cmd_attribute(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const Model model = load_model(L);
    const GenePanel panel = read_gene_panel(need(L.qc() / "gene_panel.tsv"));
    const RoiTable rois = load_rois(c);
    std::vector<DatasetRecord> all = read_records(need(L.dataset() / "train.jsonl"));
    for (auto& r : read_records(need(L.dataset() / "test.jsonl"))) all.push_back(std::move(r));

    // First paired record of every subject, by subject id.
    std::map<std::string, const DatasetRecord*> first;
    for (const auto& r : all) {
        if (r.anchored && !first.contains(r.subject_id)) first[r.subject_id] = &r;
    }
    if (first.empty()) throw Error(Errc::EmptyResult, "no paired records to attribute");
    std::vector<const DatasetRecord*> recs;
    for (const auto& [id, r] : first) recs.push_back(r);
    const auto patch_sets = load_patch_sets(L, recs);

    std::vector<std::uint32_t> roi_ids;
    for (const auto& e : rois.entries()) roi_ids.push_back(e.id);
    const auto genes = panel.gene_names();
    std::vector<RoiGeneAttentionMap> maps(recs.size());
    for_each_index(recs.size(), c.threads, [&](std::size_t i) {
        const auto& r = *recs[i];
        const ModelInput in = encode_example(model.vocab, r.prompt, false);
        const Mat image = encode_image(patch_sets.at(r.patch_set), model);
        const ForwardTrace t = forward_multimodal(in, &image, model.cfg, model.params);
        maps[i] = roi_gene_weights(attention_rollout(t.attention), t.spans, roi_ids, genes);
        maps[i].subject_id = r.subject_id;
        maps[i].stage = r.stage;
    });
    fs::create_directories(L.attribution());
    write_attention(maps, L.attribution() / "attention.tsv");
    wrote(log, L.attribution() / "attention.tsv");
}

void cmd_stability(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const auto maps = read_attention(need(L.attribution() / "attention.tsv"));
    StabilityConfig sc = c.stability;
    sc.seed = derive_seed(c.seed, "stability");
    sc.threads = c.threads;
    sc.validate();

    std::map<Stage, std::vector<StabilityRecord>> table;
    std::map<Stage, std::vector<FeatureFrequency>> gene_sel, roi_sel;
    for (Stage s : c.stability_stages) {
        const GroupSamples g = aggregate_group(maps, s);
        const auto reps = group_replicates(g, sc);
        table[s] = stability_records(g, reps, sc);
        gene_sel[s] = select_stable_features(gene_iteration_scores(g, reps), g.genes, sc.top_k_genes,
                                             sc.selection_threshold);
        std::vector<std::string> roi_names;
        for (auto id : g.roi_ids) roi_names.push_back(std::to_string(id));
        auto rois = select_stable_features(roi_iteration_scores(g, reps), roi_names, sc.top_k_rois,
                                           sc.selection_threshold);
        // Numeric order for ROI ids.
        std::sort(rois.begin(), rois.end(),
                  [](const auto& a, const auto& b) { return std::stoul(a.name) < std::stoul(b.name); });
        roi_sel[s] = std::move(rois);
    }
    fs::create_directories(L.stability());
    write_stability(table, L.stability() / "stability.tsv");
    write_features(gene_sel, L.stability() / "genes.tsv");
    write_features(roi_sel, L.stability() / "rois.tsv");
    wrote(log, L.stability() / "stability.tsv");
    wrote(log, L.stability() / "genes.tsv");
    wrote(log, L.stability() / "rois.tsv");
}

void cmd_enrich(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const GenePanel panel = read_gene_panel(need(L.qc() / "gene_panel.tsv"));
    std::vector<std::string> selected = read_selected(need(L.stability() / "genes.tsv"), std::nullopt);
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
    const auto reference = read_gene_set(input_or(c.paths.reference_genes, L.cohort() / "planted_genes.txt"));
    const EnrichmentResult r = fisher_enrichment(selected, reference, panel.gene_names());
    fs::create_directories(L.enrich());
    write_gene_set(selected, L.enrich() / "selected_genes.txt");
    detail::write_file(L.enrich() / "enrichment.json", format_enrichment(r) + "\n");
    wrote(log, L.enrich() / "enrichment.json");
    log << format_enrichment(r) << "\n";
}

std::string plot_data_csv(const std::vector<StabilityRecord>& records, Stage stage, const RoiTable& table,
                          const std::vector<std::uint32_t>& filter) {
    for (auto id : filter) {
        if (table.index_of(id) < 0) throw Error(Errc::UnknownRoiInFilter, "ROI " + std::to_string(id));
    }
    const std::set<std::uint32_t> keep(filter.begin(), filter.end());
    std::string out = "roi_block_index,roi_id,gene,stability,stage,annotate_flag\n";
    std::size_t block = 0;
    for (const auto& e : table.entries()) {
        if (!keep.contains(e.id)) continue;
        std::vector<const StabilityRecord*> rows;
        for (const auto& r : records) {
            if (r.roi_id == e.id) rows.push_back(&r);
        }
        std::vector<const StabilityRecord*> ranked = rows;
        std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
            if (a->stability != b->stability) return a->stability > b->stability;
            return a->gene < b->gene;
        });
        std::set<const StabilityRecord*> flagged(ranked.begin(), ranked.begin() + std::min<std::size_t>(2, ranked.size()));
        std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return a->gene < b->gene; });
        for (const auto* r : rows) {
            out += std::to_string(block) + "," + std::to_string(r->roi_id) + "," + r->gene + "," +
                   format_g17(r->stability) + "," + stage_name(stage) + "," + (flagged.contains(r) ? "1" : "0") +
                   "\n";
        }
        ++block;
    }
    return out;
}

void cmd_plotdata(const RunConfig& c, std::ostream& log) {
    const RunLayout L = layout(c);
    const auto table = read_stability(need(L.stability() / "stability.tsv"));
    const Stage stage = parse_stage(c.plot.stage);
    const RoiTable rois = load_rois(c);
    std::vector<std::uint32_t> filter;
    if (c.plot.rois == "stable") {
        for (const auto& id : read_selected(need(L.stability() / "rois.tsv"), stage)) {
            filter.push_back(parse_u32(id, "roi_id"));
        }
    } else {
        for (const auto& tok : split(c.plot.rois, ',')) {
            if (!tok.empty()) filter.push_back(parse_u32(tok, "plot.rois"));
        }
    }
    const auto it = table.find(stage);
    static const std::vector<StabilityRecord> none;
    const std::string csv = plot_data_csv(it == table.end() ? none : it->second, stage, rois, filter);
    fs::create_directories(L.plot());
    detail::write_file(L.plot() / "plotdata.csv", csv);
    wrote(log, L.plot() / "plotdata.csv");
}

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"synth",     "qc",        "dataset", "train",   "eval",
                                                "attribute", "stability", "enrich",  "plotdata"};
    return names;
}

int run_subcommand(const std::string& name, const RunConfig& c, std::ostream& log, std::ostream& err) {
    using Fn = void (*)(const RunConfig&, std::ostream&);
    static const std::map<std::string, Fn> table{
        {"synth", cmd_synth},         {"qc", cmd_qc},           {"dataset", cmd_dataset},
        {"train", cmd_train},         {"eval", cmd_eval},       {"attribute", cmd_attribute},
        {"stability", cmd_stability}, {"enrich", cmd_enrich},   {"plotdata", cmd_plotdata},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        err << "unknown subcommand " << name << "\n";
        return 2;
    }
    try {
        const RunLayout L = layout(c);
        fs::create_directories(L.logs());
        detail::write_file(L.logs() / (name + ".ini"), format_config(c));
        it->second(c, log);
        return 0;
    } catch (const Error& e) {
        err << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rgenima
