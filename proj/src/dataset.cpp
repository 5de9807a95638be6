#include "rgenima/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "rgenima/error.hpp"
#include "rgenima/rng.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

const char* dataset_mode_name(DatasetMode m) {
    switch (m) {
        case DatasetMode::GeneOnly: return "gene_only";
        case DatasetMode::ImageGene: return "image_gene";
        case DatasetMode::Mixture: return "mixture";
    }
    return "?";
}

DatasetMode parse_dataset_mode(std::string_view s) {
    if (s == "gene_only") return DatasetMode::GeneOnly;
    if (s == "image_gene") return DatasetMode::ImageGene;
    if (s == "mixture") return DatasetMode::Mixture;
    throw Error(Errc::Config, "unknown dataset mode '" + std::string(s) + "'");
}

namespace {

std::vector<std::string> block_order(const SubjectGenome& g) {
    std::vector<std::string> out;
    for (const auto& b : g.blocks) out.push_back(b.gene);
    return out;
}

double factorial_capped(std::size_t n) {
    double f = 1.0;
    for (std::size_t i = 2; i <= n && f < 1e18; ++i) f *= static_cast<double>(i);
    return f;
}

std::vector<DatasetRecord> make_records(const GenotypeMatrix& m, const GenePanel& panel,
                                        const std::vector<std::size_t>& subjects, std::size_t count,
                                        const std::map<std::string, std::string>& patch_sets,
                                        const DatasetConfig& cfg, std::uint64_t split_seed) {
    std::vector<DatasetRecord> out;
    std::vector<std::string> genome_texts;
    if (count == 0) return out;
    if (subjects.empty()) throw Error(Errc::InsufficientSubjects, "no subjects for a nonempty split");

    // Permutations already issued per subject, to keep augmented copies distinct.
    std::map<std::size_t, std::set<std::vector<std::string>>> used;
    const double n_orders = factorial_capped(panel.size());

    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t s = subjects[k % subjects.size()];
        const std::size_t copy = k / subjects.size();
        const SubjectGenome base = subject_genome(m, panel, s);
        auto& seen = used[s];
        const bool can_be_distinct = static_cast<double>(seen.size()) < n_orders;

        SubjectGenome g;
        for (std::uint64_t attempt = 0;; ++attempt) {
            const std::uint64_t seed = derive_seed(derive_seed(split_seed, s), copy * 1024 + attempt);
            g = permute_gene_blocks(base, seed);
            if (!can_be_distinct || !seen.contains(block_order(g)) || attempt > 4096) break;
        }
        seen.insert(block_order(g));

        DatasetRecord r;
        r.subject_id = m.subjects[s];
        r.stage = *m.stages[s];
        out.push_back(std::move(r));
        genome_texts.push_back(serialize_genome(g));
    }

    // Mixture: the first ceil(count/2) records (before shuffling) are paired.
    const std::size_t n_anchored = cfg.mode == DatasetMode::ImageGene ? count
                                   : cfg.mode == DatasetMode::Mixture ? (count + 1) / 2
                                                                      : 0;
    for (std::size_t k = 0; k < count; ++k) {
        auto& r = out[k];
        r.anchored = k < n_anchored;
        r.prompt = build_prompt(genome_texts[k], r.anchored, stage_name(r.stage));
        r.prompt.subject_id = r.subject_id;
        if (!r.anchored) continue;
        auto it = patch_sets.find(r.subject_id);
        if (it == patch_sets.end()) throw Error(Errc::MissingPatchSet, "subject " + r.subject_id);
        r.patch_set = it->second;
    }

    if (cfg.mode == DatasetMode::Mixture) {
        Rng rng(derive_seed(split_seed, "shuffle"));
        for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
    }
    return out;
}

}  // namespace

Dataset build_dataset(const GenotypeMatrix& m, const GenePanel& panel,
                      const std::map<std::string, std::string>& patch_sets, const DatasetConfig& cfg) {
    m.validate(panel);
    const std::size_t total = cfg.train_count + cfg.test_count;
    if (total == 0) throw Error(Errc::Config, "dataset needs a positive record count");
    for (std::size_t s = 0; s < m.n_subjects(); ++s) {
        if (!m.stages[s]) throw Error(Errc::UnknownStage, "subject " + m.subjects[s] + " has no stage");
    }
    const std::size_t needed = (cfg.train_count > 0 ? 1 : 0) + (cfg.test_count > 0 ? 1 : 0);
    if (m.n_subjects() < needed) throw Error(Errc::InsufficientSubjects, "not enough subjects for the split");

    // Stratified subject split: each stage contributes test subjects in
    // proportion to test_count / total.
    const double test_frac = static_cast<double>(cfg.test_count) / static_cast<double>(total);
    std::vector<std::size_t> train_subjects, test_subjects;
    for (std::size_t st = 0; st < kNumStages; ++st) {
        std::vector<std::size_t> members;
        for (std::size_t s = 0; s < m.n_subjects(); ++s) {
            if (static_cast<std::size_t>(*m.stages[s]) == st) members.push_back(s);
        }
        Rng rng(derive_seed(derive_seed(cfg.seed, "split"), st));
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
        const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < n_test ? test_subjects : train_subjects).push_back(members[i]);
        }
    }
    // Tiny cohorts can round a split to empty; move one subject across.
    if (cfg.test_count > 0 && test_subjects.empty()) {
        test_subjects.push_back(train_subjects.back());
        train_subjects.pop_back();
    }
    if (cfg.train_count > 0 && train_subjects.empty()) {
        train_subjects.push_back(test_subjects.back());
        test_subjects.pop_back();
    }
    std::sort(train_subjects.begin(), train_subjects.end());
    std::sort(test_subjects.begin(), test_subjects.end());

    Dataset d;
    d.train = make_records(m, panel, train_subjects, cfg.train_count, patch_sets, cfg,
                           derive_seed(cfg.seed, "train-records"));
    d.test = make_records(m, panel, test_subjects, cfg.test_count, patch_sets, cfg,
                          derive_seed(cfg.seed, "test-records"));
    return d;
}

void write_records(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["subject_id"] = r.subject_id;
        j["prompt"] = r.prompt.text;
        j["target"] = r.prompt.target;
        j["anchor"] = r.anchored;
        j["patch_set"] = r.patch_set;
        out += j.dump() + "\n";
    }
    detail::write_file(path, out);
}

std::vector<DatasetRecord> read_records(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(Errc::MissingArtifact, path.string() + " does not exist");
    std::vector<DatasetRecord> out;
    const std::string text = detail::read_file(path);
    std::size_t line_no = 0;
    for (const auto& line : split(text, '\n')) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DatasetRecord r;
            r.subject_id = j.at("subject_id").get<std::string>();
            r.prompt.subject_id = r.subject_id;
            r.prompt.text = j.at("prompt").get<std::string>();
            r.prompt.target = j.at("target").get<std::string>();
            r.anchored = j.at("anchor").get<bool>();
            r.patch_set = j.at("patch_set").get<std::string>();
            const auto words = split(r.prompt.text, ' ');
            const auto it = std::find(words.begin(), words.end(), std::string(kImageToken));
            if ((it != words.end()) != r.anchored) {
                throw Error(Errc::AnchorMismatch, "anchor flag disagrees with prompt");
            }
            if (r.anchored) r.prompt.anchor_pos = static_cast<std::size_t>(it - words.begin());
            const auto target_words = split(r.prompt.target, ' ');
            if (target_words.size() != 5) throw Error(Errc::Parse, "target '" + r.prompt.target + "'");
            r.stage = parse_stage(target_words[3]);
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace rgenima
