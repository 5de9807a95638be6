#include "rgenima/attribution.hpp"

#include <algorithm>
#include <map>

#include "rgenima/error.hpp"
#include "rgenima/tsv.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

Mat attention_rollout(const std::vector<std::vector<Mat>>& attention) {
    if (attention.empty() || attention.front().empty()) throw Error(Errc::EmptyTrace, "no attention layers");
    const Eigen::Index n = attention.front().front().rows();
    Mat rollout = Mat::Identity(n, n);
    for (const auto& heads : attention) {
        Mat avg = Mat::Zero(n, n);
        for (const auto& h : heads) {
            if (h.rows() != n || h.cols() != n) throw Error(Errc::ShapeMismatch, "attention layers differ in size");
            avg += h;
        }
        avg /= static_cast<double>(heads.size());
        Mat r = 0.5 * avg + 0.5 * Mat::Identity(n, n);
        const Vec sums = r.rowwise().sum();
        r.array().colwise() /= sums.array();
        rollout = r * rollout;
    }
    return rollout;
}

RoiGeneAttentionMap roi_gene_weights(const Mat& rollout, const std::vector<SpanLabel>& spans,
                                     const std::vector<std::uint32_t>& roi_ids, const std::vector<std::string>& genes) {
    if (static_cast<std::size_t>(rollout.rows()) != spans.size()) {
        throw Error(Errc::ShapeMismatch, "rollout size differs from span count");
    }
    std::vector<std::vector<Eigen::Index>> roi_rows(roi_ids.size()), gene_cols(genes.size());
    std::map<std::string, std::size_t> gene_index;
    for (std::size_t g = 0; g < genes.size(); ++g) gene_index[genes[g]] = g;
    for (std::size_t p = 0; p < spans.size(); ++p) {
        const auto& s = spans[p];
        if (s.kind == SpanKind::Image && s.roi_index < roi_ids.size()) {
            roi_rows[s.roi_index].push_back(static_cast<Eigen::Index>(p));
        } else if (s.kind == SpanKind::Gene) {
            auto it = gene_index.find(s.gene);
            if (it != gene_index.end()) gene_cols[it->second].push_back(static_cast<Eigen::Index>(p));
        }
    }
    for (std::size_t r = 0; r < roi_ids.size(); ++r) {
        if (roi_rows[r].empty()) throw Error(Errc::MissingSpan, "no image position for roi " + std::to_string(roi_ids[r]));
    }
    for (std::size_t g = 0; g < genes.size(); ++g) {
        if (gene_cols[g].empty()) throw Error(Errc::MissingSpan, "no genetic position for gene " + genes[g]);
    }

    RoiGeneAttentionMap m;
    m.roi_ids = roi_ids;
    m.genes = genes;
    m.weights = Mat::Zero(static_cast<Eigen::Index>(roi_ids.size()), static_cast<Eigen::Index>(genes.size()));
    for (std::size_t r = 0; r < roi_ids.size(); ++r) {
        for (std::size_t g = 0; g < genes.size(); ++g) {
            double sum = 0.0;
            for (Eigen::Index i : roi_rows[r]) {
                for (Eigen::Index j : gene_cols[g]) sum += rollout(i, j);
            }
            m.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(g)) =
                sum / static_cast<double>(roi_rows[r].size() * gene_cols[g].size());
        }
    }
    return m;
}

GroupSamples aggregate_group(const std::vector<RoiGeneAttentionMap>& maps, Stage stage) {
    std::vector<const RoiGeneAttentionMap*> members;
    for (const auto& m : maps) {
        if (m.stage == stage) members.push_back(&m);
    }
    if (members.empty()) throw Error(Errc::EmptyGroup, std::string("no subjects in stage ") + stage_name(stage));
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* b) { return a->subject_id < b->subject_id; });

    GroupSamples g;
    g.stage = stage;
    g.roi_ids = members.front()->roi_ids;
    g.genes = members.front()->genes;
    g.samples.assign(g.roi_ids.size() * g.genes.size(), {});
    for (const auto* m : members) {
        if (m->roi_ids != g.roi_ids || m->genes != g.genes) {
            throw Error(Errc::ShapeMismatch, "attention maps use different tables (" + m->subject_id + ")");
        }
        g.subjects.push_back(m->subject_id);
        for (std::size_t r = 0; r < g.roi_ids.size(); ++r) {
            for (std::size_t k = 0; k < g.genes.size(); ++k) g.samples[r * g.genes.size() + k].push_back(m->at(r, k));
        }
    }
    return g;
}

void write_attention(const std::vector<RoiGeneAttentionMap>& maps, const std::filesystem::path& path) {
    std::string out = "subject_id\tstage\troi_id\tgene\tweight\n";
    for (const auto& m : maps) {
        for (std::size_t r = 0; r < m.roi_ids.size(); ++r) {
            for (std::size_t g = 0; g < m.genes.size(); ++g) {
                out += m.subject_id + "\t" + stage_name(m.stage) + "\t" + std::to_string(m.roi_ids[r]) + "\t" +
                       m.genes[g] + "\t" + format_g17(m.at(r, g)) + "\n";
            }
        }
    }
    detail::write_file(path, out);
}

std::vector<RoiGeneAttentionMap> read_attention(const std::filesystem::path& path) {
    const TsvTable t = read_tsv(path, {"subject_id", "stage", "roi_id", "gene", "weight"});
    // Rows are grouped by subject, ROI-major, as written.
    std::vector<RoiGeneAttentionMap> out;
    std::vector<std::vector<double>> values;
    for (const auto& row : t.rows) {
        if (out.empty() || out.back().subject_id != row[0]) {
            out.push_back({row[0], parse_stage(row[1]), {}, {}, {}});
            values.emplace_back();
        }
        auto& m = out.back();
        const std::uint32_t roi = parse_u32(row[2], "roi_id");
        if (m.roi_ids.empty() || m.roi_ids.back() != roi) m.roi_ids.push_back(roi);
        if (m.roi_ids.size() == 1) m.genes.push_back(row[3]);
        const double w = parse_double(row[4], "weight");
        if (w < 0.0) throw Error(Errc::Parse, "negative attention weight for " + row[0]);
        values.back().push_back(w);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& m = out[i];
        const auto R = static_cast<Eigen::Index>(m.roi_ids.size()), G = static_cast<Eigen::Index>(m.genes.size());
        if (static_cast<std::size_t>(R * G) != values[i].size()) {
            throw Error(Errc::Parse, path.string() + ": subject " + m.subject_id + " is not a full roi x gene grid");
        }
        m.weights = Eigen::Map<const Mat>(values[i].data(), R, G);
    }
    return out;
}

}  // namespace rgenima
