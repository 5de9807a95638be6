#include <doctest.h>

#include "model_fixture.hpp"
#include "oracles.hpp"
#include "rgenima/attribution.hpp"
#include "rgenima/error.hpp"
#include "test_util.hpp"

using namespace rgenima;

namespace {

Mat random_stochastic(Eigen::Index n, Rng& rng) {
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.uniform();
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

std::vector<std::vector<Mat>> random_layers(std::size_t layers, std::size_t heads, Eigen::Index n, Rng& rng) {
    std::vector<std::vector<Mat>> out(layers);
    for (auto& l : out)
        for (std::size_t h = 0; h < heads; ++h) l.push_back(random_stochastic(n, rng));
    return out;
}

// Image rows: ROI 10 at 0-1, ROI 20 at 2. Gene columns: GA at 3-4, GB at 5.
std::vector<SpanLabel> toy_spans() {
    return {{SpanKind::Image, 0, {}}, {SpanKind::Image, 0, {}}, {SpanKind::Image, 1, {}},
            {SpanKind::Gene, 0, "GA"},  {SpanKind::Gene, 0, "GA"},  {SpanKind::Gene, 0, "GB"},
            {SpanKind::Template, 0, {}}};
}

const std::vector<std::uint32_t> kRois{10, 20};
const std::vector<std::string> kGenes{"GA", "GB"};

}  // namespace

TEST_CASE("identity attention rolls out to the identity") {
    std::vector<std::vector<Mat>> layers(3, std::vector<Mat>(2, Mat::Identity(5, 5)));
    CHECK((attention_rollout(layers) - Mat::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform attention has the closed form") {
    const Eigen::Index n = 6;
    std::vector<std::vector<Mat>> layers{{Mat::Constant(n, n, 1.0 / n)}};
    const Mat r = attention_rollout(layers);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            CHECK(std::abs(r(i, j) - (i == j ? 0.5 + 0.5 / n : 0.5 / n)) < 1e-15);
}

TEST_CASE("rollout matches the explicit product") {
    Rng rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const auto layers = random_layers(2 + trial % 2, 2, 7, rng);
        std::vector<std::vector<oracle::Matrix>> ol;
        for (const auto& l : layers) {
            ol.emplace_back();
            for (const auto& h : l) ol.back().push_back(fixture::to_oracle(h));
        }
        const Mat got = attention_rollout(layers);
        const auto want = oracle::rollout(ol);
        for (Eigen::Index i = 0; i < 7; ++i)
            for (Eigen::Index j = 0; j < 7; ++j)
                CHECK(std::abs(got(i, j) - want[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-12);
    }
}

TEST_CASE("rollout is associative and stays stochastic") {
    Rng rng(2);
    const auto layers = random_layers(4, 3, 6, rng);
    for (std::size_t l = 1; l <= layers.size(); ++l) {
        const std::vector<std::vector<Mat>> prefix(layers.begin(), layers.begin() + static_cast<long>(l));
        const Mat r = attention_rollout(prefix);
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            CHECK(std::abs(r.row(i).sum() - 1.0) < 1e-9);
            CHECK(r.row(i).minCoeff() >= 0.0);
        }
        if (l < 2) continue;
        const std::vector<std::vector<Mat>> shorter(layers.begin(), layers.begin() + static_cast<long>(l - 1));
        const Mat last = attention_rollout({layers[l - 1]});
        CHECK((r - last * attention_rollout(shorter)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_ERRC(attention_rollout({}), Errc::EmptyTrace);
}

TEST_CASE("ROI-gene weights") {
    SUBCASE("identity rollout has no cross mass") {
        const auto m = roi_gene_weights(Mat::Identity(7, 7), toy_spans(), kRois, kGenes);
        CHECK(m.weights.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single ROI and single SNP take the lone cell") {
        Mat r = Mat::Zero(2, 2);
        r(0, 1) = 0.37;
        const auto m = roi_gene_weights(r, {{SpanKind::Image, 0, {}}, {SpanKind::Gene, 0, "GA"}}, {5}, {"GA"});
        CHECK(m.at(0, 0) == 0.37);
    }
    SUBCASE("hand-filled 2x2 blocks") {
        Mat r = Mat::Zero(7, 7);
        r(0, 3) = 0.1, r(0, 4) = 0.3, r(1, 3) = 0.2, r(1, 4) = 0.2;  // ROI 10, GA: mean 0.2
        r(0, 5) = 0.4, r(1, 5) = 0.0;                                  // ROI 10, GB: mean 0.2
        r(2, 3) = 0.5, r(2, 4) = 0.1;                                  // ROI 20, GA: mean 0.3
        r(2, 5) = 0.9;                                                 // ROI 20, GB: 0.9
        const auto m = roi_gene_weights(r, toy_spans(), kRois, kGenes);
        CHECK(m.at(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(m.at(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(m.at(1, 0) == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(m.at(1, 1) == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("weights are linear in the rollout") {
        Rng rng(3);
        const Mat a = random_stochastic(7, rng), b = random_stochastic(7, rng);
        for (double alpha : {0.0, 0.25, 0.7, 1.0}) {
            const auto mix = roi_gene_weights(alpha * a + (1 - alpha) * b, toy_spans(), kRois, kGenes);
            const auto wa = roi_gene_weights(a, toy_spans(), kRois, kGenes);
            const auto wb = roi_gene_weights(b, toy_spans(), kRois, kGenes);
            CHECK((mix.weights - (alpha * wa.weights + (1 - alpha) * wb.weights)).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
    SUBCASE("missing span") {
        CHECK_ERRC(roi_gene_weights(Mat::Identity(7, 7), toy_spans(), {10, 20, 30}, kGenes), Errc::MissingSpan);
        CHECK_ERRC(roi_gene_weights(Mat::Identity(7, 7), toy_spans(), kRois, {"GA", "GC"}), Errc::MissingSpan);
    }
}

namespace {

RoiGeneAttentionMap map_for(std::string id, Stage st, double w) {
    RoiGeneAttentionMap m;
    m.subject_id = std::move(id);
    m.stage = st;
    m.roi_ids = kRois;
    m.genes = kGenes;
    m.weights = Mat::Constant(2, 2, w);
    m.weights(1, 1) = 2 * w;
    return m;
}

}  // namespace

TEST_CASE("aggregate_group") {
    SUBCASE("one subject") {
        const auto g = aggregate_group({map_for("S1", Stage::AD, 0.5)}, Stage::AD);
        CHECK(g.pair(1, 1) == std::vector<double>{1.0});
    }
    SUBCASE("subjects are ordered by id") {
        const auto g = aggregate_group(
            {map_for("S3", Stage::AD, 0.3), map_for("S1", Stage::AD, 0.1), map_for("S2", Stage::AD, 0.2)}, Stage::AD);
        CHECK(g.pair(0, 0) == std::vector<double>{0.1, 0.2, 0.3});
        CHECK(g.subjects == std::vector<std::string>{"S1", "S2", "S3"});
    }
    SUBCASE("only the requested stage") {
        std::vector<RoiGeneAttentionMap> maps;
        for (int i = 0; i < 12; ++i) maps.push_back(map_for("S" + std::to_string(i), static_cast<Stage>(i % 4), i));
        const auto g = aggregate_group(maps, Stage::AD);
        CHECK(g.subjects.size() == 3);
        CHECK(g.pair(0, 1) == std::vector<double>{11.0, 3.0, 7.0});  // S11 < S3 < S7
        CHECK_ERRC(aggregate_group({map_for("S1", Stage::NC, 1)}, Stage::AD), Errc::EmptyGroup);
    }
}

TEST_CASE("attention file round trip is exact") {
    Rng rng(4);
    std::vector<RoiGeneAttentionMap> maps{map_for("S1", Stage::MCI, 0.1), map_for("S2", Stage::AD, 0.2)};
    for (auto& m : maps) m.weights(0, 1) = rng.uniform() / 3.0;
    auto dir = scratch_dir("attention");
    write_attention(maps, dir / "a.tsv");
    const auto back = read_attention(dir / "a.tsv");
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].subject_id == maps[i].subject_id);
        CHECK(back[i].stage == maps[i].stage);
        CHECK(back[i].roi_ids == maps[i].roi_ids);
        CHECK(back[i].genes == maps[i].genes);
        CHECK((back[i].weights.array() == maps[i].weights.array()).all());
    }
}
