#include "rgenima/train.hpp"

#include <cmath>
#include <map>

#include "rgenima/error.hpp"
#include "rgenima/rng.hpp"

namespace rgenima {

namespace {

struct Moments {
    Mat m, v;
};

void adam_update(Mat& p, const Mat& g, Moments& mo, std::size_t t, double lr, double b1, double b2, double eps) {
    mo.m = b1 * mo.m + (1.0 - b1) * g;
    mo.v = b2 * mo.v + (1.0 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    p.array() -= lr * (mo.m.array() / c1) / ((mo.v.array() / c2).sqrt() + eps);
}

Params zeros_like(const Params& p) {
    Params z = p;
    for (auto& [name, m] : z.tensors()) m->setZero();
    return z;
}

void shuffle(std::vector<std::size_t>& idx, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

void check_loss(double loss, int stage, std::size_t step) {
    if (!std::isfinite(loss)) {
        throw Error(Errc::DivergedLoss, "stage " + std::to_string(stage) + " step " + std::to_string(step));
    }
}

}  // namespace

Adam::Adam(const Params& shape, double lr, double beta1, double beta2, double eps)
    : m_(zeros_like(shape)), v_(zeros_like(shape)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(Params& params, const Params& grads, const std::function<bool(const std::string&)>& trainable) {
    ++t_;
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!trainable(p[i].first)) continue;
        Moments mo{std::move(*m[i].second), std::move(*v[i].second)};
        adam_update(*p[i].second, *g[i].second, mo, t_, lr_, beta1_, beta2_, eps_);
        *m[i].second = std::move(mo.m);
        *v[i].second = std::move(mo.v);
    }
}

namespace {

void train_rit_stage(const ModelConfig& cfg, Params& params, const std::vector<TrainExample>& examples,
                     const TrainConfig& tc, std::vector<LossPoint>& curve) {
    // One entry per distinct patch set.
    std::vector<std::pair<const RoiPatchSet*, Stage>> subjects;
    std::map<const RoiPatchSet*, bool> seen;
    for (const auto& ex : examples) {
        if (ex.patches && !seen[ex.patches]) {
            seen[ex.patches] = true;
            subjects.emplace_back(ex.patches, ex.stage);
        }
    }
    if (subjects.empty() || tc.stage1_epochs == 0) return;

    const Eigen::Index d = cfg.d_model;
    Rng init_rng(derive_seed(tc.seed, "stage1-head"));
    const double bound = std::sqrt(6.0 / static_cast<double>(d + kNumStages));
    Mat head_w(d, kNumStages);
    for (Eigen::Index i = 0; i < head_w.size(); ++i) head_w.data()[i] = init_rng.uniform(-bound, bound);
    Mat head_b = Mat::Zero(1, kNumStages);
    Moments mw{Mat::Zero(d, kNumStages), Mat::Zero(d, kNumStages)};
    Moments mb{Mat::Zero(1, kNumStages), Mat::Zero(1, kNumStages)};
    Adam adam(params, tc.stage1_lr, tc.beta1, tc.beta2, tc.adam_eps);

    std::vector<std::size_t> order(subjects.size());
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < tc.stage1_epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, derive_seed(derive_seed(tc.seed, "stage1-order"), epoch));
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            Params grads = zeros_like(params);
            Mat gw = Mat::Zero(d, kNumStages), gb = Mat::Zero(1, kNumStages);
            double loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto& [patches, stage] = subjects[order[k]];
                const RitTrace rit = rit_encode(*patches, cfg, params);
                const Mat pooled = rit.h.colwise().mean();
                Eigen::RowVectorXd logits = pooled * head_w + head_b;
                const double mx = logits.maxCoeff();
                Eigen::RowVectorXd prob = (logits.array() - mx).exp();
                const double z = prob.sum();
                prob /= z;
                const auto y = static_cast<Eigen::Index>(stage);
                loss += (mx + std::log(z) - logits(y)) * inv_b;
                Eigen::RowVectorXd dlogits = prob;
                dlogits(y) -= 1.0;
                dlogits *= inv_b;
                gw.noalias() += pooled.transpose() * dlogits;
                gb.row(0) += dlogits;
                const Eigen::RowVectorXd dpooled = dlogits * head_w.transpose();
                Mat dh(cfg.n_rois, d);
                dh.rowwise() = dpooled / static_cast<double>(cfg.n_rois);
                rit_backward_from_h(rit, dh, cfg, params, grads);
            }
            check_loss(loss, 1, step);
            curve.push_back({1, step++, loss});
            adam.step(params, grads, is_rit_tensor);
            // The head shares the optimizer schedule (its step count equals adam's).
            adam_update(head_w, gw, mw, step, tc.stage1_lr, tc.beta1, tc.beta2, tc.adam_eps);
            adam_update(head_b, gb, mb, step, tc.stage1_lr, tc.beta1, tc.beta2, tc.adam_eps);
        }
    }
}

}  // namespace

TrainResult train(const ModelConfig& cfg, const Params& init, const std::vector<TrainExample>& examples,
                  const TrainConfig& tc) {
    if (examples.empty()) throw Error(Errc::EmptyResult, "training set is empty");
    if (tc.batch_size == 0) throw Error(Errc::Config, "batch_size must be positive");
    for (const auto& ex : examples) {
        if (ex.input.anchor.has_value() != (ex.patches != nullptr)) {
            throw Error(Errc::AnchorMismatch, "anchored examples need a patch set");
        }
    }
    TrainResult result;
    result.params = init;
    Params& params = result.params;

    train_rit_stage(cfg, params, examples, tc, result.curve);

    // Stage 2: RiT outputs are fixed, so encode every subject once.
    std::vector<std::pair<std::string, Mat>> frozen;
    for (const auto& [name, m] : params.tensors()) {
        if (is_rit_tensor(name)) frozen.emplace_back(name, *m);
    }
    std::map<const RoiPatchSet*, RitTrace> encoded;
    for (const auto& ex : examples) {
        if (ex.patches && !encoded.contains(ex.patches)) encoded.emplace(ex.patches, rit_encode(*ex.patches, cfg, params));
    }

    auto trainable = [](const std::string& name) { return !is_rit_tensor(name); };
    Adam adam(params, tc.lr, tc.beta1, tc.beta2, tc.adam_eps);
    std::vector<std::size_t> order(examples.size());
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, derive_seed(derive_seed(tc.seed, "stage2-order"), epoch));
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            Gradients grads{zeros_like(params), {}};
            double loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const TrainExample& ex = examples[order[k]];
                const RitTrace* rit = ex.patches ? &encoded.at(ex.patches) : nullptr;
                Mat image;
                if (rit) {
                    image = rit->h * params.conn_w;
                    image.rowwise() += params.conn_b.row(0);
                }
                const ForwardTrace t = forward_multimodal(ex.input, rit ? &image : nullptr, cfg, params);
                loss += nll_loss(t) * inv_b;
                backward(t, ex.input, cfg, params, nullptr, inv_b, grads);
                if (rit) rit_backward(*rit, grads.d_image, cfg, params, true, grads.params);
            }
            check_loss(loss, 2, step);
            result.curve.push_back({2, step++, loss});
            adam.step(params, grads.params, trainable);
        }
    }

    for (const auto& [name, m] : params.tensors()) {
        if (!is_rit_tensor(name)) continue;
        for (const auto& [fname, fm] : frozen) {
            if (fname == name && !(fm.array() == m->array()).all()) {
                throw Error(Errc::DivergedLoss, "frozen RiT tensor " + name + " changed in stage 2");
            }
        }
    }
    return result;
}

}  // namespace rgenima
