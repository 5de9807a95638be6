#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rgenima/model.hpp"

namespace rgenima {

struct TrainConfig {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t epochs = 3;
    std::size_t batch_size = 8;
    std::size_t stage1_epochs = 30;
    double stage1_lr = 3e-3;
    std::uint64_t seed = 0;
};

struct TrainExample {
    ModelInput input;
    Stage stage = Stage::NC;
    const RoiPatchSet* patches = nullptr;  // required when input.anchor is set
};

struct LossPoint {
    int stage = 2;
    std::size_t step = 0;
    double loss = 0.0;
};

struct TrainResult {
    Params params;
    std::vector<LossPoint> curve;
};

/// Elementwise Adam over the tensors selected by `trainable`.
class Adam {
public:
    Adam(const Params& shape, double lr, double beta1, double beta2, double eps);
    void step(Params& params, const Params& grads, const std::function<bool(const std::string&)>& trainable);

private:
    Params m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

/// Stage 1 fits the RiT encoder with a temporary 4-way stage head on the
/// mean-pooled ROI tokens; stage 2 freezes it and trains the decoder,
/// embeddings and connector on the target NLL.
TrainResult train(const ModelConfig& cfg, const Params& init, const std::vector<TrainExample>& examples,
                  const TrainConfig& tc);

}  // namespace rgenima
