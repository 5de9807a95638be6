#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rgenima/genome.hpp"
#include "rgenima/roi.hpp"
#include "rgenima/vocab.hpp"

namespace rgenima {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct ModelConfig {
    std::uint32_t d_model = 32;
    std::uint32_t n_heads = 2;
    std::uint32_t n_layers_text = 2;
    std::uint32_t n_layers_rit = 1;
    std::uint32_t patch_size = 8;
    std::uint32_t n_rois = 12;
    std::uint32_t max_seq_len = 384;
    std::uint32_t vocab_size = 0;
    std::uint32_t ff_dim = 128;

    std::uint32_t d_k() const { return d_model / n_heads; }
    std::size_t patch_volume() const { return std::size_t{patch_size} * patch_size * patch_size; }
    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Pre-norm transformer block weights. Row vectors are stored as 1 x n.
struct BlockParams {
    Mat ln1_g, ln1_b;
    Mat wq, wk, wv, wo;  // d x d; head h owns columns [h*d_k, (h+1)*d_k)
    Mat ln2_g, ln2_b;
    Mat w1, b1, w2, b2;
};

struct Params {
    // Text decoder
    Mat tok_emb;  // V x d
    Mat pos_emb;  // max_seq_len x d
    std::vector<BlockParams> text;
    Mat lnf_g, lnf_b;
    Mat lm_head;  // d x V
    // RiT encoder. The full-extent Conv3D over an S^3 patch is a linear map
    // of the flattened patch, so it is stored as an S^3 x d matrix.
    Mat patch_w, patch_b;
    Mat roi_pos;  // N x d
    std::vector<BlockParams> rit;
    // Connector into the decoder embedding space.
    Mat conn_w, conn_b;

    static Params zeros(const ModelConfig& cfg);
    /// Xavier-uniform projections, N(0, 0.02) embeddings, zero biases, unit gains.
    static Params init(const ModelConfig& cfg, std::uint64_t seed);

    /// Named views in a fixed order (checkpoint and optimizer order).
    std::vector<std::pair<std::string, Mat*>> tensors();
    std::vector<std::pair<std::string, const Mat*>> tensors() const;

    bool all_finite() const;
};

/// Tensors trained in stage 1 and frozen afterwards.
bool is_rit_tensor(const std::string& name);

// ---------------------------------------------------------------- kernels

struct AttentionOutput {
    Mat y;                      // rows of the query input, width d
    std::vector<Mat> weights;   // per head, |q| x |kv|, rows sum to 1
};

/// Multi-head scaled dot-product attention over X with output projection.
AttentionOutput self_attention(const Mat& x, const BlockParams& p, std::uint32_t n_heads, bool causal);

/// Queries from one modality, keys and values from the other.
AttentionOutput cross_attention(const Mat& f_q, const Mat& f_kv, const BlockParams& p, std::uint32_t n_heads);

/// Zero mean, unit variance; the standard deviation is floored at 1e-6 and
/// constant patches map to zero.
Vec standardize_patch(std::span<const float> patch);

/// One token per ROI: W_patch^T standardize(patch) + b_patch.
Mat roi_patch_embed(const RoiPatchSet& p, const ModelConfig& cfg, const Params& params);

// ---------------------------------------------------------------- sequences

enum class SpanKind : std::uint8_t { Template, Gene, Image, Target };

struct SpanLabel {
    SpanKind kind = SpanKind::Template;
    std::uint32_t roi_index = 0;  // Image: position in RoiTable order
    std::string gene;          // Gene
};

/// Tokenized example before anchor expansion: <BOS>, prompt words, then the
/// target words and <EOS> when present.
struct ModelInput {
    TokenSequence tokens;
    std::optional<std::size_t> anchor;  // index of <IMG> in tokens
    std::size_t target_begin = 0;       // == tokens.size() without target
    std::vector<SpanLabel> spans;       // per token
};

ModelInput encode_example(const Vocab& vocab, const PromptRecord& prompt, bool with_target);

// ---------------------------------------------------------------- forward

namespace detail {

struct LayerNormCache {
    Mat xhat;
    Vec rstd;
};

struct BlockCache {
    Mat x_in;
    LayerNormCache ln1;
    Mat xn1;
    Mat q, k, v;
    std::vector<Mat> attn;
    Mat ctx;
    Mat x_mid;
    LayerNormCache ln2;
    Mat xn2;
    Mat h_pre, h_act;
};

struct DecoderCache {
    std::vector<BlockCache> blocks;
    LayerNormCache lnf;
    Mat xf;
};

}  // namespace detail

struct RitTrace {
    Mat patches;  // N x S^3 standardized
    Mat z;        // N x d, patch embedding + ROI positions
    std::vector<detail::BlockCache> blocks;
    Mat h;        // N x d, RiT output before the connector
    Mat image;    // N x d, connector output (H_image)
};

/// Patch embedding, bidirectional RiT blocks, linear connector.
RitTrace rit_encode(const RoiPatchSet& p, const ModelConfig& cfg, const Params& params);

struct ForwardTrace {
    std::vector<TokenId> tokens;          // per combined position; kImg on image rows
    std::vector<SpanLabel> spans;         // per combined position
    std::vector<std::size_t> target_positions;  // combined positions of target tokens
    std::vector<std::vector<Mat>> attention;    // [layer][head], L x L
    Mat logits;                                 // L x V
    std::optional<std::size_t> image_begin;     // first image position
    detail::DecoderCache cache;
    Mat embeddings;                             // L x d decoder input
};

/// Expands the anchor into the N image rows and runs the causal decoder.
/// `image` (N x d) must be given exactly when the input is anchored.
ForwardTrace forward_multimodal(const ModelInput& input, const Mat* image, const ModelConfig& cfg,
                                const Params& params);

/// Mean over target tokens of -log softmax(logits[p-1])[token p].
double nll_loss(const ForwardTrace& trace);

struct Gradients {
    Params params;
    Mat d_image;  // gradient w.r.t. H_image (empty for gene-only inputs)
};

/// Exact gradient of `scale * nll_loss(trace)`, accumulated into `grads`.
/// When `rit` is given, the image gradient is carried through the connector
/// and the RiT encoder; otherwise only d_image is filled.
void backward(const ForwardTrace& trace, const ModelInput& input, const ModelConfig& cfg, const Params& params,
              const RitTrace* rit, double scale, Gradients& grads);

/// Backpropagates dL/dH_image through the connector, and through the RiT
/// stack unless `connector_only`.
void rit_backward(const RitTrace& rit, const Mat& d_image, const ModelConfig& cfg, const Params& params,
                  bool connector_only, Params& grads);

/// Backpropagates dL/dh (RiT output before the connector) through the stack.
void rit_backward_from_h(const RitTrace& rit, const Mat& d_h, const ModelConfig& cfg, const Params& params,
                         Params& grads);

// ---------------------------------------------------------------- decoding

struct DecodeResult {
    std::optional<Stage> label;  // empty: Unparseable
    TokenSequence generated;
};

/// Argmax decoding (ties to the lowest id) until <EOS> or max_len tokens,
/// then parses "This subject is <label> .".
DecodeResult greedy_decode(const ModelInput& prompt, const Mat* image, const ModelConfig& cfg, const Params& params,
                           const Vocab& vocab, std::size_t max_len);

// ---------------------------------------------------------------- checkpoint

void save_checkpoint(const ModelConfig& cfg, const Params& params, const std::filesystem::path& path);
std::pair<ModelConfig, Params> load_checkpoint(const std::filesystem::path& path);

}  // namespace rgenima
