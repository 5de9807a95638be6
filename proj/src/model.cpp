#include "rgenima/model.hpp"

#include <cmath>
#include <numbers>

#include "rgenima/error.hpp"
#include "rgenima/rng.hpp"
#include "rgenima/tsv.hpp"

namespace rgenima {

void ModelConfig::validate() const {
    if (d_model == 0 || n_heads == 0 || patch_size == 0 || n_rois == 0 || max_seq_len == 0 || vocab_size == 0 ||
        ff_dim == 0) {
        throw Error(Errc::Config, "model dimensions must be positive");
    }
    if (d_model % n_heads != 0) throw Error(Errc::Config, "d_model must be divisible by n_heads");
    if (vocab_size <= kImg) throw Error(Errc::Config, "vocab must include the reserved tokens");
}

namespace {

BlockParams block_zeros(const ModelConfig& c) {
    const Eigen::Index d = c.d_model, f = c.ff_dim;
    BlockParams b;
    b.ln1_g = Mat::Zero(1, d), b.ln1_b = Mat::Zero(1, d);
    b.wq = Mat::Zero(d, d), b.wk = Mat::Zero(d, d), b.wv = Mat::Zero(d, d), b.wo = Mat::Zero(d, d);
    b.ln2_g = Mat::Zero(1, d), b.ln2_b = Mat::Zero(1, d);
    b.w1 = Mat::Zero(d, f), b.b1 = Mat::Zero(1, f), b.w2 = Mat::Zero(f, d), b.b2 = Mat::Zero(1, d);
    return b;
}

void append_block(std::vector<std::pair<std::string, Mat*>>& out, const std::string& prefix, BlockParams& b) {
    out.emplace_back(prefix + "ln1_g", &b.ln1_g);
    out.emplace_back(prefix + "ln1_b", &b.ln1_b);
    out.emplace_back(prefix + "wq", &b.wq);
    out.emplace_back(prefix + "wk", &b.wk);
    out.emplace_back(prefix + "wv", &b.wv);
    out.emplace_back(prefix + "wo", &b.wo);
    out.emplace_back(prefix + "ln2_g", &b.ln2_g);
    out.emplace_back(prefix + "ln2_b", &b.ln2_b);
    out.emplace_back(prefix + "w1", &b.w1);
    out.emplace_back(prefix + "b1", &b.b1);
    out.emplace_back(prefix + "w2", &b.w2);
    out.emplace_back(prefix + "b2", &b.b2);
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Params Params::zeros(const ModelConfig& c) {
    c.validate();
    const Eigen::Index d = c.d_model;
    Params p;
    p.tok_emb = Mat::Zero(c.vocab_size, d);
    p.pos_emb = Mat::Zero(c.max_seq_len, d);
    for (std::uint32_t l = 0; l < c.n_layers_text; ++l) p.text.push_back(block_zeros(c));
    p.lnf_g = Mat::Zero(1, d), p.lnf_b = Mat::Zero(1, d);
    p.lm_head = Mat::Zero(d, c.vocab_size);
    p.patch_w = Mat::Zero(static_cast<Eigen::Index>(c.patch_volume()), d);
    p.patch_b = Mat::Zero(1, d);
    p.roi_pos = Mat::Zero(c.n_rois, d);
    for (std::uint32_t l = 0; l < c.n_layers_rit; ++l) p.rit.push_back(block_zeros(c));
    p.conn_w = Mat::Zero(d, d), p.conn_b = Mat::Zero(1, d);
    return p;
}

Params Params::init(const ModelConfig& c, std::uint64_t seed) {
    Params p = zeros(c);
    std::uint64_t index = 0;
    for (auto& [name, m] : p.tensors()) {
        Rng rng(derive_seed(seed, index++));
        if (name == "tok_emb" || name == "pos_emb" || name == "roi_pos") {
            for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = 0.02 * rng.normal();
        } else if (ends_with(name, "_g")) {
            m->setOnes();
        } else if (m->rows() > 1) {
            const double bound = std::sqrt(6.0 / static_cast<double>(m->rows() + m->cols()));
            for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.uniform(-bound, bound);
        }
    }
    return p;
}

std::vector<std::pair<std::string, Mat*>> Params::tensors() {
    std::vector<std::pair<std::string, Mat*>> out;
    out.emplace_back("tok_emb", &tok_emb);
    out.emplace_back("pos_emb", &pos_emb);
    for (std::size_t l = 0; l < text.size(); ++l) append_block(out, "text." + std::to_string(l) + ".", text[l]);
    out.emplace_back("lnf_g", &lnf_g);
    out.emplace_back("lnf_b", &lnf_b);
    out.emplace_back("lm_head", &lm_head);
    out.emplace_back("patch_w", &patch_w);
    out.emplace_back("patch_b", &patch_b);
    out.emplace_back("roi_pos", &roi_pos);
    for (std::size_t l = 0; l < rit.size(); ++l) append_block(out, "rit." + std::to_string(l) + ".", rit[l]);
    out.emplace_back("conn_w", &conn_w);
    out.emplace_back("conn_b", &conn_b);
    return out;
}

std::vector<std::pair<std::string, const Mat*>> Params::tensors() const {
    auto mut = const_cast<Params*>(this)->tensors();
    std::vector<std::pair<std::string, const Mat*>> out;
    out.reserve(mut.size());
    for (auto& [n, m] : mut) out.emplace_back(std::move(n), m);
    return out;
}

bool Params::all_finite() const {
    for (const auto& [name, m] : tensors()) {
        if (!m->allFinite()) return false;
    }
    return true;
}

bool is_rit_tensor(const std::string& name) {
    return name == "patch_w" || name == "patch_b" || name == "roi_pos" || name.rfind("rit.", 0) == 0;
}

// ---------------------------------------------------------------- layers

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kPatchEps = 1e-6;

Mat layer_norm(const Mat& x, const Mat& g, const Mat& b, detail::LayerNormCache& cache) {
    const Eigen::Index n = x.rows(), d = x.cols();
    cache.xhat.resize(n, d);
    cache.rstd.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = x.row(i).mean();
        const double var = (x.row(i).array() - mu).square().mean();
        const double rstd = 1.0 / std::sqrt(var + kLnEps);
        cache.rstd(i) = rstd;
        cache.xhat.row(i) = (x.row(i).array() - mu) * rstd;
    }
    Mat y = cache.xhat.array().rowwise() * g.row(0).array();
    y.rowwise() += b.row(0);
    return y;
}

Mat layer_norm_backward(const Mat& dy, const detail::LayerNormCache& cache, const Mat& g, Mat& dg, Mat& db) {
    dg.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    db.row(0) += dy.colwise().sum();
    const Mat dxhat = dy.array().rowwise() * g.row(0).array();
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double m1 = dxhat.row(i).mean();
        const double m2 = (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
        dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2);
    }
    return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

// Row softmax in place; when causal, row i only sees columns <= i + offset
// and masked entries are exactly zero.
void softmax_rows(Mat& s, bool causal) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const Eigen::Index visible = causal ? std::min<Eigen::Index>(i + 1, s.cols()) : s.cols();
        auto row = s.row(i);
        const double mx = row.head(visible).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j < visible; ++j) {
            row(j) = std::exp(row(j) - mx);
            sum += row(j);
        }
        for (Eigen::Index j = 0; j < visible; ++j) row(j) /= sum;
        for (Eigen::Index j = visible; j < s.cols(); ++j) row(j) = 0.0;
    }
}

struct AttentionParts {
    Mat q, k, v;
    std::vector<Mat> attn;
    Mat ctx;
};

Mat attend(const Mat& xq, const Mat& xkv, const BlockParams& p, std::uint32_t n_heads, bool causal,
           AttentionParts& parts) {
    const Eigen::Index dk = p.wq.cols() / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    parts.q = xq * p.wq;
    parts.k = xkv * p.wk;
    parts.v = xkv * p.wv;
    parts.ctx.resize(xq.rows(), p.wq.cols());
    parts.attn.resize(n_heads);
    for (std::uint32_t h = 0; h < n_heads; ++h) {
        Mat s = (parts.q.middleCols(h * dk, dk) * parts.k.middleCols(h * dk, dk).transpose()) * scale;
        softmax_rows(s, causal);
        parts.ctx.middleCols(h * dk, dk) = s * parts.v.middleCols(h * dk, dk);
        parts.attn[h] = std::move(s);
    }
    Mat y = parts.ctx * p.wo;
    if (!y.allFinite()) throw Error(Errc::NonFiniteActivation, "attention output");
    return y;
}

Mat block_forward(const Mat& x, const BlockParams& p, std::uint32_t n_heads, bool causal, detail::BlockCache& c) {
    c.x_in = x;
    c.xn1 = layer_norm(x, p.ln1_g, p.ln1_b, c.ln1);
    AttentionParts parts;
    const Mat a = attend(c.xn1, c.xn1, p, n_heads, causal, parts);
    c.q = std::move(parts.q), c.k = std::move(parts.k), c.v = std::move(parts.v);
    c.attn = std::move(parts.attn);
    c.ctx = std::move(parts.ctx);
    c.x_mid = x + a;
    c.xn2 = layer_norm(c.x_mid, p.ln2_g, p.ln2_b, c.ln2);
    c.h_pre = c.xn2 * p.w1;
    c.h_pre.rowwise() += p.b1.row(0);
    c.h_act = c.h_pre.unaryExpr([](double v) { return gelu(v); });
    Mat out = c.h_act * p.w2;
    out.rowwise() += p.b2.row(0);
    out += c.x_mid;
    if (!out.allFinite()) throw Error(Errc::NonFiniteActivation, "block output");
    return out;
}

Mat block_backward(const Mat& dout, const detail::BlockCache& c, const BlockParams& p, std::uint32_t n_heads,
                   BlockParams& g) {
    // Feed-forward branch.
    g.b2.row(0) += dout.colwise().sum();
    g.w2.noalias() += c.h_act.transpose() * dout;
    Mat dh = dout * p.w2.transpose();
    dh.array() *= c.h_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    g.w1.noalias() += c.xn2.transpose() * dh;
    g.b1.row(0) += dh.colwise().sum();
    const Mat dxn2 = dh * p.w1.transpose();
    Mat dx_mid = dout + layer_norm_backward(dxn2, c.ln2, p.ln2_g, g.ln2_g, g.ln2_b);

    // Attention branch.
    g.wo.noalias() += c.ctx.transpose() * dx_mid;
    const Mat dctx = dx_mid * p.wo.transpose();
    const Eigen::Index dk = p.wq.cols() / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Mat dq(c.q.rows(), c.q.cols()), dkm(c.k.rows(), c.k.cols()), dv(c.v.rows(), c.v.cols());
    for (std::uint32_t h = 0; h < n_heads; ++h) {
        const Mat& a = c.attn[h];
        const auto dctx_h = dctx.middleCols(h * dk, dk);
        const Mat da = dctx_h * c.v.middleCols(h * dk, dk).transpose();
        dv.middleCols(h * dk, dk) = a.transpose() * dctx_h;
        const Vec inner = (da.array() * a.array()).rowwise().sum();
        Mat ds = a.array() * (da.array().colwise() - inner.array());
        ds *= scale;
        dq.middleCols(h * dk, dk) = ds * c.k.middleCols(h * dk, dk);
        dkm.middleCols(h * dk, dk) = ds.transpose() * c.q.middleCols(h * dk, dk);
    }
    g.wq.noalias() += c.xn1.transpose() * dq;
    g.wk.noalias() += c.xn1.transpose() * dkm;
    g.wv.noalias() += c.xn1.transpose() * dv;
    const Mat dxn1 = dq * p.wq.transpose() + dkm * p.wk.transpose() + dv * p.wv.transpose();
    return dx_mid + layer_norm_backward(dxn1, c.ln1, p.ln1_g, g.ln1_g, g.ln1_b);
}

}  // namespace

AttentionOutput self_attention(const Mat& x, const BlockParams& p, std::uint32_t n_heads, bool causal) {
    AttentionParts parts;
    AttentionOutput out;
    out.y = attend(x, x, p, n_heads, causal, parts);
    out.weights = std::move(parts.attn);
    return out;
}

AttentionOutput cross_attention(const Mat& f_q, const Mat& f_kv, const BlockParams& p, std::uint32_t n_heads) {
    if (f_q.cols() != p.wq.rows() || f_kv.cols() != p.wk.rows()) {
        throw Error(Errc::ShapeMismatch, "cross-attention inputs must have width d_model");
    }
    AttentionParts parts;
    AttentionOutput out;
    out.y = attend(f_q, f_kv, p, n_heads, false, parts);
    out.weights = std::move(parts.attn);
    return out;
}

Vec standardize_patch(std::span<const float> patch) {
    const auto n = static_cast<Eigen::Index>(patch.size());
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = patch[static_cast<std::size_t>(i)];
    const double mu = x.mean();
    const double sd = std::sqrt((x.array() - mu).square().mean());
    if (sd == 0.0) return Vec::Zero(n);
    return (x.array() - mu) / std::max(sd, kPatchEps);
}

namespace {

Mat standardized_patches(const RoiPatchSet& p, const ModelConfig& cfg) {
    if (p.patch_size != cfg.patch_size || p.n_rois != cfg.n_rois) {
        throw Error(Errc::ShapeMismatch, "patch set is " + std::to_string(p.n_rois) + "x" +
                                             std::to_string(p.patch_size) + "^3, model expects " +
                                             std::to_string(cfg.n_rois) + "x" + std::to_string(cfg.patch_size) + "^3");
    }
    Mat out(cfg.n_rois, static_cast<Eigen::Index>(cfg.patch_volume()));
    for (std::uint32_t r = 0; r < cfg.n_rois; ++r) out.row(r) = standardize_patch(p.patch(r)).transpose();
    return out;
}

}  // namespace

Mat roi_patch_embed(const RoiPatchSet& p, const ModelConfig& cfg, const Params& params) {
    Mat z = standardized_patches(p, cfg) * params.patch_w;
    z.rowwise() += params.patch_b.row(0);
    return z;
}

RitTrace rit_encode(const RoiPatchSet& p, const ModelConfig& cfg, const Params& params) {
    RitTrace t;
    t.patches = standardized_patches(p, cfg);
    t.z = t.patches * params.patch_w;
    t.z.rowwise() += params.patch_b.row(0);
    t.z += params.roi_pos;
    Mat x = t.z;
    t.blocks.resize(params.rit.size());
    for (std::size_t l = 0; l < params.rit.size(); ++l) {
        x = block_forward(x, params.rit[l], cfg.n_heads, false, t.blocks[l]);
    }
    t.h = std::move(x);
    t.image = t.h * params.conn_w;
    t.image.rowwise() += params.conn_b.row(0);
    return t;
}

void rit_backward_from_h(const RitTrace& rit, const Mat& d_h, const ModelConfig& cfg, const Params& params,
                         Params& grads) {
    Mat dx = d_h;
    for (std::size_t l = params.rit.size(); l-- > 0;) {
        dx = block_backward(dx, rit.blocks[l], params.rit[l], cfg.n_heads, grads.rit[l]);
    }
    grads.roi_pos += dx;
    grads.patch_b.row(0) += dx.colwise().sum();
    grads.patch_w.noalias() += rit.patches.transpose() * dx;
}

void rit_backward(const RitTrace& rit, const Mat& d_image, const ModelConfig& cfg, const Params& params,
                  bool connector_only, Params& grads) {
    grads.conn_w.noalias() += rit.h.transpose() * d_image;
    grads.conn_b.row(0) += d_image.colwise().sum();
    if (connector_only) return;
    rit_backward_from_h(rit, d_image * params.conn_w.transpose(), cfg, params, grads);
}

// ---------------------------------------------------------------- sequences

ModelInput encode_example(const Vocab& vocab, const PromptRecord& prompt, bool with_target) {
    ModelInput in;
    in.tokens.push_back(kBos);
    in.spans.push_back({});
    const auto words = split(prompt.text, ' ');

    // Genetic text runs from the word after "Information :" to "Brain".
    bool in_genome = false;
    std::string gene;
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto& w = words[i];
        if (w.empty()) continue;
        SpanLabel span;
        if (in_genome && w == "Brain") in_genome = false;
        if (in_genome) {
            if (w == "GENE" && i + 1 < words.size()) gene = words[i + 1];
            if (w != "|") span = {SpanKind::Gene, 0, gene};
        }
        if (w == kImageToken) {
            if (in.anchor) throw Error(Errc::AnchorMismatch, "prompt has more than one <IMG>");
            in.anchor = in.tokens.size();
        }
        in.tokens.push_back(vocab.id(w));
        in.spans.push_back(span);
        if (w == ":" && i > 0 && words[i - 1] == "Information") in_genome = true;
    }
    in.target_begin = in.tokens.size();
    if (with_target) {
        if (prompt.target.empty()) throw Error(Errc::EmptyTarget, "record has no target");
        for (TokenId id : vocab.tokenize(prompt.target)) {
            in.tokens.push_back(id);
            in.spans.push_back({SpanKind::Target, 0, {}});
        }
    }
    return in;
}

// ---------------------------------------------------------------- decoder

ForwardTrace forward_multimodal(const ModelInput& input, const Mat* image, const ModelConfig& cfg,
                                const Params& params) {
    if (input.anchor.has_value() != (image != nullptr)) {
        throw Error(Errc::AnchorMismatch, input.anchor ? "anchored prompt without image tokens"
                                                       : "image tokens supplied for a prompt without <IMG>");
    }
    if (image && (image->rows() != cfg.n_rois || image->cols() != cfg.d_model)) {
        throw Error(Errc::ShapeMismatch, "image tokens must be n_rois x d_model");
    }
    ForwardTrace t;
    const std::size_t n_img = image ? cfg.n_rois : 0;
    const std::size_t len = input.tokens.size() - (image ? 1 : 0) + n_img;
    if (len > cfg.max_seq_len) {
        throw Error(Errc::ShapeMismatch, "sequence length " + std::to_string(len) + " exceeds max_seq_len " +
                                             std::to_string(cfg.max_seq_len));
    }

    t.embeddings.resize(static_cast<Eigen::Index>(len), cfg.d_model);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < input.tokens.size(); ++i) {
        if (input.anchor && i == *input.anchor) {
            t.image_begin = pos;
            for (std::size_t r = 0; r < n_img; ++r, ++pos) {
                t.tokens.push_back(kImg);
                t.spans.push_back({SpanKind::Image, static_cast<std::uint32_t>(r), {}});  // roi_index
                t.embeddings.row(pos) = image->row(r) + params.pos_emb.row(pos);
            }
            continue;
        }
        const TokenId id = input.tokens[i];
        if (id >= cfg.vocab_size) throw Error(Errc::UnknownToken, "token id " + std::to_string(id));
        if (i >= input.target_begin) t.target_positions.push_back(pos);
        t.tokens.push_back(id);
        t.spans.push_back(input.spans[i]);
        t.embeddings.row(pos) = params.tok_emb.row(id) + params.pos_emb.row(pos);
        ++pos;
    }

    Mat x = t.embeddings;
    t.cache.blocks.resize(params.text.size());
    for (std::size_t l = 0; l < params.text.size(); ++l) {
        x = block_forward(x, params.text[l], cfg.n_heads, true, t.cache.blocks[l]);
        t.attention.push_back(t.cache.blocks[l].attn);
    }
    t.cache.xf = layer_norm(x, params.lnf_g, params.lnf_b, t.cache.lnf);
    t.logits = t.cache.xf * params.lm_head;
    return t;
}

namespace {

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const double mx = row.maxCoeff();
    return mx + std::log((row.array() - mx).exp().sum());
}

}  // namespace

double nll_loss(const ForwardTrace& trace) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t p : trace.target_positions) {
        if (p == 0) continue;
        const auto row = trace.logits.row(static_cast<Eigen::Index>(p - 1));
        total += log_sum_exp(row) - row(trace.tokens[p]);
        ++count;
    }
    if (count == 0) throw Error(Errc::EmptyTarget, "no target tokens in trace");
    return total / static_cast<double>(count);
}

void backward(const ForwardTrace& trace, const ModelInput& input, const ModelConfig& cfg, const Params& params,
              const RitTrace* rit, double scale, Gradients& grads) {
    (void)input;
    std::size_t count = 0;
    for (std::size_t p : trace.target_positions) count += p > 0 ? 1 : 0;
    if (count == 0) throw Error(Errc::EmptyTarget, "no target tokens in trace");
    const double w = scale / static_cast<double>(count);

    Mat dlogits = Mat::Zero(trace.logits.rows(), trace.logits.cols());
    for (std::size_t p : trace.target_positions) {
        if (p == 0) continue;
        const auto r = static_cast<Eigen::Index>(p - 1);
        const auto row = trace.logits.row(r);
        const double mx = row.maxCoeff();
        Eigen::RowVectorXd e = (row.array() - mx).exp();
        e /= e.sum();
        e(trace.tokens[p]) -= 1.0;
        dlogits.row(r) += w * e;
    }

    Params& g = grads.params;
    g.lm_head.noalias() += trace.cache.xf.transpose() * dlogits;
    Mat dx = layer_norm_backward(dlogits * params.lm_head.transpose(), trace.cache.lnf, params.lnf_g, g.lnf_g,
                                 g.lnf_b);
    for (std::size_t l = params.text.size(); l-- > 0;) {
        dx = block_backward(dx, trace.cache.blocks[l], params.text[l], cfg.n_heads, g.text[l]);
    }

    const auto len = static_cast<Eigen::Index>(trace.tokens.size());
    g.pos_emb.topRows(len) += dx;
    if (trace.image_begin) grads.d_image = Mat::Zero(cfg.n_rois, cfg.d_model);
    for (Eigen::Index p = 0; p < len; ++p) {
        if (trace.image_begin && trace.spans[p].kind == SpanKind::Image) {
            grads.d_image.row(p - static_cast<Eigen::Index>(*trace.image_begin)) += dx.row(p);
        } else {
            g.tok_emb.row(trace.tokens[p]) += dx.row(p);
        }
    }
    if (rit && trace.image_begin) rit_backward(*rit, grads.d_image, cfg, params, false, g);
}

// ---------------------------------------------------------------- decoding

DecodeResult greedy_decode(const ModelInput& prompt, const Mat* image, const ModelConfig& cfg, const Params& params,
                           const Vocab& vocab, std::size_t max_len) {
    DecodeResult out;
    ModelInput in = prompt;
    in.tokens.resize(prompt.target_begin);
    in.spans.resize(prompt.target_begin);
    for (std::size_t step = 0; step < max_len; ++step) {
        const ForwardTrace t = forward_multimodal(in, image, cfg, params);
        const auto row = t.logits.row(t.logits.rows() - 1);
        TokenId best = 0;
        for (Eigen::Index v = 1; v < row.size(); ++v) {
            if (row(v) > row(best)) best = static_cast<TokenId>(v);
        }
        out.generated.push_back(best);
        if (best == kEos) break;
        in.tokens.push_back(best);
        in.spans.push_back({SpanKind::Target, 0, {}});
    }
    TokenSequence words = out.generated;
    if (!words.empty() && words.back() == kEos) words.pop_back();
    if (words.size() == 5 && vocab.word(words[0]) == "This" && vocab.word(words[1]) == "subject" &&
        vocab.word(words[2]) == "is" && vocab.word(words[4]) == ".") {
        out.label = try_parse_stage(vocab.word(words[3]));
    }
    return out;
}

}  // namespace rgenima
