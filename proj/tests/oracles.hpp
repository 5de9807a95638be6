// Independent re-implementations used as references by the tests. They work
// on plain nested vectors and loops so that they share no code with the
// Eigen-based library kernels.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, std::vector<double>(c, 0.0)); }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out = zeros(a.size(), b.front().size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[k].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

struct Attention {
    Matrix y;
    std::vector<Matrix> weights;
};

// softmax(Q_h K_h^T / sqrt(d_k)) V_h per head, heads concatenated, then W_o.
inline Attention attention(const Matrix& xq, const Matrix& xkv, const Matrix& wq, const Matrix& wk,
                           const Matrix& wv, const Matrix& wo, std::size_t heads, bool causal) {
    const Matrix q = matmul(xq, wq), k = matmul(xkv, wk), v = matmul(xkv, wv);
    const std::size_t d = wq.front().size(), dk = d / heads;
    Matrix ctx = zeros(xq.size(), d);
    Attention out;
    for (std::size_t h = 0; h < heads; ++h) {
        Matrix w = zeros(xq.size(), xkv.size());
        for (std::size_t i = 0; i < xq.size(); ++i) {
            std::vector<double> s(xkv.size(), 0.0);
            double mx = -INFINITY;
            for (std::size_t j = 0; j < xkv.size(); ++j) {
                if (causal && j > i) continue;
                for (std::size_t c = 0; c < dk; ++c) s[j] += q[i][h * dk + c] * k[j][h * dk + c];
                s[j] /= std::sqrt(static_cast<double>(dk));
                mx = std::max(mx, s[j]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < xkv.size(); ++j) {
                if (causal && j > i) continue;
                w[i][j] = std::exp(s[j] - mx);
                z += w[i][j];
            }
            for (std::size_t j = 0; j < xkv.size(); ++j) w[i][j] /= z;
            for (std::size_t c = 0; c < dk; ++c)
                for (std::size_t j = 0; j < xkv.size(); ++j) ctx[i][h * dk + c] += w[i][j] * v[j][h * dk + c];
        }
        out.weights.push_back(std::move(w));
    }
    out.y = matmul(ctx, wo);
    return out;
}

// Mean over target positions p of -log softmax(logits[p-1])[token p].
inline double nll(const Matrix& logits, const std::vector<std::uint32_t>& tokens,
                  const std::vector<std::size_t>& targets) {
    double total = 0.0;
    for (std::size_t p : targets) {
        const auto& row = logits[p - 1];
        double z = 0.0;
        for (double v : row) z += std::exp(v);
        total += std::log(z) - row[tokens[p]];
    }
    return total / static_cast<double>(targets.size());
}

// R_l = rownorm(0.5 * mean_h A_l + 0.5 I); rollout = R_L ... R_1.
inline Matrix rollout(const std::vector<std::vector<Matrix>>& layers) {
    const std::size_t n = layers.front().front().size();
    Matrix acc = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) acc[i][i] = 1.0;
    for (const auto& heads : layers) {
        Matrix r = zeros(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double a = 0.0;
                for (const auto& h : heads) a += h[i][j];
                r[i][j] = 0.5 * a / static_cast<double>(heads.size()) + (i == j ? 0.5 : 0.0);
                sum += r[i][j];
            }
            for (std::size_t j = 0; j < n; ++j) r[i][j] /= sum;
        }
        acc = matmul(r, acc);
    }
    return acc;
}

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline cpp_int factorial(std::int64_t n) {
    static std::vector<cpp_int> table{1};
    while (static_cast<std::int64_t>(table.size()) <= n) table.push_back(table.back() * static_cast<long>(table.size()));
    return table[static_cast<std::size_t>(n)];
}

inline cpp_int choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    return factorial(n) / (factorial(k) * factorial(n - k));
}

// Exact HWE conditional law: P(het = h | N, n_minor) is
// N! / (n_AA! h! n_BB!) * 2^h / C(2N, n_minor), by direct enumeration.
struct HweLaw {
    std::vector<std::int64_t> het;
    std::vector<cpp_int> numer;  // shared denominator C(2N, n_minor)
    cpp_int denom;
};

inline HweLaw hwe_law(std::int64_t n_aa, std::int64_t n_ab, std::int64_t n_bb) {
    const std::int64_t n = n_aa + n_ab + n_bb;
    const std::int64_t a_alleles = 2 * n_aa + n_ab;
    const std::int64_t minor = std::min(a_alleles, 2 * n - a_alleles);
    HweLaw law;
    law.denom = choose(2 * n, minor);
    for (std::int64_t h = 0; h <= minor; ++h) {
        if ((minor - h) % 2 != 0) continue;
        const std::int64_t hom_minor = (minor - h) / 2;
        const std::int64_t hom_major = n - h - hom_minor;
        if (hom_major < 0) continue;
        law.het.push_back(h);
        law.numer.push_back(factorial(n) / (factorial(hom_minor) * factorial(h) * factorial(hom_major)) *
                            (cpp_int(1) << static_cast<unsigned>(h)));
    }
    return law;
}

inline double to_double(const cpp_int& num, const cpp_int& den) {
    return static_cast<double>(cpp_rational(num, den));
}

// Two-sided exact p: total mass of configurations no more likely than observed.
inline double hwe_p(std::int64_t n_aa, std::int64_t n_ab, std::int64_t n_bb) {
    const HweLaw law = hwe_law(n_aa, n_ab, n_bb);
    cpp_int observed = 0;
    for (std::size_t i = 0; i < law.het.size(); ++i)
        if (law.het[i] == n_ab) observed = law.numer[i];
    cpp_int tail = 0;
    for (const auto& x : law.numer)
        if (x <= observed) tail += x;
    return to_double(tail, law.denom);
}

// P(X >= a), X ~ Hypergeometric(N, K, n), by exact rational summation.
inline double hypergeom_tail(std::int64_t a, std::int64_t K, std::int64_t n, std::int64_t N) {
    cpp_int num = 0;
    for (std::int64_t k = std::max<std::int64_t>(a, 0); k <= std::min(K, n); ++k)
        num += choose(K, k) * choose(N - K, n - k);
    return to_double(num, choose(N, n));
}

}  // namespace oracle
