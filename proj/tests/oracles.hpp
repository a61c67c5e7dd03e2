// Test-side reference implementations, written independently of the library
// kernels so the two can disagree. Keep these naive and obvious.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "stmi/tensor.hpp"

namespace oracle {

// Plain ijk triple loop (the library kernel iterates ikj).
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t r, std::size_t k, std::size_t n) {
    std::vector<double> c(r * n, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t kk = 0; kk < k; ++kk) c[i * n + j] += a[i * k + kk] * b[kk * n + j];
    return c;
}

inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Central-difference gradient check. `build` must construct the graph from the
// current leaf values and return a scalar loss; it is re-invoked after each
// perturbation. Returns the worst relative error across every entry of every
// leaf. A leaf whose gradient buffer stays empty counts as an all-zero
// gradient, so "gradient never reached this input" still gets compared.
inline double max_fd_rel_err(const std::function<stmi::Tensor(stmi::Tape&)>& build,
                             const std::vector<stmi::Tensor>& leaves, double h = 1e-6) {
    std::vector<std::vector<double>> analytic;
    {
        for (const stmi::Tensor& leaf : leaves) leaf.zero_grad();
        stmi::Tape tape;
        stmi::Tensor loss = build(tape);
        tape.backward(loss);
        for (const stmi::Tensor& leaf : leaves) {
            if (leaf.node()->grad.empty())
                analytic.emplace_back(leaf.numel(), 0.0);
            else
                analytic.push_back(leaf.node()->grad);
        }
    }
    auto eval = [&]() {
        stmi::Tape tape;
        tape.set_recording(false);
        return build(tape).data()[0];
    };
    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        std::vector<double>& v = leaves[li].node()->value;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double keep = v[i];
            v[i] = keep + h;
            const double up = eval();
            v[i] = keep - h;
            const double down = eval();
            v[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic[li][i], numeric));
        }
    }
    return worst;
}

// Threshold hyperedges computed directly from raw rows (dot / (|a||b|)),
// without the library's normalize-first approach.
inline std::vector<std::vector<std::size_t>> threshold_edges(const std::vector<double>& h,
                                                             std::size_t n, std::size_t d,
                                                             double tau) {
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += h[i * d + k] * h[i * d + k];
        norms[i] = std::sqrt(s);
    }
    std::vector<std::vector<std::size_t>> edges(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += h[i * d + k] * h[j * d + k];
            if (dot / (norms[i] * norms[j]) >= tau) edges[i].push_back(j);
        }
    }
    return edges;
}

inline double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Direct per-node evaluation of the weighted-mean hypergraph update with
// residual: out_i = gelu(sum_{e : i in e} w_e * mean(members of e) + b_i) + h_i.
inline std::vector<double> hyperconv(const std::vector<double>& h, std::size_t n, std::size_t d,
                                     const std::vector<std::vector<std::size_t>>& edges,
                                     const std::vector<double>& w,
                                     const std::vector<double>& b) {
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            double pre = b[i * d + c];
            for (std::size_t e = 0; e < n; ++e) {
                bool member = false;
                for (std::size_t node : edges[e]) member = member || node == i;
                if (!member) continue;
                double mean = 0.0;
                for (std::size_t node : edges[e]) mean += h[node * d + c];
                mean /= static_cast<double>(edges[e].size());
                pre += w[e] * mean;
            }
            out[i * d + c] = gelu_scalar(pre) + h[i * d + c];
        }
    }
    return out;
}

// Smoothed cross-entropy evaluated the textbook way: softmax probabilities
// first, then -sum_c q_c log p_c per row (the library fuses logsumexp - q.x).
inline double ce_smooth_direct(const std::vector<double>& logits, std::size_t b, std::size_t c,
                               const std::vector<std::size_t>& labels, double eps) {
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = logits.data() + i * c;
        double m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - m);
        for (std::size_t j = 0; j < c; ++j) {
            const double q = eps / static_cast<double>(c) + (j == labels[i] ? 1.0 - eps : 0.0);
            const double logp = (row[j] - m) - std::log(denom);
            loss -= q * logp;
        }
    }
    return loss / static_cast<double>(b);
}

// Literal average-precision formula: at every relevant rank k (1-based),
// recount the hits from scratch, then divide the sum by the relevant count.
inline double ap_literal(const std::vector<int>& rel) {
    std::size_t relevant = 0;
    for (int r : rel) relevant += static_cast<std::size_t>(r);
    double sum = 0.0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
        if (rel[k] != 1) continue;
        std::size_t hits = 0;
        for (std::size_t j = 0; j <= k; ++j) hits += static_cast<std::size_t>(rel[j]);
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return sum / static_cast<double>(relevant);
}

struct EvalOracle {
    double map = 0, cmc1 = 0, cmc5 = 0, cmc10 = 0;
};

// Brute-force ranked retrieval: selection sort over (distance, index) after
// dropping same-identity-same-camera rows, literal AP, literal CMC scan.
inline EvalOracle evaluate_bruteforce(const std::vector<double>& q, std::size_t nq,
                                      const std::vector<double>& g, std::size_t ng,
                                      std::size_t d,
                                      const std::vector<std::size_t>& qlab,
                                      const std::vector<std::size_t>& qcam,
                                      const std::vector<std::size_t>& glab,
                                      const std::vector<std::size_t>& gcam) {
    EvalOracle out;
    for (std::size_t i = 0; i < nq; ++i) {
        std::vector<std::size_t> kept;
        for (std::size_t j = 0; j < ng; ++j)
            if (!(glab[j] == qlab[i] && gcam[j] == qcam[i])) kept.push_back(j);
        auto dist = [&](std::size_t j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = q[i * d + k] - g[j * d + k];
                s += diff * diff;
            }
            return std::sqrt(s);
        };
        // selection sort by (distance, gallery index)
        for (std::size_t a = 0; a < kept.size(); ++a) {
            std::size_t best = a;
            for (std::size_t b = a + 1; b < kept.size(); ++b) {
                const double da = dist(kept[b]), db = dist(kept[best]);
                if (da < db || (da == db && kept[b] < kept[best])) best = b;
            }
            std::swap(kept[a], kept[best]);
        }
        std::vector<int> rel;
        for (std::size_t j : kept) rel.push_back(glab[j] == qlab[i] ? 1 : 0);
        out.map += ap_literal(rel);
        std::size_t first = rel.size();
        for (std::size_t k = 0; k < rel.size(); ++k) {
            if (rel[k] == 1) {
                first = k;
                break;
            }
        }
        out.cmc1 += first < 1;
        out.cmc5 += first < 5;
        out.cmc10 += first < 10;
    }
    out.map /= static_cast<double>(nq);
    out.cmc1 /= static_cast<double>(nq);
    out.cmc5 /= static_cast<double>(nq);
    out.cmc10 /= static_cast<double>(nq);
    return out;
}

// Batch-hard triplet by exhaustive pair search with plain (un-regularized)
// Euclidean distances.
inline double triplet_exhaustive(const std::vector<double>& f, std::size_t b, std::size_t d,
                                 const std::vector<std::size_t>& labels, double margin) {
    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = f[i * d + k] - f[j * d + k];
            s += diff * diff;
        }
        return std::sqrt(s);
    };
    double loss = 0.0;
    for (std::size_t a = 0; a < b; ++a) {
        double dp = -1.0, dn = -1.0;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == a) continue;
            const double dv = dist(a, j);
            if (labels[j] == labels[a]) {
                dp = std::max(dp, dv);
            } else {
                dn = (dn < 0.0) ? dv : std::min(dn, dv);
            }
        }
        loss += std::max(0.0, margin + dp - dn);
    }
    return loss / static_cast<double>(b);
}

} // namespace oracle
