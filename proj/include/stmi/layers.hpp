#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stmi/ops.hpp"
#include "stmi/rng.hpp"
#include "stmi/tensor.hpp"

namespace stmi {

using ParamList = std::vector<NamedTensor>;

// y = x W + b with x: {rows, in}, W: {in, out}, b: {out}.
struct Linear {
    Tensor weight;
    Tensor bias;

    Linear() = default;
    Linear(std::size_t in, std::size_t out, Rng& rng, double init_std = 0.02);

    Tensor forward(Tape& tape, const Tensor& x) const;
    void register_params(const std::string& prefix, ParamList& out) const;
};

struct LayerNorm {
    Tensor gamma;
    Tensor beta;

    LayerNorm() = default;
    explicit LayerNorm(std::size_t dim);

    Tensor forward(Tape& tape, const Tensor& x) const;
    void register_params(const std::string& prefix, ParamList& out) const;
};

// Two linear maps with GELU between.
struct Ffn {
    Linear fc1;
    Linear fc2;

    Ffn() = default;
    Ffn(std::size_t dim, std::size_t hidden, Rng& rng);

    Tensor forward(Tape& tape, const Tensor& x) const;
    void register_params(const std::string& prefix, ParamList& out) const;
};

// Per-head transform applied to the raw (unscaled) logits before the 1/sqrt(d)
// scaling and softmax. Used to inject the mask-based logit modulation.
using LogitHook = std::function<Tensor(Tape&, const Tensor& logits, std::size_t head)>;

// Standard multi-head scaled-dot-product attention with learned projections.
// q_in: {Rq, D}, kv_in: {Rk, D}; output {Rq, D}. If `weights_out` is non-null
// the post-softmax attention matrices (one per head) are appended to it.
struct MultiHeadAttention {
    std::size_t heads = 1;
    Linear wq, wk, wv, wo;

    MultiHeadAttention() = default;
    MultiHeadAttention(std::size_t dim, std::size_t heads, Rng& rng);

    Tensor forward(Tape& tape, const Tensor& q_in, const Tensor& kv_in,
                   const LogitHook& hook = {},
                   std::vector<Tensor>* weights_out = nullptr) const;
    void register_params(const std::string& prefix, ParamList& out) const;
};

} // namespace stmi
