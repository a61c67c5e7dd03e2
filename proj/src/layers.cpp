#include "stmi/layers.hpp"

#include <cmath>

#include "stmi/errors.hpp"

namespace stmi {

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, double init_std)
    : weight(Tensor::zeros({in, out}, true)), bias(Tensor::zeros({out}, true)) {
    weight.fill_normal(rng, 0.0, init_std);
}

Tensor Linear::forward(Tape& tape, const Tensor& x) const {
    return ops::add_row_vector(tape, ops::matmul(tape, x, weight), bias);
}

void Linear::register_params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(std::size_t dim)
    : gamma(Tensor::full({dim}, 1.0, true)), beta(Tensor::zeros({dim}, true)) {}

Tensor LayerNorm::forward(Tape& tape, const Tensor& x) const {
    return ops::layer_norm_rows(tape, x, gamma, beta);
}

void LayerNorm::register_params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

Ffn::Ffn(std::size_t dim, std::size_t hidden, Rng& rng)
    : fc1(dim, hidden, rng), fc2(hidden, dim, rng) {}

Tensor Ffn::forward(Tape& tape, const Tensor& x) const {
    return fc2.forward(tape, ops::gelu(tape, fc1.forward(tape, x)));
}

void Ffn::register_params(const std::string& prefix, ParamList& out) const {
    fc1.register_params(prefix + ".fc1", out);
    fc2.register_params(prefix + ".fc2", out);
}

MultiHeadAttention::MultiHeadAttention(std::size_t dim, std::size_t head_count, Rng& rng)
    : heads(head_count),
      wq(dim, dim, rng),
      wk(dim, dim, rng),
      wv(dim, dim, rng),
      wo(dim, dim, rng) {
    if (head_count == 0 || dim % head_count != 0) {
        throw ContractError("attention width " + std::to_string(dim) +
                            " is not divisible into " + std::to_string(head_count) + " heads");
    }
}

Tensor MultiHeadAttention::forward(Tape& tape, const Tensor& q_in, const Tensor& kv_in,
                                   const LogitHook& hook,
                                   std::vector<Tensor>* weights_out) const {
    const std::size_t dim = wq.weight.cols();
    if (q_in.cols() != dim || kv_in.cols() != dim) {
        throw DimensionError("attention inputs " + shape_str(q_in.shape()) + ", " +
                             shape_str(kv_in.shape()) + " do not match width " +
                             std::to_string(dim));
    }
    const std::size_t head_dim = dim / heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Tensor q = wq.forward(tape, q_in);
    Tensor k = wk.forward(tape, kv_in);
    Tensor v = wv.forward(tape, kv_in);
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor qh = ops::slice_cols(tape, q, h * head_dim, head_dim);
        Tensor kh = ops::slice_cols(tape, k, h * head_dim, head_dim);
        Tensor vh = ops::slice_cols(tape, v, h * head_dim, head_dim);
        Tensor logits = ops::matmul(tape, qh, ops::transpose(tape, kh));
        if (hook) logits = hook(tape, logits, h);
        Tensor attn = ops::softmax_rows(tape, ops::scale(tape, logits, inv_sqrt_d));
        if (weights_out) weights_out->push_back(attn);
        head_outputs.push_back(ops::matmul(tape, attn, vh));
    }
    return wo.forward(tape, ops::concat_cols(tape, head_outputs));
}

void MultiHeadAttention::register_params(const std::string& prefix, ParamList& out) const {
    wq.register_params(prefix + ".wq", out);
    wk.register_params(prefix + ".wk", out);
    wv.register_params(prefix + ".wv", out);
    wo.register_params(prefix + ".wo", out);
}

} // namespace stmi
