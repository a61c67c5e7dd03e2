#include "stmi/encoder.hpp"

#include <cmath>

#include "stmi/errors.hpp"

namespace stmi {

void EncoderConfig::validate() const {
    if (patch == 0 || image_size == 0 || image_size % patch != 0) {
        throw GeometryError("encoder: image size " + std::to_string(image_size) +
                            " is not divisible by patch " + std::to_string(patch));
    }
    if (heads == 0 || dim % heads != 0) {
        throw ContractError("encoder: dim " + std::to_string(dim) +
                            " is not divisible into " + std::to_string(heads) + " heads");
    }
    if (depth == 0) throw ContractError("encoder: depth must be at least 1");
    if (channels == 0) throw ContractError("encoder: channel count must be at least 1");
}

namespace sfm {

Tensor attention_logits(Tape& tape, const Tensor& q, const Tensor& k) {
    return ops::matmul(tape, q, ops::transpose(tape, k));
}

std::pair<Tensor, Tensor> modulation_matrices(Tape& tape, const Tensor& a) {
    Tensor m_pos = ops::sub(tape, ops::row_max_broadcast(tape, a), a);
    Tensor m_neg = ops::sub(tape, a, ops::row_min_broadcast(tape, a));
    return {m_pos, m_neg};
}

Tensor modulation(Tape& tape, const Tensor& a, const Tensor& r, const Tensor& alpha,
                  const Tensor& beta) {
    if (r.shape() != a.shape()) {
        throw DimensionError("modulation: interaction matrix " + shape_str(r.shape()) +
                             " does not match logits " + shape_str(a.shape()));
    }
    auto [m_pos, m_neg] = modulation_matrices(tape, a);
    Tensor background = ops::sub(tape, Tensor::full(r.shape(), 1.0), r);
    Tensor enhance = ops::hadamard(tape, alpha, ops::hadamard(tape, r, m_pos));
    Tensor suppress = ops::hadamard(tape, beta, ops::hadamard(tape, background, m_neg));
    return ops::sub(tape, enhance, suppress);
}

Tensor modulated_attention(Tape& tape, const Tensor& a, const Tensor& s,
                           std::size_t head_dim) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(head_dim));
    return ops::softmax_rows(tape, ops::scale(tape, ops::add(tape, a, s), inv));
}

} // namespace sfm

EncoderLayer::EncoderLayer(std::size_t dim, std::size_t heads, Rng& rng)
    : norm1(dim),
      norm2(dim),
      attn(dim, heads, rng),
      ffn(dim, 4 * dim, rng),
      alpha(Tensor::zeros({1}, true)),
      beta(Tensor::zeros({1}, true)) {}

void EncoderLayer::register_params(const std::string& prefix, ParamList& out) const {
    norm1.register_params(prefix + ".norm1", out);
    attn.register_params(prefix + ".attn", out);
    out.push_back({prefix + ".alpha", alpha});
    out.push_back({prefix + ".beta", beta});
    norm2.register_params(prefix + ".norm2", out);
    ffn.register_params(prefix + ".ffn", out);
}

Encoder::Encoder(EncoderConfig cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t patch_dim = cfg_.patch * cfg_.patch * cfg_.channels;
    patch_embed_ = Linear(patch_dim, cfg_.dim, rng);
    class_token_ = Tensor::zeros({1, cfg_.dim}, true);
    class_token_.fill_normal(rng, 0.0, 0.02);
    pos_embed_ = Tensor::zeros({cfg_.tokens() + 1, cfg_.dim}, true);
    pos_embed_.fill_normal(rng, 0.0, 0.02);
    layers_.reserve(cfg_.depth);
    for (std::size_t i = 0; i < cfg_.depth; ++i) layers_.emplace_back(cfg_.dim, cfg_.heads, rng);
    final_norm_ = LayerNorm(cfg_.dim);
}

Tensor Encoder::patchify(const Tensor& image) const {
    if (image.rank() != 3 || image.shape()[0] != cfg_.channels ||
        image.shape()[1] != cfg_.image_size || image.shape()[2] != cfg_.image_size) {
        throw GeometryError("encoder: image " + shape_str(image.shape()) + " does not match {" +
                            std::to_string(cfg_.channels) + ", " +
                            std::to_string(cfg_.image_size) + ", " +
                            std::to_string(cfg_.image_size) + "}");
    }
    const std::size_t g = cfg_.grid(), p = cfg_.patch, c = cfg_.channels, hw = cfg_.image_size;
    Tensor out = Tensor::zeros({g * g, p * p * c});
    for (std::size_t pi = 0; pi < g; ++pi) {
        for (std::size_t pj = 0; pj < g; ++pj) {
            double* row = out.data().data() + (pi * g + pj) * p * p * c;
            std::size_t idx = 0;
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t di = 0; di < p; ++di)
                    for (std::size_t dj = 0; dj < p; ++dj)
                        row[idx++] =
                            image.data()[(ch * hw + pi * p + di) * hw + pj * p + dj];
        }
    }
    return out;
}

Tensor Encoder::forward(Tape& tape, const Tensor& image, const Tensor& token_mask, bool train,
                        double perturb_p, Rng& rng, bool use_sfm) const {
    const std::size_t seq = cfg_.tokens() + 1;
    if (token_mask.rank() != 1 || token_mask.numel() != seq) {
        throw DimensionError("encoder: token mask " + shape_str(token_mask.shape()) +
                             " does not match sequence length " + std::to_string(seq));
    }
    Tensor x = patch_embed_.forward(tape, patchify(image));
    x = ops::concat_rows(tape, {class_token_, x});
    x = ops::add(tape, x, pos_embed_);

    Tensor r;
    if (use_sfm) {
        Tensor m = train ? masks::perturb(token_mask, perturb_p, rng) : token_mask;
        r = masks::interaction_mask(m);
    }
    for (const EncoderLayer& layer : layers_) {
        LogitHook hook;
        if (use_sfm) {
            hook = [&r, &layer](Tape& t, const Tensor& logits, std::size_t) {
                Tensor s = sfm::modulation(t, logits, r, layer.alpha, layer.beta);
                return ops::add(t, logits, s);
            };
        }
        Tensor h = layer.norm1.forward(tape, x);
        x = ops::add(tape, x, layer.attn.forward(tape, h, h, hook));
        x = ops::add(tape, x, layer.ffn.forward(tape, layer.norm2.forward(tape, x)));
    }
    return final_norm_.forward(tape, x);
}

void Encoder::register_params(const std::string& prefix, ParamList& out) const {
    patch_embed_.register_params(prefix + ".patch_embed", out);
    out.push_back({prefix + ".class_token", class_token_});
    out.push_back({prefix + ".pos_embed", pos_embed_});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].register_params(prefix + ".layer" + std::to_string(i), out);
    }
    final_norm_.register_params(prefix + ".final_norm", out);
}

} // namespace stmi
