#pragma once

#include <vector>

#include "stmi/layers.hpp"

namespace stmi {

// One hyperedge per node: e_i is the set of nodes whose cosine similarity to
// node i reaches the threshold. Membership always contains i itself (cosine
// self-similarity is 1), and is symmetric because cosine is. The structure is
// plain data: nothing about it participates in differentiation.
struct Hypergraph {
    std::vector<std::vector<std::size_t>> membership;
    double tau = 0.5;
};

// Cross-modal interaction over the stacked semantic tokens: threshold
// hypergraph construction, weighted mean-aggregation convolution with
// residual, then cross-attention fusion of the per-modality global features.
class HypergraphInteraction {
public:
    HypergraphInteraction() = default;
    HypergraphInteraction(std::size_t dim, std::size_t k, std::size_t heads, double tau,
                          Rng& rng);

    // Row-stack of the three {K+1, D} semantic token sets in fixed order.
    static Tensor concat_modalities(Tape& tape, const Tensor& f_rgb, const Tensor& f_nir,
                                    const Tensor& f_tir);

    // Star hyperedges from cosine similarity over L2-normalized rows of h.
    // A row with near-zero norm cannot be normalized and raises NumericError.
    static Hypergraph build_hyperedges(const Tensor& h, double tau);

    // h_e = mean of member rows; node i gets GELU(sum_{e containing i} w_e h_e
    // + b_i), plus the residual h. Edge weights and biases start at zero, so a
    // fresh block is the identity.
    Tensor hypergraph_conv(Tape& tape, const Tensor& h, const Hypergraph& graph) const;

    // U = CrossAttn(G, H', H') + G with G the {3, D} stacked global features.
    Tensor fuse_global(Tape& tape, const Tensor& g, const Tensor& h_prime) const;

    // Full pipeline: stack, build structure, run `conv_depth` convolution
    // passes (structure rebuilt from the current features each pass), fuse.
    Tensor forward(Tape& tape, const Tensor& f_rgb, const Tensor& f_nir, const Tensor& f_tir,
                   const Tensor& g, std::size_t conv_depth = 1) const;

    void register_params(const std::string& prefix, ParamList& out) const;
    double tau() const { return tau_; }
    Tensor& edge_weights() { return w_; }
    Tensor& node_bias() { return b_; }

private:
    std::size_t nodes_ = 0;  // 3(K+1)
    double tau_ = 0.5;
    Tensor w_;  // {nodes}
    Tensor b_;  // {nodes, D}
    MultiHeadAttention fuse_;
};

} // namespace stmi
