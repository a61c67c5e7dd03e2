#pragma once

#include "stmi/layers.hpp"

namespace stmi {

// Semantic token reallocation for one modality: K learnable query tokens plus
// the (frozen) shared text feature cross-attend over that modality's patch
// tokens, then pass through a feed-forward block, both with residuals.
class SemanticReallocator {
public:
    SemanticReallocator() = default;
    SemanticReallocator(std::size_t dim, std::size_t k, std::size_t heads, Rng& rng);

    // Q' = [query bank rows; text feature row]: {K+1, D}.
    Tensor build_queries(Tape& tape, const Tensor& text_feature) const;

    // patch_tokens: {N, D}, class token excluded. Output {K+1, D}:
    // Z = CrossAttn(Q', F, F) + Q'; out = FFN(Z) + Z.
    Tensor forward(Tape& tape, const Tensor& text_feature, const Tensor& patch_tokens) const;

    void register_params(const std::string& prefix, ParamList& out) const;
    std::size_t k() const { return k_; }
    Tensor& query_bank() { return query_bank_; }

private:
    std::size_t k_ = 0;
    Tensor query_bank_;  // {K, D}
    MultiHeadAttention cross_;
    Ffn ffn_;
};

} // namespace stmi
