#include "stmi/str.hpp"

#include "stmi/errors.hpp"

namespace stmi {

SemanticReallocator::SemanticReallocator(std::size_t dim, std::size_t k, std::size_t heads,
                                         Rng& rng)
    : k_(k), query_bank_(Tensor::zeros({k, dim}, true)), cross_(dim, heads, rng),
      ffn_(dim, 4 * dim, rng) {
    query_bank_.fill_normal(rng, 0.0, 0.02);
}

Tensor SemanticReallocator::build_queries(Tape& tape, const Tensor& text_feature) const {
    const std::size_t dim = cross_.wq.weight.cols();
    if (text_feature.rank() != 1 || text_feature.numel() != dim) {
        throw DimensionError("reallocator: text feature " + shape_str(text_feature.shape()) +
                             " does not match width " + std::to_string(dim));
    }
    if (text_feature.requires_grad()) {
        throw ContractError("reallocator: text feature is frozen and must not require grad");
    }
    Tensor t_row = ops::reshape(tape, text_feature, {1, dim});
    if (k_ == 0) return t_row;
    return ops::concat_rows(tape, {query_bank_, t_row});
}

Tensor SemanticReallocator::forward(Tape& tape, const Tensor& text_feature,
                                    const Tensor& patch_tokens) const {
    const std::size_t dim = cross_.wq.weight.cols();
    if (patch_tokens.rank() != 2 || patch_tokens.cols() != dim || patch_tokens.rows() == 0) {
        throw DimensionError("reallocator: patch tokens " + shape_str(patch_tokens.shape()) +
                             " must be {N>=1, " + std::to_string(dim) + "}");
    }
    Tensor queries = build_queries(tape, text_feature);
    Tensor z = ops::add(tape, cross_.forward(tape, queries, patch_tokens), queries);
    return ops::add(tape, ffn_.forward(tape, z), z);
}

void SemanticReallocator::register_params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".query_bank", query_bank_});
    cross_.register_params(prefix + ".cross", out);
    ffn_.register_params(prefix + ".ffn", out);
}

} // namespace stmi
