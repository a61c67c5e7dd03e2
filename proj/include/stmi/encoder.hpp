#pragma once

#include <utility>
#include <vector>

#include "stmi/layers.hpp"
#include "stmi/masks.hpp"

namespace stmi {

struct EncoderConfig {
    std::size_t image_size = 32;  // square inputs
    std::size_t channels = 3;
    std::size_t patch = 8;
    std::size_t depth = 2;
    std::size_t heads = 4;
    std::size_t dim = 64;

    std::size_t grid() const { return image_size / patch; }
    std::size_t tokens() const { return grid() * grid(); }  // patch tokens, excl. class
    void validate() const;
};

// Mask-driven attention-logit modulation. All pieces operate on one head's
// unscaled logit matrix A ({T, T}, T = N+1 tokens).
namespace sfm {

// Raw logits q k^T (scaling happens inside modulated_attention).
Tensor attention_logits(Tape& tape, const Tensor& q, const Tensor& k);

// M_pos[i][j] = rowmax_i(A) - A[i][j]; M_neg[i][j] = A[i][j] - rowmin_i(A).
std::pair<Tensor, Tensor> modulation_matrices(Tape& tape, const Tensor& a);

// S = alpha * (R o M_pos) - beta * ((1 - R) o M_neg), where R is the
// both-foreground indicator and o is elementwise product. alpha and beta are
// one-element tensors so their gradients accumulate on the tape.
Tensor modulation(Tape& tape, const Tensor& a, const Tensor& r, const Tensor& alpha,
                  const Tensor& beta);

// softmax_rows((A + S) / sqrt(head_dim)).
Tensor modulated_attention(Tape& tape, const Tensor& a, const Tensor& s,
                           std::size_t head_dim);

} // namespace sfm

// Pre-norm transformer layer whose self-attention logits can be shifted by the
// mask modulation. alpha and beta start at zero, so an untrained layer is a
// plain transformer layer.
struct EncoderLayer {
    LayerNorm norm1, norm2;
    MultiHeadAttention attn;
    Ffn ffn;
    Tensor alpha, beta;

    EncoderLayer() = default;
    EncoderLayer(std::size_t dim, std::size_t heads, Rng& rng);
    void register_params(const std::string& prefix, ParamList& out) const;
};

// Vision encoder for one modality: non-overlapping patch embedding, class
// token, learned positional embeddings, `depth` modulated pre-norm layers, and
// a final layer norm. Output is {N+1, D} with the class token at row 0.
class Encoder {
public:
    Encoder() = default;
    Encoder(EncoderConfig cfg, Rng& rng);

    // image: {C, H, W}; token_mask: {N+1} binary with entry 0 set. In training
    // mode the mask is perturbed once (per forward) with probability p and the
    // perturbed mask is shared by every layer; in eval mode it is used as-is.
    // With use_sfm false the mask is ignored and the layers run unmodulated.
    Tensor forward(Tape& tape, const Tensor& image, const Tensor& token_mask, bool train,
                   double perturb_p, Rng& rng, bool use_sfm = true) const;

    // {N, patch*patch*C}: patches tiled row-major over the grid (matching the
    // mask patch order), each flattened channel-major then row-major.
    Tensor patchify(const Tensor& image) const;

    void register_params(const std::string& prefix, ParamList& out) const;
    const EncoderConfig& config() const { return cfg_; }
    std::vector<EncoderLayer>& layers() { return layers_; }
    const std::vector<EncoderLayer>& layers() const { return layers_; }

private:
    EncoderConfig cfg_;
    Linear patch_embed_;
    Tensor class_token_;
    Tensor pos_embed_;
    std::vector<EncoderLayer> layers_;
    LayerNorm final_norm_;
};

} // namespace stmi
