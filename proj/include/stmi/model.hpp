#pragma once

#include <array>
#include <vector>

#include "stmi/chi.hpp"
#include "stmi/encoder.hpp"
#include "stmi/objectives.hpp"
#include "stmi/str.hpp"

namespace stmi {

// Everything the network needs to be built; training-loop settings live in
// the run configuration.
struct ModelConfig {
    EncoderConfig enc;        // geometry and width of each modality branch
    std::size_t k = 4;        // semantic query tokens per modality
    double tau = 0.5;         // hyperedge similarity threshold
    double rho = 0.5;         // patch foreground-coverage threshold
    double perturb_p = 0.1;   // train-time mask perturbation rate
    std::size_t num_ids = 8;  // classifier width
    double margin = 0.3;
    double eps_smooth = 0.1;
    bool sfm_on = true;
    bool str_on = true;
    bool chi_on = true;  // requires str_on: hypergraph nodes are semantic tokens

    void validate() const;
};

// One loaded sample as the model consumes it.
struct SampleInput {
    Tensor rgb, nir, tir;  // {C, H, W}
    Tensor mask;           // {H, W} binary pixel mask shared by the triplet
    Tensor text;           // {D} frozen text embedding
};

// Per-batch supervision features; `u` exists only with the hypergraph stage
// on, `t` only with token reallocation on.
struct BatchFeatures {
    Tensor g;  // {B, 3D} concatenated class tokens
    Tensor u;  // {B, 3D} fused global features, flattened
    Tensor t;  // {B, D} text embeddings
};

// The full three-branch network: modality encoders with mask-modulated
// attention, per-modality semantic token reallocation, cross-modal hypergraph
// interaction, and one supervised head per retained feature.
class StmiModel {
public:
    StmiModel() = default;
    StmiModel(const ModelConfig& cfg, Rng& rng);

    // Runs every branch for every sample. In training mode the token masks
    // are perturbed through `rng`; in eval mode `rng` is never consumed.
    BatchFeatures forward_batch(Tape& tape, const std::vector<SampleInput>& batch, bool train,
                                Rng& rng) const;

    // Sum over the active heads {G, U, T} of classification + metric losses.
    Tensor loss(Tape& tape, const BatchFeatures& features,
                const std::vector<std::size_t>& labels) const;

    // Retrieval feature for one sample, {1, 3D}: flattened fused features when
    // the hypergraph stage is on, otherwise the concatenated class tokens.
    // Never records onto a tape.
    Tensor eval_feature(const SampleInput& sample) const;

    // Active trainable parameters under dotted names. Modulation gains are
    // omitted when sfm is off, and the str/chi/head parameters of disabled
    // stages are omitted entirely.
    void register_params(ParamList& out) const;

    const ModelConfig& config() const { return cfg_; }
    std::array<Encoder, 3>& encoders() { return encoders_; }
    std::array<SemanticReallocator, 3>& reallocators() { return str_; }
    HypergraphInteraction& interaction() { return chi_; }
    SupervisedHead& head_g() { return head_g_; }
    SupervisedHead& head_u() { return head_u_; }
    SupervisedHead& head_t() { return head_t_; }

private:
    ModelConfig cfg_;
    std::array<Encoder, 3> encoders_;
    std::array<SemanticReallocator, 3> str_;
    HypergraphInteraction chi_;
    SupervisedHead head_g_, head_u_, head_t_;
};

} // namespace stmi
