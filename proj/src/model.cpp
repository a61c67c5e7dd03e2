#include "stmi/model.hpp"

#include <string>

#include "stmi/errors.hpp"

namespace stmi {

namespace {

constexpr const char* kModalities[3] = {"rgb", "nir", "tir"};

// Component stream tags so adding a component never shifts another's draws.
constexpr std::uint64_t kTagEncoder = 0x10;
constexpr std::uint64_t kTagStr = 0x20;
constexpr std::uint64_t kTagChi = 0x30;
constexpr std::uint64_t kTagHead = 0x40;

} // namespace

void ModelConfig::validate() const {
    enc.validate();
    if (chi_on && !str_on) {
        throw ConfigError("model: the hypergraph stage consumes semantic tokens, so chi_on "
                          "requires str_on");
    }
    if (num_ids < 2) throw ConfigError("model: need at least 2 identities");
    if (!(tau >= -1.0 && tau <= 1.0)) throw ConfigError("model: tau must lie in [-1, 1]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("model: rho must lie in [0, 1]");
    if (!(perturb_p >= 0.0 && perturb_p <= 1.0)) {
        throw ConfigError("model: perturbation rate must lie in [0, 1]");
    }
    if (!(margin >= 0.0)) throw ConfigError("model: margin must be >= 0");
    if (!(eps_smooth >= 0.0 && eps_smooth < 1.0)) {
        throw ConfigError("model: label smoothing must lie in [0, 1)");
    }
}

StmiModel::StmiModel(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    for (std::size_t m = 0; m < 3; ++m) {
        Rng er = rng.fork(kTagEncoder + m);
        encoders_[m] = Encoder(cfg_.enc, er);
        if (cfg_.str_on) {
            Rng sr = rng.fork(kTagStr + m);
            str_[m] = SemanticReallocator(cfg_.enc.dim, cfg_.k, cfg_.enc.heads, sr);
        }
    }
    if (cfg_.chi_on) {
        Rng cr = rng.fork(kTagChi);
        chi_ = HypergraphInteraction(cfg_.enc.dim, cfg_.k, cfg_.enc.heads, cfg_.tau, cr);
    }
    const std::size_t d = cfg_.enc.dim;
    {
        Rng hr = rng.fork(kTagHead + 0);
        head_g_ = SupervisedHead("G", 3 * d, cfg_.num_ids, hr);
    }
    if (cfg_.chi_on) {
        Rng hr = rng.fork(kTagHead + 1);
        head_u_ = SupervisedHead("U", 3 * d, cfg_.num_ids, hr);
    }
    if (cfg_.str_on) {
        Rng hr = rng.fork(kTagHead + 2);
        head_t_ = SupervisedHead("T", d, cfg_.num_ids, hr);
    }
}

BatchFeatures StmiModel::forward_batch(Tape& tape, const std::vector<SampleInput>& batch,
                                       bool train, Rng& rng) const {
    if (batch.empty()) throw ContractError("forward_batch: empty batch");
    const std::size_t n = cfg_.enc.tokens(), d = cfg_.enc.dim;

    std::vector<Tensor> g_rows, u_rows, t_rows;
    for (const SampleInput& s : batch) {
        Tensor token_mask = masks::patchify_mask(s.mask, cfg_.enc.patch, cfg_.rho);
        const Tensor* images[3] = {&s.rgb, &s.nir, &s.tir};
        Tensor global[3], semantic[3];
        for (std::size_t m = 0; m < 3; ++m) {
            Tensor out = encoders_[m].forward(tape, *images[m], token_mask, train,
                                              cfg_.perturb_p, rng, cfg_.sfm_on);
            global[m] = ops::slice_rows(tape, out, 0, 1);
            if (cfg_.str_on) {
                Tensor patches = ops::slice_rows(tape, out, 1, n);
                semantic[m] = str_[m].forward(tape, s.text, patches);
            }
        }
        g_rows.push_back(ops::concat_cols(tape, {global[0], global[1], global[2]}));
        if (cfg_.chi_on) {
            Tensor stack = ops::concat_rows(tape, {global[0], global[1], global[2]});
            Tensor fused = chi_.forward(tape, semantic[0], semantic[1], semantic[2], stack);
            u_rows.push_back(ops::reshape(tape, fused, {1, 3 * d}));
        }
        if (cfg_.str_on) t_rows.push_back(ops::reshape(tape, s.text, {1, d}));
    }

    BatchFeatures out;
    out.g = ops::concat_rows(tape, g_rows);
    if (cfg_.chi_on) out.u = ops::concat_rows(tape, u_rows);
    if (cfg_.str_on) out.t = ops::concat_rows(tape, t_rows);
    return out;
}

Tensor StmiModel::loss(Tape& tape, const BatchFeatures& features,
                       const std::vector<std::size_t>& labels) const {
    std::vector<HeadBatch> heads;
    heads.push_back({&head_g_, features.g});
    if (cfg_.chi_on) heads.push_back({&head_u_, features.u});
    if (cfg_.str_on) heads.push_back({&head_t_, features.t});
    return total_loss(tape, heads, labels, cfg_.eps_smooth, cfg_.margin);
}

Tensor StmiModel::eval_feature(const SampleInput& sample) const {
    Tape tape;
    tape.set_recording(false);
    Rng unused(0);
    BatchFeatures f = forward_batch(tape, {sample}, /*train=*/false, unused);
    return cfg_.chi_on ? f.u : f.g;
}

void StmiModel::register_params(ParamList& out) const {
    ParamList enc_params;
    for (std::size_t m = 0; m < 3; ++m) {
        encoders_[m].register_params(kModalities[m], enc_params);
    }
    for (NamedTensor& p : enc_params) {
        if (!cfg_.sfm_on &&
            (p.name.ends_with(".alpha") || p.name.ends_with(".beta"))) {
            continue;  // modulation gains idle without the mask hook
        }
        out.push_back(std::move(p));
    }
    if (cfg_.str_on) {
        for (std::size_t m = 0; m < 3; ++m) {
            str_[m].register_params(std::string("str.") + kModalities[m], out);
        }
    }
    if (cfg_.chi_on) chi_.register_params("chi", out);
    head_g_.register_params("heads", out);
    if (cfg_.chi_on) head_u_.register_params("heads", out);
    if (cfg_.str_on) head_t_.register_params("heads", out);
}

} // namespace stmi
