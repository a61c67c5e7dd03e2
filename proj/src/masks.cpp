#include "stmi/masks.hpp"

#include "stmi/errors.hpp"

namespace stmi::masks {

namespace {

void require_binary(const Tensor& t, const char* what) {
    for (double v : t.data()) {
        if (v != 0.0 && v != 1.0) {
            throw ContractError(std::string(what) + ": mask entries must be exactly 0 or 1");
        }
    }
}

} // namespace

Tensor patchify_mask(const Tensor& pixel_mask, std::size_t patch, double rho) {
    if (pixel_mask.rank() != 2) {
        throw DimensionError("patchify_mask: pixel mask must be rank 2, got " +
                             shape_str(pixel_mask.shape()));
    }
    require_binary(pixel_mask, "patchify_mask");
    if (patch == 0) throw GeometryError("patchify_mask: patch size must be positive");
    const std::size_t h = pixel_mask.rows(), w = pixel_mask.cols();
    if (h % patch != 0 || w % patch != 0) {
        throw GeometryError("patchify_mask: " + shape_str(pixel_mask.shape()) +
                            " is not divisible by patch " + std::to_string(patch));
    }
    if (rho < 0.0 || rho > 1.0) {
        throw ContractError("patchify_mask: rho must lie in [0, 1]");
    }
    const std::size_t gh = h / patch, gw = w / patch;
    Tensor m = Tensor::zeros({gh * gw + 1});
    m.data()[0] = 1.0;
    const double per_patch = static_cast<double>(patch * patch);
    for (std::size_t pi = 0; pi < gh; ++pi) {
        for (std::size_t pj = 0; pj < gw; ++pj) {
            std::size_t count = 0;
            for (std::size_t di = 0; di < patch; ++di)
                for (std::size_t dj = 0; dj < patch; ++dj)
                    count += pixel_mask.data()[(pi * patch + di) * w + pj * patch + dj] != 0.0;
            const double frac = static_cast<double>(count) / per_patch;
            m.data()[1 + pi * gw + pj] = frac >= rho ? 1.0 : 0.0;
        }
    }
    return m;
}

Tensor perturb(const Tensor& token_mask, double p, Rng& rng) {
    if (token_mask.rank() != 1 || token_mask.numel() == 0) {
        throw DimensionError("perturb: token mask must be a non-empty vector");
    }
    require_binary(token_mask, "perturb");
    if (token_mask.data()[0] != 1.0) {
        throw ContractError("perturb: class-token entry must be foreground");
    }
    if (p < 0.0 || p > 1.0) throw ContractError("perturb: p must lie in [0, 1]");
    Tensor out = Tensor::from_data(token_mask.shape(), token_mask.data());
    for (std::size_t i = 1; i < out.numel(); ++i) {
        if (out.data()[i] == 0.0 && rng.bernoulli(p)) out.data()[i] = 1.0;
    }
    return out;
}

Tensor interaction_mask(const Tensor& token_mask) {
    if (token_mask.rank() != 1 || token_mask.numel() == 0) {
        throw DimensionError("interaction_mask: token mask must be a non-empty vector");
    }
    require_binary(token_mask, "interaction_mask");
    const std::size_t n = token_mask.numel();
    Tensor r = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        if (token_mask.data()[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) r.data()[i * n + j] = token_mask.data()[j];
    }
    return r;
}

} // namespace stmi::masks
