#pragma once

#include "stmi/rng.hpp"
#include "stmi/tensor.hpp"

namespace stmi::masks {

// Token masks are rank-1 tensors of length N+1 whose entry 0 is the class
// token and is always foreground. Pixel masks are rank-2 {H, W} binary grids.
// Masks are data, not graph nodes: nothing here records onto a tape.

// m[0] = 1; m[i] = 1 iff the foreground-pixel fraction of patch i >= rho.
// Patches are tiled row-major over the grid, matching the encoder's
// tokenization order. Height and width must be divisible by patch.
Tensor patchify_mask(const Tensor& pixel_mask, std::size_t patch, double rho);

// Flip each background token to foreground independently with probability p.
// Foreground tokens (and the class token) are left alone, so the output
// foreground set always contains the input one.
Tensor perturb(const Tensor& token_mask, double p, Rng& rng);

// R[i][j] = m[i] * m[j]: the pairwise both-foreground indicator.
Tensor interaction_mask(const Tensor& token_mask);

} // namespace stmi::masks
