#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stmi/rng.hpp"
#include "stmi/tensor.hpp"

// Synthetic multi-modal identity datasets. Each sample is a triplet of
// {channels, H, W} images (visible / near-infrared / thermal surrogates)
// sharing one binary foreground mask, plus a frozen per-identity text
// embedding. Every number is derived from the generator seed, so two runs
// with the same spec produce byte-identical files.
namespace stmi::synth {

struct GenSpec {
    std::size_t num_ids = 8;
    std::size_t per_id = 16;
    std::size_t image_size = 32;
    std::size_t channels = 3;
    double clutter = 0.5;  // background noise level in [0, 1]
    std::uint64_t seed = 42;
    std::size_t d_text = 64;
};

struct SampleRecord {
    std::size_t index = 0;  // global sample index
    std::size_t identity = 0;
    std::size_t camera = 0;     // round-robin over 2 cameras
    std::string split;          // "query" or "gallery"; all samples train
    std::string rgb, nir, tir;  // file paths relative to the dataset dir
    std::string mask;
};

struct DatasetManifest {
    std::string version = "stt-dataset-v1";
    GenSpec spec;
    std::vector<SampleRecord> samples;
};

// One fully loaded sample.
struct ModalitySample {
    Tensor rgb, nir, tir;  // {channels, H, W}
    Tensor mask;           // {H, W}, strictly binary
    Tensor text;           // {d_text}, unit norm, never trainable
    std::size_t identity = 0;
    std::size_t camera = 0;
};

// Clean (noise-free) foreground intensity of one identity at blob-local
// coordinates (u, v): a per-identity sinusoidal texture whose base frequency
// and phase come from a shared latent, shifted per modality and channel.
// Values stay within [0.4, 0.9].
double prototype_value(std::uint64_t seed, std::size_t identity, std::size_t modality,
                       std::size_t channel, double u, double v);

// Deterministic unit-norm pseudo-embedding for an identity; `sample_key`
// selects the small per-sample perturbation (re-normalized afterwards), and
// noise_std = 0 reproduces the identity's base vector exactly.
Tensor text_embed_surrogate(std::size_t identity, std::uint64_t seed, std::size_t d_text = 64,
                            double noise_std = 0.05, std::uint64_t sample_key = 0);

// Writes samples/<index>_<modality>.stt files plus manifest.json under
// `out_dir` and returns the manifest. Foregrounds are identity prototypes at
// a per-sample jittered position with small additive noise; background pixels
// are i.i.d. uniform noise scaled by `clutter`.
DatasetManifest generate_dataset(const GenSpec& spec, const std::string& out_dir);

// Reads and validates manifest.json (field presence, split disjointness,
// every query identity present in the gallery).
DatasetManifest load_manifest(const std::string& dataset_dir);

// Loads one sample's four tensors and recomputes its text embedding.
ModalitySample load_sample(const std::string& dataset_dir, const DatasetManifest& manifest,
                           std::size_t sample_index);

} // namespace stmi::synth
