#include "stmi/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "stmi/errors.hpp"
#include "stmi/serialization.hpp"

namespace stmi::synth {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Stream tags (arbitrary distinct constants).
constexpr std::uint64_t kTagLatent = 0x1a7e;
constexpr std::uint64_t kTagSample = 0x5a3e;
constexpr std::uint64_t kTagText = 0x7e87;
constexpr std::uint64_t kTagTextNoise = 0x7e88;

constexpr double kPi = 3.14159265358979323846;

// Per-identity texture parameters drawn from the shared latent stream.
struct Latent {
    double fx, fy, phase;
    std::size_t blob_w, blob_h;
};

Latent draw_latent(std::uint64_t seed, std::size_t identity) {
    Rng rng = Rng(seed).fork(kTagLatent).fork(identity);
    Latent lat;
    lat.fx = rng.uniform(0.6, 1.5);
    lat.fy = rng.uniform(0.6, 1.5);
    lat.phase = rng.uniform(0.0, 2.0 * kPi);
    lat.blob_w = 10 + rng.uniform_int(5);  // 10..14 pixels
    lat.blob_h = 10 + rng.uniform_int(5);
    return lat;
}

void validate_spec(const GenSpec& s) {
    if (s.num_ids < 2) throw ContractError("generate_dataset: need at least 2 identities");
    if (s.per_id < 4) throw ContractError("generate_dataset: need at least 4 samples per id");
    if (s.image_size < 16) throw ContractError("generate_dataset: image size must be >= 16");
    if (s.channels < 1) throw ContractError("generate_dataset: need at least 1 channel");
    if (!(s.clutter >= 0.0 && s.clutter <= 1.0)) {
        throw ContractError("generate_dataset: clutter must lie in [0, 1]");
    }
    if (s.d_text < 1) throw ContractError("generate_dataset: text width must be >= 1");
}

std::string sample_stem(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", index);
    return std::string("samples/") + buf;
}

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void write_text_file(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for write: " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

json require_field(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw FormatError(std::string("manifest: missing field '") + key + "'");
    }
    return j.at(key);
}

} // namespace

double prototype_value(std::uint64_t seed, std::size_t identity, std::size_t modality,
                       std::size_t channel, double u, double v) {
    const Latent lat = draw_latent(seed, identity);
    const double fx = lat.fx + 0.17 * static_cast<double>(modality);
    const double fy = lat.fy + 0.11 * static_cast<double>(modality);
    const double phase = lat.phase + 1.3 * static_cast<double>(modality) +
                         0.7 * static_cast<double>(channel);
    return 0.65 + 0.25 * std::sin(fx * u + fy * v + phase);
}

Tensor text_embed_surrogate(std::size_t identity, std::uint64_t seed, std::size_t d_text,
                            double noise_std, std::uint64_t sample_key) {
    if (d_text < 1) throw ContractError("text_embed_surrogate: width must be >= 1");
    Rng base = Rng(seed).fork(kTagText).fork(identity);
    std::vector<double> v(d_text);
    for (double& x : v) x = base.normal();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    if (noise_std > 0.0) {
        Rng noise = Rng(seed).fork(kTagTextNoise).fork(Rng::mix(identity, sample_key));
        for (double& x : v) x += noise_std * noise.normal();
        norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return Tensor::from_data({d_text}, std::move(v));
}

DatasetManifest generate_dataset(const GenSpec& spec, const std::string& out_dir) {
    validate_spec(spec);
    const std::size_t h = spec.image_size, w = spec.image_size, c = spec.channels;
    fs::create_directories(fs::path(out_dir) / "samples");

    DatasetManifest manifest;
    manifest.spec = spec;

    for (std::size_t id = 0; id < spec.num_ids; ++id) {
        const Latent lat = draw_latent(spec.seed, id);
        for (std::size_t j = 0; j < spec.per_id; ++j) {
            const std::size_t index = id * spec.per_id + j;
            Rng rng = Rng(spec.seed).fork(kTagSample).fork(index);
            const std::size_t pos_y = rng.uniform_int(h - lat.blob_h + 1);
            const std::size_t pos_x = rng.uniform_int(w - lat.blob_w + 1);

            Tensor mask = Tensor::zeros({h, w});
            for (std::size_t y = pos_y; y < pos_y + lat.blob_h; ++y)
                for (std::size_t x = pos_x; x < pos_x + lat.blob_w; ++x)
                    mask.data()[y * w + x] = 1.0;

            SampleRecord rec;
            rec.index = index;
            rec.identity = id;
            rec.camera = j % 2;
            rec.split = (j % 4 == 0) ? "query" : "gallery";
            const std::string stem = sample_stem(index);
            rec.rgb = stem + "_rgb.stt";
            rec.nir = stem + "_nir.stt";
            rec.tir = stem + "_tir.stt";
            rec.mask = stem + "_mask.stt";

            const std::string* names[3] = {&rec.rgb, &rec.nir, &rec.tir};
            for (std::size_t m = 0; m < 3; ++m) {
                Tensor img = Tensor::zeros({c, h, w});
                for (std::size_t ch = 0; ch < c; ++ch) {
                    for (std::size_t y = 0; y < h; ++y) {
                        for (std::size_t x = 0; x < w; ++x) {
                            double val;
                            const bool fg = mask.data()[y * w + x] == 1.0;
                            if (fg) {
                                const double u = static_cast<double>(x - pos_x);
                                const double v = static_cast<double>(y - pos_y);
                                val = prototype_value(spec.seed, id, m, ch, u, v) +
                                      0.03 * rng.normal();
                            } else {
                                val = spec.clutter * rng.uniform();
                            }
                            val = std::clamp(val, 0.0, 1.0);
                            img.data()[(ch * h + y) * w + x] = round_f32(val);
                        }
                    }
                }
                stt::save_tensor(img, (fs::path(out_dir) / *names[m]).string(),
                                 stt::Dtype::f32);
            }
            stt::save_tensor(mask, (fs::path(out_dir) / rec.mask).string(), stt::Dtype::u8);
            manifest.samples.push_back(std::move(rec));
        }
    }

    json j;
    j["version"] = manifest.version;
    j["seed"] = spec.seed;
    j["num_ids"] = spec.num_ids;
    j["per_id"] = spec.per_id;
    j["image_size"] = spec.image_size;
    j["channels"] = spec.channels;
    j["clutter"] = spec.clutter;
    j["d_text"] = spec.d_text;
    j["samples"] = json::array();
    for (const SampleRecord& rec : manifest.samples) {
        json s;
        s["index"] = rec.index;
        s["id"] = rec.identity;
        s["camera"] = rec.camera;
        s["split"] = rec.split;
        s["rgb"] = rec.rgb;
        s["nir"] = rec.nir;
        s["tir"] = rec.tir;
        s["mask"] = rec.mask;
        j["samples"].push_back(std::move(s));
    }
    write_text_file(fs::path(out_dir) / "manifest.json", j.dump(2) + "\n");
    return manifest;
}

DatasetManifest load_manifest(const std::string& dataset_dir) {
    const fs::path path = fs::path(dataset_dir) / "manifest.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("manifest: invalid JSON: " + std::string(e.what()));
    }

    DatasetManifest m;
    try {
        m.version = require_field(j, "version").get<std::string>();
        if (m.version != "stt-dataset-v1") {
            throw FormatError("manifest: unsupported version '" + m.version + "'");
        }
        m.spec.seed = require_field(j, "seed").get<std::uint64_t>();
        m.spec.num_ids = require_field(j, "num_ids").get<std::size_t>();
        m.spec.per_id = require_field(j, "per_id").get<std::size_t>();
        m.spec.image_size = require_field(j, "image_size").get<std::size_t>();
        m.spec.channels = require_field(j, "channels").get<std::size_t>();
        m.spec.clutter = require_field(j, "clutter").get<double>();
        m.spec.d_text = require_field(j, "d_text").get<std::size_t>();
        for (const json& s : require_field(j, "samples")) {
            SampleRecord rec;
            rec.index = require_field(s, "index").get<std::size_t>();
            rec.identity = require_field(s, "id").get<std::size_t>();
            rec.camera = require_field(s, "camera").get<std::size_t>();
            rec.split = require_field(s, "split").get<std::string>();
            rec.rgb = require_field(s, "rgb").get<std::string>();
            rec.nir = require_field(s, "nir").get<std::string>();
            rec.tir = require_field(s, "tir").get<std::string>();
            rec.mask = require_field(s, "mask").get<std::string>();
            if (rec.split != "query" && rec.split != "gallery") {
                throw FormatError("manifest: sample " + std::to_string(rec.index) +
                                  " has unknown split '" + rec.split + "'");
            }
            m.samples.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw FormatError("manifest: bad field type: " + std::string(e.what()));
    }

    // Every query identity must be retrievable from the gallery.
    std::set<std::size_t> gallery_ids;
    for (const SampleRecord& rec : m.samples)
        if (rec.split == "gallery") gallery_ids.insert(rec.identity);
    for (const SampleRecord& rec : m.samples) {
        if (rec.split == "query" && gallery_ids.count(rec.identity) == 0) {
            throw FormatError("manifest: query identity " + std::to_string(rec.identity) +
                              " missing from gallery");
        }
    }
    return m;
}

ModalitySample load_sample(const std::string& dataset_dir, const DatasetManifest& manifest,
                           std::size_t sample_index) {
    if (sample_index >= manifest.samples.size()) {
        throw ContractError("load_sample: index " + std::to_string(sample_index) +
                            " out of range");
    }
    const SampleRecord& rec = manifest.samples[sample_index];
    const fs::path dir(dataset_dir);
    ModalitySample s;
    s.rgb = stt::load_tensor((dir / rec.rgb).string(), stt::Dtype::f32, 3);
    s.nir = stt::load_tensor((dir / rec.nir).string(), stt::Dtype::f32, 3);
    s.tir = stt::load_tensor((dir / rec.tir).string(), stt::Dtype::f32, 3);
    s.mask = stt::load_tensor((dir / rec.mask).string(), stt::Dtype::u8, 2);
    s.text = text_embed_surrogate(rec.identity, manifest.spec.seed, manifest.spec.d_text,
                                  0.05, rec.index);
    s.identity = rec.identity;
    s.camera = rec.camera;
    return s;
}

} // namespace stmi::synth
