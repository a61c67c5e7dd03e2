#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "stmi/encoder.hpp"
#include "stmi/errors.hpp"

using namespace stmi;

namespace {

EncoderConfig micro_config() {
    EncoderConfig cfg;
    cfg.image_size = 8;
    cfg.channels = 1;
    cfg.patch = 4;  // N = 4 tokens
    cfg.depth = 1;
    cfg.heads = 2;
    cfg.dim = 8;
    return cfg;
}

Tensor random_image(Rng& rng, const EncoderConfig& cfg) {
    Tensor img = Tensor::zeros({cfg.channels, cfg.image_size, cfg.image_size});
    img.fill_uniform(rng, 0.0, 1.0);
    return img;
}

Tensor mixed_mask(Rng& rng, std::size_t len) {
    Tensor m = Tensor::zeros({len});
    m.data()[0] = 1.0;
    bool any_bg = false, any_fg = false;
    for (std::size_t i = 1; i < len; ++i) {
        m.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        (m.data()[i] == 1.0 ? any_fg : any_bg) = true;
    }
    if (!any_bg) m.data()[1] = 0.0;
    if (!any_fg) m.data()[len - 1] = 1.0;
    return m;
}

// Foreground-column attention mass of row i.
double fg_mass(const Tensor& attn, const Tensor& m, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < attn.cols(); ++j)
        if (m.data()[j] == 1.0) s += attn.at(i, j);
    return s;
}

} // namespace

TEST_SUITE("encoder") {

TEST_CASE("config validation catches bad geometry") {
    EncoderConfig cfg = micro_config();
    cfg.image_size = 9;
    CHECK_THROWS_AS(cfg.validate(), GeometryError);
    cfg = micro_config();
    cfg.dim = 9;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = micro_config();
    cfg.depth = 0;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
}

TEST_CASE("raw logits of identity projections form the Gram matrix") {
    Tape tape;
    Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor a = sfm::attention_logits(tape, eye, eye);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(a.at(i, j) == (i == j ? 1.0 : 0.0));

    Tensor q = Tensor::from_data({1, 2}, {1, 0});
    Tensor k = Tensor::from_data({2, 2}, {0, 1, 0, -1});
    Tensor zero = sfm::attention_logits(tape, q, k);
    for (double v : zero.data()) CHECK(v == 0.0);
}

TEST_CASE("modulation matrices measure distance to the row extrema") {
    Tape tape;
    Tensor a = Tensor::from_data({1, 3}, {1, 3, 2});
    auto [m_pos, m_neg] = sfm::modulation_matrices(tape, a);
    const std::vector<double> pos{2, 0, 1}, neg{0, 2, 1};
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(m_pos.data()[j] == pos[j]);
        CHECK(m_neg.data()[j] == neg[j]);
    }
    Tensor flat = Tensor::full({2, 4}, 3.5);
    auto [fp, fn] = sfm::modulation_matrices(tape, flat);
    for (double v : fp.data()) CHECK(v == 0.0);
    for (double v : fn.data()) CHECK(v == 0.0);
}

TEST_CASE("modulation matrices are non-negative and sum to the row range") {
    Rng rng(501);
    Tape tape;
    Tensor a = Tensor::zeros({5, 7});
    a.fill_uniform(rng, -2.0, 2.0);
    auto [m_pos, m_neg] = sfm::modulation_matrices(tape, a);
    for (std::size_t i = 0; i < 5; ++i) {
        double lo = a.at(i, 0), hi = a.at(i, 0);
        for (std::size_t j = 1; j < 7; ++j) {
            lo = std::min(lo, a.at(i, j));
            hi = std::max(hi, a.at(i, j));
        }
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(m_pos.at(i, j) >= 0.0);
            CHECK(m_neg.at(i, j) >= 0.0);
            CHECK(m_pos.at(i, j) + m_neg.at(i, j) == doctest::Approx(hi - lo).epsilon(1e-12));
        }
    }
}

TEST_CASE("the modulation shift matches the hand-worked example") {
    Tape tape;
    std::vector<double> rows;
    for (int i = 0; i < 3; ++i) rows.insert(rows.end(), {1, 3, 2});
    Tensor a = Tensor::from_data({3, 3}, rows);
    Tensor m = Tensor::from_data({3}, {1, 1, 0});
    Tensor r = masks::interaction_mask(m);
    Tensor s = sfm::modulation(tape, a, r, Tensor::scalar(1.0), Tensor::scalar(1.0));
    const std::vector<double> expect{2, 0, -1};
    for (std::size_t j = 0; j < 3; ++j) CHECK(s.at(0, j) == expect[j]);
}

TEST_CASE("zero gains produce a zero shift") {
    Rng rng(502);
    Tape tape;
    Tensor a = Tensor::zeros({4, 4});
    a.fill_uniform(rng, -1.0, 1.0);
    Tensor m = Tensor::from_data({4}, {1, 0, 1, 0});
    Tensor s = sfm::modulation(tape, a, masks::interaction_mask(m), Tensor::scalar(0.0),
                               Tensor::scalar(0.0));
    for (double v : s.data()) CHECK(v == 0.0);
}

TEST_CASE("an all-foreground mask disables the suppression term") {
    Rng rng(503);
    Tape tape;
    Tensor a = Tensor::zeros({4, 4});
    a.fill_uniform(rng, -1.0, 1.0);
    Tensor ones_mask = Tensor::full({4}, 1.0);
    Tensor r = masks::interaction_mask(ones_mask);
    Tensor s_small_beta =
        sfm::modulation(tape, a, r, Tensor::scalar(0.7), Tensor::scalar(0.1));
    Tensor s_big_beta =
        sfm::modulation(tape, a, r, Tensor::scalar(0.7), Tensor::scalar(99.0));
    for (std::size_t i = 0; i < 16; ++i) CHECK(s_small_beta.data()[i] == s_big_beta.data()[i]);
}

TEST_CASE("zero shift reduces modulated attention to plain scaled softmax") {
    Rng rng(504);
    Tape tape;
    Tensor a = Tensor::zeros({3, 3});
    a.fill_uniform(rng, -1.0, 1.0);
    Tensor s = Tensor::zeros({3, 3});
    Tensor modulated = sfm::modulated_attention(tape, a, s, 4);
    Tensor plain = ops::softmax_rows(tape, ops::scale(tape, a, 0.5));
    for (std::size_t i = 0; i < 9; ++i) CHECK(modulated.data()[i] == plain.data()[i]);
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) sum += modulated.at(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("foreground gain moves attention mass toward foreground columns") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(600 + seed);
        Tape tape;
        const std::size_t t = 6;
        Tensor a = Tensor::zeros({t, t});
        a.fill_uniform(rng, -1.0, 1.0);
        Tensor m = mixed_mask(rng, t);
        Tensor r = masks::interaction_mask(m);
        Tensor s_off = sfm::modulation(tape, a, r, Tensor::scalar(0.0), Tensor::scalar(0.0));
        Tensor s_on = sfm::modulation(tape, a, r, Tensor::scalar(1.0), Tensor::scalar(0.0));
        Tensor attn_off = sfm::modulated_attention(tape, a, s_off, 4);
        Tensor attn_on = sfm::modulated_attention(tape, a, s_on, 4);
        for (std::size_t i = 0; i < t; ++i) {
            if (m.data()[i] != 1.0) continue;
            CHECK(fg_mass(attn_on, m, i) >= fg_mass(attn_off, m, i) - 1e-12);
        }
    }
}

TEST_CASE("background suppression never raises background mass") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(700 + seed);
        Tape tape;
        const std::size_t t = 6;
        Tensor a = Tensor::zeros({t, t});
        a.fill_uniform(rng, -1.0, 1.0);
        Tensor m = mixed_mask(rng, t);
        Tensor r = masks::interaction_mask(m);
        Tensor s_off = sfm::modulation(tape, a, r, Tensor::scalar(0.0), Tensor::scalar(0.0));
        Tensor s_on = sfm::modulation(tape, a, r, Tensor::scalar(0.0), Tensor::scalar(0.8));
        Tensor attn_off = sfm::modulated_attention(tape, a, s_off, 4);
        Tensor attn_on = sfm::modulated_attention(tape, a, s_on, 4);
        for (std::size_t i = 0; i < t; ++i) {
            if (m.data()[i] != 1.0) continue;
            const double bg_on = 1.0 - fg_mass(attn_on, m, i);
            const double bg_off = 1.0 - fg_mass(attn_off, m, i);
            CHECK(bg_on <= bg_off + 1e-12);
        }
    }
}

TEST_CASE("patchify flattens row-major patches channel-major inside") {
    EncoderConfig cfg;
    cfg.image_size = 4;
    cfg.channels = 2;
    cfg.patch = 2;
    cfg.depth = 1;
    cfg.heads = 1;
    cfg.dim = 4;
    Rng rng(505);
    Encoder enc(cfg, rng);
    std::vector<double> pixels(2 * 4 * 4);
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<double>(i);
    Tensor img = Tensor::from_data({2, 4, 4}, pixels);
    Tensor p = enc.patchify(img);
    REQUIRE(p.shape() == Shape{4, 8});
    // patch 0 = grid (0,0): channel 0 pixels 0,1,4,5 then channel 1 pixels 16,17,20,21
    const std::vector<double> expect0{0, 1, 4, 5, 16, 17, 20, 21};
    for (std::size_t j = 0; j < 8; ++j) CHECK(p.at(0, j) == expect0[j]);
    // patch 1 = grid (0,1): channel 0 pixels 2,3,6,7
    CHECK(p.at(1, 0) == 2.0);
    CHECK(p.at(1, 2) == 6.0);
    CHECK_THROWS_AS(enc.patchify(Tensor::zeros({2, 4, 6})), GeometryError);
}

TEST_CASE("encoder output covers one row per token plus the class token") {
    EncoderConfig cfg;  // defaults: 32x32, patch 8, D 64
    Rng rng(506);
    Encoder enc(cfg, rng);
    Tensor img = random_image(rng, cfg);
    Tensor mask = Tensor::full({17}, 1.0);
    Tape tape;
    tape.set_recording(false);
    Tensor f = enc.forward(tape, img, mask, false, 0.0, rng);
    CHECK(f.shape() == Shape{17, 64});
    CHECK_THROWS_AS(enc.forward(tape, img, Tensor::full({16}, 1.0), false, 0.0, rng),
                    DimensionError);
}

TEST_CASE("zero gains reproduce the unmodulated encoder bit for bit") {
    EncoderConfig cfg = micro_config();
    Rng rng(507);
    Encoder enc(cfg, rng);
    Tensor img = random_image(rng, cfg);
    Rng mask_rng(508);
    Tensor mask = mixed_mask(mask_rng, cfg.tokens() + 1);
    Tape tape;
    tape.set_recording(false);
    Rng r1(1), r2(1);
    Tensor with_sfm = enc.forward(tape, img, mask, false, 0.0, r1, true);
    Tensor without = enc.forward(tape, img, mask, false, 0.0, r2, false);
    REQUIRE(with_sfm.numel() == without.numel());
    for (std::size_t i = 0; i < with_sfm.numel(); ++i)
        CHECK(with_sfm.data()[i] == without.data()[i]);
}

TEST_CASE("eval mode is deterministic across calls") {
    EncoderConfig cfg = micro_config();
    Rng rng(509);
    Encoder enc(cfg, rng);
    Tensor img = random_image(rng, cfg);
    Rng mask_rng(510);
    Tensor mask = mixed_mask(mask_rng, cfg.tokens() + 1);
    Tape tape;
    tape.set_recording(false);
    Rng r1(1), r2(99);  // eval must not consume randomness
    Tensor a = enc.forward(tape, img, mask, false, 0.5, r1);
    Tensor b = enc.forward(tape, img, mask, false, 0.5, r2);
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("training-mode perturbation draws from the stream and changes the pass") {
    EncoderConfig cfg = micro_config();
    Rng rng(511);
    Encoder enc(cfg, rng);
    // make the modulation actually read the mask
    enc.layers()[0].alpha.fill(0.5);
    enc.layers()[0].beta.fill(0.5);
    Tensor img = random_image(rng, cfg);
    Tensor mask = Tensor::from_data({5}, {1, 0, 0, 0, 0});
    Tape tape;
    tape.set_recording(false);
    Rng ra(42), rb(42), rc(7);
    Tensor a = enc.forward(tape, img, mask, true, 0.5, ra);
    Tensor b = enc.forward(tape, img, mask, true, 0.5, rb);
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
    CHECK(ra.counter() > 0);
    // p=1 flips all background: equivalent to the all-foreground mask
    Rng rd(1);
    Tensor all_fg = enc.forward(tape, img, Tensor::full({5}, 1.0), false, 0.0, rd);
    Tensor flipped = enc.forward(tape, img, mask, true, 1.0, rc);
    for (std::size_t i = 0; i < all_fg.numel(); ++i)
        CHECK(flipped.data()[i] == all_fg.data()[i]);
}

TEST_CASE("every encoder parameter passes the numeric gradient check") {
    EncoderConfig cfg = micro_config();
    Rng rng(512);
    Encoder enc(cfg, rng);
    enc.layers()[0].alpha.fill(0.3);
    enc.layers()[0].beta.fill(0.2);
    Tensor img = random_image(rng, cfg);
    Rng mask_rng(513);
    Tensor mask = mixed_mask(mask_rng, cfg.tokens() + 1);
    ParamList params;
    enc.register_params("enc", params);
    std::vector<Tensor> leaves;
    for (const NamedTensor& p : params) leaves.push_back(p.tensor);
    Tensor w = Tensor::zeros({cfg.tokens() + 1, cfg.dim});
    w.fill_uniform(rng, -1.0, 1.0);
    auto build = [&](Tape& t) {
        Rng eval_rng(1);
        Tensor f = enc.forward(t, img, mask, false, 0.0, eval_rng);
        return ops::sum_all(t, ops::hadamard(t, f, w));
    };
    CHECK(oracle::max_fd_rel_err(build, leaves, 1e-5) < 1e-4);
}

TEST_CASE("alpha and beta receive gradients on a mixed mask") {
    EncoderConfig cfg = micro_config();
    Rng rng(514);
    Encoder enc(cfg, rng);
    Tensor img = random_image(rng, cfg);
    Tensor mask = Tensor::from_data({5}, {1, 1, 0, 1, 0});
    Tape tape;
    Rng fwd_rng(1);
    Tensor f = enc.forward(tape, img, mask, false, 0.0, fwd_rng);
    Tensor loss = ops::sum_all(tape, ops::gelu(tape, f));
    tape.backward(loss);
    const EncoderLayer& l0 = enc.layers()[0];
    REQUIRE_FALSE(l0.alpha.node()->grad.empty());
    REQUIRE_FALSE(l0.beta.node()->grad.empty());
    CHECK(l0.alpha.node()->grad[0] != 0.0);
    CHECK(l0.beta.node()->grad[0] != 0.0);
}

TEST_CASE("beta gets exactly zero gradient under an all-foreground mask") {
    EncoderConfig cfg = micro_config();
    Rng rng(515);
    Encoder enc(cfg, rng);
    Tensor img = random_image(rng, cfg);
    Tensor mask = Tensor::full({5}, 1.0);
    Tape tape;
    Rng fwd_rng(1);
    Tensor f = enc.forward(tape, img, mask, false, 0.0, fwd_rng);
    Tensor loss = ops::sum_all(tape, ops::gelu(tape, f));
    tape.backward(loss);
    const EncoderLayer& l0 = enc.layers()[0];
    REQUIRE_FALSE(l0.beta.node()->grad.empty());
    CHECK(l0.beta.node()->grad[0] == 0.0);
}

} // TEST_SUITE
