#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "stmi/errors.hpp"
#include "stmi/str.hpp"

using namespace stmi;

namespace {

Tensor unit_text(Rng& rng, std::size_t dim) {
    Tensor t = Tensor::zeros({dim});
    t.fill_normal(rng, 0.0, 1.0);
    double norm = 0.0;
    for (double v : t.data()) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : t.data()) v /= norm;
    return t;
}

} // namespace

TEST_SUITE("str") {

TEST_CASE("query construction appends the text feature as the last row") {
    Rng rng(801);
    for (std::size_t k : {0ul, 1ul, 4ul, 8ul}) {
        SemanticReallocator realloc(8, k, 2, rng);
        Tensor t = unit_text(rng, 8);
        Tape tape;
        Tensor q = realloc.build_queries(tape, t);
        REQUIRE(q.shape() == Shape{k + 1, 8});
        for (std::size_t j = 0; j < 8; ++j) CHECK(q.at(k, j) == t.data()[j]);
    }
}

TEST_CASE("query construction validates the text feature") {
    Rng rng(802);
    SemanticReallocator realloc(8, 2, 2, rng);
    Tape tape;
    CHECK_THROWS_AS(realloc.build_queries(tape, Tensor::zeros({4})), DimensionError);
    Tensor hot = Tensor::zeros({8}, true);
    CHECK_THROWS_AS(realloc.build_queries(tape, hot), ContractError);
}

TEST_CASE("output keeps the query-token geometry") {
    Rng rng(803);
    for (std::size_t k : {0ul, 1ul, 4ul, 8ul}) {
        SemanticReallocator realloc(8, k, 2, rng);
        Tensor t = unit_text(rng, 8);
        Tensor patches = Tensor::zeros({6, 8});
        patches.fill_uniform(rng, -1.0, 1.0);
        Tape tape;
        CHECK(realloc.forward(tape, t, patches).shape() == Shape{k + 1, 8});
    }
}

TEST_CASE("zeroed output projections collapse the block to the identity on queries") {
    Rng rng(804);
    SemanticReallocator realloc(8, 3, 2, rng);
    ParamList params;
    realloc.register_params("r", params);
    for (NamedTensor& p : params) {
        if (p.name == "r.cross.wo.weight" || p.name == "r.ffn.fc2.weight") p.tensor.fill(0.0);
    }
    Tensor t = unit_text(rng, 8);
    Tensor patches = Tensor::zeros({5, 8});
    patches.fill_uniform(rng, -1.0, 1.0);
    Tape tape;
    Tensor out = realloc.forward(tape, t, patches);
    Tensor q = realloc.build_queries(tape, t);
    REQUIRE(out.shape() == q.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == q.data()[i]);
}

TEST_CASE("patch-token order does not matter") {
    Rng rng(805);
    SemanticReallocator realloc(8, 4, 2, rng);
    Tensor t = unit_text(rng, 8);
    Tensor patches = Tensor::zeros({5, 8});
    patches.fill_uniform(rng, -1.0, 1.0);
    const std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    std::vector<double> shuffled(patches.numel());
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 8; ++j) shuffled[i * 8 + j] = patches.at(perm[i], j);
    Tape tape;
    tape.set_recording(false);
    Tensor a = realloc.forward(tape, t, patches);
    Tensor b = realloc.forward(tape, t, Tensor::from_data({5, 8}, shuffled));
    for (std::size_t i = 0; i < a.numel(); ++i)
        CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-10);
}

TEST_CASE("gradients reach the query bank") {
    Rng rng(806);
    SemanticReallocator realloc(8, 2, 2, rng);
    Tensor t = unit_text(rng, 8);
    Tensor patches = Tensor::zeros({4, 8});
    patches.fill_uniform(rng, -1.0, 1.0);
    Tape tape;
    Tensor out = realloc.forward(tape, t, patches);
    tape.backward(ops::sum_all(tape, ops::gelu(tape, out)));
    REQUIRE_FALSE(realloc.query_bank().node()->grad.empty());
    double mag = 0.0;
    for (double g : realloc.query_bank().node()->grad) mag += std::abs(g);
    CHECK(mag > 0.0);
}

TEST_CASE("modality blocks are fully independent") {
    Rng rng(807);
    SemanticReallocator a(8, 2, 2, rng);
    SemanticReallocator b(8, 2, 2, rng);
    Tensor t = unit_text(rng, 8);
    Tensor patches = Tensor::zeros({4, 8});
    patches.fill_uniform(rng, -1.0, 1.0);
    Tape tape;
    tape.set_recording(false);
    Tensor before = b.forward(tape, t, patches);
    a.query_bank().fill(7.0);
    Tensor after = b.forward(tape, t, patches);
    for (std::size_t i = 0; i < before.numel(); ++i)
        CHECK(before.data()[i] == after.data()[i]);
}

TEST_CASE("reallocator gradients pass the numeric check") {
    Rng rng(808);
    SemanticReallocator realloc(4, 2, 2, rng);
    Tensor t = unit_text(rng, 4);
    Tensor patches = Tensor::zeros({3, 4}, true);
    patches.fill_uniform(rng, -1.0, 1.0);
    ParamList params;
    realloc.register_params("r", params);
    std::vector<Tensor> leaves;
    for (const NamedTensor& p : params) leaves.push_back(p.tensor);
    leaves.push_back(patches);
    Tensor w = Tensor::zeros({3, 4});
    w.fill_uniform(rng, -1.0, 1.0);
    auto build = [&](Tape& tape) {
        return ops::sum_all(tape, ops::hadamard(tape, realloc.forward(tape, t, patches), w));
    };
    CHECK(oracle::max_fd_rel_err(build, leaves, 1e-6) < 1e-5);
}

} // TEST_SUITE
