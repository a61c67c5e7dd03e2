#include "stmi/chi.hpp"

#include <cmath>

#include "stmi/errors.hpp"

namespace stmi {

HypergraphInteraction::HypergraphInteraction(std::size_t dim, std::size_t k, std::size_t heads,
                                             double tau, Rng& rng)
    : nodes_(3 * (k + 1)),
      tau_(tau),
      w_(Tensor::zeros({3 * (k + 1)}, true)),
      b_(Tensor::zeros({3 * (k + 1), dim}, true)),
      fuse_(dim, heads, rng) {
    if (tau < -1.0 || tau > 1.0) {
        throw ContractError("hypergraph: tau must lie in [-1, 1]");
    }
}

Tensor HypergraphInteraction::concat_modalities(Tape& tape, const Tensor& f_rgb,
                                                const Tensor& f_nir, const Tensor& f_tir) {
    if (f_rgb.shape() != f_nir.shape() || f_rgb.shape() != f_tir.shape()) {
        throw DimensionError("concat_modalities: shapes differ, " + shape_str(f_rgb.shape()) +
                             " / " + shape_str(f_nir.shape()) + " / " +
                             shape_str(f_tir.shape()));
    }
    return ops::concat_rows(tape, {f_rgb, f_nir, f_tir});
}

Hypergraph HypergraphInteraction::build_hyperedges(const Tensor& h, double tau) {
    if (h.rank() != 2) {
        throw DimensionError("build_hyperedges: token set must be rank 2, got " +
                             shape_str(h.shape()));
    }
    if (tau < -1.0 || tau > 1.0) {
        throw ContractError("build_hyperedges: tau must lie in [-1, 1]");
    }
    const std::size_t n = h.rows(), d = h.cols();
    std::vector<std::vector<double>> unit(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) norm += h.at(i, j) * h.at(i, j);
        norm = std::sqrt(norm);
        if (norm <= 1e-12) {
            throw NumericError("build_hyperedges: row " + std::to_string(i) +
                               " has near-zero norm");
        }
        for (std::size_t j = 0; j < d; ++j) unit[i][j] = h.at(i, j) / norm;
    }
    Hypergraph graph;
    graph.tau = tau;
    graph.membership.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += unit[i][k] * unit[j][k];
            if (s >= tau) graph.membership[i].push_back(j);
        }
    }
    return graph;
}

Tensor HypergraphInteraction::hypergraph_conv(Tape& tape, const Tensor& h,
                                              const Hypergraph& graph) const {
    if (h.rank() != 2 || h.rows() != nodes_ || h.cols() != b_.cols()) {
        throw DimensionError("hypergraph_conv: token set " + shape_str(h.shape()) +
                             " does not match {" + std::to_string(nodes_) + ", " +
                             std::to_string(b_.cols()) + "}");
    }
    if (graph.membership.size() != nodes_) {
        throw ContractError("hypergraph_conv: structure has " +
                            std::to_string(graph.membership.size()) + " hyperedges, expected " +
                            std::to_string(nodes_));
    }
    // Constant aggregation matrices: edge_mean rows average each hyperedge's
    // members; incidence[i][e] marks the hyperedges node i belongs to.
    Tensor edge_mean = Tensor::zeros({nodes_, nodes_});
    Tensor incidence = Tensor::zeros({nodes_, nodes_});
    for (std::size_t e = 0; e < nodes_; ++e) {
        const auto& members = graph.membership[e];
        if (members.empty()) {
            throw ContractError("hypergraph_conv: hyperedge " + std::to_string(e) +
                                " is empty");
        }
        const double inv = 1.0 / static_cast<double>(members.size());
        for (std::size_t node : members) {
            if (node >= nodes_) {
                throw ContractError("hypergraph_conv: member index out of range");
            }
            edge_mean.data()[e * nodes_ + node] = inv;
            incidence.data()[node * nodes_ + e] = 1.0;
        }
    }
    Tensor edge_feats = ops::matmul(tape, edge_mean, h);
    Tensor gathered = ops::matmul(tape, incidence, ops::scale_rows(tape, edge_feats, w_));
    Tensor updated = ops::gelu(tape, ops::add(tape, gathered, b_));
    return ops::add(tape, updated, h);
}

Tensor HypergraphInteraction::fuse_global(Tape& tape, const Tensor& g,
                                          const Tensor& h_prime) const {
    return ops::add(tape, fuse_.forward(tape, g, h_prime), g);
}

Tensor HypergraphInteraction::forward(Tape& tape, const Tensor& f_rgb, const Tensor& f_nir,
                                      const Tensor& f_tir, const Tensor& g,
                                      std::size_t conv_depth) const {
    Tensor h = concat_modalities(tape, f_rgb, f_nir, f_tir);
    for (std::size_t l = 0; l < conv_depth; ++l) {
        h = hypergraph_conv(tape, h, build_hyperedges(h, tau_));
    }
    return fuse_global(tape, g, h);
}

void HypergraphInteraction::register_params(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".edge_weight", w_});
    out.push_back({prefix + ".node_bias", b_});
    fuse_.register_params(prefix + ".fuse", out);
}

} // namespace stmi
