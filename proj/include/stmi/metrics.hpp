#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stmi/tensor.hpp"

// Ranked-retrieval evaluation: per-query ranking with the standard
// same-identity-same-camera exclusion, mean Average Precision, and CMC.
namespace stmi::metrics {

enum class Distance { euclidean, cosine };

struct EvalSet {
    Tensor query;    // {Q, D'}
    Tensor gallery;  // {G, D'}
    std::vector<std::size_t> query_labels, query_cameras;
    std::vector<std::size_t> gallery_labels, gallery_cameras;
};

struct EvalResult {
    double map = 0.0;
    double cmc1 = 0.0, cmc5 = 0.0, cmc10 = 0.0;
    // Per query: kept gallery indices in rank order (after exclusion).
    std::vector<std::vector<std::size_t>> ranked;
};

// d[i*G + j] = distance(q_i, g_j). Euclidean is the plain L2 norm of the
// difference; cosine is 1 - cos(q_i, g_j) and rejects zero-norm rows.
std::vector<double> pairwise_distances(const Tensor& q, const Tensor& g,
                                       Distance metric = Distance::euclidean);

// ranked_rel[k] = 1 iff the item at rank k (0-based) is relevant.
// AP = (1/R) * sum_k precision@k * rel(k), over ranks with rel(k) = 1.
double average_precision(const std::vector<int>& ranked_rel);

// Per query: drop gallery items sharing both identity and camera, rank the
// rest by (distance, gallery index) ascending, then average AP and count CMC
// hits. A query left without any positive is a contract violation named by
// query index.
EvalResult evaluate(const EvalSet& set, Distance metric = Distance::euclidean);

// Flat key=value metrics file (full double precision).
void write_results(const EvalResult& result, const EvalSet& set, const std::string& path);

// One line per query: its label and the ranked gallery indices.
void write_ranked(const EvalResult& result, const EvalSet& set, const std::string& path);

} // namespace stmi::metrics
