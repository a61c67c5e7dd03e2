#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stmi/layers.hpp"

namespace stmi {

// Mean over the batch of the smoothed cross-entropy
//   loss_i = logsumexp(x_i) - sum_c q_c x_{i,c},
//   q = (1 - eps) * onehot(label_i) + eps / C.
// Fused op: the adjoint is (softmax(x) - q) / B routed straight into the
// logits. Labels must lie in [0, C); eps in [0, 1).
Tensor ce_label_smooth(Tape& tape, const Tensor& logits,
                       const std::vector<std::size_t>& labels, double eps);

// Batch-hard triplet loss over row features: per anchor, the hinge
//   max(0, margin + max_{same id, other row} d - min_{other id} d)
// with Euclidean distances d = sqrt(sum diff^2 + 1e-12), averaged over
// anchors. Ties pick the earliest row. Every identity needs at least two
// samples and at least one non-matching row, else ContractError.
Tensor triplet_batch_hard(Tape& tape, const Tensor& features,
                          const std::vector<std::size_t>& labels, double margin);

// One supervised retrieval head: a plain linear classifier over the head's
// feature vector. Heads never share classifiers.
struct SupervisedHead {
    std::string name;
    Linear classifier;

    SupervisedHead() = default;
    SupervisedHead(std::string head_name, std::size_t feature_width, std::size_t num_ids,
                   Rng& rng);

    // ce_label_smooth(classifier(features)) + triplet_batch_hard(features).
    Tensor loss(Tape& tape, const Tensor& features, const std::vector<std::size_t>& labels,
                double eps, double margin) const;
    void register_params(const std::string& prefix, ParamList& out) const;
};

// A head paired with the feature batch it supervises ({B, width} rows).
struct HeadBatch {
    const SupervisedHead* head = nullptr;
    Tensor features;
};

// Sum of per-head losses, folded left in the given order.
Tensor total_loss(Tape& tape, const std::vector<HeadBatch>& heads,
                  const std::vector<std::size_t>& labels, double eps, double margin);

} // namespace stmi
