#include "stmi/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "stmi/errors.hpp"

namespace stmi {

namespace {

void require_labels(const std::vector<std::size_t>& labels, std::size_t batch) {
    if (labels.size() != batch) {
        throw ContractError("labels: expected " + std::to_string(batch) + " entries, got " +
                            std::to_string(labels.size()));
    }
}

} // namespace

Tensor ce_label_smooth(Tape& tape, const Tensor& logits,
                       const std::vector<std::size_t>& labels, double eps) {
    if (logits.rank() != 2) {
        throw DimensionError("ce_label_smooth expects {batch, classes} logits, got " +
                             shape_str(logits.shape()));
    }
    const std::size_t b = logits.rows(), c = logits.cols();
    require_labels(labels, b);
    if (!(eps >= 0.0 && eps < 1.0)) {
        throw ContractError("ce_label_smooth: smoothing must lie in [0, 1), got " +
                            std::to_string(eps));
    }
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] >= c) {
            throw ContractError("ce_label_smooth: label " + std::to_string(labels[i]) +
                                " out of range [0, " + std::to_string(c) + ")");
        }
    }
    for (double v : logits.data()) {
        if (!std::isfinite(v)) throw NumericError("ce_label_smooth: non-finite logit");
    }

    // Forward pass also materializes the softmax rows for the adjoint.
    auto probs = std::make_shared<std::vector<double>>(b * c);
    const double* x = logits.data().data();
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = x + i * c;
        double m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - m);
        const double lse = m + std::log(denom);
        double qdotx = (1.0 - eps) * row[labels[i]];
        double rowsum = 0.0;
        for (std::size_t j = 0; j < c; ++j) rowsum += row[j];
        qdotx += (eps / static_cast<double>(c)) * rowsum;
        loss += lse - qdotx;
        for (std::size_t j = 0; j < c; ++j) (*probs)[i * c + j] = std::exp(row[j] - m) / denom;
    }
    loss /= static_cast<double>(b);

    Tensor out = Tensor::from_data({1}, {loss}, logits.requires_grad());
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([xn = logits.node(), on = out.node(), probs, labels, eps, b, c] {
            if (on->grad.empty()) return;
            const double g = on->grad[0] / static_cast<double>(b);
            xn->ensure_grad();
            const double uniform = eps / static_cast<double>(c);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    double q = uniform + (j == labels[i] ? 1.0 - eps : 0.0);
                    xn->grad[i * c + j] += g * ((*probs)[i * c + j] - q);
                }
            }
        });
    }
    return out;
}

Tensor triplet_batch_hard(Tape& tape, const Tensor& features,
                          const std::vector<std::size_t>& labels, double margin) {
    if (features.rank() != 2) {
        throw DimensionError("triplet_batch_hard expects {batch, width} features, got " +
                             shape_str(features.shape()));
    }
    const std::size_t b = features.rows(), d = features.cols();
    require_labels(labels, b);
    if (!std::isfinite(margin) || margin < 0.0) {
        throw ContractError("triplet_batch_hard: margin must be finite and >= 0");
    }

    // Every anchor needs a positive (same id, other row) and a negative.
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t same = 0, other = 0;
        for (std::size_t j = 0; j < b; ++j) (labels[j] == labels[i] ? same : other)++;
        if (same < 2) {
            throw ContractError("triplet_batch_hard: identity " + std::to_string(labels[i]) +
                                " has a single sample in the batch");
        }
        if (other == 0) {
            throw ContractError("triplet_batch_hard: identity " + std::to_string(labels[i]) +
                                " has no non-matching sample in the batch");
        }
    }

    const double* f = features.data().data();
    std::vector<double> dist(b * b, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = f[i * d + k] - f[j * d + k];
                s += diff * diff;
            }
            dist[i * b + j] = std::sqrt(s + 1e-12);
        }
    }

    // Hardest positive (max distance, same id, other row) and hardest
    // negative (min distance, other id); earliest row wins ties.
    std::vector<std::size_t> hard_pos(b), hard_neg(b);
    std::vector<bool> active(b, false);
    double loss = 0.0;
    for (std::size_t a = 0; a < b; ++a) {
        std::size_t p = b, n = b;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == a) continue;
            if (labels[j] == labels[a]) {
                if (p == b || dist[a * b + j] > dist[a * b + p]) p = j;
            } else {
                if (n == b || dist[a * b + j] < dist[a * b + n]) n = j;
            }
        }
        hard_pos[a] = p;
        hard_neg[a] = n;
        const double hinge = margin + dist[a * b + p] - dist[a * b + n];
        if (hinge > 0.0) {
            active[a] = true;
            loss += hinge;
        }
    }
    loss /= static_cast<double>(b);

    Tensor out = Tensor::from_data({1}, {loss}, features.requires_grad());
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        auto dists = std::make_shared<std::vector<double>>(std::move(dist));
        tape.record([fn = features.node(), on = out.node(), dists, hard_pos, hard_neg, active,
                     b, d] {
            if (on->grad.empty()) return;
            const double g = on->grad[0] / static_cast<double>(b);
            fn->ensure_grad();
            const std::vector<double>& val = fn->value;
            auto push_pair = [&](std::size_t a, std::size_t j, double coeff) {
                // d(a,j) = sqrt(s + 1e-12): dd/df_a = (f_a - f_j) / d, negated for f_j.
                const double dd = (*dists)[a * b + j];
                for (std::size_t k = 0; k < d; ++k) {
                    const double diff = (val[a * d + k] - val[j * d + k]) / dd;
                    fn->grad[a * d + k] += coeff * diff;
                    fn->grad[j * d + k] -= coeff * diff;
                }
            };
            for (std::size_t a = 0; a < b; ++a) {
                if (!active[a]) continue;
                push_pair(a, hard_pos[a], g);
                push_pair(a, hard_neg[a], -g);
            }
        });
    }
    return out;
}

SupervisedHead::SupervisedHead(std::string head_name, std::size_t feature_width,
                               std::size_t num_ids, Rng& rng)
    : name(std::move(head_name)), classifier(feature_width, num_ids, rng) {}

Tensor SupervisedHead::loss(Tape& tape, const Tensor& features,
                            const std::vector<std::size_t>& labels, double eps,
                            double margin) const {
    Tensor logits = classifier.forward(tape, features);
    Tensor ce = ce_label_smooth(tape, logits, labels, eps);
    Tensor tri = triplet_batch_hard(tape, features, labels, margin);
    return ops::add(tape, ce, tri);
}

void SupervisedHead::register_params(const std::string& prefix, ParamList& out) const {
    classifier.register_params(prefix + "." + name + ".classifier", out);
}

Tensor total_loss(Tape& tape, const std::vector<HeadBatch>& heads,
                  const std::vector<std::size_t>& labels, double eps, double margin) {
    if (heads.empty()) throw ContractError("total_loss: no supervised heads");
    Tensor total;
    bool first = true;
    for (const HeadBatch& hb : heads) {
        if (hb.head == nullptr) throw ContractError("total_loss: null head");
        Tensor term = hb.head->loss(tape, hb.features, labels, eps, margin);
        total = first ? term : ops::add(tape, total, term);
        first = false;
    }
    return total;
}

} // namespace stmi
