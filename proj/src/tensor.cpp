#include "stmi/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace stmi {

namespace {
Precision g_precision = Precision::f64;
}

Precision precision() { return g_precision; }
void set_precision(Precision p) { g_precision = p; }

double quantize(double x) {
    return g_precision == Precision::f64 ? x : static_cast<double>(static_cast<float>(x));
}

void quantize_buffer(std::vector<double>& buf) {
    if (g_precision == Precision::f64) return;
    for (double& x : buf) x = static_cast<double>(static_cast<float>(x));
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(shape_numel(shape), 0.0);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    t.fill(v);
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {quantize(v)}, requires_grad);
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("expected rank-2 tensor, got " + shape_str(shape()));
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("expected rank-2 tensor, got " + shape_str(shape()));
    return node_->shape[1];
}

void Tensor::fill_normal(Rng& rng, double mean, double stddev) {
    for (double& x : node_->value) x = quantize(rng.normal(mean, stddev));
}

void Tensor::fill_uniform(Rng& rng, double lo, double hi) {
    for (double& x : node_->value) x = quantize(rng.uniform(lo, hi));
}

void Tensor::fill(double v) {
    const double q = quantize(v);
    std::fill(node_->value.begin(), node_->value.end(), q);
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward requires a scalar loss, got " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

} // namespace stmi
