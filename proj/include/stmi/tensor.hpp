#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stmi/errors.hpp"
#include "stmi/rng.hpp"

namespace stmi {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Global numeric mode. f64 is required by the verification suites; f32 rounds
// every forward value and every parameter/optimizer update through float so
// that all persisted state is exactly representable in 32 bits. Adjoint
// accumulation always runs in double.
enum class Precision { f32, f64 };

Precision precision();
void set_precision(Precision p);

// Rounds x through float when the global mode is f32.
double quantize(double x);
void quantize_buffer(std::vector<double>& buf);

// Scoped override, used by tests and the verification harness.
class PrecisionGuard {
public:
    explicit PrecisionGuard(Precision p) : prev_(precision()) { set_precision(p); }
    ~PrecisionGuard() { set_precision(prev_); }

private:
    Precision prev_;
};

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // empty until a backward pass touches it
    bool requires_grad = false;

    std::size_t numel() const { return value.size(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
    }
};

// Shared handle to a tensor node. Copies alias the same storage; the node
// stays alive as long as any handle or recorded tape operation refers to it.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->numel(); }
    std::size_t rank() const { return node_->shape.size(); }
    // Rank-2 accessors.
    std::size_t rows() const;
    std::size_t cols() const;
    double at(std::size_t i, std::size_t j) const { return node_->value[i * cols() + j]; }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& grad() { return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg) { node_->requires_grad = rg; }
    void ensure_grad() const { node_->ensure_grad(); }
    void zero_grad() const {
        node_->ensure_grad();
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }

    // In-place fills; values are quantized under the global precision mode.
    void fill_normal(Rng& rng, double mean, double stddev);
    void fill_uniform(Rng& rng, double lo, double hi);
    void fill(double v);

    const std::shared_ptr<TensorNode>& node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<TensorNode> node_;
};

// Wengert list. Operations append themselves in execution order, which keeps
// the topological invariant (inputs precede their consumers) by construction.
// A tape and its tensors are confined to one thread; independent tapes may run
// concurrently.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    void set_recording(bool on) { recording_ = on; }

    void record(std::function<void()> backward_step) {
        steps_.push_back(std::move(backward_step));
    }

    std::size_t size() const { return steps_.size(); }
    void clear() { steps_.clear(); }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse, accumulating
    // adjoints into every requires_grad tensor upstream of loss. Gradients of
    // tensors used more than once accumulate.
    void backward(const Tensor& loss);

private:
    std::vector<std::function<void()>> steps_;
    bool recording_ = true;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

} // namespace stmi
