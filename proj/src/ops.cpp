#include "stmi/ops.hpp"

#include <cmath>
#include <cstring>

namespace stmi::ops {

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(what) + " expects a rank-2 tensor, got " +
                             shape_str(t.shape()));
    }
}

// Adjoint accumulation helper: skip work when the consumer never saw a
// gradient or the producer does not want one.
bool wants_grad(const NodePtr& out) { return !out->grad.empty(); }

void matmul_kernel(const double* a, const double* b, double* c,
                   std::size_t r, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < r; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a[i * k + kk];
            if (av == 0.0) continue;
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " x " + shape_str(b.shape()));
    }
    const std::size_t r = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({r, n}, a.requires_grad() || b.requires_grad());
    matmul_kernel(a.data().data(), b.data().data(), out.data().data(), r, k, n);
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), bn = b.node(), on = out.node(), r, k, n] {
            if (!wants_grad(on)) return;
            const double* g = on->grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                // dA[i][kk] += sum_j g[i][j] * B[kk][j]
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        double s = 0.0;
                        const double* grow = g + i * n;
                        const double* brow = bn->value.data() + kk * n;
                        for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                        an->grad[i * k + kk] += s;
                    }
                }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                // dB[kk][j] += sum_i A[i][kk] * g[i][j]
                for (std::size_t i = 0; i < r; ++i) {
                    const double* grow = g + i * n;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const double av = an->value[i * k + kk];
                        if (av == 0.0) continue;
                        double* brow = bn->grad.data() + kk * n;
                        for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
    require_rank2(a, "transpose");
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({c, r}, a.requires_grad());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data()[j * r + i] = a.data()[i * c + j];
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), r, c] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += on->grad[j * r + i];
        });
    }
    return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& a) {
    require_rank2(a, "softmax_rows");
    for (double v : a.data()) {
        if (!std::isfinite(v)) throw NumericError("softmax_rows: non-finite input entry");
    }
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({r, c}, a.requires_grad());
    for (std::size_t i = 0; i < r; ++i) {
        const double* x = a.data().data() + i * c;
        double* y = out.data().data() + i * c;
        double m = x[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, x[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            y[j] = std::exp(x[j] - m);
            z += y[j];
        }
        for (std::size_t j = 0; j < c; ++j) y[j] /= z;
    }
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), r, c] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                const double* y = on->value.data() + i * c;
                const double* g = on->grad.data() + i * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += y[j] * g[j];
                double* dx = an->grad.data() + i * c;
                for (std::size_t j = 0; j < c; ++j) dx[j] += y[j] * (g[j] - dot);
            }
        });
    }
    return out;
}

namespace {

enum class Bin { Add, Sub, Mul };

// Shared implementation of the same-shape / scalar-broadcast binary ops.
Tensor binary_op(Tape& tape, const Tensor& a, const Tensor& b, Bin op, const char* name) {
    const bool a_scalar = a.numel() == 1;
    const bool b_scalar = b.numel() == 1;
    if (!same_shape(a.shape(), b.shape()) && !a_scalar && !b_scalar) {
        throw DimensionError(std::string(name) + ": incompatible shapes " +
                             shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    const Shape& out_shape = a_scalar && !b_scalar ? b.shape() : a.shape();
    const std::size_t n = shape_numel(out_shape);
    Tensor out = Tensor::zeros(out_shape, a.requires_grad() || b.requires_grad());
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = pa[a_scalar ? 0 : i];
        const double y = pb[b_scalar ? 0 : i];
        switch (op) {
            case Bin::Add: po[i] = x + y; break;
            case Bin::Sub: po[i] = x - y; break;
            case Bin::Mul: po[i] = x * y; break;
        }
    }
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), bn = b.node(), on = out.node(), op, a_scalar, b_scalar, n] {
            if (!wants_grad(on)) return;
            const double* g = on->grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    double d = g[i];
                    if (op == Bin::Mul) d *= bn->value[b_scalar ? 0 : i];
                    an->grad[a_scalar ? 0 : i] += d;
                }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    double d = g[i];
                    if (op == Bin::Sub) d = -d;
                    if (op == Bin::Mul) d = g[i] * an->value[a_scalar ? 0 : i];
                    bn->grad[b_scalar ? 0 : i] += d;
                }
            }
        });
    }
    return out;
}

} // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return binary_op(tape, a, b, Bin::Add, "add"); }
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return binary_op(tape, a, b, Bin::Sub, "sub"); }
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b) { return binary_op(tape, a, b, Bin::Mul, "hadamard"); }

Tensor scale(Tape& tape, const Tensor& a, double c) {
    const std::size_t n = a.numel();
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = quantize(a.data()[i] * c);
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), c, n] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) an->grad[i] += c * on->grad[i];
        });
    }
    return out;
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
} // namespace

Tensor gelu(Tape& tape, const Tensor& a) {
    const std::size_t n = a.numel();
    Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a.data()[i];
        out.data()[i] = quantize(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
    }
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), n] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double x = an->value[i];
                const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                an->grad[i] += (cdf + x * pdf) * on->grad[i];
            }
        });
    }
    return out;
}

Tensor l2_normalize_rows(Tape& tape, const Tensor& a) {
    require_rank2(a, "l2_normalize_rows");
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({r, c}, a.requires_grad());
    std::vector<double> norms(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* x = a.data().data() + i * c;
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += x[j] * x[j];
        const double norm = std::sqrt(s);
        if (norm <= 1e-12) {
            throw NumericError("l2_normalize_rows: row " + std::to_string(i) +
                               " has near-zero norm");
        }
        norms[i] = norm;
        for (std::size_t j = 0; j < c; ++j) out.data()[i * c + j] = x[j] / norm;
    }
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), norms, r, c] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                const double* y = on->value.data() + i * c;
                const double* g = on->grad.data() + i * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += y[j] * g[j];
                double* dx = an->grad.data() + i * c;
                for (std::size_t j = 0; j < c; ++j) dx[j] += (g[j] - dot * y[j]) / norms[i];
            }
        });
    }
    return out;
}

Tensor layer_norm_rows(Tape& tape, const Tensor& x, const Tensor& gamma,
                       const Tensor& beta, double eps) {
    require_rank2(x, "layer_norm_rows");
    const std::size_t r = x.rows(), c = x.cols();
    if (gamma.numel() != c || beta.numel() != c) {
        throw DimensionError("layer_norm_rows: gain/bias length must equal column count " +
                             std::to_string(c) + ", got " + shape_str(gamma.shape()) + " and " +
                             shape_str(beta.shape()));
    }
    Tensor out = Tensor::zeros({r, c},
                               x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    // xhat rows are needed by the adjoint; keep them alongside the inv-stddev.
    auto xhat = std::make_shared<std::vector<double>>(r * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = x.data().data() + i * c;
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += xi[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < c; ++j) {
            const double xh = (xi[j] - mu) * is;
            (*xhat)[i * c + j] = xh;
            out.data()[i * c + j] = gamma.data()[j] * xh + beta.data()[j];
        }
    }
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([xn = x.node(), gn = gamma.node(), bn = beta.node(), on = out.node(),
                     xhat, inv_std, r, c] {
            if (!wants_grad(on)) return;
            for (std::size_t i = 0; i < r; ++i) {
                const double* g = on->grad.data() + i * c;
                const double* xh = xhat->data() + i * c;
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (std::size_t j = 0; j < c; ++j) gn->grad[j] += g[j] * xh[j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (std::size_t j = 0; j < c; ++j) bn->grad[j] += g[j];
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dxh = g[j] * gn->value[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh[j];
                    }
                    mean_dxh /= static_cast<double>(c);
                    mean_dxh_xh /= static_cast<double>(c);
                    double* dx = xn->grad.data() + i * c;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dxh = g[j] * gn->value[j];
                        dx[j] += (*inv_std)[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                    }
                }
            }
        });
    }
    return out;
}

Tensor sum_all(Tape& tape, const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out = Tensor::from_data({1}, {quantize(s)}, a.requires_grad());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node()] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (double& g : an->grad) g += on->grad[0];
        });
    }
    return out;
}

Tensor mean_all(Tape& tape, const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.numel());
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out = Tensor::from_data({1}, {quantize(s * inv)}, a.requires_grad());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), inv] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (double& g : an->grad) g += on->grad[0] * inv;
        });
    }
    return out;
}

Tensor mean_rows(Tape& tape, const Tensor& a) {
    require_rank2(a, "mean_rows");
    const std::size_t r = a.rows(), c = a.cols();
    const double inv = 1.0 / static_cast<double>(c);
    Tensor out = Tensor::zeros({r, 1}, a.requires_grad());
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += a.data()[i * c + j];
        out.data()[i] = quantize(s * inv);
    }
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), r, c, inv] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) an->grad[i * c + j] += on->grad[i] * inv;
        });
    }
    return out;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: no parts");
    const std::size_t c = parts[0].cols();
    std::size_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_rows");
        if (p.cols() != c) {
            throw DimensionError("concat_rows: column mismatch, " + shape_str(parts[0].shape()) +
                                 " vs " + shape_str(p.shape()));
        }
        total += p.rows();
        rg = rg || p.requires_grad();
    }
    Tensor out = Tensor::zeros({total, c}, rg);
    std::size_t row = 0;
    std::vector<std::pair<NodePtr, std::size_t>> spans;
    spans.reserve(parts.size());
    for (const Tensor& p : parts) {
        std::memcpy(out.data().data() + row * c, p.data().data(), p.numel() * sizeof(double));
        spans.emplace_back(p.node(), row);
        row += p.rows();
    }
    if (tape.recording() && out.requires_grad()) {
        tape.record([spans, on = out.node(), c] {
            if (!wants_grad(on)) return;
            for (const auto& [pn, start] : spans) {
                if (!pn->requires_grad) continue;
                pn->ensure_grad();
                const std::size_t n = pn->value.size();
                for (std::size_t i = 0; i < n; ++i) pn->grad[i] += on->grad[start * c + i];
            }
        });
    }
    return out;
}

Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t start, std::size_t len) {
    require_rank2(a, "slice_rows");
    if (start + len > a.rows()) {
        throw DimensionError("slice_rows: range [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") exceeds " + shape_str(a.shape()));
    }
    const std::size_t c = a.cols();
    Tensor out = Tensor::zeros({len, c}, a.requires_grad());
    std::memcpy(out.data().data(), a.data().data() + start * c, len * c * sizeof(double));
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), start, len, c] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < len * c; ++i) an->grad[start * c + i] += on->grad[i];
        });
    }
    return out;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no parts");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.rows() != r) {
            throw DimensionError("concat_cols: row mismatch, " + shape_str(parts[0].shape()) +
                                 " vs " + shape_str(p.shape()));
        }
        total += p.cols();
        rg = rg || p.requires_grad();
    }
    Tensor out = Tensor::zeros({r, total}, rg);
    std::size_t col = 0;
    std::vector<std::pair<NodePtr, std::size_t>> spans;
    for (const Tensor& p : parts) {
        const std::size_t pc = p.cols();
        for (std::size_t i = 0; i < r; ++i)
            std::memcpy(out.data().data() + i * total + col, p.data().data() + i * pc,
                        pc * sizeof(double));
        spans.emplace_back(p.node(), col);
        col += pc;
    }
    if (tape.recording() && out.requires_grad()) {
        tape.record([spans, on = out.node(), r, total] {
            if (!wants_grad(on)) return;
            for (const auto& [pn, start] : spans) {
                if (!pn->requires_grad) continue;
                pn->ensure_grad();
                const std::size_t pc = pn->shape[1];
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < pc; ++j)
                        pn->grad[i * pc + j] += on->grad[i * total + start + j];
            }
        });
    }
    return out;
}

Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t start, std::size_t len) {
    require_rank2(a, "slice_cols");
    if (start + len > a.cols()) {
        throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") exceeds " + shape_str(a.shape()));
    }
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({r, len}, a.requires_grad());
    for (std::size_t i = 0; i < r; ++i)
        std::memcpy(out.data().data() + i * len, a.data().data() + i * c + start,
                    len * sizeof(double));
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), start, len, r, c] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < len; ++j)
                    an->grad[i * c + start + j] += on->grad[i * len + j];
        });
    }
    return out;
}

Tensor add_row_vector(Tape& tape, const Tensor& x, const Tensor& v) {
    require_rank2(x, "add_row_vector");
    const std::size_t r = x.rows(), c = x.cols();
    if (v.numel() != c) {
        throw DimensionError("add_row_vector: vector length " + std::to_string(v.numel()) +
                             " does not match columns of " + shape_str(x.shape()));
    }
    Tensor out = Tensor::zeros({r, c}, x.requires_grad() || v.requires_grad());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out.data()[i * c + j] = x.data()[i * c + j] + v.data()[j];
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([xn = x.node(), vn = v.node(), on = out.node(), r, c] {
            if (!wants_grad(on)) return;
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::size_t i = 0; i < r * c; ++i) xn->grad[i] += on->grad[i];
            }
            if (vn->requires_grad) {
                vn->ensure_grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) vn->grad[j] += on->grad[i * c + j];
            }
        });
    }
    return out;
}

Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& w) {
    require_rank2(x, "scale_rows");
    const std::size_t r = x.rows(), c = x.cols();
    if (w.numel() != r) {
        throw DimensionError("scale_rows: weight length " + std::to_string(w.numel()) +
                             " does not match rows of " + shape_str(x.shape()));
    }
    Tensor out = Tensor::zeros({r, c}, x.requires_grad() || w.requires_grad());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            out.data()[i * c + j] = w.data()[i] * x.data()[i * c + j];
    quantize_buffer(out.data());
    if (tape.recording() && out.requires_grad()) {
        tape.record([xn = x.node(), wn = w.node(), on = out.node(), r, c] {
            if (!wants_grad(on)) return;
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j)
                        xn->grad[i * c + j] += wn->value[i] * on->grad[i * c + j];
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
                for (std::size_t i = 0; i < r; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < c; ++j)
                        s += on->grad[i * c + j] * xn->value[i * c + j];
                    wn->grad[i] += s;
                }
            }
        });
    }
    return out;
}

namespace {

Tensor row_extremum_broadcast(Tape& tape, const Tensor& a, bool is_max, const char* name) {
    require_rank2(a, name);
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({r, c}, a.requires_grad());
    auto arg = std::make_shared<std::vector<std::size_t>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* x = a.data().data() + i * c;
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (is_max ? x[j] > x[best] : x[j] < x[best]) best = j;
        }
        (*arg)[i] = best;
        for (std::size_t j = 0; j < c; ++j) out.data()[i * c + j] = x[best];
    }
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node(), arg, r, c] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < r; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < c; ++j) s += on->grad[i * c + j];
                an->grad[i * c + (*arg)[i]] += s;
            }
        });
    }
    return out;
}

} // namespace

Tensor row_max_broadcast(Tape& tape, const Tensor& a) {
    return row_extremum_broadcast(tape, a, true, "row_max_broadcast");
}

Tensor row_min_broadcast(Tape& tape, const Tensor& a) {
    return row_extremum_broadcast(tape, a, false, "row_min_broadcast");
}

Tensor reshape(Tape& tape, const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                             shape_str(shape));
    }
    Tensor out = Tensor::from_data(std::move(shape), a.data(), a.requires_grad());
    if (tape.recording() && out.requires_grad()) {
        tape.record([an = a.node(), on = out.node()] {
            if (!wants_grad(on)) return;
            an->ensure_grad();
            for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += on->grad[i];
        });
    }
    return out;
}

} // namespace stmi::ops
