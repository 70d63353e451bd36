#include "fgancd/tape.hpp"

#include "fgancd/errors.hpp"

#include <cmath>
#include <string>

namespace fgancd {

namespace {

std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

void require(bool cond, const char* what) {
    if (!cond) throw ShapeMismatch(what);
}

}  // namespace

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double binary_concrete_sample(double logit, double tau, double g0, double g1) {
    if (!(tau > 0.0)) {
        throw NonPositiveTemperature("binary_concrete: tau = " + std::to_string(tau));
    }
    return stable_sigmoid((logit + g1 - g0) / tau);
}

const Matrix& Gradients::wrt(const Tensor& t) const {
    if (t.node < 0 || t.node >= static_cast<int>(by_node_.size())) {
        throw ShapeMismatch("gradient query for tensor not on this tape");
    }
    Matrix& g = by_node_[t.node];
    if (g.empty()) {
        g = Matrix(shapes_[t.node].first, shapes_[t.node].second, 0.0);
    }
    return g;
}

Tensor Tape::push(Record rec) {
    Tensor t;
    t.node = static_cast<int>(records_.size());
    t.rows = rec.value.rows();
    t.cols = rec.value.cols();
    t.requires_grad = rec.requires_grad;
    records_.push_back(std::move(rec));
    return t;
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
    if (!all_finite(value)) throw NonFiniteValue("leaf value contains NaN/Inf");
    Record rec;
    rec.kind = PrimitiveKind::Leaf;
    rec.value = std::move(value);
    rec.requires_grad = requires_grad;
    return push(std::move(rec));
}

Tensor Tape::forward(PrimitiveKind kind, const std::vector<Tensor>& inputs,
                     double arg0, double arg1) {
    Record rec;
    rec.kind = kind;
    const int arity = static_cast<int>(inputs.size());
    require(arity >= 1, "forward: bad arity");
    require(kind == PrimitiveKind::RowStack || arity <= 3, "forward: bad arity");
    rec.in.reserve(arity);
    for (const Tensor& t : inputs) {
        require(t.node >= 0 && t.node < static_cast<int>(records_.size()),
                "forward: input not on this tape");
        rec.in.push_back(t.node);
        rec.requires_grad = rec.requires_grad || t.requires_grad;
    }
    const auto& va = records_[rec.in[0]].value;

    switch (kind) {
        case PrimitiveKind::Leaf:
            throw ShapeMismatch("forward: Leaf is not an op");
        case PrimitiveKind::MatMul: {
            require(arity == 2, "matmul: arity");
            rec.value = fgancd::matmul(va, records_[rec.in[1]].value);
            break;
        }
        case PrimitiveKind::Add: {
            require(arity == 2, "add: arity");
            const auto& vb = records_[rec.in[1]].value;
            if (vb.rows() == 1 && va.rows() > 1 && vb.cols() == va.cols()) {
                Matrix out = va;
                for (int i = 0; i < out.rows(); ++i) {
                    for (int j = 0; j < out.cols(); ++j) out(i, j) += vb(0, j);
                }
                rec.value = std::move(out);
            } else {
                rec.value = fgancd::add(va, vb);
            }
            break;
        }
        case PrimitiveKind::Sub: {
            require(arity == 2, "sub: arity");
            rec.value = fgancd::sub(va, records_[rec.in[1]].value);
            break;
        }
        case PrimitiveKind::Hadamard: {
            require(arity == 2, "hadamard: arity");
            rec.value = fgancd::hadamard(va, records_[rec.in[1]].value);
            break;
        }
        case PrimitiveKind::Scale: {
            require(arity == 1, "scale: arity");
            rec.value = fgancd::scale(va, arg0);
            break;
        }
        case PrimitiveKind::Sigmoid: {
            require(arity == 1, "sigmoid: arity");
            Matrix out = va;
            for (int i = 0; i < out.size(); ++i) out.data()[i] = stable_sigmoid(out.data()[i]);
            rec.value = std::move(out);
            break;
        }
        case PrimitiveKind::LeakyRelu: {
            require(arity == 1, "leaky_relu: arity");
            Matrix out = va;
            for (int i = 0; i < out.size(); ++i) {
                double& x = out.data()[i];
                if (x < 0.0) x *= arg0;
            }
            rec.value = std::move(out);
            break;
        }
        case PrimitiveKind::Log: {
            require(arity == 1, "log: arity");
            Matrix out = va;
            for (int i = 0; i < out.size(); ++i) out.data()[i] = std::log(out.data()[i]);
            rec.value = std::move(out);
            break;
        }
        case PrimitiveKind::Clamp: {
            require(arity == 1, "clamp: arity");
            Matrix out = va;
            for (int i = 0; i < out.size(); ++i) {
                double& x = out.data()[i];
                x = x < arg0 ? arg0 : (x > arg1 ? arg1 : x);
            }
            rec.value = std::move(out);
            break;
        }
        case PrimitiveKind::Transpose: {
            require(arity == 1, "transpose: arity");
            rec.value = fgancd::transpose(va);
            break;
        }
        case PrimitiveKind::MatInverse: {
            require(arity == 1, "mat_inverse: arity");
            rec.value = invert(va);
            break;
        }
        case PrimitiveKind::Cholesky: {
            require(arity == 1, "cholesky: arity");
            rec.value = cholesky_lower(va);
            break;
        }
        case PrimitiveKind::TraceExpm: {
            require(arity == 1, "trace_expm: arity");
            rec.saved = expm(va);
            rec.value = Matrix(1, 1, trace(rec.saved));
            break;
        }
        case PrimitiveKind::MeanReduce: {
            require(arity == 1, "mean_reduce: arity");
            double s = 0.0;
            for (int i = 0; i < va.size(); ++i) s += va.data()[i];
            rec.value = Matrix(1, 1, s / va.size());
            break;
        }
        case PrimitiveKind::BinaryConcrete: {
            require(arity == 3, "binary_concrete: arity");
            if (!(arg0 > 0.0)) {
                throw NonPositiveTemperature("binary_concrete: tau = " + std::to_string(arg0));
            }
            const auto& g0 = records_[rec.in[1]].value;
            const auto& g1 = records_[rec.in[2]].value;
            require(va.same_shape(g0) && va.same_shape(g1), "binary_concrete: gumbel shape");
            Matrix out = va;
            for (int i = 0; i < out.size(); ++i) {
                out.data()[i] =
                    stable_sigmoid((va.data()[i] + g1.data()[i] - g0.data()[i]) / arg0);
            }
            rec.value = std::move(out);
            break;
        }
        case PrimitiveKind::RowStack: {
            const int cols = va.cols();
            int rows = 0;
            for (int n : rec.in) {
                require(records_[n].value.cols() == cols, "row_stack: column mismatch");
                rows += records_[n].value.rows();
            }
            Matrix out(rows, cols);
            int at = 0;
            for (int n : rec.in) {
                const Matrix& block = records_[n].value;
                for (int r = 0; r < block.rows(); ++r) {
                    for (int c = 0; c < cols; ++c) out(at + r, c) = block(r, c);
                }
                at += block.rows();
            }
            rec.value = std::move(out);
            break;
        }
    }

    if (!all_finite(rec.value)) {
        throw NonFiniteValue("forward: non-finite result of op kind " +
                             std::to_string(static_cast<int>(kind)));
    }
    rec.arg0 = arg0;
    rec.arg1 = arg1;
    return push(std::move(rec));
}

const Matrix& Tape::value(const Tensor& t) const {
    if (t.node < 0 || t.node >= static_cast<int>(records_.size())) {
        throw ShapeMismatch("value: tensor not on this tape");
    }
    return records_[t.node].value;
}

double Tape::scalar_value(const Tensor& t) const {
    const Matrix& v = value(t);
    if (v.rows() != 1 || v.cols() != 1) {
        throw LossNotScalar("scalar_value: tensor is " + shape_str(t));
    }
    return v(0, 0);
}

Gradients Tape::backward(const Tensor& loss) const {
    if (records_.empty()) throw TapeEmpty("backward: tape has no records");
    if (loss.node < 0 || loss.node >= static_cast<int>(records_.size())) {
        throw ShapeMismatch("backward: loss not on this tape");
    }
    if (!loss.is_scalar()) {
        throw LossNotScalar("backward: loss is " + shape_str(loss));
    }

    std::vector<Matrix> grad(records_.size());
    std::vector<std::pair<int, int>> shapes(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        shapes[i] = {records_[i].value.rows(), records_[i].value.cols()};
    }
    grad[loss.node] = Matrix(1, 1, 1.0);

    auto acc = [&](int node, Matrix delta) {
        if (!records_[node].requires_grad) return;
        if (grad[node].empty()) {
            grad[node] = std::move(delta);
        } else {
            double* pg = grad[node].data();
            const double* pd = delta.data();
            for (int i = 0; i < grad[node].size(); ++i) pg[i] += pd[i];
        }
    };

    for (int idx = loss.node; idx >= 0; --idx) {
        const Record& rec = records_[idx];
        if (!rec.requires_grad || grad[idx].empty()) continue;
        const Matrix& g = grad[idx];

        switch (rec.kind) {
            case PrimitiveKind::Leaf:
                break;
            case PrimitiveKind::MatMul: {
                const Matrix& a = records_[rec.in[0]].value;
                const Matrix& b = records_[rec.in[1]].value;
                if (records_[rec.in[0]].requires_grad) acc(rec.in[0], fgancd::matmul(g, fgancd::transpose(b)));
                if (records_[rec.in[1]].requires_grad) acc(rec.in[1], fgancd::matmul(fgancd::transpose(a), g));
                break;
            }
            case PrimitiveKind::Add: {
                acc(rec.in[0], g);
                const Matrix& b = records_[rec.in[1]].value;
                if (b.rows() == 1 && g.rows() > 1) {
                    Matrix colsum(1, g.cols(), 0.0);
                    for (int i = 0; i < g.rows(); ++i) {
                        for (int j = 0; j < g.cols(); ++j) colsum(0, j) += g(i, j);
                    }
                    acc(rec.in[1], std::move(colsum));
                } else {
                    acc(rec.in[1], g);
                }
                break;
            }
            case PrimitiveKind::Sub: {
                acc(rec.in[0], g);
                acc(rec.in[1], fgancd::scale(g, -1.0));
                break;
            }
            case PrimitiveKind::Hadamard: {
                if (records_[rec.in[0]].requires_grad) {
                    acc(rec.in[0], fgancd::hadamard(g, records_[rec.in[1]].value));
                }
                if (records_[rec.in[1]].requires_grad) {
                    acc(rec.in[1], fgancd::hadamard(g, records_[rec.in[0]].value));
                }
                break;
            }
            case PrimitiveKind::Scale: {
                acc(rec.in[0], fgancd::scale(g, rec.arg0));
                break;
            }
            case PrimitiveKind::Sigmoid: {
                Matrix d = g;
                for (int i = 0; i < d.size(); ++i) {
                    const double y = rec.value.data()[i];
                    d.data()[i] *= y * (1.0 - y);
                }
                acc(rec.in[0], std::move(d));
                break;
            }
            case PrimitiveKind::LeakyRelu: {
                const Matrix& x = records_[rec.in[0]].value;
                Matrix d = g;
                for (int i = 0; i < d.size(); ++i) {
                    if (x.data()[i] < 0.0) d.data()[i] *= rec.arg0;
                }
                acc(rec.in[0], std::move(d));
                break;
            }
            case PrimitiveKind::Log: {
                const Matrix& x = records_[rec.in[0]].value;
                Matrix d = g;
                for (int i = 0; i < d.size(); ++i) d.data()[i] /= x.data()[i];
                acc(rec.in[0], std::move(d));
                break;
            }
            case PrimitiveKind::Clamp: {
                const Matrix& x = records_[rec.in[0]].value;
                Matrix d = g;
                for (int i = 0; i < d.size(); ++i) {
                    const double xv = x.data()[i];
                    if (!(xv > rec.arg0 && xv < rec.arg1)) d.data()[i] = 0.0;
                }
                acc(rec.in[0], std::move(d));
                break;
            }
            case PrimitiveKind::Transpose: {
                acc(rec.in[0], fgancd::transpose(g));
                break;
            }
            case PrimitiveKind::MatInverse: {
                // d(A^-1) rule: grad_A = -Y^T g Y^T with Y = A^-1.
                const Matrix yt = fgancd::transpose(rec.value);
                acc(rec.in[0], fgancd::scale(fgancd::matmul(fgancd::matmul(yt, g), yt), -1.0));
                break;
            }
            case PrimitiveKind::Cholesky: {
                acc(rec.in[0], cholesky_backward(rec.value, g));
                break;
            }
            case PrimitiveKind::TraceExpm: {
                // d tr(e^A) / dA = (e^A)^T
                acc(rec.in[0], fgancd::scale(fgancd::transpose(rec.saved), g(0, 0)));
                break;
            }
            case PrimitiveKind::MeanReduce: {
                const auto& shape = shapes[rec.in[0]];
                const double v = g(0, 0) / (static_cast<double>(shape.first) * shape.second);
                acc(rec.in[0], Matrix(shape.first, shape.second, v));
                break;
            }
            case PrimitiveKind::BinaryConcrete: {
                Matrix d = g;
                for (int i = 0; i < d.size(); ++i) {
                    const double y = rec.value.data()[i];
                    d.data()[i] *= y * (1.0 - y) / rec.arg0;
                }
                if (records_[rec.in[2]].requires_grad) acc(rec.in[2], d);
                if (records_[rec.in[1]].requires_grad) acc(rec.in[1], fgancd::scale(d, -1.0));
                acc(rec.in[0], std::move(d));
                break;
            }
            case PrimitiveKind::RowStack: {
                int at = 0;
                for (int n : rec.in) {
                    const int rows = records_[n].value.rows();
                    if (records_[n].requires_grad) {
                        Matrix slice(rows, g.cols());
                        for (int r = 0; r < rows; ++r) {
                            for (int c = 0; c < g.cols(); ++c) slice(r, c) = g(at + r, c);
                        }
                        acc(n, std::move(slice));
                    }
                    at += rows;
                }
                break;
            }
        }
    }

    return Gradients(std::move(grad), std::move(shapes));
}

}  // namespace fgancd
