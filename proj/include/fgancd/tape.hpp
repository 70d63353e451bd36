#pragma once

#include "fgancd/matrix.hpp"

#include <cstdint>
#include <vector>

namespace fgancd {

// The fixed set of differentiable matrix primitives. Each kind has a forward
// rule and a vector-Jacobian (backward) rule in Tape.
enum class PrimitiveKind : std::uint8_t {
    Leaf,
    MatMul,
    Add,        // row-broadcasts a 1xN right operand over an MxN left operand
    Sub,
    Hadamard,
    Scale,      // arg0 = scalar factor
    Sigmoid,
    LeakyRelu,  // arg0 = negative-side slope
    Log,
    Clamp,      // arg0 = lo, arg1 = hi
    Transpose,
    MatInverse,
    Cholesky,
    TraceExpm,
    MeanReduce,
    BinaryConcrete,  // inputs: logits, gumbel0, gumbel1; arg0 = temperature
    RowStack,        // variadic: stacks equal-width inputs along rows
};

// Lightweight handle to a node on a Tape. Tensors are immutable once
// created; shape and grad flag are cached on the handle for convenience.
struct Tensor {
    int node = -1;
    int rows = 0;
    int cols = 0;
    bool requires_grad = false;

    bool is_scalar() const { return rows == 1 && cols == 1; }
};

// Result of a backward pass: one gradient per node, zero-filled for leaves
// that do not influence the loss.
class Gradients {
public:
    const Matrix& wrt(const Tensor& t) const;

private:
    friend class Tape;
    Gradients(std::vector<Matrix> by_node, std::vector<std::pair<int, int>> shapes)
        : by_node_(std::move(by_node)), shapes_(std::move(shapes)) {}

    mutable std::vector<Matrix> by_node_;
    std::vector<std::pair<int, int>> shapes_;
};

// Recorded computation graph. Creation order is topological by construction
// (an op's inputs must already exist), so the backward pass is a single
// reverse sweep that visits each record exactly once.
class Tape {
public:
    Tensor leaf(Matrix value, bool requires_grad = true);
    Tensor constant(Matrix value) { return leaf(std::move(value), false); }
    Tensor constant_scalar(double v) { return leaf(Matrix(1, 1, v), false); }

    Tensor forward(PrimitiveKind kind, const std::vector<Tensor>& inputs,
                   double arg0 = 0.0, double arg1 = 0.0);

    Tensor matmul(Tensor a, Tensor b) { return forward(PrimitiveKind::MatMul, {a, b}); }
    Tensor add(Tensor a, Tensor b) { return forward(PrimitiveKind::Add, {a, b}); }
    Tensor sub(Tensor a, Tensor b) { return forward(PrimitiveKind::Sub, {a, b}); }
    Tensor hadamard(Tensor a, Tensor b) { return forward(PrimitiveKind::Hadamard, {a, b}); }
    Tensor scale(Tensor a, double c) { return forward(PrimitiveKind::Scale, {a}, c); }
    Tensor sigmoid(Tensor a) { return forward(PrimitiveKind::Sigmoid, {a}); }
    Tensor leaky_relu(Tensor a, double slope) { return forward(PrimitiveKind::LeakyRelu, {a}, slope); }
    Tensor log(Tensor a) { return forward(PrimitiveKind::Log, {a}); }
    Tensor clamp(Tensor a, double lo, double hi) { return forward(PrimitiveKind::Clamp, {a}, lo, hi); }
    Tensor transpose(Tensor a) { return forward(PrimitiveKind::Transpose, {a}); }
    Tensor mat_inverse(Tensor a) { return forward(PrimitiveKind::MatInverse, {a}); }
    Tensor cholesky(Tensor a) { return forward(PrimitiveKind::Cholesky, {a}); }
    Tensor trace_expm(Tensor a) { return forward(PrimitiveKind::TraceExpm, {a}); }
    Tensor mean_reduce(Tensor a) { return forward(PrimitiveKind::MeanReduce, {a}); }
    Tensor binary_concrete(Tensor logits, Tensor g0, Tensor g1, double tau) {
        return forward(PrimitiveKind::BinaryConcrete, {logits, g0, g1}, tau);
    }
    Tensor row_stack(const std::vector<Tensor>& rows) {
        return forward(PrimitiveKind::RowStack, rows);
    }

    const Matrix& value(const Tensor& t) const;
    double scalar_value(const Tensor& t) const;

    // Reverse sweep from a scalar loss. Throws LossNotScalar / TapeEmpty.
    Gradients backward(const Tensor& loss) const;

    void reset() { records_.clear(); }
    std::size_t node_count() const { return records_.size(); }

private:
    struct Record {
        PrimitiveKind kind = PrimitiveKind::Leaf;
        std::vector<int> in;
        double arg0 = 0.0;
        double arg1 = 0.0;
        Matrix value;
        Matrix saved;  // TraceExpm keeps e^A for the backward rule
        bool requires_grad = false;
    };

    Tensor push(Record rec);

    std::vector<Record> records_;
};

// Two-category Gumbel-Softmax over logits [0, a], second coordinate; equals
// sigmoid((a + g1 - g0) / tau). Differentiable in `logit`; throws
// NonPositiveTemperature when tau <= 0.
double binary_concrete_sample(double logit, double tau, double g0, double g1);

// Numerically stable logistic function.
double stable_sigmoid(double x);

}  // namespace fgancd
