#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace fgancd {

// Dense row-major matrix of doubles; the single numeric container used by
// the autodiff engine, the simulator and the trainer. All computation is
// 64-bit.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }
    bool empty() const { return v_.empty(); }

    double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool operator==(const Matrix& o) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> v_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);

double trace(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

// Lower-triangular Cholesky factor. Only the lower triangle of `a` is read
// (LAPACK convention), so the factor is a function of the d(d+1)/2 lower
// entries. Throws NotPositiveDefinite on a non-positive pivot.
Matrix cholesky_lower(const Matrix& a);

// Reverse-mode rule for cholesky_lower: given L and an upstream gradient on
// L, returns the gradient on the lower triangle of the input (zeros above
// the diagonal). Unblocked recurrence after Smith (1995).
Matrix cholesky_backward(const Matrix& l, const Matrix& l_bar);

// Gauss-Jordan inverse with partial pivoting; throws SingularMatrix when the
// best available pivot falls below 1e-12 in magnitude.
Matrix invert(const Matrix& a);

// Matrix exponential by scaling-and-squaring on a 16-term Taylor series;
// the input is scaled until its infinity norm is at most 0.5.
Matrix expm(const Matrix& a);

}  // namespace fgancd
