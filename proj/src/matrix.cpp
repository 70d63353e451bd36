#include "fgancd/matrix.hpp"

#include "fgancd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fgancd {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) {
            throw ShapeMismatch("from_rows: ragged initializer");
        }
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeMismatch("matmul: " + shape_str(a) + " * " + shape_str(b));
    }
    const int m = a.rows();
    const int k = a.cols();
    const int n = b.cols();
    Matrix out(m, n, 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (int i = 0; i < m; ++i) {
        const double* arow = pa + static_cast<std::size_t>(i) * k;
        double* orow = po + static_cast<std::size_t>(i) * n;
        for (int l = 0; l < k; ++l) {
            const double av = arow[l];
            if (av == 0.0) continue;
            const double* brow = pb + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch("add: " + shape_str(a) + " vs " + shape_str(b));
    }
    Matrix out = a;
    double* po = out.data();
    const double* pb = b.data();
    for (int i = 0; i < out.size(); ++i) po[i] += pb[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch("sub: " + shape_str(a) + " vs " + shape_str(b));
    }
    Matrix out = a;
    double* po = out.data();
    const double* pb = b.data();
    for (int i = 0; i < out.size(); ++i) po[i] -= pb[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch("hadamard: " + shape_str(a) + " vs " + shape_str(b));
    }
    Matrix out = a;
    double* po = out.data();
    const double* pb = b.data();
    for (int i = 0; i < out.size(); ++i) po[i] *= pb[i];
    return out;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] *= c;
    return out;
}

double trace(const Matrix& a) {
    double t = 0.0;
    const int n = std::min(a.rows(), a.cols());
    for (int i = 0; i < n; ++i) t += a(i, i);
    return t;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    const double* p = a.data();
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(p[i]));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
    }
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

bool all_finite(const Matrix& a) {
    const double* p = a.data();
    for (int i = 0; i < a.size(); ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

Matrix cholesky_lower(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeMismatch("cholesky: input not square, " + shape_str(a));
    }
    const int n = a.rows();
    Matrix l(n, n, 0.0);
    for (int j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) {
            throw NotPositiveDefinite("cholesky: pivot " + std::to_string(diag) +
                                      " at column " + std::to_string(j));
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

Matrix cholesky_backward(const Matrix& l, const Matrix& l_bar) {
    const int n = l.rows();
    // Work on tril(l_bar); the strictly-upper part of the factor is
    // identically zero and carries no sensitivity.
    Matrix g(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) g(i, j) = l_bar(i, j);
    }
    for (int k = n - 1; k >= 0; --k) {
        double dot = 0.0;
        for (int i = k + 1; i < n; ++i) dot += l(i, k) * g(i, k);
        g(k, k) -= dot / l(k, k);
        for (int i = k; i < n; ++i) g(i, k) /= l(k, k);
        for (int j = 0; j < k; ++j) {
            double s = 0.0;
            for (int i = k; i < n; ++i) s += g(i, k) * l(i, j);
            g(k, j) -= s;
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = 0; j < k; ++j) g(i, j) -= g(i, k) * l(k, j);
        }
        g(k, k) *= 0.5;
    }
    return g;
}

Matrix invert(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeMismatch("invert: input not square, " + shape_str(a));
    }
    const int n = a.rows();
    Matrix w = a;
    Matrix inv = Matrix::identity(n);
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(w(r, col)) > std::abs(w(pivot, col))) pivot = r;
        }
        if (std::abs(w(pivot, col)) < 1e-12) {
            throw SingularMatrix("invert: pivot below 1e-12 at column " + std::to_string(col));
        }
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(w(col, j), w(pivot, j));
                std::swap(inv(col, j), inv(pivot, j));
            }
        }
        const double p = w(col, col);
        for (int j = 0; j < n; ++j) {
            w(col, j) /= p;
            inv(col, j) /= p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = w(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                w(r, j) -= f * w(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeMismatch("expm: input not square, " + shape_str(a));
    }
    const int n = a.rows();
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::abs(a(i, j));
        norm = std::max(norm, row);
    }
    int squarings = 0;
    double s = 1.0;
    while (norm * s > 0.5) {
        s *= 0.5;
        ++squarings;
    }
    const Matrix b = scale(a, s);
    Matrix result = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int k = 1; k <= 16; ++k) {
        term = scale(matmul(term, b), 1.0 / k);
        result = add(result, term);
    }
    for (int q = 0; q < squarings; ++q) result = matmul(result, result);
    return result;
}

}  // namespace fgancd
