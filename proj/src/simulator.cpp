#include "fgancd/simulator.hpp"

#include "fgancd/errors.hpp"
#include "fgancd/rng.hpp"
#include "fgancd/weight_prior.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fgancd {

namespace {

// Smallest eigenvalue above the floor iff sigma - floor*I is positive
// definite, which the Cholesky factorization decides exactly.
bool min_eigenvalue_above(const Matrix& sigma, double floor_value) {
    Matrix shifted = sigma;
    for (int i = 0; i < sigma.rows(); ++i) shifted(i, i) -= floor_value;
    try {
        cholesky_lower(shifted);
        return true;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
}

}  // namespace

WeightedSem sample_ground_truth(const Admg& g, std::uint64_t seed) {
    validate(g);
    if (!is_acyclic(g)) {
        throw CyclicDirectedPart("sample_ground_truth: directed part has a cycle");
    }
    Rng rng(seed);
    WeightedSem sem;
    sem.coefs = Matrix(g.d, g.d, 0.0);
    for (int i = 0; i < g.d; ++i) {
        for (int j = 0; j < g.d; ++j) {
            if (g.has_dir(i, j)) sem.coefs(i, j) = WeightPrior::directed_weight(rng);
        }
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Matrix sigma(g.d, g.d, 0.0);
        for (int i = 0; i < g.d; ++i) sigma(i, i) = WeightPrior::noise_variance(rng);
        for (int i = 0; i < g.d; ++i) {
            for (int j = i + 1; j < g.d; ++j) {
                if (g.has_bi(i, j)) {
                    const double v = WeightPrior::noise_covariance(rng);
                    sigma(i, j) = v;
                    sigma(j, i) = v;
                }
            }
        }
        if (min_eigenvalue_above(sigma, 0.05)) {
            sem.noise_cov = std::move(sigma);
            return sem;
        }
    }
    throw PdRejectionLimit(
        "sample_ground_truth: no positive-definite noise covariance in 1000 draws");
}

Dataset simulate(const WeightedSem& sem, int n, std::uint64_t seed) {
    const int d = sem.coefs.rows();
    if (sem.coefs.cols() != d || sem.noise_cov.rows() != d || sem.noise_cov.cols() != d) {
        throw ShapeMismatch("simulate: coefficient/noise shapes disagree");
    }
    if (n < 1) throw ValidationError("simulate: sample count must be >= 1");
    const Matrix chol_t = transpose(cholesky_lower(sem.noise_cov));
    const Matrix mix = invert(sub(Matrix::identity(d), sem.coefs));

    Rng rng(seed);
    Matrix z(n, d);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) z(r, c) = rng.normal();
    }
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.values = matmul(matmul(z, chol_t), mix);
    if (!all_finite(ds.values)) throw NonFiniteValue("simulate: non-finite sample");
    return ds;
}

Matrix implied_covariance(const WeightedSem& sem) {
    const Matrix mix = invert(sub(Matrix::identity(sem.coefs.rows()), sem.coefs));
    return matmul(matmul(transpose(mix), sem.noise_cov), mix);
}

std::string write_csv(const Dataset& ds) {
    std::ostringstream out;
    for (int c = 0; c < ds.d; ++c) {
        if (c) out << ",";
        out << "x" << c;
    }
    out << "\n";
    char buf[64];
    for (int r = 0; r < ds.n; ++r) {
        for (int c = 0; c < ds.d; ++c) {
            if (c) out << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", ds.values(r, c));
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

Dataset read_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw SyntaxError("row 1: missing header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) header.push_back(field);
    }
    const int d = static_cast<int>(header.size());
    if (d == 0) throw SyntaxError("row 1: empty header");
    for (int c = 0; c < d; ++c) {
        if (header[c] != "x" + std::to_string(c)) {
            throw SyntaxError("row 1 column " + std::to_string(c + 1) +
                              ": expected header x" + std::to_string(c));
        }
    }

    std::vector<double> values;
    int rows = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int fields = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string_view field(line.data() + pos,
                                         (comma == std::string::npos ? line.size() : comma) - pos);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
                throw SyntaxError("row " + std::to_string(lineno) + " column " +
                                  std::to_string(fields + 1) + ": bad number `" +
                                  std::string(field) + "`");
            }
            values.push_back(v);
            ++fields;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (fields != d) {
            throw RaggedRow("row " + std::to_string(lineno) + ": " + std::to_string(fields) +
                            " fields under a " + std::to_string(d) + "-column header");
        }
        ++rows;
    }
    if (rows == 0) throw SyntaxError("row 2: no data rows");

    Dataset ds;
    ds.n = rows;
    ds.d = d;
    ds.values = Matrix(rows, d);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < d; ++c) ds.values(r, c) = values[static_cast<std::size_t>(r) * d + c];
    }
    if (!all_finite(ds.values)) throw NonFiniteValue("read_csv: non-finite value");
    return ds;
}

}  // namespace fgancd
