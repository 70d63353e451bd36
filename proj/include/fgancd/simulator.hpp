#pragma once

#include "fgancd/admg.hpp"
#include "fgancd/matrix.hpp"

#include <cstdint>
#include <string>

namespace fgancd {

// A concrete linear SEM instance: coefficient matrix on the directed support
// and a symmetric positive-definite noise covariance whose off-diagonal
// support is the bidirected structure.
struct WeightedSem {
    Matrix coefs;
    Matrix noise_cov;
};

struct Dataset {
    int n = 0;
    int d = 0;
    Matrix values;  // n x d, one row per sample
};

// Draw weights on the support of `g` from the shared prior. The whole noise
// covariance is resampled until its smallest eigenvalue exceeds 0.05; after
// 1000 rejections PdRejectionLimit is thrown (signals an over-dense
// bidirected structure).
WeightedSem sample_ground_truth(const Admg& g, std::uint64_t seed);

// Row convention x = e (I - B)^{-1} with e = z L^T, z ~ N(0, I),
// L = chol(noise_cov). Deterministic given the seed.
Dataset simulate(const WeightedSem& sem, int n, std::uint64_t seed);

// CSV with header x0,...,x{d-1}; values written with 17 significant digits
// so a round trip is exact.
std::string write_csv(const Dataset& ds);
Dataset read_csv(const std::string& text);

// Implied population covariance (I-B)^{-T} Sigma (I-B)^{-1}.
Matrix implied_covariance(const WeightedSem& sem);

}  // namespace fgancd
