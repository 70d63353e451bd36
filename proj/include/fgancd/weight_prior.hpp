#pragma once

#include "fgancd/rng.hpp"

namespace fgancd {

// Weight laws shared by the synthetic ground truth and the generator's
// prior sampling: directed weights U([-2,-0.5] u [0.5,2]), noise variances
// U([0.7,1.2]), noise covariances U([-0.7,-0.4] u [0.4,0.7]).
struct WeightPrior {
    static double directed_weight(Rng& rng) { return rng.signed_uniform(0.5, 2.0); }
    static double noise_variance(Rng& rng) { return rng.uniform(0.7, 1.2); }
    static double noise_covariance(Rng& rng) { return rng.signed_uniform(0.4, 0.7); }
};

}  // namespace fgancd
