#pragma once

#include "cvfade/gaussian.hpp"

#include <random>

namespace test_helpers {

// Random physical single-mode Gaussian state: rotated squeezed thermal with a
// random displacement. nu >= 1/2 guaranteed.
inline cvfade::GaussianState random_single_mode(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double nu = 0.5 + 1.5 * uni(rng);
    const double r = 0.8 * (uni(rng) - 0.5);
    const double theta = 2.0 * M_PI * uni(rng);
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Eigen::Matrix2d diag = Eigen::Matrix2d::Zero();
    diag(0, 0) = nu * std::exp(2.0 * r);
    diag(1, 1) = nu * std::exp(-2.0 * r);
    Eigen::Matrix2d cov = rot * diag * rot.transpose();
    cov = 0.5 * (cov + cov.transpose());
    Eigen::Vector2d mean;
    mean << 4.0 * (uni(rng) - 0.5), 4.0 * (uni(rng) - 0.5);
    return cvfade::GaussianState(mean, cov);
}

inline cvfade::GaussianState random_multi_mode(std::mt19937_64& rng, int modes) {
    using namespace cvfade;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GaussianState state = random_single_mode(rng);
    for (int m = 1; m < modes; ++m) state = tensor(state, random_single_mode(rng));
    for (int m = 0; m + 1 < modes; ++m)
        state = apply_beamsplitter(state, {uni(rng), m, m + 1});
    return state;
}

}  // namespace test_helpers
