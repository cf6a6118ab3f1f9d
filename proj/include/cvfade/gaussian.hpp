// Gaussian-state phase-space algebra: states, channel maps, fidelity,
// symplectic spectra and the thermal entropy function.
//
// Conventions: quadrature ordering (x1, p1, x2, p2, ...), natural units with
// vacuum variance 1/2. All operations are pure; states are immutable values.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvfade {

inline constexpr double kVacuumVariance = 0.5;
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPhysicalitySlack = 1e-9;

struct LossyChannelParams {
    double transmittivity = 1.0;   // T in [0, 1]
    double thermal_occupation = 0.0;  // n_th >= 0
};

struct AmplifierParams {
    double gain = 1.0;  // G >= 1
};

struct BeamSplitterParams {
    double transmittivity = 0.5;  // eta in [0, 1]
    int mode_a = 0;
    int mode_b = 1;
};

class GaussianState {
  public:
    GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
        : mean_(std::move(mean)), cov_(std::move(cov)) {
        const auto dim = mean_.size();
        if (dim < 2 || dim % 2 != 0)
            throw std::invalid_argument("GaussianState: mean length must be a positive even number");
        if (cov_.rows() != dim || cov_.cols() != dim)
            throw std::invalid_argument("GaussianState: cov must be " + std::to_string(dim) + "x" +
                                        std::to_string(dim));
        const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
        if (!(asym <= kSymmetryTol))
            throw std::invalid_argument("GaussianState: cov not symmetric (|V - V^T| = " +
                                        std::to_string(asym) + ")");
        cov_ = ((cov_ + cov_.transpose()) / 2.0).eval();
    }

    static GaussianState vacuum(int num_modes) {
        if (num_modes < 1) throw std::invalid_argument("vacuum: num_modes must be >= 1");
        return GaussianState(Eigen::VectorXd::Zero(2 * num_modes),
                             kVacuumVariance *
                                 Eigen::MatrixXd::Identity(2 * num_modes, 2 * num_modes));
    }

    static GaussianState coherent(double x, double p) {
        Eigen::VectorXd d(2);
        d << x, p;
        return GaussianState(d, kVacuumVariance * Eigen::MatrixXd::Identity(2, 2));
    }

    static GaussianState thermal(double n_th) {
        if (n_th < 0.0) throw std::invalid_argument("thermal: n_th must be >= 0");
        return GaussianState(Eigen::VectorXd::Zero(2),
                             (n_th + kVacuumVariance) * Eigen::MatrixXd::Identity(2, 2));
    }

    int num_modes() const { return static_cast<int>(mean_.size()) / 2; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

  private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

namespace detail {

inline void check_mode(const GaussianState& s, int mode, const char* op) {
    if (mode < 0 || mode >= s.num_modes())
        throw std::invalid_argument(std::string(op) + ": mode index out of range");
}

// Symplectic form Omega = diag of [[0, 1], [-1, 0]] blocks.
inline Eigen::MatrixXd symplectic_form(Eigen::Index dim) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index k = 0; k + 1 < dim; k += 2) {
        omega(k, k + 1) = 1.0;
        omega(k + 1, k) = -1.0;
    }
    return omega;
}

}  // namespace detail

// Block-diagonal composition: modes of `b` are appended after modes of `a`.
inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
    const auto na = a.mean().size(), nb = b.mean().size();
    Eigen::VectorXd mean(na + nb);
    mean << a.mean(), b.mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
    cov.topLeftCorner(na, na) = a.cov();
    cov.bottomRightCorner(nb, nb) = b.cov();
    return GaussianState(std::move(mean), std::move(cov));
}

// Lossy thermal channel on one mode: V -> T V + (1-T)(n_th + 1/2) I on the
// mode block, means and cross-covariances scale by sqrt(T).
inline GaussianState apply_loss(const GaussianState& s, int mode, const LossyChannelParams& ch) {
    detail::check_mode(s, mode, "apply_loss");
    if (!(ch.transmittivity >= 0.0 && ch.transmittivity <= 1.0))
        throw std::invalid_argument("apply_loss: transmittivity must lie in [0, 1]");
    if (!(ch.thermal_occupation >= 0.0))
        throw std::invalid_argument("apply_loss: thermal occupation must be >= 0");

    const double rt = std::sqrt(ch.transmittivity);
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(s.mean().size());
    scale(2 * mode) = rt;
    scale(2 * mode + 1) = rt;

    Eigen::VectorXd mean = (scale.array() * s.mean().array()).matrix();
    Eigen::MatrixXd cov = scale.asDiagonal() * s.cov() * scale.asDiagonal();
    const double added = (1.0 - ch.transmittivity) * (ch.thermal_occupation + kVacuumVariance);
    cov(2 * mode, 2 * mode) += added;
    cov(2 * mode + 1, 2 * mode + 1) += added;
    return GaussianState(std::move(mean), std::move(cov));
}

// Phase-insensitive amplifier: V -> G V + (G-1)/2 I on the mode block (the
// quantum-limited added noise in vacuum-1/2 units), means scale by sqrt(G).
inline GaussianState apply_amplifier(const GaussianState& s, int mode, const AmplifierParams& amp) {
    detail::check_mode(s, mode, "apply_amplifier");
    if (!(amp.gain >= 1.0)) throw std::invalid_argument("apply_amplifier: gain must be >= 1");

    const double rg = std::sqrt(amp.gain);
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(s.mean().size());
    scale(2 * mode) = rg;
    scale(2 * mode + 1) = rg;

    Eigen::VectorXd mean = (scale.array() * s.mean().array()).matrix();
    Eigen::MatrixXd cov = scale.asDiagonal() * s.cov() * scale.asDiagonal();
    const double added = (amp.gain - 1.0) / 2.0;
    cov(2 * mode, 2 * mode) += added;
    cov(2 * mode + 1, 2 * mode + 1) += added;
    return GaussianState(std::move(mean), std::move(cov));
}

// Two-mode beam splitter B(eta): port a receives sqrt(eta) a - sqrt(1-eta) b,
// port b receives sqrt(1-eta) a + sqrt(eta) b.
inline GaussianState apply_beamsplitter(const GaussianState& s, const BeamSplitterParams& bs) {
    detail::check_mode(s, bs.mode_a, "apply_beamsplitter");
    detail::check_mode(s, bs.mode_b, "apply_beamsplitter");
    if (bs.mode_a == bs.mode_b)
        throw std::invalid_argument("apply_beamsplitter: mode indices must differ");
    if (!(bs.transmittivity >= 0.0 && bs.transmittivity <= 1.0))
        throw std::invalid_argument("apply_beamsplitter: transmittivity must lie in [0, 1]");

    const double c = std::sqrt(bs.transmittivity);
    const double t = std::sqrt(1.0 - bs.transmittivity);
    const auto dim = s.mean().size();
    Eigen::MatrixXd sym = Eigen::MatrixXd::Identity(dim, dim);
    const int a = 2 * bs.mode_a, b = 2 * bs.mode_b;
    for (int k = 0; k < 2; ++k) {
        sym(a + k, a + k) = c;
        sym(a + k, b + k) = -t;
        sym(b + k, a + k) = t;
        sym(b + k, b + k) = c;
    }
    Eigen::VectorXd mean = sym * s.mean();
    Eigen::MatrixXd cov = sym * s.cov() * sym.transpose();
    return GaussianState(std::move(mean), std::move(cov));
}

// Reduced state after dropping one mode (partial trace).
inline GaussianState discard_mode(const GaussianState& s, int mode) {
    detail::check_mode(s, mode, "discard_mode");
    if (s.num_modes() < 2)
        throw std::invalid_argument("discard_mode: cannot discard the last remaining mode");

    const auto dim = s.mean().size();
    std::vector<Eigen::Index> keep;
    keep.reserve(dim - 2);
    for (Eigen::Index k = 0; k < dim; ++k)
        if (k != 2 * mode && k != 2 * mode + 1) keep.push_back(k);

    Eigen::VectorXd mean(keep.size());
    Eigen::MatrixXd cov(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        mean(i) = s.mean()(keep[i]);
        for (std::size_t j = 0; j < keep.size(); ++j) cov(i, j) = s.cov()(keep[i], keep[j]);
    }
    return GaussianState(std::move(mean), std::move(cov));
}

// Classical postprocessing rescale d -> diag(factors) d; covariance untouched.
inline GaussianState rescale_mean(const GaussianState& s, std::span<const double> factors) {
    if (static_cast<int>(factors.size()) != s.num_modes())
        throw std::invalid_argument("rescale_mean: need one factor per mode");
    for (double f : factors)
        if (!(f > 0.0)) throw std::invalid_argument("rescale_mean: factors must be positive");

    Eigen::VectorXd mean = s.mean();
    for (int m = 0; m < s.num_modes(); ++m) {
        mean(2 * m) *= factors[m];
        mean(2 * m + 1) *= factors[m];
    }
    return GaussianState(std::move(mean), s.cov());
}

// Single-mode Gaussian overlap fidelity
//   F = exp(-1/2 (d1-d2)^T (V1+V2)^{-1} (d1-d2)) / sqrt(det(V1+V2)).
// Exact Uhlmann fidelity whenever one of the states is pure.
inline double fidelity(const GaussianState& a, const GaussianState& b) {
    if (a.num_modes() != b.num_modes())
        throw std::invalid_argument("fidelity: states must have equal mode counts");
    if (a.num_modes() != 1)
        throw std::invalid_argument("fidelity: only single-mode comparisons are supported");

    const Eigen::Matrix2d sum = a.cov() + b.cov();
    const double det = sum(0, 0) * sum(1, 1) - sum(0, 1) * sum(1, 0);
    if (!(det > 1e-300))
        throw std::invalid_argument("fidelity: V1 + V2 is singular (unphysical input)");
    const Eigen::Vector2d delta = a.mean() - b.mean();
    const double quad =
        (delta(0) * (sum(1, 1) * delta(0) - sum(0, 1) * delta(1)) +
         delta(1) * (sum(0, 0) * delta(1) - sum(1, 0) * delta(0))) /
        det;
    return std::exp(-0.5 * quad) / std::sqrt(det);
}

// Symplectic eigenvalues: absolute values of the (paired) eigenvalues of
// i Omega V, sorted descending, one entry per mode.
inline std::vector<double> symplectic_spectrum(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols() || cov.rows() % 2 != 0 || cov.rows() == 0)
        throw std::invalid_argument("symplectic_spectrum: need a square matrix of even dimension");
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= kSymmetryTol))
        throw std::invalid_argument("symplectic_spectrum: matrix not symmetric");

    const Eigen::MatrixXd m = detail::symplectic_form(cov.rows()) * cov;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
    std::vector<double> mags(cov.rows());
    for (Eigen::Index k = 0; k < cov.rows(); ++k) mags[k] = std::abs(solver.eigenvalues()(k));
    std::sort(mags.begin(), mags.end(), std::greater<>());

    std::vector<double> nu(cov.rows() / 2);
    for (std::size_t k = 0; k < nu.size(); ++k) nu[k] = 0.5 * (mags[2 * k] + mags[2 * k + 1]);
    return nu;
}

inline double min_symplectic_eigenvalue(const GaussianState& s) {
    return symplectic_spectrum(s.cov()).back();
}

inline void assert_physical(const GaussianState& s, const char* where) {
    if (min_symplectic_eigenvalue(s) < kVacuumVariance - kPhysicalitySlack)
        throw std::runtime_error(std::string(where) +
                                 ": state violates the uncertainty bound (nu_min = " +
                                 std::to_string(min_symplectic_eigenvalue(s)) + ")");
}

// Thermal entropy function S(x) = (x+1) log2(x+1) - x log2(x), S(0) = 0.
inline double entropy_g(double x) {
    if (x < 0.0) throw std::invalid_argument("entropy_g: argument must be >= 0");
    if (x == 0.0) return 0.0;
    return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

}  // namespace cvfade
