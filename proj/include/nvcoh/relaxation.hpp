#pragma once

// Population dynamics of the NV spin-1 ground state under single-quantum (Omega)
// and double-quantum (gamma) relaxation.  Level ordering throughout the library
// is (|0>, |-1>, |+1>).

#include "nvcoh/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace nvcoh {

struct PopulationVector {
    double p0 = 1.0;
    double pMinus = 0.0;
    double pPlus = 0.0;

    [[nodiscard]] double total() const { return p0 + pMinus + pPlus; }
    [[nodiscard]] Eigen::Vector3d vec() const { return {p0, pMinus, pPlus}; }
    static PopulationVector from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

/// Relaxation and dephasing rates at one temperature, all in s^-1.
struct RateParams {
    double omega = 0.0;         ///< SQ rate, |0> <-> |+-1>
    double gammaDQ = 0.0;       ///< DQ rate, |-1> <-> |+1>
    double gammaDephase = 0.0;  ///< pure dephasing Gamma_d

    [[nodiscard]] double inv_t1() const { return 3.0 * omega; }
    /// Lifetime broadening of a |0> <-> |+-1> coherence.
    [[nodiscard]] double lifetime_rate() const { return (3.0 * omega + gammaDQ) / 2.0; }
    [[nodiscard]] double inv_t2() const { return gammaDephase + lifetime_rate(); }

    void validate() const
    {
        detail::require_domain(omega >= 0.0 && gammaDQ >= 0.0 && gammaDephase >= 0.0,
                               "RateParams: rates must be non-negative");
        detail::require_domain(std::isfinite(omega) && std::isfinite(gammaDQ) && std::isfinite(gammaDephase),
                               "RateParams: rates must be finite");
    }
};

/// Generator L of dp/dt = L p.  Symmetric, columns sum to zero.
inline Eigen::Matrix3d rate_matrix(const RateParams& rates)
{
    rates.validate();
    const double w = rates.omega;
    const double g = rates.gammaDQ;
    Eigen::Matrix3d L;
    // clang-format off
    L << -2.0 * w,         w,         w,
                w, -(w + g),         g,
                w,         g,  -(w + g);
    // clang-format on
    return L;
}

/// exp(L tau) via the eigendecomposition of the symmetric generator.
inline Eigen::Matrix3d propagator(const RateParams& rates, double tau)
{
    detail::require_domain(tau >= 0.0 && std::isfinite(tau), "propagator: tau must be finite and >= 0");
    const Eigen::Matrix3d L = rate_matrix(rates);
    if (tau == 0.0) {
        return Eigen::Matrix3d::Identity();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(L);
    const Eigen::Vector3d decay = (eig.eigenvalues() * tau).array().exp();
    return eig.eigenvectors() * decay.asDiagonal() * eig.eigenvectors().transpose();
}

inline PopulationVector evolve_populations(const PopulationVector& initial, const RateParams& rates, double tau)
{
    return PopulationVector::from(propagator(rates, tau) * initial.vec());
}

/// Eigenvalues of the generator from the numerical eigensolver, ascending.
inline std::array<double, 3> rate_matrix_eigenvalues(const RateParams& rates)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(rate_matrix(rates), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    return {ev(0), ev(1), ev(2)};
}

/// Normalized |0>-population decay after initialization into |0>: exp(-3 Omega tau).
inline double sq_relax_signal(double omega, double tau)
{
    detail::require_domain(omega >= 0.0 && tau >= 0.0, "sq_relax_signal: omega and tau must be >= 0");
    return std::exp(-3.0 * omega * tau);
}

/// Normalized (p-1 - p+1) decay after preparing |-1>: exp(-(Omega + 2 gamma) tau).
inline double dq_relax_signal(double omega, double gammaDQ, double tau)
{
    detail::require_domain(omega >= 0.0 && gammaDQ >= 0.0 && tau >= 0.0,
                           "dq_relax_signal: rates and tau must be >= 0");
    return std::exp(-(omega + 2.0 * gammaDQ) * tau);
}

}  // namespace nvcoh
