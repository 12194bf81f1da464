#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "bfreg/error.hpp"

namespace bfreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Multivariate Student t, t(x; location, scale, df).
///
/// `scale` is the scale matrix, not the covariance: for df > 2 the
/// covariance is df / (df - 2) * scale, and d = 1, df = 1, scale = 1 is the
/// standard Cauchy. Every Student t in the library uses this convention.
struct MultivariateT {
    Vector location;
    Matrix scale;
    double df = 1.0;

    [[nodiscard]] Eigen::Index dim() const { return location.size(); }
};

/// Probability of a linear region. `exact` marks the analytic (CDF) path,
/// which always carries std_error = 0.
struct ProbEstimate {
    double value = 0.0;
    double std_error = 0.0;
    bool exact = false;
    std::int64_t n_draws = 0;
};

enum class Execution { serial, parallel };

// Moore-Penrose inverse via SVD, singular values below max(m,n)*eps*sigma_max dropped.
[[nodiscard]] Matrix pseudo_inverse(const Matrix& m);

// Numerical rank with the same cutoff as pseudo_inverse.
[[nodiscard]] Eigen::Index numerical_rank(const Matrix& m);

// Orthonormal basis of null(m), returned as rows ((cols - rank) x cols).
[[nodiscard]] Matrix null_space_rows(const Matrix& m);

[[nodiscard]] double mvt_logpdf(const Vector& x, const MultivariateT& dist);

// CDF of the standard univariate Student t. Saturates at 0/1 for infinite x.
[[nodiscard]] double t_cdf(double x, double df);

/// Draws from `dist`, one per row (n_draws x d).
///
/// Each draw is location + L z / sqrt(w / df) with L L' = scale, z standard
/// normal and w chi-square(df). Draws are generated in fixed-size chunks whose
/// RNG streams depend only on (seed, chunk index), so the result does not
/// depend on thread count.
[[nodiscard]] Matrix mvt_sample(const MultivariateT& dist, std::int64_t n_draws,
                                std::uint64_t seed,
                                Execution exec = Execution::parallel);

/// Pr(R x > r) for x ~ dist (all rows strictly).
///
/// One row: exact, through t_cdf on the projected scalar. Several rows with
/// R of full row rank: Monte Carlo on the q-dimensional projection R x.
/// Otherwise Monte Carlo on x itself.
[[nodiscard]] ProbEstimate mvt_constraint_prob(const MultivariateT& dist,
                                               const Matrix& R, const Vector& r,
                                               std::int64_t n_draws,
                                               std::uint64_t seed,
                                               Execution exec = Execution::parallel);

// Lower Cholesky factor of a positive definite scale; throws DecompositionError.
[[nodiscard]] Matrix cholesky_lower(const Matrix& scale);

// Deterministic 64-bit mixing of a seed with stream identifiers (splitmix64).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace bfreg
