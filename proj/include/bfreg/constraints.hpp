#pragma once

#include <string>
#include <vector>

#include "bfreg/hyparse.hpp"
#include "bfreg/model.hpp"
#include "bfreg/numkernel.hpp"

namespace bfreg {

/// A hypothesis in xi = T beta coordinates, T = [RE; D].
///
/// D is an orthonormal basis of null(RE) (identity when there are no
/// equalities), so T^-1 = [RE^+ , D']. Under the hypothesis xi_E = rE and
/// Rtilde_I xi_I > rtilde_I.
struct TransformedSystem {
    Matrix T;
    Matrix D;
    Matrix T_inv_E;        // k x qE, generalized inverse of RE
    Matrix T_inv_I;        // k x (k - qE), generalized inverse of D
    Matrix Rtilde_I;       // RI * T_inv_I, rows implied by the equalities removed
    Vector rtilde_I;       // rI - RI * T_inv_E * rE
    Vector xi_hat;         // T * beta_hat
    Vector r_star;         // Rtilde_I * xi_hat_I
    Vector mu0;            // T * R^+ r over the stacked system
    Eigen::Index qE = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] Eigen::Index k() const { return T.rows(); }
    [[nodiscard]] Eigen::Index qI() const { return Rtilde_I.rows(); }
    [[nodiscard]] Vector xi_hat_E() const { return xi_hat.head(qE); }
    [[nodiscard]] Vector xi_hat_I() const { return xi_hat.tail(k() - qE); }
    [[nodiscard]] Vector mu0_I() const { return mu0.tail(k() - qE); }
};

[[nodiscard]] TransformedSystem build_transform(const ConstraintSystem& cs, const RegressionFit& fit);

// b = (k + 1) / n, the smallest fraction giving a proper default prior.
[[nodiscard]] double minimal_fraction(const RegressionFit& fit);

// t(beta_hat, s2 / (nb - k) * (X'X)^-1, nb - k).
[[nodiscard]] MultivariateT fractional_posterior_beta(const RegressionFit& fit, double b);

// Marginal of xi_E = RE beta under the fraction-b posterior.
[[nodiscard]] MultivariateT marginal_xiE(const RegressionFit& fit, const TransformedSystem& ts, double b);

enum class ConditionalDf {
    standard,     // (nb - k) + qE
    as_printed,   // nb - k
};

/// Conditional of xi_I given xi_E = xi_E_value under the fraction-b posterior.
///
/// With V = (X'X)^-1, M = RE V RE' and delta = xi_E_value - xi_hat_E:
///   location = D beta_hat + D V RE' M^-1 delta
///   scale    = (nb - k + delta' M^-1 delta * (nb - k) / s2) / (nb - k + qE)
///              * s2 / (nb - k) * (D V D' - D V RE' M^-1 RE V D')
[[nodiscard]] MultivariateT conditional_xiI(const RegressionFit& fit, const TransformedSystem& ts, double b,
                                            const Vector& xi_E_value,
                                            ConditionalDf df_mode = ConditionalDf::standard);

// Full xi distribution: pushforward of fractional_posterior_beta through T.
[[nodiscard]] MultivariateT joint_xi(const RegressionFit& fit, const TransformedSystem& ts, double b);

// Independent rows of I - RE'(RE RE')^-1 RE, the textbook construction of D.
[[nodiscard]] Matrix projector_null_rows(const Matrix& RE);

} // namespace bfreg
