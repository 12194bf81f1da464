#include "bfreg/constraints.hpp"

#include <cmath>

namespace bfreg {

namespace {

void check_fraction(const RegressionFit& fit, double b)
{
    const double dof = static_cast<double>(fit.n) * b - static_cast<double>(fit.k);
    if (!(b > 0.0 && b <= 1.0) || !(dof > 1e-12))
        throw InvalidInput("fraction b must satisfy k/n < b <= 1 (got b = " + std::to_string(b) + ")");
}

double fraction_dof(const RegressionFit& fit, double b)
{
    return static_cast<double>(fit.n) * b - static_cast<double>(fit.k);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

} // namespace

double minimal_fraction(const RegressionFit& fit)
{
    return static_cast<double>(fit.k + 1) / static_cast<double>(fit.n);
}

TransformedSystem build_transform(const ConstraintSystem& cs, const RegressionFit& fit)
{
    const Eigen::Index k = fit.k;
    if (cs.k() != k) throw InvalidInput(cs.label + ": constraint width does not match the model");

    TransformedSystem ts;
    ts.qE = cs.qE();
    if (ts.qE == k) {
        const Vector beta = pseudo_inverse(cs.RE) * cs.rE;
        if ((cs.RE * beta - cs.rE).norm() > 1e-9 * std::max(1.0, cs.rE.norm()))
            throw InfeasibleHypothesis(cs.label + ": equality constraints have no solution");
    }

    ts.D = null_space_rows(cs.RE);
    ts.T.resize(k, k);
    ts.T << cs.RE, ts.D;

    Eigen::FullPivLU<Matrix> lu(ts.T);
    if (!lu.isInvertible()) throw NumericError(cs.label + ": transformation T is singular");
    const Matrix T_inv = lu.inverse();
    ts.T_inv_E = T_inv.leftCols(ts.qE);
    ts.T_inv_I = T_inv.rightCols(k - ts.qE);

    const Matrix Rt_all = cs.RI * ts.T_inv_I;
    const Vector rt_all = cs.rI - cs.RI * (ts.T_inv_E * cs.rE);

    ts.xi_hat = ts.T * fit.beta_hat;

    // Rows that vanish after substituting the equalities are either always
    // true (dropped here) or infeasible (rejected by validate).
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < Rt_all.rows(); ++i) {
        const double scale = std::max(1.0, cs.RI.row(i).norm());
        if (Rt_all.row(i).norm() > 1e-10 * scale) {
            active.push_back(i);
        } else if (rt_all(i) >= -1e-12 * scale) {
            throw InfeasibleHypothesis(cs.label + ": inequality row " + std::to_string(i + 1) +
                                       " contradicts the equalities");
        } else {
            ts.warnings.push_back(cs.label + ": inequality row " + std::to_string(i + 1) +
                                  " is implied by the equalities and was dropped");
        }
    }
    // Rows pointing the same way in xi_I space collapse to the tightest one.
    std::vector<Eigen::Index> kept;
    for (const Eigen::Index i : active) {
        const Vector dir = Rt_all.row(i).transpose() / Rt_all.row(i).norm();
        const double thr = rt_all(i) / Rt_all.row(i).norm();
        bool merged = false;
        for (Eigen::Index& j : kept) {
            const double nj = Rt_all.row(j).norm();
            if ((Rt_all.row(j).transpose() / nj - dir).norm() < 1e-10) {
                if (thr > rt_all(j) / nj) j = i;
                merged = true;
                break;
            }
        }
        if (!merged) kept.push_back(i);
    }
    if (kept.size() < active.size())
        ts.warnings.push_back(cs.label + ": " + std::to_string(active.size() - kept.size()) +
                              " inequality row(s) coincide after substituting the equalities and were merged");
    active = kept;

    ts.Rtilde_I.resize(static_cast<Eigen::Index>(active.size()), k - ts.qE);
    ts.rtilde_I.resize(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
        ts.Rtilde_I.row(static_cast<Eigen::Index>(a)) = Rt_all.row(active[a]);
        ts.rtilde_I(static_cast<Eigen::Index>(a)) = rt_all(active[a]);
    }
    ts.r_star = ts.Rtilde_I * ts.xi_hat_I();

    Matrix R(cs.qE() + cs.qI(), k);
    R << cs.RE, cs.RI;
    Vector r(cs.qE() + cs.qI());
    r << cs.rE, cs.rI;
    const Vector center = pseudo_inverse(R) * r;
    if ((R * center - r).norm() > 1e-9 * std::max(1.0, r.norm()))
        ts.warnings.push_back(cs.label + ": stacked constraints are inconsistent as equalities; "
                                         "prior centred at the least-squares solution");
    ts.mu0 = ts.T * center;
    return ts;
}

MultivariateT fractional_posterior_beta(const RegressionFit& fit, double b)
{
    check_fraction(fit, b);
    const double dof = fraction_dof(fit, b);
    return {fit.beta_hat, symmetrize(fit.s2 / dof * fit.xtx_inv), dof};
}

MultivariateT joint_xi(const RegressionFit& fit, const TransformedSystem& ts, double b)
{
    const MultivariateT beta = fractional_posterior_beta(fit, b);
    return {ts.T * beta.location, symmetrize(ts.T * beta.scale * ts.T.transpose()), beta.df};
}

MultivariateT marginal_xiE(const RegressionFit& fit, const TransformedSystem& ts, double b)
{
    if (ts.qE < 1) throw InvalidInput("marginal_xiE: hypothesis has no equality constraints");
    check_fraction(fit, b);
    const double dof = fraction_dof(fit, b);
    const Matrix RE = ts.T.topRows(ts.qE);
    return {RE * fit.beta_hat, symmetrize(fit.s2 / dof * RE * fit.xtx_inv * RE.transpose()), dof};
}

MultivariateT conditional_xiI(const RegressionFit& fit, const TransformedSystem& ts, double b,
                              const Vector& xi_E_value, ConditionalDf df_mode)
{
    if (ts.qE < 1) throw InvalidInput("conditional_xiI: hypothesis has no equality constraints");
    if (xi_E_value.size() != ts.qE) throw InvalidInput("conditional_xiI: xi_E has wrong dimension");
    check_fraction(fit, b);

    const double dof = fraction_dof(fit, b);
    const Matrix& V = fit.xtx_inv;
    const Matrix RE = ts.T.topRows(ts.qE);
    const Matrix& D = ts.D;

    const Eigen::LLT<Matrix> M(RE * V * RE.transpose());
    if (M.info() != Eigen::Success) throw DecompositionError("conditional_xiI: RE V RE' is not positive definite");

    const Matrix DVRE = D * V * RE.transpose();
    const Vector delta = xi_E_value - RE * fit.beta_hat;
    const double quad = delta.dot(M.solve(delta));

    MultivariateT out;
    out.location = D * fit.beta_hat + DVRE * M.solve(delta);
    const Matrix schur = D * V * D.transpose() - DVRE * M.solve(DVRE.transpose());
    const double qE = static_cast<double>(ts.qE);
    const double inflation = (dof + quad * dof / fit.s2) / (dof + qE);
    out.scale = symmetrize(inflation * fit.s2 / dof * schur);
    out.df = df_mode == ConditionalDf::standard ? dof + qE : dof;
    return out;
}

Matrix projector_null_rows(const Matrix& RE)
{
    const Eigen::Index k = RE.cols();
    if (RE.rows() == 0) return Matrix::Identity(k, k);
    const Matrix P = Matrix::Identity(k, k) -
                     RE.transpose() * (RE * RE.transpose()).ldlt().solve(RE);
    Matrix rows(0, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (P.row(i).norm() < 1e-12) continue;
        Matrix candidate(rows.rows() + 1, k);
        candidate << rows, P.row(i);
        if (numerical_rank(candidate) > rows.rows()) rows = candidate;
    }
    return rows;
}

} // namespace bfreg
