#include <doctest.h>

#include <random>

#include "bfreg/constraints.hpp"
#include "support/synthetic.hpp"

using namespace bfreg;

namespace {

ConstraintSystem one(const std::string& text, const std::vector<std::string>& names)
{
    return parse_hypotheses(text, names).hypotheses.at(0);
}

RegressionFit fit4(std::uint64_t seed)
{
    Vector beta(4);
    beta << 1.0, 0.5, -0.25, 0.0;
    return testing::random_fit(beta, 50, seed, 0.4);
}

Vector normal_vector(Eigen::Index n, std::mt19937_64& rng) { return testing::standard_normal(n, 1, rng).col(0); }

} // namespace

TEST_CASE("build_transform: no equalities")
{
    Vector beta(1);
    beta << 0.4;
    const auto fit = testing::orthogonal_fit(beta, 20, 1);
    const auto ts = build_transform(one("x1 > 0", fit.coef_names), fit);
    CHECK(ts.T == Matrix::Identity(2, 2));
    CHECK(ts.D == Matrix::Identity(2, 2));
    CHECK(ts.mu0.norm() < 1e-15);
    CHECK(ts.Rtilde_I == one("x1 > 0", fit.coef_names).RI);
}

TEST_CASE("build_transform: null-space basis for an equality chain")
{
    const auto fit = fit4(3);
    const auto cs = one("x1 = x2 = x3 > 0", fit.coef_names);
    const auto ts = build_transform(cs, fit);
    CHECK(ts.D.rows() == 2);
    CHECK((cs.RE * ts.D.transpose()).norm() < 1e-12);
    CHECK((cs.RE * ts.T_inv_E - Matrix::Identity(2, 2)).norm() < 1e-9);
    CHECK((ts.D * ts.T_inv_I - Matrix::Identity(2, 2)).norm() < 1e-9);
    CHECK((ts.T * ts.D.transpose()).bottomRows(2).isApprox(Matrix::Identity(2, 2), 1e-12));

    // The projector construction spans the same row space.
    const Matrix P = projector_null_rows(cs.RE);
    CHECK(P.rows() == 2);
    CHECK((P - P * ts.D.transpose() * ts.D).norm() < 1e-10);
}

TEST_CASE("build_transform: homogeneous mixed hypothesis centres the prior at zero")
{
    const auto fit = testing::worked_example_fit(7);
    const auto ts = build_transform(one("x1 > x2 = 0", fit.coef_names), fit);
    CHECK(ts.mu0.norm() < 1e-12);
    CHECK(ts.qE == 1);
    CHECK(ts.qI() == 1);
}

TEST_CASE("build_transform: boundary property and equivalence chain")
{
    std::mt19937_64 rng(31);
    const auto fit = fit4(5);
    for (const char* text : {"x1 > x2 = 0", "(x1,x2) > x3 = 0", "x1 = 0.5 & x2 > x3 > -1", "x1 > x2 > x3",
                             "(Intercept) = x1 & x2 > 0.2"}) {
        const auto cs = one(text, fit.coef_names);
        const auto ts = build_transform(cs, fit);
        CHECK((cs.RE * ts.T_inv_E - Matrix::Identity(cs.qE(), cs.qE())).norm() < 1e-9);
        CHECK((ts.Rtilde_I * ts.mu0_I() - ts.rtilde_I).norm() < 1e-9);
        CHECK((ts.r_star - ts.Rtilde_I * ts.xi_hat_I()).norm() < 1e-12);

        // Random beta on the equality surface: R_I beta > r_I iff Rtilde xi_I > rtilde.
        const Vector particular = pseudo_inverse(cs.RE) * cs.rE;
        int agreements = 0;
        for (int i = 0; i < 100; ++i) {
            const Vector beta = (cs.qE() ? particular : Vector::Zero(4)) +
                                ts.D.transpose() * normal_vector(ts.D.rows(), rng);
            const bool original = ((cs.RI * beta - cs.rI).array() > 0.0).all();
            const bool reduced = ((ts.Rtilde_I * (ts.D * beta) - ts.rtilde_I).array() > 0.0).all();
            agreements += original == reduced;
        }
        CHECK_MESSAGE(agreements == 100, text);
    }
}

TEST_CASE("build_transform: implied rows dropped, parallel rows merged")
{
    const auto fit = fit4(9);
    const auto implied = build_transform(one("x1 = 1 & x1 > 0 & x2 > 0", fit.coef_names), fit);
    CHECK(implied.qI() == 1);
    CHECK_FALSE(implied.warnings.empty());

    const auto merged = build_transform(one("x1 > x2 = 0 & x1 > 0", fit.coef_names), fit);
    CHECK(merged.qI() == 1);

    const auto tight = build_transform(one("x1 > 1 & x1 > 2", fit.coef_names), fit);
    CHECK(tight.qI() == 1);
    CHECK(tight.rtilde_I(0) == doctest::Approx(2.0));

    CHECK_THROWS_AS((void)build_transform(one("x1 = 0 & x1 > 0", fit.coef_names), fit), InfeasibleHypothesis);
}

TEST_CASE("build_transform: inconsistent stacked system warns")
{
    const auto fit = fit4(9);
    const auto ts = build_transform(one("x1 > 1 & x1 < 2", fit.coef_names), fit);
    bool warned = false;
    for (const auto& w : ts.warnings) warned |= w.find("least-squares") != std::string::npos;
    CHECK(warned);
    CHECK(ts.mu0(1) == doctest::Approx(1.5));
}

TEST_CASE("fractional_posterior_beta: full and minimal fractions")
{
    const auto fit = fit4(11);
    const auto full = fractional_posterior_beta(fit, 1.0);
    CHECK(full.df == doctest::Approx(46.0));
    CHECK((full.scale - fit.s2 / 46.0 * fit.xtx_inv).norm() < 1e-14);
    CHECK(full.location == fit.beta_hat);

    const double b = minimal_fraction(fit);
    CHECK(b == doctest::Approx(0.1));
    const auto prior = fractional_posterior_beta(fit, b);
    CHECK(prior.df == doctest::Approx(1.0));
    CHECK((prior.scale - fit.s2 * fit.xtx_inv).norm() < 1e-10 * fit.s2);

    CHECK_THROWS_AS((void)fractional_posterior_beta(fit, 4.0 / 50.0), InvalidInput);
}

TEST_CASE("minimal_fraction: n = 20, k = 3")
{
    const auto fit = testing::worked_example_fit(1);
    CHECK(fit.k == 3);
    CHECK(minimal_fraction(fit) == doctest::Approx(0.2));
    CHECK(fractional_posterior_beta(fit, 0.2).df == doctest::Approx(1.0));
}

TEST_CASE("marginal_xiE: pushforward of the coefficient posterior")
{
    const auto fit = fit4(13);
    const auto cs = one("x1 = x2 = 0.1", fit.coef_names);
    const auto ts = build_transform(cs, fit);
    for (double b : {1.0, minimal_fraction(fit), 0.5}) {
        const auto m = marginal_xiE(fit, ts, b);
        const auto beta = fractional_posterior_beta(fit, b);
        CHECK((m.location - cs.RE * beta.location).norm() < 1e-12);
        CHECK((m.scale - cs.RE * beta.scale * cs.RE.transpose()).norm() < 1e-12);
        CHECK(m.df == beta.df);
    }
    CHECK(marginal_xiE(fit, ts, minimal_fraction(fit)).df == doctest::Approx(1.0));
}

TEST_CASE("conditional_xiI: minimal fraction at the estimate")
{
    const auto fit = fit4(15);
    const auto cs = one("x1 > x2 = 0", fit.coef_names);
    const auto ts = build_transform(cs, fit);
    const auto cond = conditional_xiI(fit, ts, minimal_fraction(fit), ts.xi_hat_E());
    const Matrix& V = fit.xtx_inv;
    const Matrix DVR = ts.D * V * cs.RE.transpose();
    const Matrix expected =
        fit.s2 / 2.0 * (ts.D * V * ts.D.transpose() - DVR * (cs.RE * V * cs.RE.transpose()).inverse() * DVR.transpose());
    CHECK((cond.scale - expected).norm() < 1e-10 * expected.norm());
    CHECK(cond.df == doctest::Approx(2.0));
    CHECK((cond.location - ts.D * fit.beta_hat).norm() < 1e-12);

    const auto printed = conditional_xiI(fit, ts, minimal_fraction(fit), ts.xi_hat_E(), ConditionalDf::as_printed);
    CHECK(printed.df == doctest::Approx(1.0));
}

TEST_CASE("conditional_xiI: uncorrelated blocks ignore the conditioning value")
{
    Vector beta(2);
    beta << 0.3, -0.2;
    const auto fit = testing::orthogonal_fit(beta, 30, 2);
    const auto ts = build_transform(one("x1 = 0 & x2 > 0", fit.coef_names), fit);
    const auto a = conditional_xiI(fit, ts, 1.0, Vector::Constant(1, 0.0));
    const auto b = conditional_xiI(fit, ts, 1.0, Vector::Constant(1, 5.0));
    CHECK((a.location - b.location).norm() < 1e-12);
    CHECK((a.location - ts.D * fit.beta_hat).norm() < 1e-12);
}

TEST_CASE("conditional_xiI: joint density factorizes")
{
    std::mt19937_64 rng(41);
    int instance = 0;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto fit = fit4(seed);
        for (const char* text : {"x1 > x2 = 0", "x1 = x2 = 0.3 & x3 > 0"}) {
            const auto ts = build_transform(one(text, fit.coef_names), fit);
            for (double b : {1.0, minimal_fraction(fit)}) {
                const auto joint = joint_xi(fit, ts, b);
                const auto marg = marginal_xiE(fit, ts, b);
                double worst = 0.0;
                for (int p = 0; p < 50; ++p) {
                    const Vector xiE = marg.location + normal_vector(ts.qE, rng);
                    const Vector xiI = ts.D * fit.beta_hat + normal_vector(4 - ts.qE, rng);
                    Vector xi(4);
                    xi << xiE, xiI;
                    const auto cond = conditional_xiI(fit, ts, b, xiE);
                    const double diff = mvt_logpdf(xi, joint) - mvt_logpdf(xiE, marg) - mvt_logpdf(xiI, cond);
                    worst = std::max(worst, std::abs(diff));
                }
                CHECK(worst < 1e-8);
                ++instance;
            }
        }
    }
    CHECK(instance == 40);
}

TEST_CASE("conditional_xiI: printed df breaks the factorization")
{
    const auto fit = fit4(77);
    const auto ts = build_transform(one("x1 > x2 = 0", fit.coef_names), fit);
    const auto joint = joint_xi(fit, ts, 1.0);
    const auto marg = marginal_xiE(fit, ts, 1.0);
    Vector xiE = marg.location.array() + 0.3;
    Vector xiI = ts.D * fit.beta_hat;
    Vector xi(4);
    xi << xiE, xiI;
    const auto cond = conditional_xiI(fit, ts, 1.0, xiE, ConditionalDf::as_printed);
    CHECK(std::abs(mvt_logpdf(xi, joint) - mvt_logpdf(xiE, marg) - mvt_logpdf(xiI, cond)) > 1e-6);
}

TEST_CASE("conditional_xiI: preconditions")
{
    const auto fit = fit4(1);
    const auto ineq = build_transform(one("x1 > 0", fit.coef_names), fit);
    CHECK_THROWS_AS((void)conditional_xiI(fit, ineq, 1.0, Vector::Zero(1)), InvalidInput);
    const auto mixed = build_transform(one("x1 > x2 = 0", fit.coef_names), fit);
    CHECK_THROWS_AS((void)conditional_xiI(fit, mixed, 1.0, Vector::Zero(2)), InvalidInput);
}
