#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "bfreg/model.hpp"
#include "support/synthetic.hpp"

using namespace bfreg;

namespace {

Dataset parse(const std::string& text, CsvOptions options = {})
{
    std::istringstream in(text);
    return read_csv(in, options);
}

} // namespace

TEST_CASE("read_csv: numeric table")
{
    const auto d = parse("y,x1,x2\n1,2,3\n4,5,6\n7,8,9\n1.5,2e1,-3\n0,0,0\n");
    CHECK(d.n == 5);
    CHECK(d.column_names == std::vector<std::string>{"y", "x1", "x2"});
    CHECK(d.column("x1")(3) == 20.0);
    CHECK(d.column("x2")(3) == -3.0);
}

TEST_CASE("read_csv: two string levels are coded in first-seen order")
{
    const auto d = parse("y,sex\n1,m\n2,f\n3,m\n4,f\n");
    const Vector sex = d.column("sex");
    CHECK(sex(0) == 0.0);
    CHECK(sex(1) == 1.0);
    CHECK(sex(2) == 0.0);
}

TEST_CASE("read_csv: three string levels are rejected")
{
    try {
        (void)parse("y,g\n1,a\n2,b\n3,c\n");
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("categorical with >2 levels") != std::string::npos);
    }
}

TEST_CASE("read_csv: missing cells drop the row and are counted")
{
    const auto d = parse("y,x\n1,2\n,3\n4,NA\n5,6\n");
    CHECK(d.n == 2);
    CHECK(d.dropped_rows == 2);
}

TEST_CASE("read_csv: quoting, delimiter and headerless input")
{
    const auto q = parse("\"y\",\"a,b\"\n1,\"2\"\n3,4\n");
    CHECK(q.column_names[1] == "a,b");
    CHECK(q.column("a,b")(0) == 2.0);

    const auto s = parse("1;2\n3;4\n", CsvOptions{';', false});
    CHECK(s.column_names == std::vector<std::string>{"V1", "V2"});
    CHECK(s.n == 2);
}

TEST_CASE("read_csv: duplicate names, ragged rows and empty data")
{
    CHECK_THROWS_AS((void)parse("y,y\n1,2\n"), DataError);
    CHECK_THROWS_AS((void)parse("y,x\n1,2,3\n"), DataError);
    CHECK_THROWS_AS((void)parse("y,x\n"), DataError);
    CHECK_THROWS_AS((void)load_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("standardize: closed form, idempotence and zero variance")
{
    const auto d = parse("a,b\n1,5\n2,5\n3,5\n");
    const auto s = standardize(d, {"a"});
    CHECK(std::abs(s.column("a")(0) + 1.0) < 1e-15);
    CHECK(std::abs(s.column("a")(1)) < 1e-15);
    CHECK(std::abs(s.column("a")(2) - 1.0) < 1e-15);

    const auto d2 = parse("a,b\n1.5,3\n-2,7\n9,1\n4,4\n");
    const auto once = standardize(d2);
    const auto twice = standardize(once);
    CHECK((once.columns - twice.columns).cwiseAbs().maxCoeff() < 1e-12);

    try {
        (void)standardize(d);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
}

TEST_CASE("parse_formula")
{
    const auto f = parse_formula(" y ~ x1 + x2 ");
    CHECK(f.response == "y");
    CHECK(f.terms == std::vector<std::string>{"x1", "x2"});
    CHECK(f.intercept);
    CHECK_FALSE(parse_formula("y ~ x1 - 1").intercept);
    CHECK_FALSE(parse_formula("y ~ 0 + x1").intercept);
    CHECK_FALSE(parse_formula("y ~ x1 + 0").intercept);
    CHECK_THROWS_AS((void)parse_formula("y x1"), DataError);
    CHECK_THROWS_AS((void)parse_formula("y ~ x1 + + x2"), DataError);
    CHECK_THROWS_AS((void)parse_formula("y ~ x1 + x1"), DataError);
}

TEST_CASE("fit_ols: exact fit is rejected")
{
    const auto d = parse("y,x\n5,1\n8,2\n11,3\n14,4\n");
    try {
        (void)fit_ols(d, "y ~ x");
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("exact fit") != std::string::npos);
    }
}

TEST_CASE("fit_ols: unknown column, rank deficiency, too few rows")
{
    const auto d = parse("y,x,z\n1,1,2\n2,2,4\n4,3,6\n3,4,8\n");
    CHECK_THROWS_AS((void)fit_ols(d, "y ~ w"), DataError);
    CHECK_THROWS_AS((void)fit_ols(d, "y ~ x + z"), DataError);
    const auto small = parse("y,x\n1,1\n2,3\n4,2\n");
    CHECK_THROWS_AS((void)fit_ols(small, "y ~ x"), DataError);
}

TEST_CASE("fit_ols: slope recovered from noisy data")
{
    std::mt19937_64 rng(99);
    const Eigen::Index n = 100;
    const Vector x = testing::standard_normal(n, 1, rng).col(0);
    const Vector y = x + testing::standard_normal(n, 1, rng).col(0);
    const auto fit = fit_ols(testing::with_intercept(x), y, testing::coef_names(1));
    const double se = std::sqrt(fit.s2 / static_cast<double>(n - 2) * fit.xtx_inv(1, 1));
    CHECK(std::abs(fit.beta_hat(1) - 1.0) < 5.0 * se);
    CHECK(fit.coef_names == std::vector<std::string>{"(Intercept)", "x1"});
}

TEST_CASE("fit_ols: orthonormal design")
{
    std::mt19937_64 rng(4);
    Eigen::HouseholderQR<Matrix> qr(testing::standard_normal(30, 2, rng));
    const Matrix Q = qr.householderQ() * Matrix::Identity(30, 2);
    const Vector y = testing::standard_normal(30, 1, rng).col(0);
    const auto fit = fit_ols(Q, y, {"a", "b"});
    CHECK((fit.beta_hat - Q.transpose() * y).norm() < 1e-12);
    CHECK((fit.xtx_inv - Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("fit_ols: residual orthogonality and raw residual sum of squares")
{
    std::mt19937_64 rng(8);
    const Matrix X = testing::with_intercept(testing::standard_normal(40, 3, rng));
    const Vector y = testing::standard_normal(40, 1, rng).col(0) * 2.0 + X.col(1);
    const auto fit = fit_ols(X, y, testing::coef_names(3));
    const Vector resid = y - X * fit.beta_hat;
    CHECK((X.transpose() * resid).norm() <= 1e-8 * (X.transpose() * y).norm());
    CHECK(std::abs(fit.s2 - resid.squaredNorm()) < 1e-10 * fit.s2);
    CHECK(fit.n == 40);
    CHECK(fit.k == 4);
}

TEST_CASE("fit_ols: dataset entry point drops the intercept on request")
{
    const auto d = parse("y,x\n1,1\n2,2.5\n2,3\n5,4\n4,5.5\n");
    const auto with = fit_ols(d, "y ~ x");
    const auto without = fit_ols(d, "y ~ x - 1");
    CHECK(with.k == 2);
    CHECK(without.k == 1);
    CHECK(without.coef_names == std::vector<std::string>{"x"});
}

TEST_CASE("load_csv: file round trip")
{
    const std::string path = "bfreg_test_model.csv";
    {
        std::ofstream out(path);
        out << "\xEF\xBB\xBFy,x\n1,2\n3,4\n";
    }
    const auto d = load_csv(path);
    std::remove(path.c_str());
    CHECK(d.column_names[0] == "y");
    CHECK(d.n == 2);
}

TEST_CASE("make_fit: invariants")
{
    const Matrix I = Matrix::Identity(2, 2);
    CHECK_NOTHROW((void)make_fit({"a", "b"}, Vector::Zero(2), 1.0, I, 4));
    CHECK_THROWS_AS((void)make_fit({"a", "b"}, Vector::Zero(2), 1.0, I, 3), DataError);
    CHECK_THROWS_AS((void)make_fit({"a", "b"}, Vector::Zero(2), 0.0, I, 10), DataError);
    CHECK_THROWS_AS((void)make_fit({"a", "a"}, Vector::Zero(2), 1.0, I, 10), InvalidInput);
    CHECK_THROWS((void)make_fit({"a", "b"}, Vector::Zero(2), 1.0, -I, 10));
}
