#include "bfreg/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "bfreg/mc_kernels.hpp"

namespace bfreg {

namespace {

double svd_cutoff(const Eigen::JacobiSVD<Matrix>& svd, const Matrix& m)
{
    const auto& sv = svd.singularValues();
    const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    return static_cast<double>(std::max(m.rows(), m.cols())) *
           std::numeric_limits<double>::epsilon() * sigma_max;
}

Eigen::Index rank_from(const Eigen::JacobiSVD<Matrix>& svd, double cutoff)
{
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return rank;
}

void require_finite(const Matrix& m, const char* what)
{
    if (!m.allFinite())
        throw InvalidInput(std::string(what) + ": matrix has non-finite entries");
}

} // namespace

Matrix pseudo_inverse(const Matrix& m)
{
    require_finite(m, "pseudo_inverse");
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cutoff = svd_cutoff(svd, m);
    const auto& sv = svd.singularValues();

    Vector inv_sv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);

    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::Index numerical_rank(const Matrix& m)
{
    require_finite(m, "numerical_rank");
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return rank_from(svd, svd_cutoff(svd, m));
}

Matrix null_space_rows(const Matrix& m)
{
    require_finite(m, "null_space_rows");
    const Eigen::Index k = m.cols();
    if (m.rows() == 0) return Matrix::Identity(k, k);

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Eigen::Index rank = rank_from(svd, svd_cutoff(svd, m));
    return svd.matrixV().rightCols(k - rank).transpose();
}

Matrix cholesky_lower(const Matrix& scale)
{
    if (scale.rows() != scale.cols())
        throw InvalidInput("scale matrix must be square");
    Eigen::LLT<Matrix> llt(scale);
    if (llt.info() != Eigen::Success)
        throw DecompositionError("scale matrix is not positive definite");
    return llt.matrixL();
}

double mvt_logpdf(const Vector& x, const MultivariateT& dist)
{
    const Eigen::Index d = dist.dim();
    if (x.size() != d || dist.scale.rows() != d || dist.scale.cols() != d)
        throw InvalidInput("mvt_logpdf: dimension mismatch");
    if (!(dist.df > 0.0)) throw InvalidInput("mvt_logpdf: df must be positive");

    Eigen::LLT<Matrix> llt(dist.scale);
    if (llt.info() != Eigen::Success)
        throw DecompositionError("mvt_logpdf: scale matrix is not positive definite");

    const Vector z = llt.matrixL().solve(x - dist.location);
    const double mahal = z.squaredNorm();
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

    const double nu = dist.df;
    const double dd = static_cast<double>(d);
    return std::lgamma(0.5 * (nu + dd)) - std::lgamma(0.5 * nu) -
           0.5 * dd * std::log(nu * std::numbers::pi) - 0.5 * log_det -
           0.5 * (nu + dd) * std::log1p(mahal / nu);
}

double t_cdf(double x, double df)
{
    if (!(df > 0.0)) throw InvalidInput("t_cdf: df must be positive");
    if (std::isnan(x)) throw InvalidInput("t_cdf: x is NaN");
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::cdf(dist, x);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ (stream * 0xd6e8feb86659fd93ULL + 0x632be59bd9b4e019ULL));
}

Matrix mvt_sample(const MultivariateT& dist, std::int64_t n_draws, std::uint64_t seed,
                  Execution exec)
{
    if (n_draws < 1) throw InvalidInput("mvt_sample: n_draws must be >= 1");
    const kernels::TSampler sampler(dist);
    Matrix out(n_draws, dist.dim());
    const std::int64_t n_chunks = (n_draws + kernels::kChunkSize - 1) / kernels::kChunkSize;

    auto fill = [&](std::int64_t c) {
        const std::int64_t first = c * kernels::kChunkSize;
        const std::int64_t rows = std::min(kernels::kChunkSize, n_draws - first);
        kernels::sample_chunk(sampler, seed, c, out.middleRows(first, rows));
    };

    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t c = 0; c < n_chunks; ++c) fill(c);
    } else {
        for (std::int64_t c = 0; c < n_chunks; ++c) fill(c);
    }
    return out;
}

ProbEstimate mvt_constraint_prob(const MultivariateT& dist, const Matrix& R, const Vector& r,
                                 std::int64_t n_draws, std::uint64_t seed, Execution exec)
{
    const Eigen::Index d = dist.dim();
    const Eigen::Index q = R.rows();
    if (q < 1) throw InvalidInput("mvt_constraint_prob: need at least one constraint row");
    if (R.cols() != d || r.size() != q || dist.scale.rows() != d || dist.scale.cols() != d)
        throw InvalidInput("mvt_constraint_prob: dimension mismatch");
    if (!(dist.df > 0.0)) throw InvalidInput("mvt_constraint_prob: df must be positive");

    const Vector proj_loc = R * dist.location;
    const Matrix proj_scale = R * dist.scale * R.transpose();

    if (q == 1) {
        ProbEstimate est;
        est.exact = true;
        const double var = proj_scale(0, 0);
        if (var <= 0.0)
            est.value = proj_loc(0) > r(0) ? 1.0 : 0.0;
        else
            est.value = t_cdf((proj_loc(0) - r(0)) / std::sqrt(var), dist.df);
        return est;
    }

    if (n_draws < 1) throw InvalidInput("mvt_constraint_prob: n_draws must be >= 1");

    std::int64_t hits = 0;
    if (numerical_rank(R) == q) {
        const MultivariateT projected{proj_loc, proj_scale, dist.df};
        const kernels::LinearRegion region{Matrix::Identity(q, q), r};
        hits = kernels::count_in_union(projected, {region}, n_draws, seed, exec);
    } else {
        hits = kernels::count_in_union(dist, {kernels::LinearRegion{R, r}}, n_draws, seed, exec);
    }

    ProbEstimate est;
    est.n_draws = n_draws;
    est.value = static_cast<double>(hits) / static_cast<double>(n_draws);
    est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(n_draws));
    return est;
}

} // namespace bfreg
