#include "bfreg/mc_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bfreg::kernels {

TSampler::TSampler(const MultivariateT& dist)
    : location(dist.location), chol(cholesky_lower(dist.scale)), df(dist.df)
{
    if (dist.scale.rows() != dist.location.size())
        throw InvalidInput("sampler: location/scale dimension mismatch");
    if (!(df > 0.0)) throw InvalidInput("sampler: df must be positive");
}

void sample_chunk(const TSampler& sampler, std::uint64_t seed, std::int64_t chunk,
                  Eigen::Ref<Matrix> out)
{
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chisq(sampler.df);

    const Eigen::Index d = sampler.location.size();
    Vector z(d);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
        const double w = chisq(rng);
        const double mult = 1.0 / std::sqrt(w / sampler.df);
        out.row(i) = (sampler.location + mult * (sampler.chol * z)).transpose();
    }
}

namespace {

std::int64_t count_chunk(const TSampler& sampler, const std::vector<LinearRegion>& regions,
                         std::int64_t n_draws, std::uint64_t seed, std::int64_t chunk,
                         Matrix& buf)
{
    const std::int64_t first = chunk * kChunkSize;
    const std::int64_t rows = std::min(kChunkSize, n_draws - first);
    if (buf.rows() != rows) buf.resize(rows, sampler.location.size());
    sample_chunk(sampler, seed, chunk, buf);

    std::vector<char> inside(static_cast<std::size_t>(rows), 0);
    for (const auto& region : regions) {
        const Matrix margins = (buf * region.R.transpose()).rowwise() - region.r.transpose();
        for (Eigen::Index i = 0; i < rows; ++i)
            if (margins.row(i).minCoeff() > 0.0) inside[static_cast<std::size_t>(i)] = 1;
    }
    return std::count(inside.begin(), inside.end(), 1);
}

void check_regions(const MultivariateT& dist, const std::vector<LinearRegion>& regions)
{
    for (const auto& region : regions)
        if (region.R.cols() != dist.dim() || region.r.size() != region.R.rows())
            throw InvalidInput("count_in_union: region dimension mismatch");
}

} // namespace

std::int64_t count_in_union_serial(const MultivariateT& dist,
                                   const std::vector<LinearRegion>& regions,
                                   std::int64_t n_draws, std::uint64_t seed)
{
    check_regions(dist, regions);
    const TSampler sampler(dist);
    const std::int64_t n_chunks = (n_draws + kChunkSize - 1) / kChunkSize;
    Matrix buf;
    std::int64_t hits = 0;
    for (std::int64_t c = 0; c < n_chunks; ++c)
        hits += count_chunk(sampler, regions, n_draws, seed, c, buf);
    return hits;
}

std::int64_t count_in_union_parallel(const MultivariateT& dist,
                                     const std::vector<LinearRegion>& regions,
                                     std::int64_t n_draws, std::uint64_t seed)
{
    check_regions(dist, regions);
    const TSampler sampler(dist);
    const std::int64_t n_chunks = (n_draws + kChunkSize - 1) / kChunkSize;
    std::int64_t hits = 0;
#pragma omp parallel reduction(+ : hits)
    {
        Matrix buf;
#pragma omp for schedule(static)
        for (std::int64_t c = 0; c < n_chunks; ++c)
            hits += count_chunk(sampler, regions, n_draws, seed, c, buf);
    }
    return hits;
}

std::int64_t count_in_union(const MultivariateT& dist, const std::vector<LinearRegion>& regions,
                            std::int64_t n_draws, std::uint64_t seed, Execution exec)
{
    if (n_draws < 1) throw InvalidInput("count_in_union: n_draws must be >= 1");
    if (regions.empty()) return 0;
    return exec == Execution::parallel ? count_in_union_parallel(dist, regions, n_draws, seed)
                                       : count_in_union_serial(dist, regions, n_draws, seed);
}

} // namespace bfreg::kernels
