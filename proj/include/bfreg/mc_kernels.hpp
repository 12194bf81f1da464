#pragma once

#include <cstdint>
#include <vector>

#include "bfreg/numkernel.hpp"

namespace bfreg::kernels {

// Draws per RNG chunk. Part of the reproducibility contract: changing it
// changes every Monte Carlo estimate for a given seed.
inline constexpr std::int64_t kChunkSize = 4096;

// Intersection of half-spaces {x : R x > r}.
struct LinearRegion {
    Matrix R;
    Vector r;
};

// Prepared sampler: location and Cholesky factor of the scale.
struct TSampler {
    Vector location;
    Matrix chol;
    double df;

    explicit TSampler(const MultivariateT& dist);
};

// Fills rows [first, first + out.rows()) of the global draw sequence.
void sample_chunk(const TSampler& sampler, std::uint64_t seed,
                  std::int64_t chunk, Eigen::Ref<Matrix> out);

/// Number of draws (out of n_draws) falling in at least one region.
///
/// The serial and parallel paths visit the same chunks with the same RNG
/// streams and return identical counts.
[[nodiscard]] std::int64_t count_in_union(const MultivariateT& dist,
                                          const std::vector<LinearRegion>& regions,
                                          std::int64_t n_draws, std::uint64_t seed,
                                          Execution exec);

[[nodiscard]] std::int64_t count_in_union_serial(const MultivariateT& dist,
                                                 const std::vector<LinearRegion>& regions,
                                                 std::int64_t n_draws,
                                                 std::uint64_t seed);

[[nodiscard]] std::int64_t count_in_union_parallel(const MultivariateT& dist,
                                                   const std::vector<LinearRegion>& regions,
                                                   std::int64_t n_draws,
                                                   std::uint64_t seed);

} // namespace bfreg::kernels
