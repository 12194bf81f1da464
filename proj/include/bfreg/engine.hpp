#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfreg/constraints.hpp"
#include "bfreg/hyparse.hpp"
#include "bfreg/model.hpp"
#include "bfreg/numkernel.hpp"

namespace bfreg {

struct EngineOptions {
    std::int64_t mcrep = 1'000'000;
    std::uint64_t seed = 1;
    ConditionalDf df_mode = ConditionalDf::standard;
    Execution exec = Execution::parallel;
};

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Fit and complexity factors of one hypothesis against the unconstrained one.
///
/// cE / fE are prior / posterior densities at rE, cIE / fIE prior / posterior
/// probabilities of the (conditional) inequalities. A factor that does not
/// apply is absent and counts as 1.
struct BFComponents {
    std::string label;
    std::string source;
    bool complement = false;
    std::optional<double> cE;
    std::optional<double> fE;
    std::optional<ProbEstimate> cIE;
    std::optional<ProbEstimate> fIE;
    double log_bf_u = 0.0;
    double bf_u = 1.0;
    std::optional<Interval> ci90;   // only when a factor was estimated by Monte Carlo

    [[nodiscard]] double c() const;   // cE * cIE over the present factors
    [[nodiscard]] double f() const;
};

struct ExploratoryRow {
    std::string coef;
    std::vector<BFComponents> components;   // H1: < 0, H2: = 0, H3: > 0
    std::vector<double> post_probs;
    Matrix bf_matrix;
};

struct ExploratoryResult {
    std::vector<ExploratoryRow> rows;
};

struct TestResult {
    bool exploratory = false;
    std::vector<BFComponents> components;   // includes the complement when added
    std::vector<double> prior_probs;        // normalized
    std::vector<double> post_probs;
    Matrix bf_matrix;
    ExploratoryResult exploratory_rows;
    std::vector<std::string> warnings;
    std::int64_t mcrep = 0;
    std::uint64_t seed = 0;
};

/// B_tu for a validated hypothesis.
///
/// Equality-only: fE / cE, the posterior marginal density of RE beta at rE
/// over the minimal-fraction marginal evaluated at its own centre.
/// Inequality-only: Pr(RI beta > rI) under the posterior over the same under
/// the minimal-fraction distribution centred at mu0.
/// Mixed: the equality ratio times conditional probabilities of
/// Rtilde_I xi_I > rtilde_I (posterior, xi_E = rE) and Rtilde_I xi_I > r_star
/// (minimal fraction, xi_E = xi_hat_E).
///
/// `stream` separates the RNG streams of different hypotheses.
[[nodiscard]] BFComponents bf_unconstrained(const RegressionFit& fit, const ConstraintSystem& cs,
                                            const EngineOptions& opts, std::uint64_t stream = 0);

/// Complement of all hypotheses, or nullopt when they exhaust the space.
///
/// Equality-constrained hypotheses have measure zero and are ignored. With
/// several inequality-only hypotheses the union probability is estimated from
/// one shared draw set per distribution.
[[nodiscard]] std::optional<BFComponents> bf_complement(const RegressionFit& fit,
                                                        std::span<const ConstraintSystem> hypotheses,
                                                        std::span<const BFComponents> components,
                                                        const EngineOptions& opts);

// (1 - U_f) / (1 - U_c) from union probabilities.
[[nodiscard]] BFComponents complement_from_union(const ProbEstimate& union_prior,
                                                 const ProbEstimate& union_post, std::string source);

// B_t Pr(H_t) / sum_s B_s Pr(H_s). Weights are normalized internally.
[[nodiscard]] std::vector<double> posterior_probabilities(std::span<const double> bf,
                                                          std::span<const double> prior_weights);

// Same, computed from log B_tu to survive underflow.
[[nodiscard]] std::vector<double> posterior_probabilities(std::span<const BFComponents> components,
                                                          std::span<const double> prior_weights);

// Entry (i, j) = B_iu / B_ju.
[[nodiscard]] Matrix bf_matrix(std::span<const BFComponents> components);
[[nodiscard]] Matrix bf_matrix(std::span<const double> bf);

[[nodiscard]] ExploratoryResult exploratory_test(const RegressionFit& fit, const EngineOptions& opts);

/// parse -> validate -> transform -> B_tu -> complement -> posterior
/// probabilities -> BF matrix. `prior_weights` must count the complement
/// when one is added; nullopt means equal prior probabilities.
[[nodiscard]] TestResult test_hypotheses(const RegressionFit& fit, const std::string& hyp_text,
                                         const std::optional<std::vector<double>>& prior_weights,
                                         const EngineOptions& opts);

} // namespace bfreg
