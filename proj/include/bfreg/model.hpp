#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "bfreg/numkernel.hpp"

namespace bfreg {

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
};

/// Numeric table after ingestion. Rows with an empty or "NA" cell are
/// dropped (listwise deletion) and counted in `dropped_rows`.
struct Dataset {
    std::vector<std::string> column_names;
    Matrix columns;                // n x p
    std::int64_t n = 0;
    std::int64_t dropped_rows = 0;

    [[nodiscard]] Eigen::Index index_of(const std::string& name) const;
    [[nodiscard]] Vector column(const std::string& name) const;
};

/// Sufficient statistics of a least-squares fit.
///
/// `s2` is the raw residual sum of squares (not divided by n - k); every
/// Student t scale matrix downstream applies its own divisor.
struct RegressionFit {
    std::vector<std::string> coef_names;
    Vector beta_hat;
    double s2 = 0.0;
    Matrix xtx_inv;
    std::int64_t n = 0;
    std::int64_t k = 0;

    [[nodiscard]] Eigen::Index index_of(const std::string& name) const;
};

// Builds a fit from precomputed statistics and checks its invariants.
[[nodiscard]] RegressionFit make_fit(std::vector<std::string> coef_names, Vector beta_hat,
                                     double s2, Matrix xtx_inv, std::int64_t n);

[[nodiscard]] Dataset read_csv(std::istream& in, const CsvOptions& options = {});
[[nodiscard]] Dataset load_csv(const std::string& path, const CsvOptions& options = {});

// Mean 0, sample SD 1 (divisor n - 1). Empty `which` means every column.
[[nodiscard]] Dataset standardize(const Dataset& data, const std::vector<std::string>& which = {});

struct Formula {
    std::string response;
    std::vector<std::string> terms;
    bool intercept = true;
};

// "y ~ x1 + x2", with "- 1" or "+ 0" dropping the intercept.
[[nodiscard]] Formula parse_formula(const std::string& text);

[[nodiscard]] RegressionFit fit_ols(const Dataset& data, const std::string& formula);
[[nodiscard]] RegressionFit fit_ols(const Matrix& X, const Vector& y,
                                    std::vector<std::string> coef_names);

inline constexpr const char* kInterceptName = "(Intercept)";

} // namespace bfreg
