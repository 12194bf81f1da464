#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "bfreg/numkernel.hpp"

namespace bfreg {

/// One hypothesis as augmented constraint matrices:
///   RE * beta = rE   and   RI * beta > rI   (every inequality in '>' form).
struct ConstraintSystem {
    std::string label;   // H1, H2, ...
    std::string source;  // hypothesis text with whitespace removed
    Matrix RE;
    Vector rE;
    Matrix RI;
    Vector rI;

    [[nodiscard]] Eigen::Index qE() const { return RE.rows(); }
    [[nodiscard]] Eigen::Index qI() const { return RI.rows(); }
    [[nodiscard]] Eigen::Index k() const { return std::max(RE.cols(), RI.cols()); }
};

struct ParsedHypotheses {
    bool exploratory = false;
    std::vector<ConstraintSystem> hypotheses;
};

/// Parses semicolon-separated hypotheses against the model's coefficient names.
///
///   hypotheses := hypothesis (";" hypothesis)*
///   hypothesis := chain ("&" chain)*
///   chain      := operand (cmp operand)+
///   cmp        := "=" | "<" | ">"
///   operand    := name | number | "(" name ("," name)* ")"
///
/// Adjacent operands of a chain produce one constraint per pair of group
/// members (cartesian). The text "exploratory" sets the exploratory flag and
/// yields no systems.
[[nodiscard]] ParsedHypotheses parse_hypotheses(std::string_view text,
                                                const std::vector<std::string>& coef_names);

/// Matrix entry point for constraints the DSL cannot express. Collapses
/// redundant equality rows and rejects inconsistent ones, like the parser.
[[nodiscard]] ConstraintSystem make_constraint_system(std::string label, std::string source,
                                                      Matrix RE, Vector rE, Matrix RI,
                                                      Vector rI);

struct Diagnostics {
    Eigen::Index rank_RE = 0;
    Eigen::Index rank_Rtilde_I = 0;       // over rows that remain after substitution
    bool Rtilde_I_full_row_rank = true;
    std::vector<std::string> notes;
};

// Rank checks and infeasibility detection; throws InfeasibleHypothesis.
[[nodiscard]] Diagnostics validate(const ConstraintSystem& cs);

// Canonical text that reparses to the same matrices.
[[nodiscard]] std::string render(const ConstraintSystem& cs,
                                 const std::vector<std::string>& coef_names);

} // namespace bfreg
