#pragma once

#include <map>
#include <string>

#include "bfreg/engine.hpp"

namespace bfreg {

struct ReportOptions {
    bool bf_matrix = false;
    bool computation = false;
    bool ci = false;
};

// Human-readable report, numbers rounded to three decimals.
[[nodiscard]] std::string render_text(const TestResult& result, const ReportOptions& options = {});

// Machine-readable report (schema "bfreg/1"), unrounded. `meta` entries are
// copied into a top-level "input" object.
[[nodiscard]] std::string render_json(const TestResult& result,
                                      const std::map<std::string, std::string>& meta = {});

} // namespace bfreg
