// bfreg: default Bayes factors for equality/order-constrained hypotheses on
// linear regression coefficients.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bfreg/engine.hpp"
#include "bfreg/model.hpp"
#include "bfreg/report.hpp"

namespace {

struct CliConfig {
    std::string data_path;
    std::string formula;
    std::string hyp;
    std::string prior_probs = "equal";
    std::int64_t mcrep = 1'000'000;
    std::uint64_t seed = 0;
    bool standardize = false;
    bool no_header = false;
    char delimiter = ',';
    std::string output = "text";
    std::vector<std::string> show;
    bool lemma_df_as_printed = false;
};

std::optional<std::vector<double>> parse_weights(const std::string& text)
{
    if (text == "equal") return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double w = 0.0;
        try {
            w = std::stod(item, &used);
        } catch (const std::exception&) {
            throw bfreg::InvalidInput("--prior-probs: '" + item + "' is not a number");
        }
        if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos)
            throw bfreg::InvalidInput("--prior-probs: '" + item + "' is not a number");
        if (!(w > 0.0)) throw bfreg::InvalidInput("--prior-probs: weights must be positive");
        out.push_back(w);
    }
    if (out.empty()) throw bfreg::InvalidInput("--prior-probs: no weights given");
    return out;
}

std::uint64_t resolve_seed(std::uint64_t flag)
{
    if (flag != 0) return flag;
    if (const char* env = std::getenv("BFREG_SEED")) {
        try {
            const auto v = std::stoull(env);
            if (v != 0) return v;
        } catch (const std::exception&) {
            throw bfreg::InvalidInput("BFREG_SEED is not an unsigned integer");
        }
    }
    const auto now = std::chrono::high_resolution_clock::now().time_since_epoch().count();
    return bfreg::derive_seed(static_cast<std::uint64_t>(now), 0) | 1U;
}

int run(const CliConfig& cfg, bool exploratory)
{
    if (cfg.mcrep < 10'000) throw bfreg::InvalidInput("--mcrep must be at least 10000");

    bfreg::ReportOptions report;
    for (const auto& s : cfg.show) {
        if (s == "bf-matrix") report.bf_matrix = true;
        else if (s == "computation") report.computation = true;
        else if (s == "ci") report.ci = true;
        else throw bfreg::InvalidInput("--show: unknown item '" + s + "' (bf-matrix, computation, ci)");
    }

    const auto weights = exploratory ? std::nullopt : parse_weights(cfg.prior_probs);

    bfreg::CsvOptions csv;
    csv.delimiter = cfg.delimiter;
    csv.header = !cfg.no_header;
    bfreg::Dataset data = bfreg::load_csv(cfg.data_path, csv);
    if (data.dropped_rows > 0)
        std::cerr << "bfreg: dropped " << data.dropped_rows << " row(s) with missing values\n";
    if (cfg.standardize) {
        const auto f = bfreg::parse_formula(cfg.formula);
        std::vector<std::string> cols{f.response};
        cols.insert(cols.end(), f.terms.begin(), f.terms.end());
        data = bfreg::standardize(data, cols);
    }
    const bfreg::RegressionFit fit = bfreg::fit_ols(data, cfg.formula);

    bfreg::EngineOptions opts;
    opts.mcrep = cfg.mcrep;
    opts.seed = resolve_seed(cfg.seed);
    opts.df_mode = cfg.lemma_df_as_printed ? bfreg::ConditionalDf::as_printed : bfreg::ConditionalDf::standard;

    const std::string hyp = exploratory ? "exploratory" : cfg.hyp;
    const bfreg::TestResult result = bfreg::test_hypotheses(fit, hyp, weights, opts);

    if (cfg.output == "json") {
        std::map<std::string, std::string> meta{
            {"data", cfg.data_path}, {"formula", cfg.formula}, {"hyp", hyp},
            {"prior_probs", exploratory ? "equal" : cfg.prior_probs},
            {"standardize", cfg.standardize ? "true" : "false"},
            {"conditional_df", cfg.lemma_df_as_printed ? "as-printed" : "standard"},
        };
        std::cout << bfreg::render_json(result, meta);
    } else {
        if (cfg.seed == 0) std::cerr << "bfreg: seed " << opts.seed << '\n';
        std::cout << bfreg::render_text(result, report);
    }
    return 0;
}

void add_common(CLI::App* sub, CliConfig& cfg)
{
    sub->add_option("--data", cfg.data_path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    sub->add_option("--formula", cfg.formula, "Model formula, e.g. \"y ~ x1 + x2\"")->required();
    sub->add_option("--mcrep", cfg.mcrep, "Monte Carlo draws per probability (>= 10000)")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "RNG seed; 0 = BFREG_SEED or time-derived")->capture_default_str();
    sub->add_flag("--standardize", cfg.standardize, "Standardize the response and all terms before fitting");
    sub->add_option("--delimiter", cfg.delimiter, "CSV field delimiter")->capture_default_str();
    sub->add_flag("--no-header", cfg.no_header, "CSV has no header row (columns become V1, V2, ...)");
    sub->add_option("--output", cfg.output, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    sub->add_option("--show", cfg.show, "Extra text sections: bf-matrix, computation, ci")->delimiter(',');
    sub->add_flag("--lemma-df-as-printed", cfg.lemma_df_as_printed,
                  "Use nb-k instead of nb-k+qE as conditional degrees of freedom");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bfreg: default Bayes factors for constrained hypotheses on regression coefficients"};
    app.require_subcommand(1);

    CliConfig cfg;
    auto* test = app.add_subcommand("test", "Test semicolon-separated hypotheses");
    add_common(test, cfg);
    test->add_option("--hyp", cfg.hyp, "Hypotheses, e.g. \"x1 > x2 > 0; x1 = x2 = 0\"")->required();
    test->add_option("--prior-probs", cfg.prior_probs,
                     "\"equal\" or comma-separated positive weights, one per hypothesis including the complement")
        ->capture_default_str();

    auto* explore = app.add_subcommand("exploratory", "Test < 0, = 0, > 0 for every coefficient");
    add_common(explore, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return run(cfg, explore->parsed());
    } catch (const bfreg::NumericError& e) {
        std::cerr << "bfreg: numeric error: " << e.what() << '\n';
        return 2;
    } catch (const bfreg::DecompositionError& e) {
        std::cerr << "bfreg: numeric error: " << e.what() << '\n';
        return 2;
    } catch (const bfreg::ParseError& e) {
        std::cerr << "bfreg: hypothesis error: " << e.what() << '\n';
        return 1;
    } catch (const bfreg::InfeasibleHypothesis& e) {
        std::cerr << "bfreg: infeasible hypothesis: " << e.what() << '\n';
        return 1;
    } catch (const bfreg::DataError& e) {
        std::cerr << "bfreg: data error: " << e.what() << '\n';
        return 1;
    } catch (const bfreg::Error& e) {
        std::cerr << "bfreg: error: " << e.what() << '\n';
        return 1;
    }
}
