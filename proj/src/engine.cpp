#include "bfreg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bfreg/mc_kernels.hpp"

namespace bfreg {

namespace {

constexpr double kZ90 = 1.6448536269514722;
// -log(0.1): one-sided 90% Poisson upper bound on the count when no draw hit.
constexpr double kZeroCountUpper = 2.302585092994046;
constexpr std::uint64_t kComplementStream = 0xC0FFEEULL;

enum class Role : std::uint64_t { posterior = 0, prior = 1 };

std::uint64_t stream_seed(const EngineOptions& opts, std::uint64_t stream, Role role)
{
    return derive_seed(opts.seed, 2 * stream + static_cast<std::uint64_t>(role));
}

// Accumulates log B and the delta-method variance of the Monte Carlo factors.
struct LogRatio {
    double log_bf = 0.0;
    double var = 0.0;
    bool mc = false;
    bool zero_numerator = false;
    double log_bf_zero_upper = 0.0;   // log B with zero-count numerators replaced by their upper bound

    void numerator(const ProbEstimate& p)
    {
        if (!p.exact) mc = true;
        if (p.value > 0.0) {
            log_bf += std::log(p.value);
            log_bf_zero_upper += std::log(p.value);
            if (!p.exact) var += (1.0 - p.value) / (static_cast<double>(p.n_draws) * p.value);
        } else {
            log_bf = -std::numeric_limits<double>::infinity();
            zero_numerator = true;
            const double upper = p.exact ? 0.0 : kZeroCountUpper / static_cast<double>(p.n_draws);
            log_bf_zero_upper += upper > 0.0 ? std::log(upper) : -std::numeric_limits<double>::infinity();
        }
    }

    void denominator(const ProbEstimate& p)
    {
        if (!p.exact) mc = true;
        log_bf -= std::log(p.value);
        log_bf_zero_upper -= std::log(p.value);
        if (!p.exact) var += (1.0 - p.value) / (static_cast<double>(p.n_draws) * p.value);
    }

    void density(double log_num, double log_den)
    {
        log_bf += log_num - log_den;
        log_bf_zero_upper += log_num - log_den;
    }

    void finish(BFComponents& out) const
    {
        out.log_bf_u = log_bf;
        out.bf_u = std::exp(log_bf);
        if (!mc) return;
        if (zero_numerator) {
            out.ci90 = Interval{0.0, std::exp(log_bf_zero_upper + kZ90 * std::sqrt(var))};
        } else {
            const double sd = std::sqrt(var);
            out.ci90 = Interval{std::exp(log_bf - kZ90 * sd), std::exp(log_bf + kZ90 * sd)};
        }
    }
};

BFComponents compute_bf(const RegressionFit& fit, const ConstraintSystem& cs, const EngineOptions& opts,
                        std::uint64_t stream, std::vector<std::string>* warnings)
{
    (void)validate(cs);
    const TransformedSystem ts = build_transform(cs, fit);
    if (warnings) warnings->insert(warnings->end(), ts.warnings.begin(), ts.warnings.end());

    const double b_min = minimal_fraction(fit);
    BFComponents out;
    out.label = cs.label;
    out.source = cs.source;
    LogRatio ratio;

    if (ts.qE > 0) {
        const MultivariateT post = marginal_xiE(fit, ts, 1.0);
        MultivariateT prior = marginal_xiE(fit, ts, b_min);
        prior.location = cs.rE;
        const double log_f = mvt_logpdf(cs.rE, post);
        const double log_c = mvt_logpdf(cs.rE, prior);
        if (!std::isfinite(log_c))
            throw NumericError(cs.label + ": prior density at the null value underflows");
        out.fE = std::exp(log_f);
        out.cE = std::exp(log_c);
        ratio.density(log_f, log_c);
    }

    if (ts.qI() > 0) {
        MultivariateT post;
        MultivariateT prior;
        Vector prior_threshold;
        if (ts.qE == 0) {
            post = fractional_posterior_beta(fit, 1.0);
            prior = fractional_posterior_beta(fit, b_min);
            prior.location = ts.mu0;
            prior_threshold = ts.rtilde_I;
        } else {
            post = conditional_xiI(fit, ts, 1.0, cs.rE, opts.df_mode);
            prior = conditional_xiI(fit, ts, b_min, ts.xi_hat_E(), opts.df_mode);
            prior_threshold = ts.r_star;
        }
        const ProbEstimate f = mvt_constraint_prob(post, ts.Rtilde_I, ts.rtilde_I, opts.mcrep,
                                                   stream_seed(opts, stream, Role::posterior), opts.exec);
        const ProbEstimate c = mvt_constraint_prob(prior, ts.Rtilde_I, prior_threshold, opts.mcrep,
                                                   stream_seed(opts, stream, Role::prior), opts.exec);
        if (!(c.value > 0.0))
            throw NumericError(cs.label + ": prior probability of the inequality constraints is zero; "
                                          "the hypothesis lies in the extreme tail");
        out.fIE = f;
        out.cIE = c;
        ratio.numerator(f);
        ratio.denominator(c);
    }

    ratio.finish(out);
    return out;
}

std::string complement_source(std::size_t n_hypotheses)
{
    if (n_hypotheses == 1) return "Not H1";
    return "Not H1-H" + std::to_string(n_hypotheses);
}

void check_weights(std::span<const double> weights, std::size_t expected)
{
    if (weights.size() != expected)
        throw InvalidInput("expected " + std::to_string(expected) + " prior weights, got " +
                           std::to_string(weights.size()));
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("prior weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidInput("prior weights are all zero");
}

} // namespace

double BFComponents::c() const
{
    double v = 1.0;
    if (cE) v *= *cE;
    if (cIE) v *= cIE->value;
    return v;
}

double BFComponents::f() const
{
    double v = 1.0;
    if (fE) v *= *fE;
    if (fIE) v *= fIE->value;
    return v;
}

BFComponents bf_unconstrained(const RegressionFit& fit, const ConstraintSystem& cs, const EngineOptions& opts,
                              std::uint64_t stream)
{
    return compute_bf(fit, cs, opts, stream, nullptr);
}

BFComponents complement_from_union(const ProbEstimate& union_prior, const ProbEstimate& union_post,
                                   std::string source)
{
    BFComponents out;
    out.label = "Hc";
    out.source = std::move(source);
    out.complement = true;
    out.cIE = ProbEstimate{1.0 - union_prior.value, union_prior.std_error, union_prior.exact, union_prior.n_draws};
    out.fIE = ProbEstimate{1.0 - union_post.value, union_post.std_error, union_post.exact, union_post.n_draws};
    if (!(out.cIE->value > 0.0)) throw NumericError("complement has zero prior probability");
    LogRatio ratio;
    ratio.numerator(*out.fIE);
    ratio.denominator(*out.cIE);
    ratio.finish(out);
    return out;
}

std::optional<BFComponents> bf_complement(const RegressionFit& fit, std::span<const ConstraintSystem> hypotheses,
                                          std::span<const BFComponents> components, const EngineOptions& opts)
{
    if (hypotheses.size() != components.size())
        throw InvalidInput("bf_complement: hypotheses and components differ in length");

    std::vector<std::size_t> ineq;
    for (std::size_t t = 0; t < hypotheses.size(); ++t)
        if (hypotheses[t].qE() == 0 && hypotheses[t].qI() > 0) ineq.push_back(t);

    const std::string source = complement_source(hypotheses.size());
    const ProbEstimate none{0.0, 0.0, true, 0};
    if (ineq.empty()) return complement_from_union(none, none, source);

    ProbEstimate u_prior;
    ProbEstimate u_post;
    if (ineq.size() == 1) {
        u_prior = *components[ineq[0]].cIE;
        u_post = *components[ineq[0]].fIE;
    } else {
        std::vector<kernels::LinearRegion> regions;
        Eigen::Index rows = 0;
        for (std::size_t t : ineq) {
            regions.push_back({hypotheses[t].RI, hypotheses[t].rI});
            rows += hypotheses[t].qI();
        }
        Matrix R(rows, fit.k);
        Vector r(rows);
        Eigen::Index at = 0;
        for (const auto& reg : regions) {
            R.middleRows(at, reg.R.rows()) = reg.R;
            r.segment(at, reg.R.rows()) = reg.r;
            at += reg.R.rows();
        }
        const MultivariateT post = fractional_posterior_beta(fit, 1.0);
        MultivariateT prior = fractional_posterior_beta(fit, minimal_fraction(fit));
        prior.location = pseudo_inverse(R) * r;

        const auto n = opts.mcrep;
        auto estimate = [n](std::int64_t hits) {
            const double p = static_cast<double>(hits) / static_cast<double>(n);
            return ProbEstimate{p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), false, n};
        };
        u_prior = estimate(kernels::count_in_union(prior, regions, n,
                                                   stream_seed(opts, kComplementStream, Role::prior), opts.exec));
        u_post = estimate(kernels::count_in_union(post, regions, n,
                                                  stream_seed(opts, kComplementStream, Role::posterior), opts.exec));
    }

    if (1.0 - u_prior.value < 1e-3 + 3.0 * u_prior.std_error) return std::nullopt;
    return complement_from_union(u_prior, u_post, source);
}

std::vector<double> posterior_probabilities(std::span<const double> bf, std::span<const double> prior_weights)
{
    check_weights(prior_weights, bf.size());
    std::vector<double> out(bf.size());
    double total = 0.0;
    for (std::size_t t = 0; t < bf.size(); ++t) {
        if (!(bf[t] >= 0.0) || !std::isfinite(bf[t])) throw InvalidInput("Bayes factors must be finite and nonnegative");
        out[t] = bf[t] * prior_weights[t];
        total += out[t];
    }
    if (!(total > 0.0)) throw NumericError("all weighted Bayes factors are zero");
    for (double& p : out) p /= total;
    return out;
}

std::vector<double> posterior_probabilities(std::span<const BFComponents> components,
                                            std::span<const double> prior_weights)
{
    check_weights(prior_weights, components.size());
    std::vector<double> logw(components.size());
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < components.size(); ++t) {
        logw[t] = prior_weights[t] > 0.0 ? components[t].log_bf_u + std::log(prior_weights[t])
                                         : -std::numeric_limits<double>::infinity();
        max_logw = std::max(max_logw, logw[t]);
    }
    if (!std::isfinite(max_logw)) throw NumericError("all weighted Bayes factors are zero");
    std::vector<double> out(components.size());
    double total = 0.0;
    for (std::size_t t = 0; t < components.size(); ++t) {
        out[t] = std::exp(logw[t] - max_logw);
        total += out[t];
    }
    for (double& p : out) p /= total;
    return out;
}

Matrix bf_matrix(std::span<const double> bf)
{
    const auto n = static_cast<Eigen::Index>(bf.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            m(i, j) = i == j ? 1.0 : bf[static_cast<std::size_t>(i)] / bf[static_cast<std::size_t>(j)];
    return m;
}

Matrix bf_matrix(std::span<const BFComponents> components)
{
    const auto n = static_cast<Eigen::Index>(components.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& a = components[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& b = components[static_cast<std::size_t>(j)];
            if (i == j)
                m(i, j) = 1.0;
            else if (std::isnormal(a.bf_u) && std::isnormal(b.bf_u))
                m(i, j) = a.bf_u / b.bf_u;
            else
                m(i, j) = std::exp(a.log_bf_u - b.log_bf_u);
        }
    }
    return m;
}

ExploratoryResult exploratory_test(const RegressionFit& fit, const EngineOptions& opts)
{
    ExploratoryResult result;
    const std::vector<double> equal(3, 1.0);
    for (Eigen::Index j = 0; j < fit.k; ++j) {
        const std::string& name = fit.coef_names[static_cast<std::size_t>(j)];
        Matrix e = Matrix::Zero(1, fit.k);
        e(0, j) = 1.0;
        const Vector zero = Vector::Zero(1);
        const Matrix none(0, fit.k);
        const Vector none_r(0);

        const std::vector<ConstraintSystem> triple{
            make_constraint_system("H1", name + "<0", none, none_r, -e, zero),
            make_constraint_system("H2", name + "=0", e, zero, none, none_r),
            make_constraint_system("H3", name + ">0", none, none_r, e, zero),
        };
        ExploratoryRow row;
        row.coef = name;
        for (std::size_t h = 0; h < triple.size(); ++h)
            row.components.push_back(compute_bf(fit, triple[h], opts, static_cast<std::uint64_t>(j) * 3 + h, nullptr));
        row.post_probs = posterior_probabilities(std::span<const BFComponents>(row.components), equal);
        row.bf_matrix = bf_matrix(std::span<const BFComponents>(row.components));
        result.rows.push_back(std::move(row));
    }
    return result;
}

TestResult test_hypotheses(const RegressionFit& fit, const std::string& hyp_text,
                           const std::optional<std::vector<double>>& prior_weights, const EngineOptions& opts)
{
    if (opts.mcrep < 1) throw InvalidInput("mcrep must be positive");
    TestResult result;
    result.mcrep = opts.mcrep;
    result.seed = opts.seed;

    const ParsedHypotheses parsed = parse_hypotheses(hyp_text, fit.coef_names);
    if (parsed.exploratory) {
        if (prior_weights) throw InvalidInput("exploratory tests use equal prior probabilities; drop the prior weights");
        result.exploratory = true;
        result.exploratory_rows = exploratory_test(fit, opts);
        return result;
    }

    for (std::size_t t = 0; t < parsed.hypotheses.size(); ++t)
        result.components.push_back(compute_bf(fit, parsed.hypotheses[t], opts, t, &result.warnings));

    if (auto comp = bf_complement(fit, parsed.hypotheses, result.components, opts))
        result.components.push_back(std::move(*comp));

    const std::size_t count = result.components.size();
    std::vector<double> weights = prior_weights.value_or(std::vector<double>(count, 1.0));
    if (weights.size() != count)
        throw InvalidInput("expected " + std::to_string(count) + " prior weights (one per hypothesis" +
                           (result.components.back().complement ? ", including the complement Hc" : "") +
                           "), got " + std::to_string(weights.size()));
    check_weights(weights, count);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double w : weights) result.prior_probs.push_back(w / total);

    result.post_probs = posterior_probabilities(std::span<const BFComponents>(result.components), weights);
    result.bf_matrix = bf_matrix(std::span<const BFComponents>(result.components));
    return result;
}

} // namespace bfreg
