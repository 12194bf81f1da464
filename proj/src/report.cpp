#include "bfreg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace bfreg {

namespace {

std::string fixed3(double v)
{
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string pad_left(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Right-aligned table with a left-aligned row-name column.
std::string table(const std::vector<std::string>& header, const std::vector<std::string>& row_names,
                  const std::vector<std::vector<std::string>>& cells)
{
    std::size_t name_w = 0;
    for (const auto& n : row_names) name_w = std::max(name_w, n.size());
    std::vector<std::size_t> widths(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) {
        widths[j] = header[j].size();
        for (const auto& row : cells) widths[j] = std::max(widths[j], row[j].size());
    }
    std::ostringstream out;
    out << std::string(name_w, ' ');
    for (std::size_t j = 0; j < header.size(); ++j) out << ' ' << pad_left(header[j], widths[j]);
    out << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out << pad_right(row_names[i], name_w);
        for (std::size_t j = 0; j < header.size(); ++j) out << ' ' << pad_left(cells[i][j], widths[j]);
        out << '\n';
    }
    return out.str();
}

std::string opt3(const std::optional<double>& v) { return v ? fixed3(*v) : "NA"; }
std::string opt3(const std::optional<ProbEstimate>& v) { return v ? fixed3(v->value) : "NA"; }

std::string matrix_table(const Matrix& m, const std::vector<std::string>& labels)
{
    std::vector<std::vector<std::string>> cells;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> row;
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(fixed3(m(i, j)));
        cells.push_back(std::move(row));
    }
    return table(labels, labels, cells);
}

void render_exploratory(const TestResult& result, const ReportOptions& options, std::ostringstream& out)
{
    out << "Hypotheses:\n\n"
        << "  H1:   \"X < 0\"\n"
        << "  H2:   \"X = 0\"\n"
        << "  H3:   \"X > 0\"\n\n"
        << "Posterior probabilities for each variable (rounded),\n"
        << "assuming equal prior probabilities:\n\n";

    std::vector<std::string> names{""};
    std::vector<std::vector<std::string>> cells{{"X < 0", "X = 0", "X > 0"}};
    for (const auto& row : result.exploratory_rows.rows) {
        names.push_back(row.coef);
        cells.push_back({fixed3(row.post_probs[0]), fixed3(row.post_probs[1]), fixed3(row.post_probs[2])});
    }
    out << table({"H1", "H2", "H3"}, names, cells);

    const std::vector<std::string> labels{"H1", "H2", "H3"};
    if (options.bf_matrix) {
        out << "\nBayes factors between hypotheses for each variable (rounded):\n";
        for (const auto& row : result.exploratory_rows.rows)
            out << '\n' << row.coef << ":\n" << matrix_table(row.bf_matrix, labels);
    }
    if (options.computation) {
        out << "\nEvidence computation for each variable (rounded):\n";
        for (const auto& row : result.exploratory_rows.rows) {
            std::vector<std::vector<std::string>> comp;
            for (std::size_t h = 0; h < row.components.size(); ++h) {
                const auto& c = row.components[h];
                comp.push_back({opt3(c.cE), opt3(c.cIE), opt3(c.fE), opt3(c.fIE), fixed3(c.bf_u),
                                fixed3(row.post_probs[h])});
            }
            out << '\n' << row.coef << ":\n"
                << table({"c(E)", "c(I|E)", "f(E)", "f(I|E)", "B(t,u)", "PP(t)"}, labels, comp);
        }
    }
}

} // namespace

std::string render_text(const TestResult& result, const ReportOptions& options)
{
    std::ostringstream out;
    if (result.exploratory) {
        render_exploratory(result, options, out);
        return out.str();
    }

    std::vector<std::string> labels;
    for (const auto& c : result.components) labels.push_back(c.label);

    out << "Hypotheses:\n\n";
    for (const auto& c : result.components) out << "  " << c.label << ":   \"" << c.source << "\"\n";
    out << "\nPosterior probability of each hypothesis (rounded):\n\n";
    for (std::size_t t = 0; t < result.components.size(); ++t)
        out << "  " << result.components[t].label << ":   " << fixed3(result.post_probs[t]) << '\n';

    if (options.bf_matrix) {
        out << "\nBayes factors between hypotheses (rounded):\n\n" << matrix_table(result.bf_matrix, labels);
    }
    if (options.computation) {
        std::vector<std::vector<std::string>> cells;
        for (std::size_t t = 0; t < result.components.size(); ++t) {
            const auto& c = result.components[t];
            // The products c and f are reported only when an equality density is involved.
            const std::string cc = c.cE ? fixed3(c.c()) : "NA";
            const std::string ff = c.fE ? fixed3(c.f()) : "NA";
            cells.push_back({opt3(c.cE), opt3(c.cIE), cc, opt3(c.fE), opt3(c.fIE), ff, fixed3(c.bf_u),
                             fixed3(result.post_probs[t])});
        }
        out << "\nEvidence computation (rounded):\n\n"
            << table({"c(E)", "c(I|E)", "c", "f(E)", "f(I|E)", "f", "B(t,u)", "PP(t)"}, labels, cells);
    }
    if (options.ci) {
        std::vector<std::vector<std::string>> cells;
        for (const auto& c : result.components) {
            if (c.ci90)
                cells.push_back({fixed3(c.bf_u), fixed3(c.ci90->low), fixed3(c.ci90->high)});
            else
                cells.push_back({fixed3(c.bf_u), "NA", "NA"});
        }
        out << "\n90% credibility intervals of Monte Carlo Bayes factors (rounded):\n\n"
            << table({"B(t,u)", "lb. (5%)", "ub. (95%)"}, labels, cells);
    }
    if (!result.warnings.empty()) {
        out << "\nNotes:\n";
        for (const auto& w : result.warnings) out << "  " << w << '\n';
    }
    return out.str();
}

namespace {

using nlohmann::json;

json prob_json(const std::optional<ProbEstimate>& p)
{
    if (!p) return nullptr;
    return {{"value", p->value}, {"std_error", p->std_error}, {"exact", p->exact}, {"n_draws", p->n_draws}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json components_json(const BFComponents& c)
{
    json j;
    j["label"] = c.label;
    j["source"] = c.source;
    j["complement"] = c.complement;
    j["cE"] = opt_json(c.cE);
    j["fE"] = opt_json(c.fE);
    j["cIE"] = prob_json(c.cIE);
    j["fIE"] = prob_json(c.fIE);
    j["c"] = c.c();
    j["f"] = c.f();
    j["log_bf_u"] = c.log_bf_u;
    j["bf_u"] = c.bf_u;
    j["ci90"] = c.ci90 ? json::array({c.ci90->low, c.ci90->high}) : json(nullptr);
    return j;
}

} // namespace

std::string render_json(const TestResult& result, const std::map<std::string, std::string>& meta)
{
    json doc;
    doc["schema"] = "bfreg/1";
    doc["seed"] = result.seed;
    doc["mcrep"] = result.mcrep;
    doc["exploratory"] = result.exploratory;
    json input = json::object();
    for (const auto& [key, value] : meta) input[key] = value;
    doc["input"] = input;

    if (result.exploratory) {
        json vars = json::array();
        for (const auto& row : result.exploratory_rows.rows) {
            json v;
            v["coef"] = row.coef;
            json hyps = json::array();
            for (std::size_t h = 0; h < row.components.size(); ++h) {
                json c = components_json(row.components[h]);
                c["post_prob"] = row.post_probs[h];
                hyps.push_back(std::move(c));
            }
            v["hypotheses"] = std::move(hyps);
            v["post_probs"] = row.post_probs;
            v["bf_matrix"] = matrix_json(row.bf_matrix);
            vars.push_back(std::move(v));
        }
        doc["variables"] = std::move(vars);
    } else {
        json hyps = json::array();
        for (std::size_t t = 0; t < result.components.size(); ++t) {
            json c = components_json(result.components[t]);
            c["prior_prob"] = result.prior_probs[t];
            c["post_prob"] = result.post_probs[t];
            hyps.push_back(std::move(c));
        }
        doc["hypotheses"] = std::move(hyps);
        doc["bf_matrix"] = matrix_json(result.bf_matrix);
    }
    doc["warnings"] = result.warnings;
    return doc.dump(2) + "\n";
}

} // namespace bfreg
