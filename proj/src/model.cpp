#include "bfreg/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace bfreg {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// RFC-4180 records: quoted fields may hold delimiters, newlines and "" escapes.
std::vector<std::vector<std::string>> read_records(std::istream& in, char delim)
{
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;

    auto end_field = [&] {
        record.push_back(field_quoted ? field : trim(field));
        field.clear();
        field_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && trim(field).empty()) {
            field.clear();
            in_quotes = true;
            field_quoted = true;
        } else if (c == delim) {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c != '\r') {
            field += c;
        }
    }
    if (in_quotes) throw DataError("CSV: unterminated quoted field");
    if (!field.empty() || !record.empty()) end_record();
    return records;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

std::optional<double> parse_number(const std::string& cell)
{
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
    return value;
}

} // namespace

Eigen::Index Dataset::index_of(const std::string& name) const
{
    const auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) throw DataError("unknown column '" + name + "'");
    return static_cast<Eigen::Index>(it - column_names.begin());
}

Vector Dataset::column(const std::string& name) const { return columns.col(index_of(name)); }

Eigen::Index RegressionFit::index_of(const std::string& name) const
{
    const auto it = std::find(coef_names.begin(), coef_names.end(), name);
    if (it == coef_names.end()) throw InvalidInput("unknown coefficient '" + name + "'");
    return static_cast<Eigen::Index>(it - coef_names.begin());
}

RegressionFit make_fit(std::vector<std::string> coef_names, Vector beta_hat, double s2,
                       Matrix xtx_inv, std::int64_t n)
{
    const auto k = static_cast<std::int64_t>(beta_hat.size());
    if (k < 1) throw InvalidInput("fit: need at least one coefficient");
    if (static_cast<std::int64_t>(coef_names.size()) != k)
        throw InvalidInput("fit: coefficient name count does not match beta_hat");
    if (xtx_inv.rows() != k || xtx_inv.cols() != k)
        throw InvalidInput("fit: (X'X)^-1 must be k x k");
    if (n < k + 2)
        throw DataError("fit: need n >= k + 2 observations (n = " + std::to_string(n) +
                        ", k = " + std::to_string(k) + ")");
    if (!(s2 > 0.0) || !std::isfinite(s2))
        throw DataError("fit: residual sum of squares is zero (exact fit); Bayes factors are undefined");
    if (!beta_hat.allFinite() || !xtx_inv.allFinite())
        throw InvalidInput("fit: non-finite statistics");
    if (!xtx_inv.isApprox(xtx_inv.transpose(), 1e-9))
        throw InvalidInput("fit: (X'X)^-1 is not symmetric");
    Eigen::LLT<Matrix> llt(xtx_inv);
    if (llt.info() != Eigen::Success)
        throw DecompositionError("fit: (X'X)^-1 is not positive definite");

    std::set<std::string> unique(coef_names.begin(), coef_names.end());
    if (unique.size() != coef_names.size()) throw InvalidInput("fit: duplicate coefficient names");

    RegressionFit fit;
    fit.coef_names = std::move(coef_names);
    fit.beta_hat = std::move(beta_hat);
    fit.s2 = s2;
    fit.xtx_inv = 0.5 * (xtx_inv + xtx_inv.transpose());
    fit.n = n;
    fit.k = k;
    return fit;
}

Dataset read_csv(std::istream& in, const CsvOptions& options)
{
    auto records = read_records(in, options.delimiter);
    if (records.empty()) throw DataError("CSV: empty input");

    Dataset data;
    std::size_t width = records.front().size();
    std::size_t first_row = 0;
    if (options.header) {
        data.column_names = records.front();
        first_row = 1;
    } else {
        for (std::size_t j = 0; j < width; ++j) data.column_names.push_back("V" + std::to_string(j + 1));
    }
    std::set<std::string> seen;
    for (const auto& name : data.column_names) {
        if (name.empty()) throw DataError("CSV: empty column name");
        if (!seen.insert(name).second) throw DataError("CSV: duplicate column name '" + name + "'");
    }

    std::vector<const std::vector<std::string>*> kept;
    for (std::size_t i = first_row; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.size() != width)
            throw DataError("CSV: line " + std::to_string(i + 1) + " has " +
                            std::to_string(rec.size()) + " fields, expected " + std::to_string(width));
        if (std::any_of(rec.begin(), rec.end(), is_missing))
            ++data.dropped_rows;
        else
            kept.push_back(&rec);
    }
    if (kept.empty()) throw DataError("CSV: no complete rows");

    const auto n = static_cast<Eigen::Index>(kept.size());
    data.n = n;
    data.columns.resize(n, static_cast<Eigen::Index>(width));
    for (std::size_t j = 0; j < width; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        bool numeric = true;
        for (Eigen::Index i = 0; i < n && numeric; ++i) {
            if (auto v = parse_number((*kept[i])[j]))
                data.columns(i, col) = *v;
            else
                numeric = false;
        }
        if (numeric) continue;

        std::vector<std::string> levels;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& cell = (*kept[i])[j];
            if (std::find(levels.begin(), levels.end(), cell) == levels.end()) levels.push_back(cell);
        }
        if (levels.size() > 2)
            throw DataError("column '" + data.column_names[j] + "': categorical with >2 levels (" +
                            std::to_string(levels.size()) + " found)");
        if (levels.size() < 2)
            throw DataError("column '" + data.column_names[j] +
                            "': non-numeric column with a single level");
        for (Eigen::Index i = 0; i < n; ++i)
            data.columns(i, col) = (*kept[i])[j] == levels[0] ? 0.0 : 1.0;
    }
    return data;
}

Dataset load_csv(const std::string& path, const CsvOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    return read_csv(in, options);
}

Dataset standardize(const Dataset& data, const std::vector<std::string>& which)
{
    if (data.n < 2) throw DataError("standardize: need at least two rows");
    Dataset out = data;
    std::vector<std::string> names = which.empty() ? data.column_names : which;
    const double denom = static_cast<double>(data.n - 1);
    for (const auto& name : names) {
        const Eigen::Index j = data.index_of(name);
        const double mean = data.columns.col(j).mean();
        const Vector centered = data.columns.col(j).array() - mean;
        const double sd = std::sqrt(centered.squaredNorm() / denom);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
            throw DataError("standardize: column '" + name + "' has zero variance");
        out.columns.col(j) = centered / sd;
    }
    return out;
}

Formula parse_formula(const std::string& text)
{
    const auto tilde = text.find('~');
    if (tilde == std::string::npos) throw DataError("formula: missing '~' in '" + text + "'");
    Formula f;
    f.response = trim(text.substr(0, tilde));
    if (f.response.empty()) throw DataError("formula: missing response");

    std::string rhs = text.substr(tilde + 1);
    // Split on '+' and '-' while remembering the sign of each term.
    std::vector<std::pair<char, std::string>> parts;
    char sign = '+';
    std::string cur;
    for (char c : rhs) {
        if (c == '+' || c == '-') {
            parts.emplace_back(sign, trim(cur));
            cur.clear();
            sign = c;
        } else {
            cur += c;
        }
    }
    parts.emplace_back(sign, trim(cur));

    bool first = true;
    for (const auto& [s, term] : parts) {
        if (term.empty()) {
            if (first && s == '+') { first = false; continue; }
            throw DataError("formula: empty term in '" + text + "'");
        }
        first = false;
        if (term == "1") {
            f.intercept = s == '+';
        } else if (term == "0") {
            if (s != '+') throw DataError("formula: '- 0' is not supported");
            f.intercept = false;
        } else if (s == '-') {
            throw DataError("formula: removing term '" + term + "' is not supported");
        } else {
            if (std::find(f.terms.begin(), f.terms.end(), term) != f.terms.end())
                throw DataError("formula: duplicate term '" + term + "'");
            f.terms.push_back(term);
        }
    }
    if (f.terms.empty() && !f.intercept) throw DataError("formula: no coefficients");
    return f;
}

RegressionFit fit_ols(const Matrix& X, const Vector& y, std::vector<std::string> coef_names)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index k = X.cols();
    if (y.size() != n) throw InvalidInput("fit_ols: X and y row counts differ");
    if (n < k + 2)
        throw DataError("fit_ols: need n >= k + 2 observations (n = " + std::to_string(n) +
                        ", k = " + std::to_string(k) + ")");

    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < k) throw DataError("fit_ols: design matrix is rank deficient");

    const Vector beta = qr.solve(y);
    const Vector resid = y - X * beta;
    const double rss = resid.squaredNorm();
    if (!(rss > 1e-24 * std::max(1.0, y.squaredNorm())))
        throw DataError("fit_ols: residual sum of squares is zero (exact fit); Bayes factors are undefined");

    // X P = Q R  =>  (X'X)^-1 = P R^-1 R^-T P'
    const Matrix Rtop = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Matrix Rinv = Rtop.triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
    const Matrix P = qr.colsPermutation();
    const Matrix xtx_inv = P * (Rinv * Rinv.transpose()) * P.transpose();

    return make_fit(std::move(coef_names), beta, rss, xtx_inv, n);
}

RegressionFit fit_ols(const Dataset& data, const std::string& formula)
{
    const Formula f = parse_formula(formula);
    const Vector y = data.column(f.response);

    std::vector<std::string> names;
    std::vector<Vector> cols;
    if (f.intercept) {
        names.emplace_back(kInterceptName);
        cols.push_back(Vector::Ones(data.n));
    }
    for (const auto& term : f.terms) {
        names.push_back(term);
        cols.push_back(data.column(term));
    }
    Matrix X(data.n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = cols[j];
    return fit_ols(X, y, std::move(names));
}

} // namespace bfreg
