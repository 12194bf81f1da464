#include "bfreg/hyparse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <variant>

namespace bfreg {

namespace {

enum class Tok { name, number, lparen, rparen, comma, eq, lt, gt, amp, end };

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    Eigen::Index coef = -1;
    std::size_t pos = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

class Lexer {
public:
    Lexer(std::string_view text, const std::vector<std::string>& names) : text_(text), names_(names) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ >= text_.size()) break;
            out.push_back(next());
        }
        out.push_back({Tok::end, "", 0.0, -1, pos_});
        return out;
    }

private:
    Token next()
    {
        const std::size_t start = pos_;
        const char c = text_[pos_];

        if (c == '(' || ident_start(c)) {
            if (auto tok = literal_name(start)) return *tok;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' ||
            (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))))
            return number(start);
        if (ident_start(c)) {
            while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
            const std::string name(text_.substr(start, pos_ - start));
            throw ParseError("unknown coefficient '" + name + "' at position " + std::to_string(start));
        }
        ++pos_;
        switch (c) {
        case '(': return {Tok::lparen, "(", 0.0, -1, start};
        case ')': return {Tok::rparen, ")", 0.0, -1, start};
        case ',': return {Tok::comma, ",", 0.0, -1, start};
        case '=': return {Tok::eq, "=", 0.0, -1, start};
        case '<': return {Tok::lt, "<", 0.0, -1, start};
        case '>': return {Tok::gt, ">", 0.0, -1, start};
        case '&': return {Tok::amp, "&", 0.0, -1, start};
        default:
            throw ParseError(std::string("malformed token '") + c + "' at position " + std::to_string(start));
        }
    }

    // Longest coefficient name matching at `start` on an identifier boundary.
    std::optional<Token> literal_name(std::size_t start)
    {
        std::optional<Eigen::Index> best;
        std::size_t best_len = 0;
        for (std::size_t j = 0; j < names_.size(); ++j) {
            const auto& name = names_[j];
            if (name.size() <= best_len || text_.compare(start, name.size(), name) != 0) continue;
            const std::size_t after = start + name.size();
            if (after < text_.size() && ident_char(text_[after]) && ident_char(name.back())) continue;
            best = static_cast<Eigen::Index>(j);
            best_len = name.size();
        }
        if (!best) return std::nullopt;
        pos_ = start + best_len;
        return Token{Tok::name, names_[static_cast<std::size_t>(*best)], 0.0, *best, start};
    }

    Token number(std::size_t start)
    {
        std::size_t end = pos_ + 1;
        while (end < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
                text_[end] == 'e' || text_[end] == 'E' ||
                ((text_[end] == '-' || text_[end] == '+') && (text_[end - 1] == 'e' || text_[end - 1] == 'E'))))
            ++end;
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + end;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last || !std::isfinite(value))
            throw ParseError("malformed number '" + std::string(text_.substr(start, end - start)) +
                             "' at position " + std::to_string(start));
        pos_ = end;
        return {Tok::number, std::string(text_.substr(start, end - start)), value, -1, start};
    }

    std::string_view text_;
    const std::vector<std::string>& names_;
    std::size_t pos_ = 0;
};

// A member of an operand: coefficient index or numeric literal.
using Member = std::variant<Eigen::Index, double>;

struct Operand {
    std::vector<Member> members;
};

struct RawRow {
    Vector coefs;
    double rhs;
};

class ChainParser {
public:
    ChainParser(const std::vector<Token>& toks, Eigen::Index k) : toks_(toks), k_(k) {}

    void parse(std::vector<RawRow>& eq, std::vector<RawRow>& ineq)
    {
        if (peek().kind == Tok::end) throw ParseError("empty hypothesis");
        chain(eq, ineq);
        while (peek().kind == Tok::amp) {
            ++i_;
            chain(eq, ineq);
        }
        if (peek().kind != Tok::end)
            throw ParseError("unexpected '" + peek().text + "' at position " + std::to_string(peek().pos));
    }

private:
    const Token& peek() const { return toks_[i_]; }

    void chain(std::vector<RawRow>& eq, std::vector<RawRow>& ineq)
    {
        Operand left = operand();
        bool any = false;
        while (peek().kind == Tok::eq || peek().kind == Tok::lt || peek().kind == Tok::gt) {
            const Tok cmp = toks_[i_++].kind;
            Operand right = operand();
            emit(left, cmp, right, eq, ineq);
            left = std::move(right);
            any = true;
        }
        if (!any) throw ParseError("a constraint needs at least two operands and a comparator");
    }

    Operand operand()
    {
        const Token& t = toks_[i_];
        switch (t.kind) {
        case Tok::name: ++i_; return {{Member{t.coef}}};
        case Tok::number: ++i_; return {{Member{t.number}}};
        case Tok::lparen: {
            ++i_;
            Operand group;
            while (true) {
                const Token& m = toks_[i_];
                if (m.kind != Tok::name)
                    throw ParseError("expected a coefficient name inside '(...)' at position " +
                                     std::to_string(m.pos));
                group.members.emplace_back(m.coef);
                ++i_;
                if (peek().kind == Tok::comma) { ++i_; continue; }
                if (peek().kind == Tok::rparen) { ++i_; break; }
                throw ParseError("expected ',' or ')' at position " + std::to_string(peek().pos));
            }
            return group;
        }
        case Tok::end: throw ParseError("hypothesis ends where an operand was expected");
        default:
            throw ParseError("unexpected '" + t.text + "' at position " + std::to_string(t.pos));
        }
    }

    // Adds +sign * member to (coefs, rhs) where the constraint reads coefs.beta (op) rhs.
    void accumulate(const Member& m, double sign, Vector& coefs, double& rhs) const
    {
        if (const auto* idx = std::get_if<Eigen::Index>(&m))
            coefs(*idx) += sign;
        else
            rhs -= sign * std::get<double>(m);
    }

    void emit(const Operand& a, Tok cmp, const Operand& b, std::vector<RawRow>& eq,
              std::vector<RawRow>& ineq) const
    {
        for (const auto& ma : a.members) {
            for (const auto& mb : b.members) {
                Vector coefs = Vector::Zero(k_);
                double rhs = 0.0;
                // ">" and "=": a - b (op) 0.  "<": b - a > 0.
                const double sa = cmp == Tok::lt ? -1.0 : 1.0;
                accumulate(ma, sa, coefs, rhs);
                accumulate(mb, -sa, coefs, rhs);
                if (coefs.isZero(0.0))
                    throw ParseError("constraint between constants or a coefficient and itself");
                if (cmp == Tok::eq) {
                    Eigen::Index lead = 0;
                    while (coefs(lead) == 0.0) ++lead;
                    if (coefs(lead) < 0.0) {
                        coefs = -coefs;
                        rhs = -rhs;
                    }
                    eq.push_back({coefs, rhs + 0.0});
                } else {
                    ineq.push_back({coefs, rhs + 0.0});
                }
            }
        }
    }

    const std::vector<Token>& toks_;
    Eigen::Index k_;
    std::size_t i_ = 0;
};

std::string strip_spaces(std::string_view s)
{
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

std::pair<Matrix, Vector> stack(const std::vector<RawRow>& rows, Eigen::Index k)
{
    Matrix R(static_cast<Eigen::Index>(rows.size()), k);
    Vector r(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        R.row(static_cast<Eigen::Index>(i)) = rows[i].coefs.transpose();
        r(static_cast<Eigen::Index>(i)) = rows[i].rhs;
    }
    return {R, r};
}

// Keeps equality rows that add rank; a dependent row must agree with the kept ones.
std::vector<RawRow> collapse_equalities(const std::vector<RawRow>& rows, Eigen::Index k)
{
    std::vector<RawRow> kept;
    for (const auto& row : rows) {
        if (kept.empty()) {
            kept.push_back(row);
            continue;
        }
        auto [R, r] = stack(kept, k);
        Matrix Rplus(R.rows() + 1, k);
        Rplus << R, row.coefs.transpose();
        if (numerical_rank(Rplus) > R.rows()) {
            kept.push_back(row);
            continue;
        }
        // row = lambda' R  =>  consistency requires rhs = lambda' r.
        const Vector lambda = pseudo_inverse(R.transpose()) * row.coefs;
        const double implied = lambda.dot(r);
        if (std::abs(implied - row.rhs) > 1e-9 * std::max(1.0, std::abs(row.rhs)))
            throw InfeasibleHypothesis("inconsistent equality constraints");
    }
    return kept;
}

std::vector<RawRow> drop_duplicate_rows(const std::vector<RawRow>& rows)
{
    std::vector<RawRow> out;
    for (const auto& row : rows) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const RawRow& o) {
            return o.rhs == row.rhs && o.coefs == row.coefs;
        });
        if (!dup) out.push_back(row);
    }
    return out;
}

std::vector<RawRow> unstack(const Matrix& R, const Vector& r)
{
    std::vector<RawRow> rows;
    for (Eigen::Index i = 0; i < R.rows(); ++i) rows.push_back({R.row(i).transpose(), r(i)});
    return rows;
}

std::string format_number(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

ConstraintSystem make_constraint_system(std::string label, std::string source, Matrix RE, Vector rE,
                                        Matrix RI, Vector rI)
{
    const Eigen::Index k = std::max(RE.cols(), RI.cols());
    if (RE.rows() == 0) RE.resize(0, k);
    if (RI.rows() == 0) RI.resize(0, k);
    if (RE.cols() != k || RI.cols() != k || rE.size() != RE.rows() || rI.size() != RI.rows())
        throw InvalidInput("constraint system: dimension mismatch");
    if (RE.rows() + RI.rows() == 0) throw InvalidInput("constraint system: no constraints");
    for (Eigen::Index i = 0; i < RE.rows(); ++i)
        if (RE.row(i).isZero(0.0)) throw InvalidInput("constraint system: zero equality row");
    for (Eigen::Index i = 0; i < RI.rows(); ++i)
        if (RI.row(i).isZero(0.0)) throw InvalidInput("constraint system: zero inequality row");

    const auto eq = collapse_equalities(drop_duplicate_rows(unstack(RE, rE)), k);
    const auto ineq = drop_duplicate_rows(unstack(RI, rI));

    ConstraintSystem cs;
    cs.label = std::move(label);
    cs.source = std::move(source);
    std::tie(cs.RE, cs.rE) = stack(eq, k);
    std::tie(cs.RI, cs.rI) = stack(ineq, k);
    return cs;
}

ParsedHypotheses parse_hypotheses(std::string_view text, const std::vector<std::string>& coef_names)
{
    ParsedHypotheses out;
    if (strip_spaces(text) == "exploratory") {
        out.exploratory = true;
        return out;
    }
    const auto k = static_cast<Eigen::Index>(coef_names.size());

    std::size_t start = 0;
    int index = 0;
    while (start <= text.size()) {
        const std::size_t semi = std::min(text.find(';', start), text.size());
        const std::string_view segment = text.substr(start, semi - start);
        ++index;
        const std::string label = "H" + std::to_string(index);
        const std::string source = strip_spaces(segment);
        if (source.empty()) throw ParseError(label + ": empty hypothesis");

        try {
            const auto toks = Lexer(segment, coef_names).run();
            std::vector<RawRow> eq;
            std::vector<RawRow> ineq;
            ChainParser(toks, k).parse(eq, ineq);
            auto [RE, rE] = stack(eq, k);
            auto [RI, rI] = stack(ineq, k);
            out.hypotheses.push_back(
                make_constraint_system(label, source, std::move(RE), std::move(rE), std::move(RI), std::move(rI)));
        } catch (const ParseError& e) {
            throw ParseError(label + " \"" + source + "\": " + e.what());
        } catch (const InfeasibleHypothesis& e) {
            throw InfeasibleHypothesis(label + " \"" + source + "\": " + e.what());
        }
        start = semi + 1;
    }
    return out;
}

Diagnostics validate(const ConstraintSystem& cs)
{
    const Eigen::Index k = cs.k();
    Diagnostics diag;
    diag.rank_RE = numerical_rank(cs.RE);
    if (diag.rank_RE != cs.qE())
        throw InfeasibleHypothesis(cs.label + ": equality rows are linearly dependent");

    if (cs.qE() == k) {
        // Everything pinned: each inequality is a fixed number.
        const Vector beta = pseudo_inverse(cs.RE) * cs.rE;
        for (Eigen::Index i = 0; i < cs.qI(); ++i)
            if (!(cs.RI.row(i).dot(beta) > cs.rI(i)))
                throw InfeasibleHypothesis(cs.label + ": equalities violate inequality row " + std::to_string(i + 1));
        if (cs.qI() > 0) diag.notes.emplace_back("inequalities are implied by the equalities");
        diag.rank_Rtilde_I = 0;
        return diag;
    }

    const Matrix D = null_space_rows(cs.RE);
    const Matrix Rt = cs.RI * D.transpose();
    const Vector rt = cs.rI - cs.RI * (pseudo_inverse(cs.RE) * cs.rE);

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < Rt.rows(); ++i) {
        const double scale = std::max(1.0, cs.RI.row(i).norm());
        if (Rt.row(i).norm() <= 1e-10 * scale) {
            if (rt(i) >= -1e-12 * scale)
                throw InfeasibleHypothesis(cs.label + ": inequality row " + std::to_string(i + 1) +
                                           " reduces to 0 > " + format_number(rt(i)));
            diag.notes.push_back("inequality row " + std::to_string(i + 1) + " is implied by the equalities");
        } else {
            active.push_back(i);
        }
    }
    for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::size_t b = a + 1; b < active.size(); ++b) {
            const auto i = active[a];
            const auto j = active[b];
            const double ni = Rt.row(i).norm();
            const double nj = Rt.row(j).norm();
            if ((Rt.row(i) / ni + Rt.row(j) / nj).norm() < 1e-10 && rt(i) / ni + rt(j) / nj >= -1e-12)
                throw InfeasibleHypothesis(cs.label + ": inequality rows " + std::to_string(i + 1) + " and " +
                                           std::to_string(j + 1) + " cannot hold together");
        }
    }

    Matrix Ra(static_cast<Eigen::Index>(active.size()), Rt.cols());
    for (std::size_t a = 0; a < active.size(); ++a) Ra.row(static_cast<Eigen::Index>(a)) = Rt.row(active[a]);
    diag.rank_Rtilde_I = numerical_rank(Ra);
    diag.Rtilde_I_full_row_rank = diag.rank_Rtilde_I == Ra.rows();
    return diag;
}

std::string render(const ConstraintSystem& cs, const std::vector<std::string>& coef_names)
{
    auto one_row = [&](const Vector& row, double rhs, const char* op) {
        std::vector<Eigen::Index> pos;
        std::vector<Eigen::Index> neg;
        for (Eigen::Index j = 0; j < row.size(); ++j) {
            if (row(j) == 1.0) pos.push_back(j);
            else if (row(j) == -1.0) neg.push_back(j);
            else if (row(j) != 0.0) throw InvalidInput(cs.label + ": row is not expressible in hypothesis syntax");
        }
        const auto name = [&](Eigen::Index j) { return coef_names.at(static_cast<std::size_t>(j)); };
        const std::string o(op);
        if (pos.size() == 1 && neg.empty()) return name(pos[0]) + o + format_number(rhs);
        if (neg.size() == 1 && pos.empty()) {
            // -a > c  <=>  a < -c
            return name(neg[0]) + (o == ">" ? "<" : o) + format_number(-rhs + 0.0);
        }
        if (pos.size() == 1 && neg.size() == 1 && rhs == 0.0) return name(pos[0]) + o + name(neg[0]);
        throw InvalidInput(cs.label + ": row is not expressible in hypothesis syntax");
    };

    std::vector<std::string> parts;
    for (Eigen::Index i = 0; i < cs.qE(); ++i) parts.push_back(one_row(cs.RE.row(i).transpose(), cs.rE(i), "="));
    for (Eigen::Index i = 0; i < cs.qI(); ++i) parts.push_back(one_row(cs.RI.row(i).transpose(), cs.rI(i), ">"));
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " & " : "") + parts[i];
    return out;
}

} // namespace bfreg
