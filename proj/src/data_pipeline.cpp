#include "volcal/data_pipeline.hpp"

#include "volcal/errors.hpp"
#include "volcal/fredholm.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace volcal {

namespace {

struct RawQuote {
    double expiry;
    Quote quote;
    std::size_t line;
};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& field, const char* name, std::size_t line) {
    const std::string t = trim(field);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ParseError(std::string("malformed ") + name + " '" + t + "'", line);
    }
    if (used != t.size() || !std::isfinite(v)) throw ParseError(std::string("malformed ") + name + " '" + t + "'", line);
    return v;
}

void check_quote(const RawQuote& q) {
    if (!(q.expiry > 0.0)) throw ParseError("non-positive expiry", q.line);
    if (!(q.quote.strike > 0.0)) throw ParseError("non-positive strike", q.line);
    if (!(q.quote.price > 0.0)) throw ParseError("non-positive price", q.line);
}

// Groups rows by expiry, sorts strikes and rejects duplicates. Exactly two expiries.
QuoteFile group(std::vector<RawQuote> rows) {
    std::map<double, std::vector<RawQuote>> by_expiry;
    for (auto& r : rows) {
        check_quote(r);
        by_expiry[r.expiry].push_back(r);
    }
    if (by_expiry.size() < 2) {
        std::ostringstream msg;
        msg << "missing expiry: need quotes at two expiries, found " << by_expiry.size();
        throw ParseError(msg.str(), 0);
    }
    if (by_expiry.size() > 2) {
        auto third = std::next(by_expiry.begin(), 2);
        throw ParseError("more than two expiries in quote file", third->second.front().line);
    }
    QuoteFile out;
    std::size_t j = 0;
    for (auto& [expiry, list] : by_expiry) {
        std::stable_sort(list.begin(), list.end(),
                         [](const RawQuote& a, const RawQuote& b) { return a.quote.strike < b.quote.strike; });
        for (std::size_t i = 1; i < list.size(); ++i) {
            if (list[i].quote.strike == list[i - 1].quote.strike) {
                std::ostringstream msg;
                msg << "duplicate strike " << list[i].quote.strike << " at expiry " << expiry
                    << " (first on line " << list[i - 1].line << ")";
                throw ParseError(msg.str(), std::max(list[i].line, list[i - 1].line));
            }
        }
        out.slices[j].expiry = expiry;
        for (const auto& r : list) out.slices[j].quotes.push_back(r.quote);
        auto w = out.slices[j].validate();
        out.warnings.insert(out.warnings.end(), w.begin(), w.end());
        ++j;
    }
    return out;
}

// Line on which each element of the top-level "quotes" array starts.
std::vector<std::size_t> quote_entry_lines(const std::string& text) {
    std::vector<std::size_t> lines;
    std::size_t line = 1;
    int depth = 0;
    int quotes_depth = -1;
    bool in_string = false;
    std::string last_string;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (ch == '\n') ++line;
        if (in_string) {
            if (ch == '\\') {
                ++i;
                continue;
            }
            if (ch == '"') {
                in_string = false;
                last_string = current;
            } else {
                current += ch;
            }
            continue;
        }
        switch (ch) {
        case '"':
            in_string = true;
            current.clear();
            break;
        case '[':
            if (depth == 1 && last_string == "quotes") quotes_depth = depth + 1;
            ++depth;
            break;
        case '{':
            if (depth == quotes_depth) lines.push_back(line);
            ++depth;
            break;
        case ']':
        case '}':
            --depth;
            if (depth + 1 == quotes_depth && ch == ']') quotes_depth = -2;
            break;
        case ',':
        case ':':
            break;
        default:
            if (ch != ' ' && ch != '\t' && ch != '\r' && ch != '\n') last_string.clear();
        }
    }
    return lines;
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

void fill_optional(const nlohmann::json& obj, const char* key, std::optional<double>& dst) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number()) throw ParseError(std::string("params.") + key + " must be a number", 0);
    dst = obj[key].get<double>();
}

std::vector<double> quote_sites(const QuoteSlice& slice, const ModelParams& params) {
    std::vector<double> y;
    y.reserve(slice.quotes.size());
    for (const auto& q : slice.quotes) y.push_back(std::log(q.strike / params.s_star));
    return y;
}

double smoothstep5(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }

}  // namespace

QuoteFile parse_quotes_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> columns;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw ParseError("empty quote file", 0);
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) columns.push_back(trim(col));
    }
    const bool has_spread = columns.size() == 5 && columns[3] == "bid" && columns[4] == "ask";
    if (columns.size() < 3 || columns[0] != "expiry" || columns[1] != "strike" || columns[2] != "price" ||
        (columns.size() != 3 && !has_spread))
        throw ParseError("header must be expiry,strike,price[,bid,ask]", line_no);

    std::vector<RawQuote> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != columns.size()) {
            std::ostringstream msg;
            msg << "malformed row: expected " << columns.size() << " fields, found " << fields.size();
            throw ParseError(msg.str(), line_no);
        }
        RawQuote r{parse_number(fields[0], "expiry", line_no), {}, line_no};
        r.quote.strike = parse_number(fields[1], "strike", line_no);
        r.quote.price = parse_number(fields[2], "price", line_no);
        if (has_spread) {
            if (!trim(fields[3]).empty()) r.quote.bid = parse_number(fields[3], "bid", line_no);
            if (!trim(fields[4]).empty()) r.quote.ask = parse_number(fields[4], "ask", line_no);
        }
        rows.push_back(r);
    }
    return group(std::move(rows));
}

QuoteFile parse_quotes_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_of_byte(text, e.byte));
    }
    if (!doc.is_object() || !doc.contains("quotes") || !doc["quotes"].is_array())
        throw ParseError("JSON quote file needs a \"quotes\" array", 0);
    const auto lines = quote_entry_lines(text);
    std::vector<RawQuote> rows;
    const auto& quotes = doc["quotes"];
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const std::size_t line = i < lines.size() ? lines[i] : 0;
        const auto& q = quotes[i];
        auto field = [&](const char* key) {
            if (!q.is_object() || !q.contains(key) || !q[key].is_number()) {
                std::ostringstream msg;
                msg << "malformed quote " << i << ": missing numeric '" << key << "'";
                throw ParseError(msg.str(), line);
            }
            return q[key].get<double>();
        };
        RawQuote r{field("T"), {}, line};
        r.quote.strike = field("K");
        r.quote.price = field("price");
        if (q.contains("bid") && q["bid"].is_number()) r.quote.bid = q["bid"].get<double>();
        if (q.contains("ask") && q["ask"].is_number()) r.quote.ask = q["ask"].get<double>();
        rows.push_back(r);
    }
    QuoteFile out = group(std::move(rows));
    if (doc.contains("params")) {
        const auto& p = doc["params"];
        if (!p.is_object()) throw ParseError("\"params\" must be an object", 0);
        fill_optional(p, "s_star", out.params.s_star);
        fill_optional(p, "t_star", out.params.t_star);
        fill_optional(p, "r", out.params.r);
        fill_optional(p, "mu", out.params.mu);
        fill_optional(p, "T1", out.params.T1);
        fill_optional(p, "T2", out.params.T2);
        fill_optional(p, "sigma0", out.params.sigma0);
        const std::optional<double>* declared[2] = {&out.params.T1, &out.params.T2};
        for (int j = 0; j < 2; ++j) {
            if (*declared[j] && **declared[j] != out.slices[j].expiry) {
                std::ostringstream msg;
                msg << "params.T" << j + 1 << " = " << **declared[j] << " but quotes are at "
                    << out.slices[0].expiry << " and " << out.slices[1].expiry;
                throw ParseError(msg.str(), 0);
            }
        }
    }
    return out;
}

QuoteFile load_quotes(const std::string& path, QuoteFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open quote file " + path);
    if (format == QuoteFormat::detect) {
        const auto dot = path.rfind('.');
        std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        format = ext == "json" ? QuoteFormat::json : QuoteFormat::csv;
    }
    if (format == QuoteFormat::csv) return parse_quotes_csv(in);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_quotes_json(buffer.str());
}

void write_quotes_csv(std::ostream& out, const std::array<QuoteSlice, 2>& slices) {
    const auto old = out.precision(17);
    bool spread = false;
    for (const auto& s : slices)
        for (const auto& q : s.quotes) spread = spread || q.bid || q.ask;
    out << (spread ? "expiry,strike,price,bid,ask\n" : "expiry,strike,price\n");
    for (const auto& s : slices) {
        for (const auto& q : s.quotes) {
            out << s.expiry << ',' << q.strike << ',' << q.price;
            if (spread) {
                out << ',';
                if (q.bid) out << *q.bid;
                out << ',';
                if (q.ask) out << *q.ask;
            }
            out << '\n';
        }
    }
    out.precision(old);
}

// ---------------------------------------------------------------------------
// Smoothing spline

double SmoothedCurve::max_residual() const {
    double m = 0.0;
    for (double r : residuals) m = std::max(m, std::abs(r));
    return m;
}

namespace {

// Banded pieces of the Reinsch formulation for knots x: R (tridiagonal), Q (n x (n-2),
// three nonzeros per column) and P = Q^T Q (pentadiagonal).
struct Reinsch {
    std::size_t n = 0;
    std::vector<double> h;
    std::vector<double> r0, r1;      // R diagonal and superdiagonal
    std::vector<double> p0, p1, p2;  // Q^T Q bands
    std::vector<double> qa, qb, qc;  // column i of Q: rows i, i+1, i+2

    explicit Reinsch(std::span<const double> x) : n(x.size()) {
        const std::size_t m = n - 2;
        h.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];
        r0.resize(m);
        r1.assign(m, 0.0);
        qa.resize(m);
        qb.resize(m);
        qc.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            r0[i] = (h[i] + h[i + 1]) / 3.0;
            if (i + 1 < m) r1[i] = h[i + 1] / 6.0;
            qa[i] = 1.0 / h[i];
            qb[i] = -1.0 / h[i] - 1.0 / h[i + 1];
            qc[i] = 1.0 / h[i + 1];
        }
        p0.resize(m);
        p1.assign(m, 0.0);
        p2.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            p0[i] = qa[i] * qa[i] + qb[i] * qb[i] + qc[i] * qc[i];
            if (i + 1 < m) p1[i] = qb[i] * qa[i + 1] + qc[i] * qb[i + 1];
            if (i + 2 < m) p2[i] = qc[i] * qa[i + 2];
        }
    }

    std::vector<double> Qt(std::span<const double> v) const {
        std::vector<double> out(n - 2);
        for (std::size_t i = 0; i < n - 2; ++i) out[i] = qa[i] * v[i] + qb[i] * v[i + 1] + qc[i] * v[i + 2];
        return out;
    }

    std::vector<double> Q(std::span<const double> g) const {
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n - 2; ++i) {
            out[i] += qa[i] * g[i];
            out[i + 1] += qb[i] * g[i];
            out[i + 2] += qc[i] * g[i];
        }
        return out;
    }
};

// LDL^T of the symmetric pentadiagonal matrix with bands (b0, b1, b2).
struct BandLDLT {
    std::vector<double> D, l1, l2;

    BandLDLT(const std::vector<double>& b0, const std::vector<double>& b1, const std::vector<double>& b2) {
        const std::size_t m = b0.size();
        D.resize(m);
        l1.assign(m, 0.0);
        l2.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double d = b0[i];
            if (i >= 1) d -= l1[i - 1] * l1[i - 1] * D[i - 1];
            if (i >= 2) d -= l2[i - 2] * l2[i - 2] * D[i - 2];
            if (!(d > 0.0)) throw ValidationError("smoothing system is not positive definite");
            D[i] = d;
            if (i + 1 < m) {
                double v = b1[i];
                if (i >= 1) v -= l2[i - 1] * l1[i - 1] * D[i - 1];
                l1[i] = v / d;
            }
            if (i + 2 < m) l2[i] = b2[i] / d;
        }
    }

    std::vector<double> solve(std::vector<double> z) const {
        const std::size_t m = D.size();
        for (std::size_t i = 0; i < m; ++i) {
            if (i >= 1) z[i] -= l1[i - 1] * z[i - 1];
            if (i >= 2) z[i] -= l2[i - 2] * z[i - 2];
        }
        for (std::size_t i = 0; i < m; ++i) z[i] /= D[i];
        for (std::size_t i = m; i-- > 0;) {
            if (i + 1 < m) z[i] -= l1[i] * z[i + 1];
            if (i + 2 < m) z[i] -= l2[i] * z[i + 2];
        }
        return z;
    }

    // Sum over the pentadiagonal band of inv(B)_ij P_ij, using only the band of inv(B).
    double band_trace(const std::vector<double>& p0, const std::vector<double>& p1,
                      const std::vector<double>& p2) const {
        const std::size_t m = D.size();
        std::vector<double> s0(m, 0.0), s1(m, 0.0), s2(m, 0.0);
        for (std::size_t i = m; i-- > 0;) {
            const double a = i + 1 < m ? l1[i] : 0.0;
            const double c = i + 2 < m ? l2[i] : 0.0;
            if (i + 2 < m) s2[i] = -a * s1[i + 1] - c * s0[i + 2];
            if (i + 1 < m) s1[i] = -a * s0[i + 1] - (i + 2 < m ? c * s1[i + 1] : 0.0);
            s0[i] = 1.0 / D[i] - a * s1[i] - c * s2[i];
        }
        double t = 0.0;
        for (std::size_t i = 0; i < m; ++i) t += s0[i] * p0[i] + 2.0 * (s1[i] * p1[i] + s2[i] * p2[i]);
        return t;
    }
};

SmoothedCurve fit(const Reinsch& rs, std::span<const double> x, std::span<const double> v, double lambda,
                  bool with_gcv) {
    const std::size_t m = rs.n - 2;
    std::vector<double> b0(m), b1(m), b2(m);
    for (std::size_t i = 0; i < m; ++i) {
        b0[i] = rs.r0[i] + lambda * rs.p0[i];
        b1[i] = rs.r1[i] + lambda * rs.p1[i];
        b2[i] = lambda * rs.p2[i];
    }
    const BandLDLT ldlt(b0, b1, b2);
    const std::vector<double> gamma = ldlt.solve(rs.Qt(v));
    const std::vector<double> Qg = rs.Q(gamma);

    SmoothedCurve out;
    out.lambda = lambda;
    std::vector<double> g(rs.n), second(rs.n, 0.0);
    out.residuals.resize(rs.n);
    double rss = 0.0;
    for (std::size_t i = 0; i < rs.n; ++i) {
        g[i] = v[i] - lambda * Qg[i];
        out.residuals[i] = g[i] - v[i];
        rss += out.residuals[i] * out.residuals[i];
    }
    for (std::size_t i = 0; i < m; ++i) second[i + 1] = gamma[i];
    out.spline = CubicSpline({x.begin(), x.end()}, std::move(g), std::move(second));
    if (with_gcv && lambda > 0.0) {
        const double n = static_cast<double>(rs.n);
        const double one_minus_trace = lambda * ldlt.band_trace(rs.p0, rs.p1, rs.p2);
        out.gcv = n * rss / (one_minus_trace * one_minus_trace);
    }
    return out;
}

void check_sites(std::span<const double> x, std::span<const double> v) {
    if (x.size() != v.size()) throw ValidationError("smoothing spline data sizes differ");
    if (x.size() < 3) throw ValidationError("smoothing spline needs at least three points");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw ValidationError("smoothing sites must be strictly increasing");
    for (double f : v)
        if (!std::isfinite(f)) throw ValidationError("smoothing data must be finite");
}

}  // namespace

SmoothedCurve smoothing_spline(std::span<const double> x, std::span<const double> v, double lambda) {
    check_sites(x, v);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("smoothing lambda must be >= 0");
    return fit(Reinsch(x), x, v, lambda, true);
}

SmoothedCurve smoothing_spline_gcv(std::span<const double> x, std::span<const double> v, const GcvOptions& opts) {
    check_sites(x, v);
    if (opts.points < 2 || !(opts.log10_max > opts.log10_min))
        throw ValidationError("GCV grid needs at least two points and an increasing range");
    const Reinsch rs(x);
    const double hbar = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    const double scale = hbar * hbar * hbar;
    SmoothedCurve best;
    bool have = false;
    for (std::size_t k = 0; k < opts.points; ++k) {
        const double p = opts.log10_min +
                         (opts.log10_max - opts.log10_min) * static_cast<double>(k) / static_cast<double>(opts.points - 1);
        SmoothedCurve c = fit(rs, x, v, scale * std::pow(10.0, p), true);
        if (!std::isfinite(c.gcv)) continue;
        if (!have || c.gcv < best.gcv) {
            best = std::move(c);
            have = true;
        }
    }
    if (!have) throw ValidationError("GCV score is undefined on the whole lambda grid");
    return best;
}

SmoothedCurve smooth_to_c2(const QuoteSlice& slice, std::optional<double> lambda, const Grid& grid,
                           const ModelParams& params) {
    const double tau = slice.expiry - params.t_star;
    if (!(tau > 0.0)) throw DomainError("expiry must follow the valuation time");
    const double c = params.c();
    const double d = params.d();
    const std::vector<double> y_all = quote_sites(slice, params);
    std::vector<double> y, W;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < y_all.size(); ++i) {
        if (std::abs(y_all[i]) >= grid.B()) continue;
        const auto& q = slice.quotes[i];
        y.push_back(y_all[i]);
        W.push_back(std::exp(-c * y_all[i] - d * tau) *
                    (q.price - bs_call_price(params, q.strike, tau, params.sigma0)));
        if (std::abs(y_all[i]) <= grid.b() * (1.0 + 1e-12)) ++inside;
    }
    if (inside < 4) {
        std::ostringstream msg;
        msg << "too few quotes: " << inside << " inside omega at T=" << slice.expiry << ", need 4";
        throw ValidationError(msg.str());
    }
    return lambda ? smoothing_spline(y, W, *lambda) : smoothing_spline_gcv(y, W);
}

std::vector<double> extend_data(const SmoothedCurve& curve, const Grid& grid, std::optional<double> inner) {
    const double a = inner.value_or(grid.b());
    if (!(grid.B() > grid.b())) throw ValidationError("extension needs B > b");
    if (!(a > 0.0) || !(a < grid.B())) throw ValidationError("extension start must lie in (0, B)");
    const double outer = a + 0.5 * (grid.B() - a);
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double y = grid.node(i);
        const double t = std::abs(y);
        if (t >= outer) continue;
        const double m = t <= a ? 1.0 : 1.0 - smoothstep5((t - a) / (outer - a));
        out[i] = m * curve(y);
    }
    return out;
}

std::vector<double> second_derivative(const SmoothedCurve& curve, const Grid& grid) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = curve.second_derivative(grid.node(i));
    return out;
}

double infer_sigma0(const QuoteSlice& slice, const ModelParams& params) {
    const std::vector<double> y = quote_sites(slice, params);
    if (y.size() < 2) throw ValidationError("need at least two quotes to infer sigma0");
    if (y.front() > 0.0 || y.back() < 0.0)
        throw ValidationError("no quotes on both sides of the spot strike; pass sigma0 explicitly");
    std::vector<double> u;
    for (const auto& q : slice.quotes) u.push_back(q.price);
    const double atm = CubicSpline::natural(y, u)(0.0);
    ModelParams p = params;
    p.T1 = slice.expiry;
    return implied_vol(p, atm);
}

PipelineResult run_pipeline(const std::array<QuoteSlice, 2>& slices, ModelParams params, const Grid& grid,
                            const PipelineOptions& opts) {
    PipelineResult out;
    for (const auto& s : slices) {
        auto w = s.validate();
        out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    }
    params.T1 = slices[0].expiry;
    params.T2 = slices[1].expiry;
    params.sigma0 = opts.sigma0 ? *opts.sigma0 : infer_sigma0(slices[0], params);
    params.validate();
    out.params = params;

    const double c = params.c();
    const double d = params.d();
    for (int j = 0; j < 2; ++j) {
        const double tau = params.tau(j + 1);
        out.smoothed[j] = smooth_to_c2(slices[j], opts.lambda, grid, params);
        auto& cv = out.curves;
        cv.W[j] = extend_data(out.smoothed[j], grid, opts.extension_inner);
        cv.V[j].resize(grid.size());
        cv.U[j].resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double y = grid.node(i);
            cv.V[j][i] = std::exp(c * y + d * tau) * cv.W[j][i];
            cv.U[j][i] = bs_call_price(params, params.s_star * std::exp(y), tau, params.sigma0) + cv.V[j][i];
        }
        cv.Wxx[j].clear();
        for (std::size_t i = grid.omega_begin(); i <= grid.omega_end(); ++i)
            cv.Wxx[j].push_back(out.smoothed[j].second_derivative(grid.node(i)));
        cv.w[j] = rhs_w(cv.Wxx[j], tau, params, grid);
    }
    return out;
}

}  // namespace volcal
