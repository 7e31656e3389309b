#include "volcal/cli.hpp"

#include "volcal/errors.hpp"
#include "volcal/forward.hpp"
#include "volcal/fredholm.hpp"
#include "volcal/kernels.hpp"
#include "volcal/parallel.hpp"
#include "volcal/spline.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace volcal::cli {

using nlohmann::json;

namespace {

constexpr int kDigits = 17;

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename T>
void read_key(const json& j, const char* key, std::optional<T>& dst) {
    if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }) == known.end())
            throw ValidationError("unknown key '" + item.key() + "' in " + where);
    }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json params_json(const ModelParams& p) {
    return {{"s_star", p.s_star}, {"t_star", p.t_star}, {"r", p.r},   {"mu", p.mu},
            {"sigma0", p.sigma0}, {"T1", p.T1},         {"T2", p.T2}};
}

json grid_json(const Grid& g) {
    return {{"b", g.b()}, {"B", g.B()}, {"n", g.size()}, {"h", g.h()}, {"omega_nodes", g.omega_size()}};
}

json report_json(const UniquenessReport& r) {
    return {{"margin1", r.margin1},
            {"margin2", r.margin2},
            {"rho", r.rho},
            {"A_norm", {{r.A_norm[0][0], r.A_norm[0][1]}, {r.A_norm[1][0], r.A_norm[1][1]}}},
            {"A1_bound", {r.A1_bound[0], r.A1_bound[1]}},
            {"A2_bound", {r.A2_bound[0], r.A2_bound[1]}},
            {"analytic_pass", r.analytic_pass()},
            {"numeric_pass", r.numeric_pass()},
            {"pass", r.pass()},
            {"verdict", r.verdict()}};
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::filesystem::path p(dir.empty() ? "." : dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p)) throw ValidationError("cannot create output directory " + p.string());
    return p;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + path.string());
    f.precision(kDigits);
    return f;
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto f = open_output(path);
    f << j.dump(2) << '\n';
    if (!f) throw ValidationError("failed writing " + path.string());
}

double bump(double y, double amplitude, double center, double width) {
    const double t = (y - center) / width;
    if (std::abs(t) >= 1.0) return 0.0;
    const double s = 1.0 - t * t;
    return amplitude * s * s * s * s;
}

// Perturbation pair from a y,f0,f1 CSV, spline-interpolated onto the omega nodes.
PerturbationPair read_perturbation(const std::string& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open perturbation file " + path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> y, f0, f1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.find_first_of("yf") == 0) continue;  // header
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
            throw ParseError("expected y,f0,f1", line_no);
        try {
            y.push_back(std::stod(a));
            f0.push_back(std::stod(b));
            f1.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw ParseError("malformed number in perturbation file", line_no);
        }
    }
    if (y.size() < 2) throw ValidationError("perturbation file needs at least two rows");
    const auto s0 = CubicSpline::natural(y, f0);
    const auto s1 = CubicSpline::natural(y, f1);
    return PerturbationPair::sample(
        grid, [&](double t) { return t < y.front() || t > y.back() ? 0.0 : s0(t); },
        [&](double t) { return t < y.front() || t > y.back() ? 0.0 : s1(t); });
}

PerturbationPair build_perturbation(const RunConfig& cfg, const Grid& grid) {
    if (!cfg.synth.perturbation_file.empty()) return read_perturbation(cfg.synth.perturbation_file, grid);
    const double b = grid.b();
    auto sum = [&](const std::string& target) {
        return [&cfg, b, target](double y) {
            double v = 0.0;
            for (const auto& bp : cfg.synth.bumps)
                if (bp.target == target)
                    v += bump(y, bp.amplitude, bp.center, bp.width.value_or(b - std::abs(bp.center)));
            return v;
        };
    };
    return PerturbationPair::sample(grid, sum("f0"), sum("f1"));
}

void write_pair_csv(const std::filesystem::path& path, const Grid& grid, const PerturbationPair& f,
                    const OriginalPerturbation& fo, const ModelParams& p) {
    auto out = open_output(path);
    out << "y,f0,f1,s,f0_star,f1_star\n";
    for (std::size_t i = grid.omega_begin(); i <= grid.omega_end(); ++i) {
        const double y = grid.node(i);
        out << y << ',' << f.f0[i] << ',' << f.f1[i] << ',' << p.s_star * std::exp(y) << ',' << fo.f0_star[i] << ','
            << fo.f1_star[i] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const ModelParams p = cfg.resolve_params();
    p.validate();
    const Grid grid = cfg.make_grid(p);
    const PerturbationPair f = build_perturbation(cfg, grid);
    for (const auto& w : f.check(grid, p)) err << "warning: " << w << '\n';

    ForwardConfig fc;
    fc.time_steps = cfg.synth.time_steps;
    fc.validate();
    SynthOptions so;
    so.noise_half_width = cfg.synth.noise_half_width;
    so.seed = cfg.synth.seed;
    so.quote_half_width = cfg.synth.quote_half_width;
    so.stride = cfg.synth.stride;
    const SynthResult res = synth_quotes(f, p, grid, fc, so);

    const auto dir = prepare_out_dir(cfg.out);
    {
        auto q = open_output(dir / "quotes.csv");
        write_quotes_csv(q, res.slices);
    }
    write_pair_csv(dir / "truth.csv", grid, f, perturbation_from_log(f, p), p);
    json manifest = {{"command", "synth"},
                     {"config", cfg.to_json()},
                     {"params", params_json(p)},
                     {"grid", grid_json(grid)},
                     {"amplitude_ratio", f.amplitude_ratio(p)},
                     {"pde_base_deviation", res.base_deviation},
                     {"quotes_per_expiry", {res.slices[0].quotes.size(), res.slices[1].quotes.size()}},
                     {"files", {{"quotes", "quotes.csv"}, {"truth", "truth.csv"}}}};
    write_json(dir / "manifest.json", manifest);
    out << "wrote " << res.slices[0].quotes.size() + res.slices[1].quotes.size() << " quotes to "
        << (dir / "quotes.csv").string() << '\n';
    return exit_ok;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.quotes.empty()) throw ValidationError("calibrate needs a quote file (--quotes or \"quotes\" in config)");
    const QuoteFile file = load_quotes(cfg.quotes);
    for (const auto& w : file.warnings) err << "warning: " << w << '\n';
    ModelParams p = cfg.resolve_params(file.params);
    if (cfg.params.T1 && *cfg.params.T1 != file.slices[0].expiry)
        throw ValidationError("configured T1 does not match the quote file expiries");
    if (cfg.params.T2 && *cfg.params.T2 != file.slices[1].expiry)
        throw ValidationError("configured T2 does not match the quote file expiries");
    p.T1 = file.slices[0].expiry;
    p.T2 = file.slices[1].expiry;
    // The grid only needs sigma0 for the default half-width; use a provisional value if unknown.
    const std::optional<double> sigma0 = cfg.params.sigma0 ? cfg.params.sigma0 : file.params.sigma0;
    ModelParams grid_params = p;
    grid_params.sigma0 = sigma0 ? *sigma0 : infer_sigma0(file.slices[0], p);
    const Grid grid = cfg.make_grid(grid_params);

    CalibrationOptions co;
    co.method = cfg.method;
    co.lambda = cfg.lambda;
    co.sigma0 = sigma0;
    co.tol = cfg.tol;
    co.max_iter = cfg.max_iter;
    co.force = cfg.force;
    co.modes = cfg.modes;

    const auto dir = prepare_out_dir(cfg.out);
    json report = {{"command", "calibrate"}, {"config", cfg.to_json()}, {"grid", grid_json(grid)}};
    CalibrationResult res;
    try {
        res = calibrate(file.slices, p, grid, co);
    } catch (const ContractionError& e) {
        report["refused"] = true;
        report["reason"] = e.what();
        report["uniqueness"] = report_json(e.report);
        write_json(dir / "report.json", report);
        throw;
    }
    const ModelParams& q = res.data.params;
    for (const auto& w : res.data.warnings) err << "warning: " << w << '\n';

    write_pair_csv(dir / "perturbation.csv", grid, res.f, res.f_original, q);
    {
        auto s = open_output(dir / "sigma.csv");
        s << "t,y,s,sigma\n";
        std::vector<double> times = cfg.times.empty() ? std::vector<double>{q.T1, q.T2} : cfg.times;
        for (double t : times) {
            const auto sigma = local_volatility(res, grid, t);
            for (std::size_t i = grid.omega_begin(); i <= grid.omega_end(); ++i)
                s << t << ',' << grid.node(i) << ',' << q.s_star * std::exp(grid.node(i)) << ',' << sigma[i] << '\n';
        }
    }
    json fit = json::array();
    for (int j = 0; j < 2; ++j) {
        const auto& sc = res.data.smoothed[j];
        fit.push_back({{"expiry", j == 0 ? q.T1 : q.T2},
                       {"lambda", sc.lambda},
                       {"gcv", sc.gcv},
                       {"max_residual", sc.max_residual()},
                       {"quotes", sc.residuals.size()}});
    }
    report["refused"] = false;
    report["params"] = params_json(q);
    report["sigma0_source"] = sigma0 ? "config" : "implied";
    report["method"] = to_string(cfg.method);
    report["solver"] = res.solver;
    report["uniqueness"] = report_json(res.report);
    report["iterations"] = res.iterations;
    report["residual"] = res.residual;
    report["data_fit"] = fit;
    report["warnings"] = res.data.warnings;
    report["files"] = {{"perturbation", "perturbation.csv"}, {"sigma", "sigma.csv"}};
    write_json(dir / "report.json", report);

    out.precision(kDigits);
    out << "method " << to_string(cfg.method) << " (" << res.solver << "), sigma0 " << q.sigma0 << ", "
        << res.report.verdict() << ", residual " << res.residual << '\n';
    return exit_ok;
}

int cmd_check(const RunConfig& cfg, bool as_json, std::ostream& out) {
    const ModelParams p = cfg.resolve_params();
    p.validate();
    out.precision(kDigits);
    if (cfg.sweep) {
        const auto& sw = *cfg.sweep;
        std::ostringstream table;
        table.precision(kDigits);
        table << "b,margin1,margin2,rho\n";
        for (std::size_t k = 0; k < sw.count; ++k) {
            const double b = sw.count == 1 ? sw.b_min
                                           : sw.b_min + (sw.b_max - sw.b_min) * static_cast<double>(k) /
                                                            static_cast<double>(sw.count - 1);
            const Grid grid = cfg.make_grid(p, b);
            const auto r = check_uniqueness(p, grid);
            table << b << ',' << r.margin1 << ',' << r.margin2 << ',' << r.rho << '\n';
        }
        if (cfg.out.empty()) {
            out << table.str();
        } else {
            auto f = open_output(prepare_out_dir(cfg.out) / "sweep.csv");
            f << table.str();
            out << "wrote sweep of " << sw.count << " values of b\n";
        }
        return exit_ok;
    }
    const Grid grid = cfg.make_grid(p);
    const auto r = check_uniqueness(p, grid);
    json j = {{"command", "check"}, {"config", cfg.to_json()}, {"params", params_json(p)},
              {"grid", grid_json(grid)}, {"uniqueness", report_json(r)}};
    if (!cfg.out.empty()) write_json(prepare_out_dir(cfg.out) / "check.json", j);
    if (as_json) {
        out << j.dump(2) << '\n';
    } else {
        out << "b = " << grid.b() << ", sigma0 = " << p.sigma0 << ", tau = (" << p.tau1() << ", " << p.tau2() << ")\n"
            << "margin1 = " << r.margin1 << '\n'
            << "margin2 = " << r.margin2 << '\n'
            << "rho     = " << r.rho << '\n'
            << (r.pass() ? "PASS" : "FAIL") << " (" << r.verdict() << ")\n";
    }
    return r.pass() ? exit_ok : exit_condition;
}

int cmd_kernels(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    ModelParams p = cfg.resolve_params();
    if (!(p.s_star > 0.0) || !(p.sigma0 > 0.0)) throw ValidationError("kernels need s_star > 0 and sigma0 > 0");
    const auto& ks = cfg.kernels;
    std::vector<double> x(ks.points);
    for (std::size_t i = 0; i < ks.points; ++i)
        x[i] = ks.points == 1 ? ks.x_min
                              : ks.x_min + (ks.x_max - ks.x_min) * static_cast<double>(i) /
                                               static_cast<double>(ks.points - 1);
    const std::size_t cells = ks.points * ks.points;
    const bool to_files = !cfg.out.empty();
    const auto dir = to_files ? prepare_out_dir(cfg.out) : std::filesystem::path();
    out.precision(kDigits);
    double worst = 0.0;
    for (std::size_t t = 0; t < ks.taus.size(); ++t) {
        const KernelParams kp(p.s_star, p.sigma0, ks.taus[t]);
        std::vector<double> k0(cells), k1(cells), d0(cells, 0.0), d1(cells, 0.0);
        parallel_for(cells, [&](std::size_t c) {
            const double xi = x[c / ks.points];
            const double yi = x[c % ks.points];
            k0[c] = kernel_K0(xi, yi, kp);
            k1[c] = kernel_K1(xi, yi, kp);
            if (ks.oracle) {
                const double o0 = kernel_quadrature_oracle(xi, yi, kp, 0);
                const double o1 = kernel_quadrature_oracle(xi, yi, kp, 1);
                d0[c] = o0 != 0.0 ? std::abs(k0[c] - o0) / std::abs(o0) : std::abs(k0[c]);
                d1[c] = o1 != 0.0 ? std::abs(k1[c] - o1) / std::abs(o1) : std::abs(k1[c]);
            }
        });
        std::ostringstream table;
        table.precision(kDigits);
        table << (ks.oracle ? "x,y,tau,K0,K1,oracle_dev_K0,oracle_dev_K1\n" : "x,y,tau,K0,K1\n");
        for (std::size_t c = 0; c < cells; ++c) {
            table << x[c / ks.points] << ',' << x[c % ks.points] << ',' << ks.taus[t] << ',' << k0[c] << ',' << k1[c];
            if (ks.oracle) {
                table << ',' << d0[c] << ',' << d1[c];
                worst = std::max({worst, d0[c], d1[c]});
            }
            table << '\n';
        }
        if (to_files) {
            auto f = open_output(dir / ("kernels_tau" + std::to_string(t + 1) + ".csv"));
            f << table.str();
        } else {
            if (ks.taus.size() > 1) out << "# tau=" << ks.taus[t] << '\n';
            out << table.str();
        }
    }
    if (ks.oracle) err << "max relative oracle deviation " << worst << '\n';
    if (to_files) out << "wrote " << ks.taus.size() << " kernel table(s) to " << dir.string() << '\n';
    return exit_ok;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ContractionError*>(&e)) return exit_condition;
    if (dynamic_cast<const NonConvergenceError*>(&e) || dynamic_cast<const OracleFailure*>(&e))
        return exit_nonconvergence;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
        dynamic_cast<const NoSolutionError*>(&e) || dynamic_cast<const json::exception*>(&e))
        return exit_validation;
    return exit_internal;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::merge_json(const json& j) {
    reject_unknown(j,
                   {"params", "grid", "method", "tol", "max_iter", "lambda", "force", "modes", "quotes", "out",
                    "times", "synth", "kernels", "sweep"},
                   "config");
    if (j.contains("params")) {
        const auto& p = j["params"];
        reject_unknown(p, {"s_star", "t_star", "r", "mu", "sigma0", "T1", "T2"}, "params");
        read_key(p, "s_star", params.s_star);
        read_key(p, "t_star", params.t_star);
        read_key(p, "r", params.r);
        read_key(p, "mu", params.mu);
        read_key(p, "sigma0", params.sigma0);
        read_key(p, "T1", params.T1);
        read_key(p, "T2", params.T2);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        reject_unknown(g, {"b", "B", "n", "omega_intervals"}, "grid");
        read_key(g, "b", b);
        read_key(g, "B", B);
        read_key(g, "n", grid_n);
        read_key(g, "omega_intervals", omega_intervals);
    }
    if (j.contains("method")) method = parse_method(j["method"].get<std::string>());
    read_key(j, "tol", tol);
    read_key(j, "max_iter", max_iter);
    if (j.contains("lambda")) {
        const auto& l = j["lambda"];
        if (l.is_string() && l.get<std::string>() == "gcv")
            lambda.reset();
        else if (l.is_number())
            lambda = l.get<double>();
        else
            throw ValidationError("lambda must be a number or \"gcv\"");
    }
    read_key(j, "force", force);
    read_key(j, "modes", modes);
    read_key(j, "quotes", quotes);
    read_key(j, "out", out);
    read_key(j, "times", times);
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        reject_unknown(s,
                       {"bumps", "perturbation_file", "noise_half_width", "seed", "quote_half_width", "stride",
                        "time_steps"},
                       "synth");
        if (s.contains("bumps")) {
            synth.bumps.clear();
            for (const auto& bj : s["bumps"]) {
                reject_unknown(bj, {"target", "amplitude", "center", "width"}, "bump");
                Bump bp;
                read_key(bj, "target", bp.target);
                read_key(bj, "amplitude", bp.amplitude);
                read_key(bj, "center", bp.center);
                read_key(bj, "width", bp.width);
                synth.bumps.push_back(bp);
            }
        }
        read_key(s, "perturbation_file", synth.perturbation_file);
        read_key(s, "noise_half_width", synth.noise_half_width);
        read_key(s, "seed", synth.seed);
        read_key(s, "quote_half_width", synth.quote_half_width);
        read_key(s, "stride", synth.stride);
        read_key(s, "time_steps", synth.time_steps);
    }
    if (j.contains("kernels")) {
        const auto& k = j["kernels"];
        reject_unknown(k, {"taus", "x_min", "x_max", "points", "oracle"}, "kernels");
        read_key(k, "taus", kernels.taus);
        read_key(k, "x_min", kernels.x_min);
        read_key(k, "x_max", kernels.x_max);
        read_key(k, "points", kernels.points);
        read_key(k, "oracle", kernels.oracle);
    }
    if (j.contains("sweep") && !j["sweep"].is_null()) {
        const auto& s = j["sweep"];
        reject_unknown(s, {"b_min", "b_max", "count"}, "sweep");
        SweepSpec sw;
        read_key(s, "b_min", sw.b_min);
        read_key(s, "b_max", sw.b_max);
        read_key(s, "count", sw.count);
        sweep = sw;
    }
}

json RunConfig::to_json() const {
    json bumps = json::array();
    for (const auto& bp : synth.bumps)
        bumps.push_back({{"target", bp.target},
                         {"amplitude", bp.amplitude},
                         {"center", bp.center},
                         {"width", optional_json(bp.width)}});
    json j = {
        {"params",
         {{"s_star", optional_json(params.s_star)},
          {"t_star", optional_json(params.t_star)},
          {"r", optional_json(params.r)},
          {"mu", optional_json(params.mu)},
          {"sigma0", optional_json(params.sigma0)},
          {"T1", optional_json(params.T1)},
          {"T2", optional_json(params.T2)}}},
        {"grid",
         {{"b", b},
          {"B", optional_json(B)},
          {"n", grid_n ? json(*grid_n) : json(nullptr)},
          {"omega_intervals", omega_intervals}}},
        {"method", to_string(method)},
        {"tol", tol},
        {"max_iter", max_iter},
        {"lambda", lambda ? json(*lambda) : json("gcv")},
        {"force", force},
        {"modes", modes},
        {"quotes", quotes},
        {"out", out},
        {"times", times},
        {"synth",
         {{"bumps", bumps},
          {"perturbation_file", synth.perturbation_file},
          {"noise_half_width", synth.noise_half_width},
          {"seed", synth.seed},
          {"quote_half_width", synth.quote_half_width},
          {"stride", synth.stride},
          {"time_steps", synth.time_steps}}},
        {"kernels",
         {{"taus", kernels.taus},
          {"x_min", kernels.x_min},
          {"x_max", kernels.x_max},
          {"points", kernels.points},
          {"oracle", kernels.oracle}}},
    };
    j["sweep"] = sweep ? json{{"b_min", sweep->b_min}, {"b_max", sweep->b_max}, {"count", sweep->count}}
                       : json(nullptr);
    return j;
}

void RunConfig::validate() const {
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("b must be positive");
    if (B && !(*B >= b)) throw ValidationError("B must be at least b");
    if (grid_n && (*grid_n < 3 || *grid_n % 2 == 0)) throw ValidationError("grid-n must be odd and at least 3");
    if (omega_intervals == 0) throw ValidationError("omega_intervals must be positive");
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (max_iter == 0) throw ValidationError("max_iter must be positive");
    if (lambda && !(*lambda >= 0.0)) throw ValidationError("lambda must be non-negative or gcv");
    if (!synth.perturbation_file.empty() && !synth.bumps.empty())
        throw ValidationError("give either bumps or a perturbation file, not both");
    for (const auto& bp : synth.bumps) {
        if (bp.target != "f0" && bp.target != "f1") throw ValidationError("bump target must be f0 or f1");
        if (bp.width && !(*bp.width > 0.0)) throw ValidationError("bump width must be positive");
        if (!std::isfinite(bp.amplitude) || !std::isfinite(bp.center)) throw ValidationError("bump values must be finite");
    }
    if (synth.noise_half_width < 0.0) throw ValidationError("noise half-width must be non-negative");
    if (synth.stride == 0) throw ValidationError("stride must be positive");
    if (synth.quote_half_width < 0.0) throw ValidationError("quote half-width must be non-negative");
    if (kernels.taus.empty()) throw ValidationError("kernels need at least one tau");
    for (double t : kernels.taus)
        if (!(t > 0.0)) throw ValidationError("kernel tau values must be positive");
    if (kernels.points == 0 || !(kernels.x_max >= kernels.x_min)) throw ValidationError("bad kernel x range");
    if (sweep) {
        if (sweep->count == 0) throw ValidationError("sweep count must be positive");
        if (!(sweep->b_min > 0.0) || !(sweep->b_max >= sweep->b_min))
            throw ValidationError("sweep needs 0 < b_min <= b_max");
    }
    if (force && method != Method::fredholm)
        throw ValidationError("--force only applies to --method fredholm");
}

ModelParams RunConfig::resolve_params(const FileParams& file) const {
    ModelParams p;
    auto pick = [](double& dst, const std::optional<double>& from_file, const std::optional<double>& from_cfg) {
        if (from_file) dst = *from_file;
        if (from_cfg) dst = *from_cfg;
    };
    pick(p.s_star, file.s_star, params.s_star);
    pick(p.t_star, file.t_star, params.t_star);
    pick(p.r, file.r, params.r);
    pick(p.mu, file.mu, params.mu);
    pick(p.sigma0, file.sigma0, params.sigma0);
    pick(p.T1, file.T1, params.T1);
    pick(p.T2, file.T2, params.T2);
    return p;
}

Grid RunConfig::make_grid(const ModelParams& params) const { return make_grid(params, b); }

Grid RunConfig::make_grid(const ModelParams& p, double b_value) const {
    const double B_min = std::max(B.value_or(Grid::default_half_width(b_value, p)), b_value);
    if (grid_n) return Grid::fit(b_value, B_min, *grid_n);
    return Grid::with_omega_resolution(b_value, B_min, omega_intervals);
}

SweepSpec parse_sweep(const std::string& text) {
    SweepSpec s;
    std::stringstream ss(text);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c, ':'))
        throw ValidationError("sweep must look like b_min:b_max:count");
    try {
        s.b_min = std::stod(a);
        s.b_max = std::stod(b);
        const long n = std::stol(c);
        if (n <= 0) throw ValidationError("sweep count must be positive");
        s.count = static_cast<std::size_t>(n);
    } catch (const std::invalid_argument&) {
        throw ValidationError("sweep must look like b_min:b_max:count");
    } catch (const std::out_of_range&) {
        throw ValidationError("sweep value out of range");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Local volatility calibration from two option expiries"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "volcal 1.0");

    struct Flags {
        std::string config, method, lambda, quotes, out, sweep, perturbation;
        double b = 0, B = 0, tol = 0, sigma0 = 0, noise = 0;
        std::size_t grid_n = 0, modes = 0, points = 0;
        std::uint64_t seed = 0;
        std::vector<double> taus, times;
        bool force = false, oracle = false, json = false;
    } fl;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", fl.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--b", fl.b, "half-width of the perturbation support");
        sub->add_option("--B", fl.B, "minimum half-width of the computational domain");
        sub->add_option("--grid-n", fl.grid_n, "total grid nodes (odd)");
        sub->add_option("--sigma0", fl.sigma0, "baseline volatility");
        sub->add_option("--out", fl.out, "output directory");
    };

    auto* synth = app.add_subcommand("synth", "synthetic quotes from a known perturbation");
    common(synth);
    synth->add_option("--seed", fl.seed, "noise seed");
    synth->add_option("--noise", fl.noise, "uniform price-noise half-width");
    synth->add_option("--perturbation", fl.perturbation, "CSV y,f0,f1 ground truth")->check(CLI::ExistingFile);

    auto* calib = app.add_subcommand("calibrate", "recover the volatility perturbation from quotes");
    common(calib);
    calib->add_option("--quotes", fl.quotes, "quote file (CSV or JSON)");
    calib->add_option("--method", fl.method, "fredholm | spectral | sine");
    calib->add_option("--lambda", fl.lambda, "smoothing parameter or 'gcv'");
    calib->add_option("--tol", fl.tol, "solver tolerance");
    calib->add_option("--modes", fl.modes, "sine modes");
    calib->add_option("--times", fl.times, "calendar times for sigma(s, t) slices");
    calib->add_flag("--force", fl.force, "solve even if the uniqueness condition fails");

    auto* check = app.add_subcommand("check", "evaluate the uniqueness condition");
    common(check);
    check->add_option("--method", fl.method, "fredholm");
    check->add_option("--sweep", fl.sweep, "b_min:b_max:count table of margins");
    check->add_flag("--json", fl.json, "print the JSON report");

    auto* kern = app.add_subcommand("kernels", "tabulate the kernels K0 and K1");
    common(kern);
    kern->add_option("--tau", fl.taus, "time(s) to maturity");
    kern->add_option("--points", fl.points, "points per axis");
    kern->add_flag("--oracle", fl.oracle, "add the quadrature-oracle deviation columns");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << "volcal 1.0\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_validation;
    }

    try {
        RunConfig cfg;
        if (!fl.config.empty()) {
            std::ifstream in(fl.config);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ValidationError(std::string("malformed config: ") + e.what());
            }
            cfg.merge_json(j);
        }
        CLI::App* sub = app.get_subcommands().front();
        auto given = [&](const char* name) { return sub->get_option_no_throw(name) && sub->count(name) > 0; };
        if (given("--b")) cfg.b = fl.b;
        if (given("--B")) cfg.B = fl.B;
        if (given("--grid-n")) cfg.grid_n = fl.grid_n;
        if (given("--sigma0")) cfg.params.sigma0 = fl.sigma0;
        if (given("--out")) cfg.out = fl.out;
        if (given("--seed")) cfg.synth.seed = fl.seed;
        if (given("--noise")) cfg.synth.noise_half_width = fl.noise;
        if (given("--perturbation")) {
            cfg.synth.perturbation_file = fl.perturbation;
            cfg.synth.bumps.clear();
        }
        if (given("--quotes")) cfg.quotes = fl.quotes;
        if (given("--method")) cfg.method = parse_method(fl.method);
        if (given("--lambda")) {
            if (fl.lambda == "gcv") {
                cfg.lambda.reset();
            } else {
                try {
                    std::size_t used = 0;
                    cfg.lambda = std::stod(fl.lambda, &used);
                    if (used != fl.lambda.size()) throw std::invalid_argument(fl.lambda);
                } catch (const std::exception&) {
                    throw ValidationError("--lambda must be a number or gcv");
                }
            }
        }
        if (given("--tol")) cfg.tol = fl.tol;
        if (given("--modes")) cfg.modes = fl.modes;
        if (given("--times")) cfg.times = fl.times;
        if (given("--force")) cfg.force = fl.force;
        if (given("--sweep")) cfg.sweep = parse_sweep(fl.sweep);
        if (given("--tau")) cfg.kernels.taus = fl.taus;
        if (given("--points")) cfg.kernels.points = fl.points;
        if (given("--oracle")) cfg.kernels.oracle = fl.oracle;
        cfg.validate();
        if (sub == check && cfg.method != Method::fredholm)
            throw ValidationError("check evaluates the Fredholm condition; --method must be fredholm");

        if (sub == synth) return cmd_synth(cfg, out, err);
        if (sub == calib) return cmd_calibrate(cfg, out, err);
        if (sub == check) return cmd_check(cfg, fl.json, out);
        return cmd_kernels(cfg, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e);
    }
}

}  // namespace volcal::cli
