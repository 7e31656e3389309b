#include "volcal/calibration.hpp"

#include "volcal/errors.hpp"
#include "volcal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace volcal {

Method parse_method(const std::string& name) {
    if (name == "fredholm") return Method::fredholm;
    if (name == "spectral") return Method::spectral;
    if (name == "sine") return Method::sine;
    throw ValidationError("unknown method '" + name + "' (expected fredholm, spectral or sine)");
}

std::string to_string(Method method) {
    switch (method) {
    case Method::fredholm: return "fredholm";
    case Method::spectral: return "spectral";
    case Method::sine: return "sine";
    }
    return "?";
}

namespace {

// Largest |y| covered by quotes on both sides in both slices, kept inside Omega.
double quote_coverage(const std::array<QuoteSlice, 2>& slices, const ModelParams& params, const Grid& grid) {
    double reach = grid.B();
    for (const auto& s : slices) {
        if (s.quotes.empty()) continue;
        reach = std::min(reach, -std::log(s.quotes.front().strike / params.s_star));
        reach = std::min(reach, std::log(s.quotes.back().strike / params.s_star));
    }
    return std::clamp(reach, grid.b(), grid.B() - 2.0 * grid.h());
}

}  // namespace

CalibrationResult calibrate(const std::array<QuoteSlice, 2>& slices, const ModelParams& params, const Grid& grid,
                            const CalibrationOptions& opts) {
    if (!(opts.tol > 0.0)) throw ValidationError("solver tolerance must be positive");
    if (opts.max_iter == 0) throw ValidationError("iteration cap must be positive");

    PipelineOptions popts;
    popts.lambda = opts.lambda;
    popts.sigma0 = opts.sigma0;
    if (opts.method != Method::fredholm) popts.extension_inner = quote_coverage(slices, params, grid);

    CalibrationResult out;
    out.data = run_pipeline(slices, params, grid, popts);
    const ModelParams& p = out.data.params;
    const auto& cv = out.data.curves;

    if (opts.method == Method::fredholm) {
        FredholmSystem system = FredholmSystem::assemble(p, grid, cv.w[0], cv.w[1], opts.variant);
        out.report = check_uniqueness(system, grid, opts.variant);
        if (!out.report.pass() && !opts.force) {
            std::ostringstream msg;
            msg << "uniqueness condition fails (" << out.report.verdict() << "; margins " << out.report.margin1
                << ", " << out.report.margin2 << ", rho " << out.report.rho << "); rerun with --force to solve anyway";
            throw ContractionError(msg.str(), out.report);
        }
        if (out.report.numeric_pass()) {
            const NeumannResult res = solve_neumann(system, opts.tol, opts.max_iter);
            out.f = to_grid(res, grid);
            out.iterations = res.iterations;
            out.residual = res.residual;
            out.solver = "neumann";
        } else {
            const Eigen::Index m = static_cast<Eigen::Index>(system.size());
            const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2 * m, 2 * m) + system.M;
            const Eigen::VectorXd x = A.partialPivLu().solve(system.g);
            NeumannResult res;
            res.f0.assign(x.data(), x.data() + m);
            res.f1.assign(x.data() + m, x.data() + 2 * m);
            res.residual = system.residual(x.head(m), x.tail(m)).lpNorm<Eigen::Infinity>();
            out.f = to_grid(res, grid);
            out.residual = res.residual;
            out.solver = "direct";
        }
    } else {
        out.report = check_uniqueness(p, grid, opts.variant);
        SpectralResult res;
        if (opts.method == Method::spectral) {
            res = invert_fourier(cv.W[0], cv.W[1], p, grid);
            out.solver = "fourier";
        } else {
            const std::size_t modes = opts.modes ? opts.modes : std::min<std::size_t>(256, grid.size() - 2);
            res = invert_sine_series(cv.W[0], cv.W[1], p, grid, modes);
            out.solver = "sine";
        }
        out.f = res.restricted(grid);
        out.residual = res.max_system_residual;
        out.iterations = res.frequencies;
    }
    out.f_original = perturbation_from_log(out.f, p);
    return out;
}

std::vector<double> local_volatility(const CalibrationResult& result, const Grid& grid, double t) {
    const double s0 = result.data.params.sigma0;
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = s0 * s0 + 2.0 * (result.f_original.f0_star[i] + t * result.f_original.f1_star[i]);
        if (!(v > 0.0)) {
            std::ostringstream msg;
            msg << "recovered variance is not positive at y=" << grid.node(i) << ", t=" << t;
            throw DomainError(msg.str());
        }
        out[i] = std::sqrt(v);
    }
    return out;
}

}  // namespace volcal
