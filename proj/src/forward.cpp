#include "volcal/forward.hpp"

#include "fft.hpp"
#include "volcal/errors.hpp"
#include "volcal/kernels.hpp"
#include "volcal/parallel.hpp"
#include "volcal/quadrature.hpp"
#include "volcal/spectral.hpp"
#include "volcal/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <random>

namespace volcal {

void ForwardConfig::validate() const {
    if (time_steps < 50) throw ValidationError("time_steps must be at least 50");
    if (modes < 16) throw ValidationError("modes must be at least 16");
    if (!(quad_rel_tol > 0.0)) throw ValidationError("quadrature tolerance must be positive");
}

namespace {

double eval(const std::function<double(double)>& g, double y) { return g ? g(y) : 0.0; }

double sup_norm(const std::function<double(double)>& g, double b) {
    if (!g) return 0.0;
    double m = 0.0;
    for (int i = 1; i < 400; ++i) m = std::max(m, std::abs(g(-b + 2.0 * b * i / 400.0)));
    return m;
}

std::vector<double> omega_slice(const std::vector<double>& v, const Grid& grid) {
    return {v.begin() + static_cast<std::ptrdiff_t>(grid.omega_begin()),
            v.begin() + static_cast<std::ptrdiff_t>(grid.omega_end()) + 1};
}

// \int_{-b}^{b} kernel(x, y) dy over segments delimited by `cuts` (plus x when inside).
template <class Integrand>
double integrate_segments(const Integrand& g, double x, double b, const std::vector<double>& cuts, double rel_tol,
                          double abs_tol) {
    std::vector<double> pts = cuts;
    if (x > -b && x < b) pts.push_back(x);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
        const auto res = integrate_doubling(g, pts[s], pts[s + 1], rel_tol, abs_tol, 1, 12);
        if (!res.converged) throw NonConvergenceError("kernel quadrature did not converge", res.change);
        total += res.value;
    }
    return total;
}

struct LinearSetup {
    std::vector<double> cuts;
    double abs_tol;
};

LinearSetup linear_setup(const PerturbationFunctions& f, const ModelParams& params, double tau, double rel_tol,
                         std::vector<double> cuts) {
    if (!(f.b > 0.0)) throw DomainError("perturbation support half-width must be positive");
    const double scale = params.S_star() * 0.5 * std::sqrt(std::numbers::pi) *
                         (sup_norm(f.f0, f.b) + tau * sup_norm(f.f1, f.b)) * 2.0 * f.b;
    return {std::move(cuts), 1e-3 * rel_tol * scale};
}

std::vector<double> linear_impl(const PerturbationFunctions& f, double tau, const ModelParams& params,
                                std::span<const double> x, double rel_tol, std::vector<double> cuts) {
    params.validate();
    const KernelParams kp(params, tau);
    const auto setup = linear_setup(f, params, tau, rel_tol, std::move(cuts));
    std::vector<double> out(x.size());
    parallel_for(x.size(), [&](std::size_t i) {
        const double xi = x[i];
        auto g = [&](double y) {
            double v = 0.0;
            if (f.f0) v += f.f0(y) * kernel_K0(xi, y, kp);
            if (f.f1) v += f.f1(y) * kernel_K1(xi, y, kp);
            return v;
        };
        out[i] = integrate_segments(g, xi, f.b, setup.cuts, rel_tol, setup.abs_tol);
    });
    return out;
}

}  // namespace

PerturbationPair PerturbationFunctions::sample(const Grid& grid) const {
    PerturbationPair out = PerturbationPair::zero(grid);
    for (std::size_t i = grid.omega_begin() + 1; i < grid.omega_end(); ++i) {
        const double y = grid.node(i);
        if (std::abs(y) >= b) continue;
        out.f0[i] = eval(f0, y);
        out.f1[i] = eval(f1, y);
    }
    return out;
}

PerturbationFunctions PerturbationFunctions::interpolate(const PerturbationPair& pair, const Grid& grid) {
    if (pair.f0.size() != grid.size() || pair.f1.size() != grid.size())
        throw ValidationError("perturbation pair does not match the grid");
    const auto y = grid.omega_nodes();
    const double b = grid.b();
    auto s0 = std::make_shared<CubicSpline>(CubicSpline::natural(y, omega_slice(pair.f0, grid)));
    auto s1 = std::make_shared<CubicSpline>(CubicSpline::natural(y, omega_slice(pair.f1, grid)));
    PerturbationFunctions out;
    out.b = b;
    out.f0 = [s0, b](double v) { return std::abs(v) < b ? (*s0)(v) : 0.0; };
    out.f1 = [s1, b](double v) { return std::abs(v) < b ? (*s1)(v) : 0.0; };
    return out;
}

std::vector<double> forward_linear(const PerturbationFunctions& f, double tau, const ModelParams& params,
                                   std::span<const double> x, double rel_tol) {
    return linear_impl(f, tau, params, x, rel_tol, {-f.b, 0.0, f.b});
}

std::vector<double> forward_linear(const PerturbationPair& f, double tau, const ModelParams& params,
                                   const Grid& grid, double rel_tol) {
    const auto fn = PerturbationFunctions::interpolate(f, grid);
    // Every spline knot is a breakpoint, so each panel sees a single cubic piece.
    const auto nodes = grid.nodes();
    return linear_impl(fn, tau, params, nodes, rel_tol, grid.omega_nodes());
}

std::vector<double> forward_linear_curvature(const PerturbationFunctions& f, double tau,
                                             const ModelParams& params, std::span<const double> x,
                                             double rel_tol) {
    params.validate();
    const KernelParams kp(params, tau);
    const auto setup = linear_setup(f, params, tau, rel_tol, {-f.b, 0.0, f.b});
    const double s2 = params.sigma0 * params.sigma0;
    std::vector<double> out(x.size());
    parallel_for(x.size(), [&](std::size_t i) {
        const double xi = x[i];
        auto g = [&](double y) {
            double v = 0.0;
            if (f.f0) v += f.f0(y) * kernel_K0_dtau(xi, y, kp);
            if (f.f1) v += f.f1(y) * kernel_K1_dtau(xi, y, kp);
            return v;
        };
        const double w_tau = integrate_segments(g, xi, f.b, setup.cuts, rel_tol, setup.abs_tol / tau);
        double source = 0.0;
        if (std::abs(xi) < f.b) {
            const double alpha = params.S() / std::sqrt(tau) * std::exp(-xi * xi / (2.0 * s2 * tau));
            source = alpha * (eval(f.f0, xi) + tau * eval(f.f1, xi));
        }
        out[i] = 2.0 / s2 * (w_tau - source);
    });
    return out;
}

std::vector<double> forward_modal(const PerturbationPair& f, double tau, const ModelParams& params,
                                  const Grid& grid, std::size_t modes) {
    params.validate();
    const std::size_t n = grid.size();
    if (f.f0.size() != n || f.f1.size() != n) throw ValidationError("perturbation pair does not match the grid");
    const std::size_t interior = n - 2;
    if (modes == 0 || modes > interior) throw ValidationError("mode count must lie in [1, n-2]");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    const auto c0 = detail::dst1(std::span<const double>(f.f0).subspan(1, interior));
    const auto c1 = detail::dst1(std::span<const double>(f.f1).subspan(1, interior));
    std::vector<double> cw(interior, 0.0);
    for (std::size_t k = 0; k < modes; ++k) {
        const double xi = std::numbers::pi * static_cast<double>(k + 1) / (2.0 * grid.B());
        const double Xi = spectral_Xi(xi, params);
        cw[k] = params.S() * (time_integral_minus(tau, Xi) * c0[k] + time_integral_plus(tau, Xi) * c1[k]);
    }
    const auto w = detail::dst1(cw);
    std::vector<double> out(n, 0.0);
    const double norm = 2.0 * static_cast<double>(n - 1);
    for (std::size_t i = 0; i < interior; ++i) out[i + 1] = w[i] / norm;
    return out;
}

namespace {

// Thomas algorithm; lo[i] multiplies u[i-1], up[i] multiplies u[i+1].
void solve_tridiagonal(const std::vector<double>& lo, std::vector<double> di, const std::vector<double>& up,
                       std::vector<double>& rhs) {
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lo[i] / di[i - 1];
        di[i] -= w * up[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

// Piecewise-uniform time grid hitting every output time.
std::vector<double> time_grid(std::span<const double> taus, std::size_t steps) {
    if (taus.empty()) throw ValidationError("at least one output time is required");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 0.0) || !std::isfinite(taus[i])) throw DomainError("output times must be finite and >= 0");
        if (i && taus[i] < taus[i - 1]) throw ValidationError("output times must be increasing");
    }
    const double dt = taus.back() / static_cast<double>(steps);
    std::vector<double> t{0.0};
    for (double target : taus) {
        const double len = target - t.back();
        if (len <= 0.0) continue;
        const auto k = std::max<long long>(1, std::llround(len / dt));
        const double start = t.back();
        for (long long s = 1; s <= k; ++s) t.push_back(s == k ? target : start + len * static_cast<double>(s) / k);
    }
    return t;
}

// J(a, T) = \int_0^T t^{-1/2} e^{-a/t} dt and J1 with t^{1/2}.
double J0(double a, double T) {
    if (T <= 0.0) return 0.0;
    if (a == 0.0) return 2.0 * std::sqrt(T);
    return 2.0 * std::sqrt(T) * std::exp(-a / T) - 2.0 * std::sqrt(std::numbers::pi * a) * std::erfc(std::sqrt(a / T));
}

double J1(double a, double T) {
    if (T <= 0.0) return 0.0;
    return 2.0 / 3.0 * (T * std::sqrt(T) * std::exp(-a / T) - a * J0(a, T));
}

void check_finite(const std::vector<double>& u) {
    for (double v : u)
        if (!std::isfinite(v)) throw ValidationError("time stepping produced non-finite values; check the configuration");
}

}  // namespace

std::vector<std::vector<double>> forward_heat_pde(const PerturbationPair& f, std::span<const double> taus,
                                                  const ModelParams& params, const Grid& grid,
                                                  const ForwardConfig& cfg, HeatSource source) {
    params.validate();
    cfg.validate();
    const std::size_t n = grid.size();
    if (f.f0.size() != n || f.f1.size() != n) throw ValidationError("perturbation pair does not match the grid");
    const auto t = time_grid(taus, cfg.time_steps);
    const double s2 = params.sigma0 * params.sigma0;
    const double kap = 0.5 * s2 / (grid.h() * grid.h());
    const double S = params.S();
    const auto y = grid.nodes();
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = y[i] * y[i] / (2.0 * s2);

    // Only nodes where f is nonzero carry a source.
    std::vector<std::size_t> support;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (f.f0[i] != 0.0 || f.f1[i] != 0.0) support.push_back(i);

    std::vector<double> W(n, 0.0), rhs(n), lo(n), di(n), up(n);
    std::vector<std::vector<double>> out;
    std::size_t next = 0;
    while (next < taus.size() && taus[next] == 0.0) {
        out.push_back(W);
        ++next;
    }
    const double ref_scale = S * (2.0 * std::sqrt(taus.back()) + 1.0);
    double f_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) f_scale = std::max({f_scale, std::abs(f.f0[i]), std::abs(f.f1[i])});

    for (std::size_t step = 1; step < t.size(); ++step) {
        const double t0 = t[step - 1];
        const double t1 = t[step];
        const double k = t1 - t0;
        rhs[0] = rhs[n - 1] = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = W[i] + 0.5 * k * kap * (W[i + 1] - 2.0 * W[i] + W[i - 1]);
        for (std::size_t i : support) {
            double q0, q1;
            if (source == HeatSource::full) {
                q0 = J0(a[i], t1) - J0(a[i], t0);
                q1 = J1(a[i], t1) - J1(a[i], t0);
            } else {
                q0 = 2.0 * (std::sqrt(t1) - std::sqrt(t0));
                q1 = 2.0 / 3.0 * (t1 * std::sqrt(t1) - t0 * std::sqrt(t0));
            }
            rhs[i] += S * (q0 * f.f0[i] + q1 * f.f1[i]);
        }
        std::fill(lo.begin(), lo.end(), -0.5 * k * kap);
        std::fill(up.begin(), up.end(), -0.5 * k * kap);
        std::fill(di.begin(), di.end(), 1.0 + k * kap);
        di[0] = di[n - 1] = 1.0;
        up[0] = 0.0;
        lo[n - 1] = 0.0;
        solve_tridiagonal(lo, di, up, rhs);
        W.swap(rhs);
        while (next < taus.size() && t1 == taus[next]) {
            check_finite(W);
            double m = 0.0;
            for (double v : W) m = std::max(m, std::abs(v));
            if (m > 1e6 * ref_scale * std::max(f_scale, 1e-300)) throw ValidationError("heat solve is unstable");
            out.push_back(W);
            ++next;
        }
    }
    return out;
}

std::vector<double> forward_heat_pde(const PerturbationPair& f, double tau_end, const ModelParams& params,
                                     const Grid& grid, const ForwardConfig& cfg, HeatSource source) {
    const double taus[1] = {tau_end};
    return forward_heat_pde(f, taus, params, grid, cfg, source).front();
}

HalfVariance half_variance(const PerturbationPair& f, const ModelParams& params, const Grid& grid) {
    if (f.f0.size() != grid.size() || f.f1.size() != grid.size())
        throw ValidationError("perturbation pair does not match the grid");
    const double base = 0.5 * params.sigma0 * params.sigma0;
    const double B = grid.B();
    const double h = grid.h();
    const std::size_t last = grid.size() - 1;
    return [f0 = f.f0, f1 = f.f1, base, B, h, last](double y, double tau) {
        const auto i = static_cast<std::size_t>(std::clamp<long long>(std::llround((y + B) / h), 0, last));
        return base + f0[i] + tau * f1[i];
    };
}

std::vector<std::vector<double>> forward_dupire(const HalfVariance& half_var, const ModelParams& params,
                                                const Grid& grid, std::span<const double> taus,
                                                const ForwardConfig& cfg) {
    params.validate();
    cfg.validate();
    const std::size_t n = grid.size();
    const auto t = time_grid(taus, cfg.time_steps);
    const auto y = grid.nodes();
    const double h = grid.h();
    const double mu = params.mu;
    const double r = params.r;

    std::vector<double> U(n);
    for (std::size_t i = 0; i < n; ++i) U[i] = params.s_star * std::max(0.0, 1.0 - std::exp(y[i]));

    std::vector<double> lo0(n), di0(n), up0(n), lo1(n), di1(n), up1(n);
    auto coefficients = [&](double tau, std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up) {
        for (std::size_t i = 0; i < n; ++i) {
            const double A = half_var(y[i], tau);
            if (!(A > 0.0)) throw DomainError("local variance must be positive on the whole grid");
            lo[i] = A / (h * h) + (A + mu) / (2.0 * h);
            di[i] = -2.0 * A / (h * h) - (r - mu);
            up[i] = A / (h * h) - (A + mu) / (2.0 * h);
        }
    };
    auto far_field = [&](double y_edge, double tau) {
        return bs_call_price(params, params.s_star * std::exp(y_edge), tau, params.sigma0);
    };

    std::vector<double> rhs(n), a(n), d(n), c(n);
    auto theta_step = [&](double t0, double t1, double theta) {
        const double k = t1 - t0;
        coefficients(t1, lo1, di1, up1);
        if (theta < 1.0) coefficients(t0, lo0, di0, up0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            rhs[i] = U[i];
            if (theta < 1.0)
                rhs[i] += (1.0 - theta) * k * (lo0[i] * U[i - 1] + di0[i] * U[i] + up0[i] * U[i + 1]);
            a[i] = -theta * k * lo1[i];
            d[i] = 1.0 - theta * k * di1[i];
            c[i] = -theta * k * up1[i];
        }
        rhs[0] = far_field(y.front(), t1);
        rhs[n - 1] = far_field(y.back(), t1);
        a[0] = c[0] = 0.0;
        d[0] = 1.0;
        a[n - 1] = c[n - 1] = 0.0;
        d[n - 1] = 1.0;
        solve_tridiagonal(a, d, c, rhs);
        U.swap(rhs);
    };

    std::vector<std::vector<double>> out;
    std::size_t next = 0;
    while (next < taus.size() && taus[next] == 0.0) {
        out.push_back(U);
        ++next;
    }
    const std::size_t implicit_steps = (cfg.rannacher_steps + 1) / 2;
    for (std::size_t step = 1; step < t.size(); ++step) {
        const double t0 = t[step - 1];
        const double t1 = t[step];
        if (step <= implicit_steps) {
            const double tm = 0.5 * (t0 + t1);
            theta_step(t0, tm, 1.0);
            theta_step(tm, t1, 1.0);
        } else {
            theta_step(t0, t1, 0.5);
        }
        while (next < taus.size() && t1 == taus[next]) {
            check_finite(U);
            out.push_back(U);
            ++next;
        }
    }
    return out;
}

std::vector<double> forward_dupire(const HalfVariance& half_var, const ModelParams& params, const Grid& grid,
                                   double tau_end, const ForwardConfig& cfg) {
    const double taus[1] = {tau_end};
    return forward_dupire(half_var, params, grid, taus, cfg).front();
}

SynthResult synth_quotes(const PerturbationPair& f, const ModelParams& params, const Grid& grid,
                         const ForwardConfig& cfg, const SynthOptions& opts) {
    params.validate();
    if (opts.stride == 0) throw ValidationError("quote stride must be positive");
    if (opts.noise_half_width < 0.0) throw ValidationError("noise half-width must be non-negative");
    const double taus[2] = {params.tau1(), params.tau2()};
    const auto base = forward_dupire(half_variance(PerturbationPair::zero(grid), params, grid), params, grid, taus, cfg);
    const auto pert = forward_dupire(half_variance(f, params, grid), params, grid, taus, cfg);

    double reach = opts.quote_half_width > 0.0 ? opts.quote_half_width : 2.0 * grid.b();
    reach = std::min(reach, grid.B() - grid.h());

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> noise(-opts.noise_half_width, opts.noise_half_width);

    SynthResult out;
    const std::size_t c = grid.center();
    const auto span_nodes = static_cast<std::size_t>(std::floor(reach / grid.h() + 1e-9));
    for (int j = 0; j < 2; ++j) {
        out.U[j].resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double K = params.s_star * std::exp(grid.node(i));
            out.U[j][i] = bs_call_price(params, K, taus[j], params.sigma0) + (pert[j][i] - base[j][i]);
        }
        QuoteSlice& slice = out.slices[j];
        slice.expiry = params.t_star + taus[j];
        for (std::size_t i = c - span_nodes; i <= c + span_nodes; ++i) {
            const auto offset = static_cast<long long>(i) - static_cast<long long>(c);
            if (offset % static_cast<long long>(opts.stride) != 0) continue;
            const double K = params.s_star * std::exp(grid.node(i));
            const double bs = bs_call_price(params, K, taus[j], params.sigma0);
            out.base_deviation = std::max(out.base_deviation, std::abs(base[j][i] - bs));
            double price = out.U[j][i];
            if (opts.noise_half_width > 0.0) price += noise(rng);
            slice.quotes.push_back({K, price, std::nullopt, std::nullopt});
        }
    }
    return out;
}

SynthResult synth_quotes(const OriginalPerturbation& f, const ModelParams& params, const Grid& grid,
                         const ForwardConfig& cfg, const SynthOptions& opts) {
    return synth_quotes(perturbation_to_log(f, params), params, grid, cfg, opts);
}

}  // namespace volcal
