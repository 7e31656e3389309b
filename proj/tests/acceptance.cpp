// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.

#include "volcal/calibration.hpp"
#include "volcal/forward.hpp"
#include "volcal/fredholm.hpp"
#include "volcal/kernels.hpp"
#include "volcal/model.hpp"
#include "volcal/parallel.hpp"
#include "volcal/spectral.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace volcal;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ModelParams base_params() {
    ModelParams p;
    p.sigma0 = 0.4;
    p.T1 = 0.25;
    p.T2 = 0.5;
    return p;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

PerturbationFunctions bumps(double b, double a0, double a1) {
    PerturbationFunctions f;
    f.b = b;
    f.f0 = [=](double y) {
        const double t = y / b;
        return std::abs(t) < 1 ? a0 * std::pow(1 - t * t, 4) * (1 + 0.3 * t) : 0.0;
    };
    f.f1 = [=](double y) {
        const double t = y / b;
        return std::abs(t) < 1 ? a1 * std::pow(1 - t * t, 4) * (0.5 - 0.7 * t * t) : 0.0;
    };
    return f;
}

// (1 - t^2)^4 times a random cubic, independently for f0 and f1.
PerturbationFunctions random_pair(double b, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    const std::array<double, 4> c0{z(rng), z(rng), z(rng), z(rng)};
    const std::array<double, 4> c1{z(rng), z(rng), z(rng), z(rng)};
    auto make = [b](std::array<double, 4> c, double scale) {
        return [=](double y) {
            const double t = y / b;
            if (std::abs(t) >= 1) return 0.0;
            return scale * std::pow(1 - t * t, 4) * (c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t);
        };
    };
    PerturbationFunctions f;
    f.b = b;
    f.f0 = make(c0, 0.01);
    f.f1 = make(c1, 0.02);
    return f;
}

double sup_on(const std::function<double(double)>& f, const std::vector<double>& x) {
    double m = 0.0;
    for (double y : x) m = std::max(m, std::abs(f(y)));
    return m;
}

// ---------------------------------------------------------------------------

Outcome kernel_correctness() {
    const auto start = Clock::now();
    const std::size_t n = 21;
    std::vector<double> axis(n);
    for (std::size_t i = 0; i < n; ++i) axis[i] = -0.3 + 0.6 * static_cast<double>(i) / (n - 1);
    double worst = 0.0;
    for (double sigma : {0.2, 0.4}) {
        for (double tau : {0.25, 1.0}) {
            const KernelParams kp(1.0, sigma, tau);
            std::vector<double> dev(n * n);
            parallel_for(n * n, [&](std::size_t c) {
                const double x = axis[c / n], y = axis[c % n];
                const double o0 = kernel_quadrature_oracle(x, y, kp, 0);
                const double o1 = kernel_quadrature_oracle(x, y, kp, 1);
                dev[c] = std::max(std::abs(kernel_K0(x, y, kp) - o0) / std::abs(o0),
                                  std::abs(kernel_K1(x, y, kp) - o1) / std::abs(o1));
            });
            worst = std::max(worst, *std::max_element(dev.begin(), dev.end()));
        }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    return {worst <= 1e-8 && secs < 30.0,
            fmt("max relative deviation %.3g (<= 1e-8) in %.2f s (< 30 s)", worst, secs)};
}

Outcome forward_cross_validation() {
    const auto p = base_params();
    const double b = 0.1;
    const double B = Grid::default_half_width(b, p);
    const auto f = bumps(b, 0.01, 0.02);
    const double taus[2] = {p.tau1(), p.tau2()};
    std::vector<double> errors;
    std::size_t k = 10, steps = 50;
    std::size_t finest_n = 0;
    for (int level = 0; level < 5; ++level, k *= 2, steps *= 2) {
        const Grid g = Grid::with_omega_resolution(b, B, k);
        ForwardConfig cfg;
        cfg.time_steps = steps;
        const auto pde = forward_heat_pde(f.sample(g), taus, p, g, cfg, HeatSource::full);
        const auto omega = g.omega_nodes();
        double err = 0.0;
        for (int j = 0; j < 2; ++j) {
            const auto ref = forward_linear(f, taus[j], p, omega, 1e-12);
            double e = 0.0;
            for (std::size_t i = 0; i < omega.size(); ++i)
                e = std::max(e, std::abs(pde[j][g.omega_begin() + i] - ref[i]));
            err = std::max(err, e / max_abs(ref));
        }
        errors.push_back(err);
        finest_n = g.size();
    }
    bool ok = errors.back() <= 1e-5;
    std::string ratios;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double r = errors[i - 1] / errors[i];
        ok = ok && r >= 3.5 && r <= 4.5;
        ratios += fmt("%s%.3f", i > 1 ? ", " : "", r);
    }
    return {ok, fmt("finest (n=%zu, M=%zu) relative error %.3g (<= 1e-5); halving ratios %s (in [3.5, 4.5])",
                    finest_n, steps / 2, errors.back(), ratios.c_str())};
}

Outcome fredholm_consistency() {
    const auto p = base_params();
    const double b = 0.1;
    const Grid g = Grid::with_omega_resolution(b, 0.5, 100);
    const auto x = g.omega_nodes();
    std::mt19937_64 rng(2024);
    double worst_corrected = 0.0;
    double least_doubled = std::numeric_limits<double>::infinity();
    double least_scaled = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = random_pair(b, rng);
        const double scale = sup_on(f.f0, x) + sup_on(f.f1, x);
        const double tol = 1e-6 * scale;
        worst_corrected = std::max(worst_corrected, consistency_residual(f, p, g).max_abs() / tol);
        least_doubled = std::min(least_doubled, consistency_residual(f, p, g, A2Variant::doubled_tau1).max_abs() / tol);
        least_scaled =
            std::min(least_scaled, consistency_residual(f, p, g, A2Variant::sqrt_tau_scaled).max_abs() / tol);
    }
    return {worst_corrected <= 1.0 && least_doubled >= 10.0,
            fmt("corrected residual <= %.3g x tol (<= 1); doubled-coefficient kernel >= %.3g x tol (>= 10); "
                "sqrt(tau)-scaled kernel >= %.3g x tol",
                worst_corrected, least_doubled, least_scaled)};
}

Outcome linear_round_trip() {
    const auto p = base_params();
    const double b = 0.02;
    const Grid g = Grid::with_omega_resolution(b, 0.5, 40);
    const auto report = check_uniqueness(p, g);
    auto sys = FredholmSystem::assemble(p, g);
    const auto x = g.omega_nodes();
    std::mt19937_64 rng(77);
    double worst = 0.0, worst_rate = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto f = random_pair(b, rng);
        std::vector<double> w[2];
        for (int j = 1; j <= 2; ++j) w[j - 1] = rhs_w(forward_linear_curvature(f, p.tau(j), p, x), p.tau(j), p, g);
        sys.set_rhs(w[0], w[1]);
        const auto r = solve_neumann(sys);
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e0 = std::abs(x[i]) < b ? f.f0(x[i]) : 0.0;
            const double e1 = std::abs(x[i]) < b ? f.f1(x[i]) : 0.0;
            err = std::max({err, std::abs(r.f0[i] - e0), std::abs(r.f1[i] - e1)});
            scale = std::max({scale, std::abs(e0), std::abs(e1)});
        }
        worst = std::max(worst, err / scale);
        for (std::size_t k = 1; k < r.step_norms.size(); ++k)
            if (r.step_norms[k - 1] > 1e-13) worst_rate = std::max(worst_rate, r.step_norms[k] / r.step_norms[k - 1]);
    }
    return {report.pass() && worst <= 1e-4 && worst_rate <= report.rho,
            fmt("b=%.3g margins (%.4f, %.4f); relative error %.3g (<= 1e-4); observed contraction %.4f <= rho %.4f",
                b, report.margin1, report.margin2, worst, worst_rate, report.rho)};
}

Outcome spectral_round_trip() {
    const auto p = base_params();
    const Grid g(2.0, 0.5, 513);
    const double w = 0.08;
    PerturbationPair f = PerturbationPair::zero(g);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double y = g.node(i);
        f.f0[i] = 0.01 * std::exp(-y * y / (2 * w * w)) * (1 + y);
        f.f1[i] = 0.02 * std::exp(-(y - 0.1) * (y - 0.1) / (2 * w * w));
    }
    const std::size_t modes = 256;
    const auto W1 = forward_modal(f, p.tau1(), p, g, modes);
    const auto W2 = forward_modal(f, p.tau2(), p, g, modes);
    auto rel_l2 = [&](const SpectralResult& r) {
        double num = 0, den = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num += std::pow(r.f0[i] - f.f0[i], 2) + std::pow(r.f1[i] - f.f1[i], 2);
            den += f.f0[i] * f.f0[i] + f.f1[i] * f.f1[i];
        }
        return std::sqrt(num / den);
    };
    const auto fourier = invert_fourier(W1, W2, p, g);
    const auto sine = invert_sine_series(W1, W2, p, g, modes);
    const double ef = rel_l2(fourier), es = rel_l2(sine);
    const double res = std::max(fourier.max_system_residual, sine.max_system_residual);
    return {ef <= 1e-6 && es <= 1e-6 && res <= 1e-10,
            fmt("%zu points / %zu modes: Fourier %.3g, sine %.3g (<= 1e-6); system residual %.3g (<= 1e-10)",
                g.size() - 1, modes, ef, es, res)};
}

Outcome determinant_asymptotics() {
    const auto p = base_params();
    const double t1 = p.tau1(), t2 = p.tau2();
    const double small = determinant_d(0.0, p) / (p.S() * 4.0 / 3.0 * std::sqrt(t1 * t2) * (t2 - t1));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double u = 40.0; u <= 1e6; u *= 1.25) {
        const double Xi = std::sqrt(u / t1);
        const double xi = Xi * std::numbers::sqrt2 / p.sigma0;
        const double r = determinant_d(xi, p) * std::sqrt(t1 * t2) * std::pow(Xi, 4) / (p.S() * (t2 - t1));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    const double C = determinant_sandwich_constant(p, 100.0, 4001);
    return {small >= 0.999 && small <= 1.001 && lo >= 0.95 && hi <= 1.05 && std::isfinite(C),
            fmt("d(0) ratio %.12f (in [0.999, 1.001]); large-frequency ratio in [%.4f, %.4f] (in [0.95, 1.05]); "
                "sandwich constant %.4g on [-100, 100]",
                small, lo, hi, C)};
}

// Row integral of |a1(b, .)| over [-b, b] in closed form, s = tau sigma^2. The bound 3b^2/(2s) drops
// the exponential damping on y < 0 and is its b^2/s -> 0 limit.
double A1_row_at_b(double b, double tau, double sigma0) {
    const double s = tau * sigma0 * sigma0;
    return b * b / (2 * s) + (1 - std::exp(-4 * b * b / s)) / 4;
}

Outcome operator_norm_bound() {
    bool ok = true;
    double worst_ratio = 0.0, worst_final = 0.0, least_rate = std::numeric_limits<double>::infinity();
    for (double b : {0.01, 0.02, 0.05, 0.1}) {
        for (double sigma : {0.2, 0.4}) {
            for (double tau : {0.25, 1.0}) {
                ModelParams p = base_params();
                p.sigma0 = sigma;
                p.T1 = tau;
                p.T2 = tau + 0.25;
                const double bound = A1_norm_bound(b, tau, sigma);
                const double exact = A1_row_at_b(b, tau, sigma);
                double prev = 0.0;
                for (std::size_t k : {5, 10, 20, 40, 80}) {
                    const Grid g = Grid::with_omega_resolution(b, b * 1.5, k);
                    const Eigen::MatrixXd A = assemble_operator(1, 1, p, g);
                    Eigen::Index arg = 0;
                    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff(&arg);
                    ok = ok && norm <= bound && (arg == 0 || arg == A.rows() - 1);
                    worst_ratio = std::max(worst_ratio, norm / bound);
                    const double err = std::abs(norm - exact) / exact;
                    if (prev > 1e-13) least_rate = std::min(least_rate, prev / std::max(err, 1e-300));
                    prev = err;
                }
                worst_final = std::max(worst_final, prev);
            }
        }
    }
    ok = ok && worst_final <= 1e-8 && least_rate >= 8.0;
    double tight = std::numeric_limits<double>::infinity();
    for (double b : {1e-3, 2e-3, 4e-3}) tight = std::min(tight, A1_row_at_b(b, 1.0, 0.2) / A1_norm_bound(b, 1.0, 0.2));
    ok = ok && tight >= 0.999;
    return {ok, fmt("max ||A_j1|| / bound %.6f (<= 1), sup attained at x = +-b; row sup -> exact value under refinement "
                    "(finest rel error %.2g, halving ratio >= %.1f); exact / bound >= %.6f for b^2/(tau sigma^2) <= 4e-4",
                    worst_ratio, worst_final, least_rate, tight)};
}

Outcome linearization_quadraticity() {
    const auto p = base_params();
    const double b = 0.1;
    const Grid g = Grid::with_omega_resolution(b, Grid::default_half_width(b, p), 160);
    ForwardConfig cfg;
    cfg.time_steps = 400;
    const double eps = 0.02 * p.sigma0 * p.sigma0 / 2;
    const auto omega = g.omega_nodes();
    double residual[2][2];
    for (int level = 0; level < 2; ++level) {
        const double amp = eps / (1 << level);
        const auto f = bumps(b, amp, amp);
        const auto res = synth_quotes(f.sample(g), p, g, cfg);
        for (int j = 0; j < 2; ++j) {
            const double tau = p.tau(j + 1);
            const auto lin = forward_linear(f, tau, p, omega);
            double r = 0;
            for (std::size_t i = 0; i < omega.size(); ++i) {
                const double y = omega[i];
                const double V = res.U[j][g.omega_begin() + i] - bs_call_price(p, std::exp(y), tau, p.sigma0);
                r = std::max(r, std::abs(std::exp(-p.c() * y - p.d() * tau) * V - lin[i]));
            }
            residual[level][j] = r;
        }
    }
    const double r1 = residual[0][0] / residual[1][0];
    const double r2 = residual[0][1] / residual[1][1];
    return {r1 >= 3.0 && r1 <= 6.0 && r2 >= 3.0 && r2 <= 6.0,
            fmt("residual ratio eps/(eps/2): T1 %.3f, T2 %.3f (in [3, 6])", r1, r2)};
}

Outcome noise_stability() {
    ModelParams p;
    p.sigma0 = 0.4;
    p.T1 = 0.25;
    p.T2 = 2.0;
    const double b = 0.1;
    const Grid g = Grid::with_omega_resolution(b, Grid::default_half_width(b, p), 40);
    const double eps = 0.05 * p.sigma0 * p.sigma0;
    const auto f = bumps(b, eps, eps).sample(g);
    ForwardConfig cfg;
    CalibrationOptions co;
    co.sigma0 = p.sigma0;
    auto recover = [&](double eta, UniquenessReport* report) {
        SynthOptions so;
        so.noise_half_width = eta * p.s_star;
        so.seed = 7;
        const auto syn = synth_quotes(f, p, g, cfg, so);
        const auto r = calibrate(syn.slices, p, g, co);
        if (report) *report = r.report;
        return r.f;
    };
    UniquenessReport report;
    const auto clean = recover(0.0, &report);
    const double etas[3] = {1e-4, 2e-4, 4e-4};
    double dev[3];
    for (int k = 0; k < 3; ++k) {
        const auto noisy = recover(etas[k], nullptr);
        double d = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            d = std::max({d, std::abs(noisy.f0[i] - clean.f0[i]), std::abs(noisy.f1[i] - clean.f1[i])});
        dev[k] = d;
    }
    // Least-squares line through (eta, dev), its R^2, and the log-log growth exponent.
    double mx = 0, my = 0;
    for (int k = 0; k < 3; ++k) {
        mx += etas[k] / 3;
        my += dev[k] / 3;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (int k = 0; k < 3; ++k) {
        sxy += (etas[k] - mx) * (dev[k] - my);
        sxx += (etas[k] - mx) * (etas[k] - mx);
        syy += (dev[k] - my) * (dev[k] - my);
    }
    const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 0.0;
    const double exponent = std::log(dev[2] / dev[0]) / std::log(etas[2] / etas[0]);
    const bool monotone = dev[0] > 0 && dev[1] > dev[0] && dev[2] > dev[1];
    return {report.pass() && monotone && r2 >= 0.9 && exponent <= 1.2,
            fmt("deviation at eta = 1e-4, 2e-4, 4e-4 s*: %.3g, %.3g, %.3g (monotone); linear R^2 %.4f (>= 0.9); "
                "growth exponent %.3f (<= 1.2)",
                dev[0], dev[1], dev[2], r2, exponent)};
}

Outcome round_trips() {
    // sigma -> price -> sigma.
    double vol_err = 0.0;
    for (double s : {0.05, 0.1, 0.2, 0.4, 0.8, 1.5}) {
        for (double T1 : {0.1, 0.5, 2.0}) {
            for (double mu : {0.0, 0.03}) {
                ModelParams p;
                p.s_star = 100.0;
                p.r = 0.02;
                p.mu = mu;
                p.T1 = T1;
                p.T2 = T1 + 1.0;
                const double price = bs_call_price(p, p.s_star, p.tau1(), s);
                vol_err = std::max(vol_err, std::abs(implied_vol(p, price) - s));
            }
        }
    }
    // Log-variable transforms.
    ModelParams p = base_params();
    p.s_star = 97.3;
    p.t_star = 0.125;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> K(40.0, 250.0), T(0.2, 3.0);
    double ulps = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double k = K(rng), t = T(rng);
        const auto lv = to_log_vars(p, k, t);
        const auto mv = from_log_vars(p, lv.y, lv.tau);
        const double uk = std::abs(mv.strike - k) / (std::nextafter(k, 2 * k) - k);
        const double ut = std::abs(mv.expiry - t) / (std::nextafter(t, 2 * t) - t);
        ulps = std::max({ulps, uk, ut});
    }
    // Zero-perturbation calibration with sigma0 inferred from the quotes.
    ModelParams q = base_params();
    const double b = 0.02;
    const Grid g = Grid::with_omega_resolution(b, Grid::default_half_width(b, q), 20);
    const auto syn = synth_quotes(PerturbationPair::zero(g), q, g, ForwardConfig{});
    double fmax = 0.0;
    double sigma_err = 0.0;
    for (Method m : {Method::fredholm, Method::spectral, Method::sine}) {
        CalibrationOptions co;
        co.method = m;
        const auto r = calibrate(syn.slices, q, g, co);
        sigma_err = std::max(sigma_err, std::abs(r.data.params.sigma0 - q.sigma0));
        fmax = std::max({fmax, max_abs(r.f.f0), max_abs(r.f.f1)});
    }
    const double tol = 1e-6 * q.sigma0 * q.sigma0;
    return {vol_err <= 1e-10 && ulps <= 4.0 && fmax <= tol,
            fmt("implied-vol round trip %.3g (<= 1e-10); log transforms %.0f ulp (<= 4); "
                "zero-perturbation ||f|| %.3g (<= %.3g), sigma0 error %.3g",
                vol_err, ulps, fmax, tol, sigma_err)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"kernel correctness", kernel_correctness},
        {"forward-solver cross-validation", forward_cross_validation},
        {"Fredholm consistency", fredholm_consistency},
        {"linear round trip", linear_round_trip},
        {"spectral round trip", spectral_round_trip},
        {"determinant asymptotics", determinant_asymptotics},
        {"operator-norm bound", operator_norm_bound},
        {"linearization quadraticity", linearization_quadraticity},
        {"stability under noise", noise_stability},
        {"implied-vol and transform round trips", round_trips},
    };
    int failures = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome o;
        const auto start = Clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        std::printf("[%s] %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %d criteria passed\n", index - failures, index);
    return failures == 0 ? 0 : 1;
}
