#include "volcal/spectral.hpp"

#include "fft.hpp"
#include "volcal/errors.hpp"
#include "volcal/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace volcal {

namespace {

constexpr double kSeriesSwitch = 0.5;  // u = Xi^2 tau below which the series is summed

// \int_0^1 r^{a-1} e^{-u(1-r)} dr as a power series in u.
double beta_series(double u, double a) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 0; k < 60; ++k) {
        term *= -u / (k + 1.0 + a);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

void check_tau(double tau, double Xi) {
    if (!(tau > 0.0)) throw DomainError("time integral needs tau > 0");
    if (!(Xi >= 0.0)) throw DomainError("time integral needs Xi >= 0");
}

}  // namespace

double time_integral_minus(double tau, double Xi) {
    check_tau(tau, Xi);
    const double u = Xi * Xi * tau;
    if (u < kSeriesSwitch) return std::sqrt(tau) * beta_series(u, 0.5);
    return 2.0 * dawson(Xi * std::sqrt(tau)) / Xi;
}

double time_integral_plus(double tau, double Xi) {
    check_tau(tau, Xi);
    const double u = Xi * Xi * tau;
    if (u < kSeriesSwitch) return tau * std::sqrt(tau) * beta_series(u, 1.5);
    return (std::sqrt(tau) - 0.5 * time_integral_minus(tau, Xi)) / (Xi * Xi);
}

double spectral_Xi(double xi, const ModelParams& params) {
    return params.sigma0 * std::abs(xi) / std::numbers::sqrt2;
}

double determinant_d(double xi, const ModelParams& params) {
    params.validate();
    const double Xi = spectral_Xi(xi, params);
    const double t1 = params.tau1();
    const double t2 = params.tau2();
    return params.S() * (time_integral_minus(t1, Xi) * time_integral_plus(t2, Xi) -
                         time_integral_plus(t1, Xi) * time_integral_minus(t2, Xi));
}

double determinant_d_reduced(double xi, const ModelParams& params) {
    params.validate();
    const double Xi = spectral_Xi(xi, params);
    if (Xi == 0.0) throw DomainError("reduced determinant form is singular at xi = 0");
    const double t1 = params.tau1();
    const double t2 = params.tau2();
    return params.S() * std::sqrt(t1 * t2) / (Xi * Xi) *
           (time_integral_minus(t1, Xi) / std::sqrt(t1) - time_integral_minus(t2, Xi) / std::sqrt(t2));
}

double determinant_sandwich_constant(const ModelParams& params, double xi_max, std::size_t samples) {
    if (samples < 2) throw ValidationError("sandwich scan needs at least two samples");
    double c = 1.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double xi = -xi_max + 2.0 * xi_max * static_cast<double>(i) / static_cast<double>(samples - 1);
        const double w = 1.0 + xi * xi;
        const double scaled = determinant_d(xi, params) * w * w;
        c = std::max({c, scaled, 1.0 / scaled});
    }
    return c;
}

SpectralWorkspace::SpectralWorkspace(std::vector<double> frequencies, const ModelParams& params)
    : xi(std::move(frequencies)) {
    params.validate();
    const std::size_t n = xi.size();
    Xi.resize(n);
    d.resize(n);
    for (int j = 0; j < 2; ++j) {
        Im[j].resize(n);
        Ip[j].resize(n);
    }
    for (std::size_t k = 0; k < n; ++k) {
        Xi[k] = spectral_Xi(xi[k], params);
        for (int j = 0; j < 2; ++j) {
            Im[j][k] = time_integral_minus(params.tau(j + 1), Xi[k]);
            Ip[j][k] = time_integral_plus(params.tau(j + 1), Xi[k]);
        }
        d[k] = params.S() * (Im[0][k] * Ip[1][k] - Ip[0][k] * Im[1][k]);
        if (!(d[k] > 1e-300)) throw DomainError("degenerate frequency: determinant is not positive");
    }
}

SpectralWorkspace SpectralWorkspace::fourier(std::size_t L, double h, const ModelParams& params) {
    std::vector<double> freq(L / 2 + 1);
    for (std::size_t k = 0; k < freq.size(); ++k)
        freq[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(L) * h);
    return SpectralWorkspace(std::move(freq), params);
}

SpectralWorkspace SpectralWorkspace::sine(double B, std::size_t modes, const ModelParams& params) {
    std::vector<double> freq(modes);
    for (std::size_t m = 0; m < modes; ++m) freq[m] = std::numbers::pi * static_cast<double>(m + 1) / (2.0 * B);
    return SpectralWorkspace(std::move(freq), params);
}

PerturbationPair SpectralResult::restricted(const Grid& grid) const {
    PerturbationPair out = PerturbationPair::zero(grid);
    for (std::size_t i = grid.omega_begin() + 1; i < grid.omega_end(); ++i) {
        out.f0[i] = f0[i];
        out.f1[i] = f1[i];
    }
    return out;
}

namespace {

template <class T>
struct ModeSolve {
    T f0, f1;
    double residual;
};

// Cramer solve of the per-frequency 2x2 system, with the relative backward residual.
template <class T>
ModeSolve<T> solve_mode(const SpectralWorkspace& ws, std::size_t k, T w1, T w2, double S) {
    const T a1 = w1 / S;
    const T a2 = w2 / S;
    const double det = ws.d[k] / S;
    ModeSolve<T> out;
    out.f0 = (ws.Ip[1][k] * a1 - ws.Ip[0][k] * a2) / det;
    out.f1 = (ws.Im[0][k] * a2 - ws.Im[1][k] * a1) / det;
    double res = 0.0;
    const T rhs[2] = {a1, a2};
    for (int j = 0; j < 2; ++j) {
        const T r = ws.Im[j][k] * out.f0 + ws.Ip[j][k] * out.f1 - rhs[j];
        const double scale = ws.Im[j][k] * std::abs(out.f0) + ws.Ip[j][k] * std::abs(out.f1) + std::abs(rhs[j]);
        if (scale > 0.0) res = std::max(res, std::abs(r) / scale);
    }
    out.residual = res;
    return out;
}

void check_sizes(std::span<const double> W1, std::span<const double> W2, const Grid& grid) {
    if (W1.size() != grid.size() || W2.size() != grid.size())
        throw ValidationError("data curves must be sampled on every grid node");
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

SpectralResult invert_fourier(std::span<const double> W1, std::span<const double> W2, const ModelParams& params,
                              const Grid& grid) {
    params.validate();
    check_sizes(W1, W2, grid);
    const std::size_t n = grid.size();
    const std::size_t L = 2 * std::max<std::size_t>(512, next_pow2(n - 1));
    std::vector<double> p1(L, 0.0), p2(L, 0.0);
    std::copy(W1.begin(), W1.end(), p1.begin());
    std::copy(W2.begin(), W2.end(), p2.begin());
    const auto F1 = detail::rfft(p1);
    const auto F2 = detail::rfft(p2);
    const auto ws = SpectralWorkspace::fourier(L, grid.h(), params);

    std::vector<std::complex<double>> G0(F1.size()), G1(F1.size());
    SpectralResult out;
    for (std::size_t k = 0; k < F1.size(); ++k) {
        const auto m = solve_mode(ws, k, F1[k], F2[k], params.S());
        G0[k] = m.f0;
        G1[k] = m.f1;
        out.max_system_residual = std::max(out.max_system_residual, m.residual);
    }
    const auto g0 = detail::irfft(G0, L);
    const auto g1 = detail::irfft(G1, L);
    out.f0.resize(n);
    out.f1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.f0[i] = g0[i] / static_cast<double>(L);
        out.f1[i] = g1[i] / static_cast<double>(L);
    }
    out.frequencies = F1.size();
    return out;
}

SpectralResult invert_sine_series(std::span<const double> W1, std::span<const double> W2, const ModelParams& params,
                                  const Grid& grid, std::size_t modes) {
    params.validate();
    check_sizes(W1, W2, grid);
    const std::size_t n = grid.size();
    const std::size_t interior = n - 2;
    if (modes == 0 || modes > interior) throw ValidationError("mode count must lie in [1, n-2]");
    for (auto W : {W1, W2}) {
        double norm = 0.0;
        for (double v : W) norm = std::max(norm, std::abs(v));
        if (std::abs(W.front()) > 1e-8 * norm || std::abs(W.back()) > 1e-8 * norm)
            throw ValidationError("sine-series inversion needs zero boundary values at +-B");
    }
    const auto c1 = detail::dst1(W1.subspan(1, interior));
    const auto c2 = detail::dst1(W2.subspan(1, interior));
    const auto ws = SpectralWorkspace::sine(grid.B(), modes, params);

    std::vector<double> g0(interior, 0.0), g1(interior, 0.0);
    SpectralResult out;
    for (std::size_t k = 0; k < modes; ++k) {
        const auto m = solve_mode(ws, k, c1[k], c2[k], params.S());
        g0[k] = m.f0;
        g1[k] = m.f1;
        out.max_system_residual = std::max(out.max_system_residual, m.residual);
    }
    const auto r0 = detail::dst1(g0);
    const auto r1 = detail::dst1(g1);
    const double norm = 2.0 * static_cast<double>(n - 1);
    out.f0.assign(n, 0.0);
    out.f1.assign(n, 0.0);
    for (std::size_t i = 0; i < interior; ++i) {
        out.f0[i + 1] = r0[i] / norm;
        out.f1[i + 1] = r1[i] / norm;
    }
    out.frequencies = modes;
    return out;
}

}  // namespace volcal
