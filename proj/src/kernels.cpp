#include "volcal/kernels.hpp"

#include "volcal/errors.hpp"
#include "volcal/quadrature.hpp"
#include "volcal/special_functions.hpp"

#include <cmath>
#include <numbers>

namespace volcal {

namespace {

double gaussian_factor(double z2) { return z2 > 700.0 ? 0.0 : std::exp(-z2); }

double s_star_prefactor(const KernelParams& kp) {
    return kp.s_star / (kp.sigma0 * kp.sigma0 * std::sqrt(std::numbers::pi));
}

void check(const KernelParams& kp) {
    if (!(kp.tau > 0.0)) throw DomainError("kernel time slice must be positive");
    if (!(kp.sigma0 > 0.0)) throw DomainError("sigma0 must be positive");
}

}  // namespace

KernelParams::KernelParams(const ModelParams& params, double tau_)
    : KernelParams(params.s_star, params.sigma0, tau_) {}

KernelParams::KernelParams(double s, double sigma, double tau_) : s_star(s), sigma0(sigma), tau(tau_) {
    check(*this);
}

double kernel_K0(double x, double y, const KernelParams& kp) {
    const double z = (std::abs(x - y) + std::abs(y)) / (kp.sigma0 * std::sqrt(2.0 * kp.tau));
    return s_star_prefactor(kp) * upper_gauss_integral(z);
}

double kernel_K1(double x, double y, const KernelParams& kp) {
    return 0.5 * kernel_K1_doubled(x, y, kp);
}

double kernel_K1_doubled(double x, double y, const KernelParams& kp) {
    const double s = kp.sigma0;
    const double z = (std::abs(x - y) + std::abs(y)) / (s * std::sqrt(2.0 * kp.tau));
    const double a = std::sqrt(kp.tau) / (std::numbers::sqrt2 * s) * (std::abs(y) - std::abs(x - y));
    const double c = (x * x - 2.0 * x * y) / (s * s) + kp.tau;
    return s_star_prefactor(kp) * (a * gaussian_factor(z * z) + c * upper_gauss_integral(z));
}

double kernel_K0_dtau(double x, double y, const KernelParams& kp) {
    const double z = (std::abs(x - y) + std::abs(y)) / (kp.sigma0 * std::sqrt(2.0 * kp.tau));
    return s_star_prefactor(kp) * z * gaussian_factor(z * z) / (2.0 * kp.tau);
}

double kernel_K1_dtau(double x, double y, const KernelParams& kp) {
    const double s = kp.sigma0;
    const double t = kp.tau;
    const double z = (std::abs(x - y) + std::abs(y)) / (s * std::sqrt(2.0 * t));
    const double a = std::sqrt(t) / (std::numbers::sqrt2 * s) * (std::abs(y) - std::abs(x - y));
    const double c = (x * x - 2.0 * x * y) / (s * s) + t;
    // d/dtau of a e^{-z^2} + c E(z), with a ~ sqrt(tau), z ~ tau^{-1/2}, dc/dtau = 1.
    const double bracket = (a / (2.0 * t) + a * z * z / t + c * z / (2.0 * t)) * gaussian_factor(z * z) +
                           upper_gauss_integral(z);
    return 0.5 * s_star_prefactor(kp) * bracket;
}

double kernel_quadrature_oracle(double x, double y, const KernelParams& kp, int order, double rel_tol) {
    if (order != 0 && order != 1) throw DomainError("kernel order must be 0 or 1");
    const double two_s2 = 2.0 * kp.sigma0 * kp.sigma0;
    const double dx2 = (x - y) * (x - y);
    const double y2 = y * y;
    const double tau = kp.tau;
    // With t = tau sin^2 phi the weights (tau-t)^{-1/2} t^{-1/2} dt collapse to 2 dphi.
    auto integrand = [&](double phi) {
        const double sn = std::sin(phi);
        const double cs = std::cos(phi);
        const double t = tau * sn * sn;
        const double rest = tau * cs * cs;
        double expo = 0.0;
        if (dx2 > 0.0) expo += rest > 0.0 ? dx2 / (two_s2 * rest) : INFINITY;
        if (y2 > 0.0) expo += t > 0.0 ? y2 / (two_s2 * t) : INFINITY;
        if (expo > 745.0) return 0.0;
        const double power = order == 0 ? 1.0 : t;
        return 2.0 * power * std::exp(-expo);
    };
    const auto res = integrate_doubling(integrand, 0.0, 0.5 * std::numbers::pi, rel_tol, 1e-300, 2, 16);
    if (!res.converged) throw OracleFailure("kernel oracle quadrature did not converge");
    return kp.s_star / (2.0 * std::numbers::pi * kp.sigma0 * kp.sigma0) * res.value;
}

}  // namespace volcal
