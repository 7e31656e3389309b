#include "volcal/fredholm.hpp"

#include "volcal/parallel.hpp"
#include "volcal/quadrature.hpp"
#include "volcal/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace volcal {

double kernel_a1(double x, double y, double tau, double sigma0) {
    const double two_var = 2.0 * tau * sigma0 * sigma0;
    const double g = std::abs(x - y) + std::abs(y);
    return -g / two_var * std::exp(-(g * g - x * x) / two_var);
}

double kernel_a2(double x, double y, double tau, double tau1, double sigma0, A2Variant variant) {
    const double s2 = sigma0 * sigma0;
    const double two_var = 2.0 * tau * s2;
    const double g = std::abs(x - y) + std::abs(y);
    double coef = 0.0;
    double tau_e = tau;
    switch (variant) {
    case A2Variant::corrected:
        coef = std::abs(y) / (2.0 * s2);
        break;
    case A2Variant::doubled_tau1:
        coef = std::abs(y) / s2;
        tau_e = tau1;
        break;
    case A2Variant::sqrt_tau_scaled:
        coef = std::abs(y) / (std::sqrt(2.0 * tau) * s2);
        break;
    }
    // e^{x^2/(2 tau sigma0^2)} E(z) = scaled(z) e^{X^2 - z^2} with X <= z, so nothing overflows.
    const double z = g / (sigma0 * std::sqrt(2.0 * tau_e));
    const double X2 = x * x / two_var;
    const double tail = scaled_upper_gauss(z) * std::exp(X2 - z * z);
    return -(coef * std::exp(-(g * g - x * x) / two_var) + std::sqrt(0.5 * tau) / sigma0 * tail);
}

std::vector<double> rhs_w(std::span<const double> Wxx, double tau, const ModelParams& params, const Grid& grid) {
    params.validate();
    if (Wxx.size() != grid.omega_size()) throw ValidationError("W'' must be sampled on the omega nodes");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    const double s = params.sigma0;
    const double pre = -std::sqrt(std::numbers::pi * tau) * s * s * s / (std::numbers::sqrt2 * params.s_star);
    std::vector<double> out(Wxx.size());
    for (std::size_t i = 0; i < Wxx.size(); ++i) {
        const double x = grid.node(grid.omega_begin() + i);
        out[i] = pre * std::exp(x * x / (2.0 * tau * s * s)) * Wxx[i];
    }
    return out;
}

namespace {

// Quadrature weights for row p: Simpson pieces between the kinks at 0, x_p and +-b.
std::vector<double> row_weights(std::size_t p, std::size_t k, double h) {
    const std::size_t last = 2 * k;
    std::vector<std::size_t> cuts{0, k, p, last};
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> w(last + 1, 0.0);
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
        add_simpson_weights(std::span<double>(w).subspan(cuts[s], cuts[s + 1] - cuts[s] + 1), cuts[s + 1] - cuts[s], h);
    return w;
}

void check_indices(int j, int k) {
    if ((j != 1 && j != 2) || (k != 1 && k != 2)) throw ValidationError("operator indices must be 1 or 2");
}

}  // namespace

Eigen::MatrixXd assemble_operator(int j, int k, const ModelParams& params, const Grid& grid, A2Variant variant) {
    params.validate();
    check_indices(j, k);
    const auto x = grid.omega_nodes();
    const std::size_t m = x.size();
    const std::size_t half = (m - 1) / 2;
    const double tau = params.tau(j);
    Eigen::MatrixXd A(m, m);
    parallel_for(m, [&](std::size_t p) {
        const auto w = row_weights(p, half, grid.h());
        for (std::size_t q = 0; q < m; ++q) {
            const double a = k == 1 ? kernel_a1(x[p], x[q], tau, params.sigma0)
                                    : kernel_a2(x[p], x[q], tau, params.tau1(), params.sigma0, variant);
            A(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = w[q] * a;
        }
    });
    return A;
}

std::vector<double> apply_A(int j, int k, std::span<const double> f, const ModelParams& params, const Grid& grid,
                            A2Variant variant) {
    if (f.size() != grid.omega_size()) throw ValidationError("f must be sampled on the omega nodes");
    const auto A = assemble_operator(j, k, params, grid, variant);
    const Eigen::VectorXd v = A * Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    return {v.data(), v.data() + v.size()};
}

double A1_norm_bound(double b, double tau, double sigma0) { return 3.0 * b * b / (2.0 * tau * sigma0 * sigma0); }

double A2_norm_bound(double b, double tau, double sigma0, A2Variant variant) {
    const double s2 = sigma0 * sigma0;
    // \int_omega |y| dy = b^2; the E term is at most sqrt(pi)/2 times the width 2b.
    double first = 0.0;
    switch (variant) {
    case A2Variant::corrected:
        first = b * b / (2.0 * s2);
        break;
    case A2Variant::doubled_tau1:
        first = b * b / s2;
        break;
    case A2Variant::sqrt_tau_scaled:
        first = b * b / (std::sqrt(2.0 * tau) * s2);
        break;
    }
    return first + std::sqrt(std::numbers::pi * tau / 2.0) * b / sigma0;
}

double inf_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

FredholmSystem FredholmSystem::assemble(const ModelParams& params, const Grid& grid, A2Variant variant) {
    params.validate();
    FredholmSystem s;
    s.params = params;
    s.x = grid.omega_nodes();
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) s.A[j][k] = assemble_operator(j + 1, k + 1, params, grid, variant);
    const auto m = static_cast<Eigen::Index>(s.x.size());
    const double t1 = params.tau1(), t2 = params.tau2();
    const double dt = t2 - t1;
    s.M.resize(2 * m, 2 * m);
    s.M.topLeftCorner(m, m) = (t2 * s.A[0][0] - t1 * s.A[1][0]) / dt;
    s.M.topRightCorner(m, m) = (t2 * s.A[0][1] - t1 * s.A[1][1]) / dt;
    s.M.bottomLeftCorner(m, m) = (s.A[1][0] - s.A[0][0]) / dt;
    s.M.bottomRightCorner(m, m) = (s.A[1][1] - s.A[0][1]) / dt;
    s.w[0] = Eigen::VectorXd::Zero(m);
    s.w[1] = Eigen::VectorXd::Zero(m);
    s.g = Eigen::VectorXd::Zero(2 * m);
    return s;
}

FredholmSystem FredholmSystem::assemble(const ModelParams& params, const Grid& grid, std::span<const double> w1,
                                        std::span<const double> w2, A2Variant variant) {
    auto s = assemble(params, grid, variant);
    s.set_rhs(w1, w2);
    return s;
}

void FredholmSystem::set_rhs(std::span<const double> w1, std::span<const double> w2) {
    const auto m = static_cast<Eigen::Index>(x.size());
    if (w1.size() != x.size() || w2.size() != x.size())
        throw ValidationError("right-hand sides must be sampled on the omega nodes");
    w[0] = Eigen::Map<const Eigen::VectorXd>(w1.data(), m);
    w[1] = Eigen::Map<const Eigen::VectorXd>(w2.data(), m);
    const double t1 = params.tau1(), t2 = params.tau2();
    g.resize(2 * m);
    g.head(m) = (t2 * w[0] - t1 * w[1]) / (t2 - t1);
    g.tail(m) = (w[1] - w[0]) / (t2 - t1);
}

double FredholmSystem::rho() const { return inf_norm(M); }

Eigen::VectorXd FredholmSystem::residual(const Eigen::VectorXd& f0, const Eigen::VectorXd& f1) const {
    const auto m = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd r(2 * m);
    for (int j = 0; j < 2; ++j)
        r.segment(j * m, m) = f0 + params.tau(j + 1) * f1 + A[j][0] * f0 + A[j][1] * f1 - w[j];
    return r;
}

std::string UniquenessReport::verdict() const {
    return std::string(analytic_pass() ? "analytic-pass" : "analytic-fail") + "," +
           (numeric_pass() ? "numeric-pass" : "numeric-fail");
}

std::pair<double, double> uniqueness_margins(double tau1, double tau2, double sigma0, double b) {
    if (!(tau1 > 0.0) || !(tau2 > tau1)) throw DomainError("uniqueness check needs 0 < tau1 < tau2");
    if (!(b > 0.0) || !(sigma0 > 0.0)) throw DomainError("uniqueness check needs b > 0 and sigma0 > 0");
    const double s2 = sigma0 * sigma0;
    const double r = std::sqrt(tau1 * tau2);
    const double lhs1 = (tau1 * tau1 + tau2 * tau2 + r * (tau1 + tau2)) / (tau1 * tau2 * (tau2 - tau1)) * 3.0 * b * b /
                        (2.0 * s2);
    const double lhs2 = ((std::sqrt(tau1 / tau2) + std::sqrt(tau2 / tau1) + 2.0) * b * b / s2 +
                         2.0 * std::sqrt(2.0 * std::numbers::pi) * (std::sqrt(tau1) + std::sqrt(tau2)) * b / sigma0) /
                        (2.0 * (tau2 - tau1));
    return {1.0 - lhs1, 1.0 - lhs2};
}

UniquenessReport check_uniqueness(const FredholmSystem& system, const Grid& grid, A2Variant variant) {
    const auto& p = system.params;
    UniquenessReport r;
    std::tie(r.margin1, r.margin2) = uniqueness_margins(p.tau1(), p.tau2(), p.sigma0, grid.b());
    r.rho = system.rho();
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) r.A_norm[j][k] = inf_norm(system.A[j][k]);
        r.A1_bound[j] = A1_norm_bound(grid.b(), p.tau(j + 1), p.sigma0);
        r.A2_bound[j] = A2_norm_bound(grid.b(), p.tau(j + 1), p.sigma0, variant);
    }
    return r;
}

UniquenessReport check_uniqueness(const ModelParams& params, const Grid& grid, A2Variant variant) {
    return check_uniqueness(FredholmSystem::assemble(params, grid, variant), grid, variant);
}

NeumannResult solve_neumann(const FredholmSystem& system, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    const double rho = system.rho();
    if (!(rho < 1.0)) {
        UniquenessReport report;
        report.rho = rho;
        std::tie(report.margin1, report.margin2) = uniqueness_margins(
            system.params.tau1(), system.params.tau2(), system.params.sigma0,
            system.x.empty() ? 0.0 : system.x.back());
        std::ostringstream msg;
        msg << "decoupled operator is not a contraction (rho = " << rho << ")";
        throw ContractionError(msg.str(), report);
    }
    const auto m = static_cast<Eigen::Index>(system.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * m);
    NeumannResult out;
    bool converged = false;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd next = system.g - system.M * v;
        const double change = (next - v).lpNorm<Eigen::Infinity>();
        v.swap(next);
        out.iterations = it;
        out.step_norms.push_back(change);
        if (change < tol) {
            converged = true;
            break;
        }
    }
    const Eigen::VectorXd f0 = v.head(m);
    const Eigen::VectorXd f1 = v.tail(m);
    out.residual = system.residual(f0, f1).lpNorm<Eigen::Infinity>();
    if (!converged)
        throw NonConvergenceError("Neumann iteration reached its iteration cap", out.residual);
    out.f0.assign(f0.data(), f0.data() + m);
    out.f1.assign(f1.data(), f1.data() + m);
    return out;
}

PerturbationPair to_grid(const NeumannResult& result, const Grid& grid) {
    if (result.f0.size() != grid.omega_size()) throw ValidationError("solution does not match the grid");
    auto pair = PerturbationPair::zero(grid);
    for (std::size_t i = 0; i < result.f0.size(); ++i) {
        pair.f0[grid.omega_begin() + i] = result.f0[i];
        pair.f1[grid.omega_begin() + i] = result.f1[i];
    }
    return pair;
}

double ConsistencyResidual::max_abs() const {
    double m = 0.0;
    for (const auto& v : r)
        for (double e : v) m = std::max(m, std::abs(e));
    return m;
}

ConsistencyResidual consistency_residual(const PerturbationFunctions& f, const ModelParams& params, const Grid& grid,
                                         A2Variant variant) {
    params.validate();
    const auto x = grid.omega_nodes();
    std::vector<double> f0(x.size(), 0.0), f1(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) >= f.b) continue;
        if (f.f0) f0[i] = f.f0(x[i]);
        if (f.f1) f1[i] = f.f1(x[i]);
    }
    ConsistencyResidual out;
    for (int j = 1; j <= 2; ++j) {
        const double tau = params.tau(j);
        const auto w = rhs_w(forward_linear_curvature(f, tau, params, x), tau, params, grid);
        const auto a0 = apply_A(j, 1, f0, params, grid, variant);
        const auto a1 = apply_A(j, 2, f1, params, grid, variant);
        auto& r = out.r[j - 1];
        r.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = f0[i] + tau * f1[i] + a0[i] + a1[i] - w[i];
    }
    return out;
}

}  // namespace volcal
