#include "volcal/fredholm.hpp"
#include "volcal/quadrature.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

using namespace volcal;

namespace {

ModelParams params() {
    ModelParams p;
    p.sigma0 = 0.4;
    p.T1 = 0.25;
    p.T2 = 0.5;
    return p;
}

PerturbationFunctions gaussian(double b, double a0, double a1, double width = 0.15) {
    PerturbationFunctions f;
    f.b = b;
    const double w = width * b;
    auto bump = [=](double y, double c) { return std::abs(y) < b ? std::exp(-(y - c) * (y - c) / (2 * w * w)) : 0.0; };
    if (a0 != 0.0) f.f0 = [=](double y) { return a0 * bump(y, 0.0); };
    if (a1 != 0.0) f.f1 = [=](double y) { return a1 * bump(y, 0.1 * b); };
    return f;
}

PerturbationFunctions smooth_pair(double b, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    const std::array<double, 4> c0{z(rng), z(rng), z(rng), z(rng)};
    const std::array<double, 4> c1{z(rng), z(rng), z(rng), z(rng)};
    PerturbationFunctions f;
    f.b = b;
    auto make = [b](std::array<double, 4> c, double scale) {
        return [=](double y) {
            const double t = y / b;
            if (std::abs(t) >= 1) return 0.0;
            return scale * std::pow(1 - t * t, 4) * (c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t);
        };
    };
    f.f0 = make(c0, 0.01);
    f.f1 = make(c1, 0.02);
    return f;
}

}  // namespace

TEST(FredholmKernels, RhsOfLinearDataIsZero) {
    const auto p = params();
    const Grid g(0.5, 0.1, 51);
    std::vector<double> zero(g.omega_size(), 0.0);
    for (double v : rhs_w(zero, p.tau1(), p, g)) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(rhs_w(std::vector<double>(3, 0.0), p.tau1(), p, g), ValidationError);
}

TEST(FredholmKernels, OperatorAgainstAdaptiveQuadrature) {
    const auto p = params();
    const double b = 0.05;
    const Grid g = Grid::with_omega_resolution(b, 0.5, 20);
    ASSERT_EQ(g.omega_size(), 41u);
    auto f = [&](double y) { return (1 - y * y / (b * b)) * std::exp(0.5 * y / b); };
    std::vector<double> fs;
    for (double y : g.omega_nodes()) fs.push_back(f(y));
    for (int j = 1; j <= 2; ++j) {
        for (int k = 1; k <= 2; ++k) {
            const auto Af = apply_A(j, k, fs, p, g);
            const auto x = g.omega_nodes();
            for (std::size_t i = 0; i < x.size(); i += 5) {
                auto integrand = [&](double y) {
                    const double a = k == 1 ? kernel_a1(x[i], y, p.tau(j), p.sigma0)
                                            : kernel_a2(x[i], y, p.tau(j), p.tau1(), p.sigma0);
                    return a * f(y);
                };
                double ref = 0.0;
                std::vector<double> cuts{-b, 0.0, b};
                if (std::abs(x[i]) < b) cuts.push_back(x[i]);
                std::sort(cuts.begin(), cuts.end());
                cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
                    ref += integrate_doubling(integrand, cuts[s], cuts[s + 1], 1e-13, 1e-16).value;
                EXPECT_NEAR(Af[i], ref, 1e-7) << j << k << " " << x[i];
            }
        }
    }
}

TEST(FredholmKernels, NormBounds) {
    for (double b : {0.01, 0.02, 0.05}) {
        for (double s : {0.2, 0.4}) {
            auto p = params();
            p.sigma0 = s;
            const Grid g = Grid::with_omega_resolution(b, 0.5, 40);
            for (int j = 1; j <= 2; ++j) {
                EXPECT_LE(inf_norm(assemble_operator(j, 1, p, g)), A1_norm_bound(b, p.tau(j), s));
                EXPECT_LE(inf_norm(assemble_operator(j, 2, p, g)), A2_norm_bound(b, p.tau(j), s));
            }
        }
    }
}

TEST(FredholmConsistency, GaussianBumpsAndKernelVariants) {
    const auto p = params();
    const double b = 0.1;
    const Grid g = Grid::with_omega_resolution(b, 0.5, 100);
    const auto f0 = gaussian(b, 0.01, 0.0);
    EXPECT_LE(consistency_residual(f0, p, g).max_abs(), 1e-6 * 0.01);
    const auto f1 = gaussian(b, 0.0, 0.01);
    const double corrected = consistency_residual(f1, p, g).max_abs();
    const double doubled = consistency_residual(f1, p, g, A2Variant::doubled_tau1).max_abs();
    const double scaled = consistency_residual(f1, p, g, A2Variant::sqrt_tau_scaled).max_abs();
    EXPECT_LE(corrected, 1e-6 * 0.01);
    EXPECT_GE(doubled, 10 * 1e-6 * 0.01);
    EXPECT_GE(scaled, 10 * 1e-6 * 0.01);
    PerturbationFunctions zero;
    zero.b = b;
    EXPECT_EQ(consistency_residual(zero, p, g).max_abs(), 0.0);
}

TEST(FredholmSystem, DecoupledBlocks) {
    const auto p = params();
    const Grid g = Grid::with_omega_resolution(0.02, 0.5, 10);
    std::vector<double> w1(g.omega_size()), w2(g.omega_size());
    for (std::size_t i = 0; i < w1.size(); ++i) {
        w1[i] = std::sin(static_cast<double>(i));
        w2[i] = std::cos(static_cast<double>(i));
    }
    const auto s = FredholmSystem::assemble(p, g, w1, w2);
    const auto m = static_cast<Eigen::Index>(s.size());
    const double t1 = p.tau1(), t2 = p.tau2();
    EXPECT_LT((s.M.bottomLeftCorner(m, m) * (t2 - t1) - (s.A[1][0] - s.A[0][0])).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(s.g(0), (t2 * w1[0] - t1 * w2[0]) / (t2 - t1), 1e-15);
    EXPECT_NEAR(s.g(m), (w2[0] - w1[0]) / (t2 - t1), 1e-15);
    auto bad = p;
    bad.T2 = bad.T1;
    EXPECT_THROW(FredholmSystem::assemble(bad, g), DomainError);
}

TEST(Uniqueness, MarginsAndVerdict) {
    auto [m1, m2] = uniqueness_margins(0.25, 0.5, 0.4, 0.05);
    EXPECT_NEAR(m1, 0.566751217791283509, 1e-14);
    EXPECT_NEAR(m2, -0.641675254846746970, 1e-14);
    std::tie(m1, m2) = uniqueness_margins(0.25, 0.5, 0.4, 0.02);
    EXPECT_NEAR(m1, 0.930680194846605361, 1e-14);
    EXPECT_NEAR(m2, 0.374239800637998531, 1e-14);
    std::tie(m1, m2) = uniqueness_margins(0.25, 0.5, 0.4, 1e-6);
    EXPECT_GT(m1, 0.999);
    EXPECT_GT(m2, 0.999);
    double prev1 = 2, prev2 = 2;
    for (double b = 0.001; b < 0.2; b += 0.004) {
        std::tie(m1, m2) = uniqueness_margins(0.25, 0.5, 0.4, b);
        EXPECT_LT(m1, prev1);
        EXPECT_LT(m2, prev2);
        prev1 = m1;
        prev2 = m2;
    }
    const auto p = params();
    const auto ok = check_uniqueness(p, Grid::with_omega_resolution(0.02, 0.5, 10));
    EXPECT_TRUE(ok.pass());
    EXPECT_EQ(ok.verdict(), "analytic-pass,numeric-pass");
    const auto bad = check_uniqueness(p, Grid::with_omega_resolution(0.05, 0.5, 10));
    EXPECT_FALSE(bad.analytic_pass());
}

TEST(Neumann, ZeroDataAndRoundTrip) {
    const auto p = params();
    const double b = 0.02;
    const Grid g = Grid::with_omega_resolution(b, 0.5, 40);
    const auto sys0 = FredholmSystem::assemble(p, g);
    ASSERT_LT(sys0.rho(), 1.0);
    std::vector<double> zero(g.omega_size(), 0.0);
    auto sys = sys0;
    sys.set_rhs(zero, zero);
    const auto r0 = solve_neumann(sys);
    EXPECT_EQ(r0.iterations, 1u);
    for (double v : r0.f0) EXPECT_EQ(v, 0.0);

    std::mt19937_64 rng(21);
    const auto f = smooth_pair(b, rng);
    const auto x = g.omega_nodes();
    std::vector<double> w[2];
    for (int j = 1; j <= 2; ++j) w[j - 1] = rhs_w(forward_linear_curvature(f, p.tau(j), p, x), p.tau(j), p, g);
    sys.set_rhs(w[0], w[1]);
    const auto r = solve_neumann(sys);
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e0 = std::abs(x[i]) < b ? f.f0(x[i]) : 0.0;
        const double e1 = std::abs(x[i]) < b ? f.f1(x[i]) : 0.0;
        err = std::max({err, std::abs(r.f0[i] - e0), std::abs(r.f1[i] - e1)});
        scale = std::max({scale, std::abs(e0), std::abs(e1)});
    }
    EXPECT_LT(err / scale, 1e-4);
    for (std::size_t k = 1; k + 1 < r.step_norms.size(); ++k)
        EXPECT_LE(r.step_norms[k], sys.rho() * r.step_norms[k - 1] * (1 + 1e-9) + 1e-15);

    // Linear in the data.
    std::vector<double> w1s(w[0]), w2s(w[1]);
    for (auto& v : w1s) v *= 3.0;
    for (auto& v : w2s) v *= 3.0;
    sys.set_rhs(w1s, w2s);
    const auto r3 = solve_neumann(sys);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(r3.f0[i], 3 * r.f0[i], 1e-9);
}

TEST(Neumann, RefusesNonContraction) {
    const auto p = params();
    const Grid g = Grid::with_omega_resolution(0.3, 0.6, 10);
    const auto sys = FredholmSystem::assemble(p, g);
    ASSERT_GE(sys.rho(), 1.0);
    EXPECT_THROW(solve_neumann(sys), ContractionError);
}

TEST(Neumann, EmpiricalStabilityConstant) {
    const auto p = params();
    const double b = 0.02;
    const Grid g = Grid::with_omega_resolution(b, 0.5, 20);
    auto sys = FredholmSystem::assemble(p, g);
    const auto x = g.omega_nodes();
    std::mt19937_64 rng(4);
    std::vector<double> ratios;
    for (int trial = 0; trial < 100; ++trial) {
        const auto f = smooth_pair(b, rng);
        std::vector<double> wxx[2], w[2];
        double data = 0;
        for (int j = 1; j <= 2; ++j) {
            wxx[j - 1] = forward_linear_curvature(f, p.tau(j), p, x, 1e-10);
            double m = 0;
            for (double v : wxx[j - 1]) m = std::max(m, std::abs(v));
            data += m;
            w[j - 1] = rhs_w(wxx[j - 1], p.tau(j), p, g);
        }
        sys.set_rhs(w[0], w[1]);
        const auto r = solve_neumann(sys);
        double n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            n0 = std::max(n0, std::abs(r.f0[i]));
            n1 = std::max(n1, std::abs(r.f1[i]));
        }
        ratios.push_back((n0 + n1) / data);
    }
    // The constant is a supremum: estimate it on ten batches of ten inputs and require the
    // batch estimates to agree.
    std::vector<double> batch;
    for (std::size_t k = 0; k < 10; ++k)
        batch.push_back(*std::max_element(ratios.begin() + 10 * k, ratios.begin() + 10 * (k + 1)));
    double mean = 0, var = 0;
    for (double v : batch) mean += v / batch.size();
    for (double v : batch) var += (v - mean) * (v - mean) / batch.size();
    EXPECT_LT(std::sqrt(var) / mean, 0.5);
    const double C = *std::max_element(ratios.begin(), ratios.end());
    EXPECT_TRUE(std::isfinite(C));
    std::printf("empirical stability constant %.6g (batch cv %.3f)\n", C, std::sqrt(var) / mean);
}
