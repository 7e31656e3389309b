#include "volcal/errors.hpp"
#include "volcal/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace volcal;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Kernels, ValuesAtOrigin) {
    const KernelParams kp(1.0, 0.3, 0.25);
    EXPECT_LT(rel(kernel_K0(0.0, 0.0, kp), 1.0 / (2 * 0.09)), 1e-15);
    EXPECT_LT(rel(kernel_K1(0.0, 0.0, kp), 0.25 / (4 * 0.09)), 1e-15);
    EXPECT_LT(rel(kernel_K1_doubled(0.0, 0.0, kp), 0.25 / (2 * 0.09)), 1e-15);
}

TEST(Kernels, FrozenReferencePoint) {
    const KernelParams kp(1.0, 0.3, 0.25);
    EXPECT_LT(rel(kernel_K0(0.05, -0.03, kp), 2.57419527371998065), 1e-13);
    EXPECT_LT(rel(kernel_K1(0.05, -0.03, kp), 0.259280872689535343), 1e-13);
}

TEST(Kernels, YZeroReducesToSingleArgument) {
    const KernelParams kp(2.0, 0.25, 0.4);
    const double x = 0.13;
    const double s = kp.sigma0;
    const double z = x / (s * std::sqrt(2 * kp.tau));
    const double S_star = kp.s_star / (s * s * std::sqrt(M_PI));
    const double expect = 0.5 * S_star *
                          (-std::sqrt(kp.tau) * x / (std::sqrt(2.0) * s) * std::exp(-z * z) +
                           (x * x / (s * s) + kp.tau) * 0.5 * std::sqrt(M_PI) * std::erfc(z));
    EXPECT_LT(rel(kernel_K1(x, 0.0, kp), expect), 1e-14);
}

TEST(Kernels, K0Properties) {
    const KernelParams kp(1.0, 0.2, 0.5);
    double prev = kernel_K0(0.0, 0.0, kp);
    for (double y = 0.05; y < 1.5; y += 0.05) {
        const double v = kernel_K0(0.0, y, kp);
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_EQ(kernel_K0(0.0, 50.0, kp), 0.0);
    // Depends only on |x-y| + |y|.
    EXPECT_LT(rel(kernel_K0(0.3, 0.1, kp), kernel_K0(-0.1, 0.1, kp)), 1e-14);
}

TEST(Kernels, TimeDerivatives) {
    const double step = 1e-6;
    for (double x : {0.0, 0.07, -0.12}) {
        for (double y : {0.0, 0.03, -0.05}) {
            for (double tau : {0.1, 0.5}) {
                const KernelParams kp(1.0, 0.35, tau), kp_up(1.0, 0.35, tau + step), kp_dn(1.0, 0.35, tau - step);
                const double fd0 = (kernel_K0(x, y, kp_up) - kernel_K0(x, y, kp_dn)) / (2 * step);
                const double fd1 = (kernel_K1(x, y, kp_up) - kernel_K1(x, y, kp_dn)) / (2 * step);
                EXPECT_NEAR(kernel_K0_dtau(x, y, kp), fd0, 1e-6 * (1 + std::abs(fd0)));
                EXPECT_NEAR(kernel_K1_dtau(x, y, kp), fd1, 1e-6 * (1 + std::abs(fd1)));
            }
        }
    }
    // K1(0,0;tau) is linear in tau.
    const KernelParams kp(1.0, 0.35, 0.3);
    EXPECT_LT(rel(kernel_K1_dtau(0.0, 0.0, kp), 1.0 / (4 * 0.35 * 0.35)), 1e-14);
}

TEST(KernelOracle, MatchesClosedForms) {
    for (double tau : {0.25, 1.0}) {
        const KernelParams kp(1.0, 0.3, tau);
        for (auto [x, y] : {std::pair{0.05, -0.03}, {0.2, 0.1}, {-0.3, 0.25}, {0.0, 0.0}}) {
            EXPECT_LT(rel(kernel_quadrature_oracle(x, y, kp, 0), kernel_K0(x, y, kp)), 1e-10);
            EXPECT_LT(rel(kernel_quadrature_oracle(x, y, kp, 1), kernel_K1(x, y, kp)), 1e-10);
        }
    }
}

TEST(KernelOracle, OriginAndTinyTime) {
    const KernelParams kp(1.0, 0.2, 0.7);
    EXPECT_LT(rel(kernel_quadrature_oracle(0.0, 0.0, kp, 0), 1.0 / (2 * 0.04)), 1e-10);
    const KernelParams tiny(1.0, 0.2, 1e-8);
    EXPECT_LT(kernel_quadrature_oracle(0.05, -0.03, tiny, 0), 1e-300);
    EXPECT_LT(kernel_quadrature_oracle(0.0, 0.0, tiny, 1), 1e-7);
    EXPECT_THROW(kernel_quadrature_oracle(0.0, 0.0, kp, 2), DomainError);
}

TEST(KernelParams, RejectsNonPositiveTime) {
    EXPECT_THROW(KernelParams(1.0, 0.2, 0.0), DomainError);
    EXPECT_THROW(KernelParams(1.0, -0.2, 0.5), DomainError);
}
