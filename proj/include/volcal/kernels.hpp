#pragma once

#include "volcal/model.hpp"

namespace volcal {

/// Kernel parameters for one time slice.
struct KernelParams {
    double s_star;
    double sigma0;
    double tau;

    KernelParams(const ModelParams& params, double tau);
    KernelParams(double s_star, double sigma0, double tau);
};

/// K0(x, y; tau) = S_* E(z), z = (|x-y| + |y|) / (sigma0 sqrt(2 tau)).
double kernel_K0(double x, double y, const KernelParams& kp);

/// Kernel of the f1 term: (S_*/2) [ sqrt(tau)/(sqrt2 sigma0) (|y| - |x-y|) e^{-z^2}
///                                  + ((x^2 - 2xy)/sigma0^2 + tau) E(z) ].
/// K1(0, 0; tau) = s* tau / (4 sigma0^2).
double kernel_K1(double x, double y, const KernelParams& kp);

/// The same expression with prefactor S_* instead of S_*/2 (twice kernel_K1).
double kernel_K1_doubled(double x, double y, const KernelParams& kp);

/// Closed-form tau-derivatives of K0 and K1.
double kernel_K0_dtau(double x, double y, const KernelParams& kp);
double kernel_K1_dtau(double x, double y, const KernelParams& kp);

/// Direct time quadrature of
///   s*/(2 pi sigma0^2) \int_0^tau (tau-t)^{-1/2} t^{-1/2+order}
///                       exp(-(x-y)^2/(2 sigma0^2 (tau-t)) - y^2/(2 sigma0^2 t)) dt
/// after t = tau sin^2(phi). Throws OracleFailure if panel doubling does not settle.
double kernel_quadrature_oracle(double x, double y, const KernelParams& kp, int order,
                                double rel_tol = 1e-11);

}  // namespace volcal
