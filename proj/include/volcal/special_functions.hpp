#pragma once

// Scalar building blocks for the heat kernels and the spectral time integrals.
// All functions are total on finite input and never return NaN.

namespace volcal {

/// Standard normal distribution function.
double normal_cdf(double x);

/// E(z) = \int_z^\infty e^{-t^2} dt = (sqrt(pi)/2) erfc(z). Underflows to 0 for large z.
double upper_gauss_integral(double z);

/// e^{z^2} E(z) for z >= 0, evaluated without forming e^{z^2}. Lies in (0, sqrt(pi)/2].
double scaled_upper_gauss(double z);

/// Dawson's integral D(x) = e^{-x^2} \int_0^x e^{t^2} dt.
double dawson(double x);

}  // namespace volcal
