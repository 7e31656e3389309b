#pragma once

#include <complex>
#include <span>
#include <vector>

namespace volcal::detail {

/// Unnormalized DST-I: y_k = 2 sum_j x_j sin(pi (j+1)(k+1)/(n+1)). Applying it twice
/// multiplies by 2(n+1).
std::vector<double> dst1(std::span<const double> x);

/// Unnormalized real-to-complex DFT, n/2+1 outputs.
std::vector<std::complex<double>> rfft(std::span<const double> x);

/// Unnormalized inverse of rfft for a real signal of length n.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace volcal::detail
