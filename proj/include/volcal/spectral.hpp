#pragma once

#include "volcal/model.hpp"

#include <span>
#include <vector>

namespace volcal {

/// I_-(tau, Xi) = \int_0^tau t^{-1/2} e^{Xi^2 (t - tau)} dt = 2 D(Xi sqrt(tau)) / Xi.
double time_integral_minus(double tau, double Xi);

/// I_+(tau, Xi) = \int_0^tau t^{1/2} e^{Xi^2 (t - tau)} dt.
double time_integral_plus(double tau, double Xi);

/// Xi = sigma0 xi / sqrt(2).
double spectral_Xi(double xi, const ModelParams& params);

/// d(xi) = S (I_-(tau1) I_+(tau2) - I_+(tau1) I_-(tau2)).
double determinant_d(double xi, const ModelParams& params);

/// Same determinant through S sqrt(tau1 tau2)/Xi^2 (I_-(tau1)/sqrt(tau1) - I_-(tau2)/sqrt(tau2));
/// loses accuracy as Xi -> 0 and is meant as a cross-check.
double determinant_d_reduced(double xi, const ModelParams& params);

/// Smallest C with C^{-1} (1+xi^2)^{-2} <= d(xi) <= C (1+xi^2)^{-2} over `samples`
/// equispaced points of [-xi_max, xi_max].
double determinant_sandwich_constant(const ModelParams& params, double xi_max, std::size_t samples);

/// Per-frequency coefficients of the two-expiry system
///   I_-(tau_j) f0^ + I_+(tau_j) f1^ = W_j^ / S.
struct SpectralWorkspace {
    std::vector<double> xi;
    std::vector<double> Xi;
    std::vector<double> Im[2];
    std::vector<double> Ip[2];
    std::vector<double> d;

    SpectralWorkspace(std::vector<double> frequencies, const ModelParams& params);

    /// Angular frequencies of a length-L periodic grid with spacing h (k = 0 .. L/2).
    static SpectralWorkspace fourier(std::size_t L, double h, const ModelParams& params);
    /// Dirichlet sine frequencies xi_n = pi n / (2B), n = 1 .. modes.
    static SpectralWorkspace sine(double B, std::size_t modes, const ModelParams& params);

    std::size_t size() const { return xi.size(); }
};

struct SpectralResult {
    std::vector<double> f0;  ///< on every grid node
    std::vector<double> f1;
    double max_system_residual = 0.0;  ///< worst per-frequency relative residual
    std::size_t frequencies = 0;

    /// (f0, f1) with values outside omega set to zero.
    PerturbationPair restricted(const Grid& grid) const;
};

/// Fourier inversion on a zero-padded power-of-two periodic grid.
SpectralResult invert_fourier(std::span<const double> W1, std::span<const double> W2,
                              const ModelParams& params, const Grid& grid);

/// Sine-series inversion with the first `modes` Dirichlet modes of Omega.
/// Throws ValidationError when W_j(+-B) is not zero to 1e-8 relative.
SpectralResult invert_sine_series(std::span<const double> W1, std::span<const double> W2,
                                  const ModelParams& params, const Grid& grid, std::size_t modes);

}  // namespace volcal
