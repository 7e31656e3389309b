#pragma once

#include "volcal/model.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace volcal {

struct ForwardConfig {
    std::size_t time_steps = 800;      ///< M, steps to the last output time
    std::size_t rannacher_steps = 4;   ///< implicit half-steps at the start of a Dupire solve
    std::size_t modes = 256;           ///< N for the modal solver
    double quad_rel_tol = 1e-11;       ///< panel-doubling tolerance of the kernel quadrature

    /// Throws ValidationError unless M >= 50, N >= 16 and the tolerance is positive.
    void validate() const;
};

/// Continuous perturbation pair supported in [-b, b].
struct PerturbationFunctions {
    std::function<double(double)> f0;
    std::function<double(double)> f1;
    double b = 0.0;

    /// Values at grid nodes, zero for |y| >= b.
    PerturbationPair sample(const Grid& grid) const;

    /// Natural cubic spline through the omega nodes of a sampled pair.
    static PerturbationFunctions interpolate(const PerturbationPair& pair, const Grid& grid);
};

/// Source of the linearized heat equation.
enum class HeatSource {
    full,         ///< s* G(y, tau) (f0 + tau f1), G the heat kernel
    approximate,  ///< S tau^{-1/2} (f0 + tau f1)
};

/// W(x, tau) = \int_omega (K0 f0 + K1 f1) dy at the points x, by Gauss-Legendre panels
/// split at the kinks y = 0 and y = x.
std::vector<double> forward_linear(const PerturbationFunctions& f, double tau, const ModelParams& params,
                                   std::span<const double> x, double rel_tol = 1e-11);

/// forward_linear of the spline interpolant, at every grid node.
std::vector<double> forward_linear(const PerturbationPair& f, double tau, const ModelParams& params,
                                   const Grid& grid, double rel_tol = 1e-11);

/// d^2W/dx^2 at the points x, from W_xx = (2/sigma0^2)(W_tau - alpha (f0 + tau f1)).
std::vector<double> forward_linear_curvature(const PerturbationFunctions& f, double tau,
                                             const ModelParams& params, std::span<const double> x,
                                             double rel_tol = 1e-11);

/// Solution of the approximate problem on Omega with zero Dirichlet data, exact in time per
/// sine mode and truncated after `modes` modes.
std::vector<double> forward_modal(const PerturbationPair& f, double tau, const ModelParams& params,
                                  const Grid& grid, std::size_t modes);

/// Crank-Nicolson solve of W_tau - (sigma0^2/2) W_yy = source with W = 0 at tau = 0 and
/// at +-B. The source is integrated exactly in time over each step. Returns W at each of
/// the increasing output times.
std::vector<std::vector<double>> forward_heat_pde(const PerturbationPair& f, std::span<const double> taus,
                                                  const ModelParams& params, const Grid& grid,
                                                  const ForwardConfig& cfg,
                                                  HeatSource source = HeatSource::full);

std::vector<double> forward_heat_pde(const PerturbationPair& f, double tau_end, const ModelParams& params,
                                     const Grid& grid, const ForwardConfig& cfg,
                                     HeatSource source = HeatSource::full);

/// a^2(y, tau) / 2.
using HalfVariance = std::function<double(double y, double tau)>;

/// sigma0^2/2 + f0(y) + tau f1(y) at grid nodes.
HalfVariance half_variance(const PerturbationPair& f, const ModelParams& params, const Grid& grid);

/// Crank-Nicolson with Rannacher start-up for
///   U_tau = A U_yy - (A + mu) U_y - (r - mu) U,  U(y, 0) = s* (1 - e^y)^+,
/// with A = a^2/2 and Black-Scholes far-field values at +-B. Returns U at each output time.
std::vector<std::vector<double>> forward_dupire(const HalfVariance& half_var, const ModelParams& params,
                                                const Grid& grid, std::span<const double> taus,
                                                const ForwardConfig& cfg);

std::vector<double> forward_dupire(const HalfVariance& half_var, const ModelParams& params, const Grid& grid,
                                   double tau_end, const ForwardConfig& cfg);

struct SynthOptions {
    double noise_half_width = 0.0;  ///< uniform additive price noise, currency units
    std::uint64_t seed = 0;
    double quote_half_width = 0.0;  ///< quotes cover |y| <= this; 0 means 2b (clipped to B)
    std::size_t stride = 1;         ///< take every stride-th grid node as a quote site
};

struct SynthResult {
    std::array<QuoteSlice, 2> slices;
    std::array<std::vector<double>, 2> U;  ///< noiseless prices on every grid node
    double base_deviation = 0.0;           ///< max |U_base - Black-Scholes| over quote sites
};

/// Synthetic quotes at T1, T2 for the perturbation f (log variables): Black-Scholes prices
/// plus the Dupire-solver difference between the perturbed and constant-sigma0 solves.
SynthResult synth_quotes(const PerturbationPair& f, const ModelParams& params, const Grid& grid,
                         const ForwardConfig& cfg, const SynthOptions& opts = {});

SynthResult synth_quotes(const OriginalPerturbation& f, const ModelParams& params, const Grid& grid,
                         const ForwardConfig& cfg, const SynthOptions& opts = {});

}  // namespace volcal
