#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace volcal {

/// Market and model constants. All rates are per year, times in years.
struct ModelParams {
    double s_star = 1.0;   ///< spot at valuation time
    double t_star = 0.0;   ///< valuation time
    double r = 0.0;        ///< risk-free rate
    double mu = 0.0;       ///< risk-neutral drift
    double sigma0 = 0.2;   ///< baseline (implied) volatility
    double T1 = 0.25;
    double T2 = 0.5;

    /// Throws DomainError unless s* > 0, sigma0 > 0 and t* < T1 < T2.
    void validate() const;

    double tau1() const { return T1 - t_star; }
    double tau2() const { return T2 - t_star; }
    /// tau_j for j in {1, 2}.
    double tau(int j) const;

    /// Exponent coefficients of the substitution V = e^{c y + d tau} W.
    double c() const;
    double d() const;
    /// S = s*/(sigma0 sqrt(2 pi)), the amplitude of the y-independent source.
    double S() const;
    /// S_* = s*/(sigma0^2 sqrt(pi)), the kernel prefactor.
    double S_star() const;
};

/// Uniform log-moneyness grid on Omega = [-B, B] with 0, +-b and +-B on nodes.
class Grid {
public:
    /// Validating constructor: n odd, 0 < b <= B, and b must fall on a node.
    Grid(double B, double b, std::size_t n);

    /// Grid with `n` total nodes whose half-width is at least B_min; B is enlarged so
    /// that b lands on a node.
    static Grid fit(double b, double B_min, std::size_t n);

    /// Grid with `k` intervals across [0, b] and half-width at least B_min.
    static Grid with_omega_resolution(double b, double B_min, std::size_t k);

    /// max(5b, b + 6 sigma0 sqrt(tau2)).
    static double default_half_width(double b, const ModelParams& params);

    double B() const { return B_; }
    double b() const { return b_; }
    double h() const { return h_; }
    std::size_t size() const { return n_; }
    double node(std::size_t i) const;
    std::vector<double> nodes() const;

    std::size_t center() const { return half_; }
    /// Index range [omega_begin, omega_end] (inclusive) of the nodes in [-b, b].
    std::size_t omega_begin() const { return half_ - k_; }
    std::size_t omega_end() const { return half_ + k_; }
    std::size_t omega_size() const { return 2 * k_ + 1; }
    std::vector<double> omega_nodes() const;
    bool in_omega(std::size_t i) const { return i >= omega_begin() && i <= omega_end(); }

private:
    double B_;
    double b_;
    double h_;
    std::size_t n_;
    std::size_t half_;  // index of y = 0
    std::size_t k_;     // nodes from 0 to b
};

struct Quote {
    double strike = 0.0;
    double price = 0.0;
    std::optional<double> bid;
    std::optional<double> ask;
};

/// Option quotes for one expiry, strikes strictly increasing.
struct QuoteSlice {
    double expiry = 0.0;
    std::vector<Quote> quotes;

    /// Throws ValidationError on non-positive or non-increasing strikes and
    /// non-positive prices. Returns warnings for prices increasing in strike.
    std::vector<std::string> validate() const;
};

/// (f0, f1) sampled on a grid, zero outside omega.
struct PerturbationPair {
    std::vector<double> f0;
    std::vector<double> f1;

    static PerturbationPair zero(const Grid& grid);
    /// Samples the functions at every node and zeroes them for |y| >= b.
    static PerturbationPair sample(const Grid& grid, const std::function<double(double)>& f0,
                                   const std::function<double(double)>& f1);

    /// max(|f0|, |f1|) / (sigma0^2 / 2).
    double amplitude_ratio(const ModelParams& params) const;
    /// Human-readable warnings: support violations and amplitude ratio above 0.25.
    std::vector<std::string> check(const Grid& grid, const ModelParams& params) const;
};

/// Perturbation in the original (s, t) variables, sampled at s_i = s* e^{y_i}.
struct OriginalPerturbation {
    std::vector<double> f0_star;
    std::vector<double> f1_star;
};

/// f1 = f1*, f0 = f0* + t* f1*.
PerturbationPair perturbation_to_log(const OriginalPerturbation& original, const ModelParams& params);
OriginalPerturbation perturbation_from_log(const PerturbationPair& pair, const ModelParams& params);

/// Transformed data for the two expiries (index 0 -> T1, 1 -> T2).
struct DataCurves {
    std::vector<double> U[2];    ///< prices as functions of y
    std::vector<double> V[2];    ///< U minus the sigma0 Black-Scholes price
    std::vector<double> W[2];    ///< e^{-c y - d tau_j} V_j
    std::vector<double> Wxx[2];  ///< second derivative of W_j (omega nodes only)
    std::vector<double> w[2];    ///< Fredholm right-hand sides (omega nodes only)
};

/// Builds V_j and W_j from prices U_j sampled on the grid.
DataCurves build_data_curves(std::span<const double> U1, std::span<const double> U2,
                             const ModelParams& params, const Grid& grid);

/// European call price in Dupire variables: s* e^{(mu-r)tau} N(d+) - K e^{-r tau} N(d-).
double bs_call_price(const ModelParams& params, double strike, double tau, double sigma);

/// Implied sigma0 from an at-the-money (K = s*) price at T1.
double implied_vol(const ModelParams& params, double atm_price);

struct LogVars {
    double y;
    double tau;
};
struct MarketVars {
    double strike;
    double expiry;
};

LogVars to_log_vars(const ModelParams& params, double strike, double expiry);
MarketVars from_log_vars(const ModelParams& params, double y, double tau);

}  // namespace volcal
