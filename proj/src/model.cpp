#include "volcal/model.hpp"

#include "volcal/errors.hpp"
#include "volcal/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace volcal {

void ModelParams::validate() const {
    if (!(s_star > 0.0) || !std::isfinite(s_star)) throw DomainError("s_star must be positive");
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw DomainError("sigma0 must be positive");
    if (!std::isfinite(r) || !std::isfinite(mu) || !std::isfinite(t_star))
        throw DomainError("r, mu and t_star must be finite");
    if (!(tau1() > 0.0)) throw DomainError("T1 must exceed t_star");
    if (!(tau2() > tau1())) throw DomainError("T2 must exceed T1");
}

double ModelParams::tau(int j) const {
    if (j == 1) return tau1();
    if (j == 2) return tau2();
    throw DomainError("expiry index must be 1 or 2");
}

double ModelParams::c() const { return 0.5 + mu / (sigma0 * sigma0); }

double ModelParams::d() const {
    const double v = 0.5 * sigma0 * sigma0 + mu;
    return -v * v / (2.0 * sigma0 * sigma0) + mu - r;
}

double ModelParams::S() const {
    return s_star / (sigma0 * std::sqrt(2.0 * std::numbers::pi));
}

double ModelParams::S_star() const {
    return s_star / (sigma0 * sigma0 * std::sqrt(std::numbers::pi));
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(double B, double b, std::size_t n) : B_(B), b_(b), n_(n) {
    if (!(b > 0.0) || !(B >= b)) throw ValidationError("grid requires 0 < b <= B");
    if (n < 3 || n % 2 == 0) throw ValidationError("grid node count must be odd and >= 3");
    half_ = (n - 1) / 2;
    h_ = B / static_cast<double>(half_);
    const double k = std::round(b / h_);
    if (k < 1.0 || std::abs(k * h_ - b) > 1e-9 * h_)
        throw ValidationError("b is not a grid node; use Grid::fit to align it");
    k_ = static_cast<std::size_t>(k);
}

Grid Grid::fit(double b, double B_min, std::size_t n) {
    if (n < 3 || n % 2 == 0) throw ValidationError("grid node count must be odd and >= 3");
    if (!(b > 0.0) || !(B_min >= b)) throw ValidationError("grid requires 0 < b <= B");
    const std::size_t m = (n - 1) / 2;
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(m) * b / B_min * (1.0 + 1e-12)));
    if (k < 1) {
        std::ostringstream msg;
        msg << "grid with " << n << " nodes cannot place b=" << b << " on a node with B >= " << B_min;
        throw ValidationError(msg.str());
    }
    const double h = b / static_cast<double>(k);
    return Grid(h * static_cast<double>(m), b, n);
}

Grid Grid::with_omega_resolution(double b, double B_min, std::size_t k) {
    if (k < 1) throw ValidationError("omega resolution must be at least one interval");
    if (!(b > 0.0) || !(B_min >= b)) throw ValidationError("grid requires 0 < b <= B");
    const double h = b / static_cast<double>(k);
    const auto m = static_cast<std::size_t>(std::ceil(B_min / h - 1e-9));
    return Grid(h * static_cast<double>(m), b, 2 * m + 1);
}

double Grid::default_half_width(double b, const ModelParams& params) {
    return std::max(5.0 * b, b + 6.0 * params.sigma0 * std::sqrt(params.tau2()));
}

double Grid::node(std::size_t i) const {
    if (i == 0) return -B_;
    if (i == n_ - 1) return B_;
    const auto offset = static_cast<long long>(i) - static_cast<long long>(half_);
    if (offset == static_cast<long long>(k_)) return b_;
    if (offset == -static_cast<long long>(k_)) return -b_;
    return static_cast<double>(offset) * h_;
}

std::vector<double> Grid::nodes() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = node(i);
    return out;
}

std::vector<double> Grid::omega_nodes() const {
    std::vector<double> out;
    out.reserve(omega_size());
    for (std::size_t i = omega_begin(); i <= omega_end(); ++i) out.push_back(node(i));
    return out;
}

// ---------------------------------------------------------------------------
// Quotes and perturbations

std::vector<std::string> QuoteSlice::validate() const {
    std::vector<std::string> warnings;
    if (!std::isfinite(expiry)) throw ValidationError("expiry must be finite");
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const auto& q = quotes[i];
        if (!(q.strike > 0.0)) throw ValidationError("non-positive strike");
        if (!(q.price > 0.0)) throw ValidationError("non-positive price");
        if (i > 0) {
            if (!(q.strike > quotes[i - 1].strike))
                throw ValidationError("strikes must be strictly increasing");
            if (q.price > quotes[i - 1].price) {
                std::ostringstream msg;
                msg << "price increases with strike at K=" << q.strike << " (T=" << expiry << ")";
                warnings.push_back(msg.str());
            }
        }
    }
    return warnings;
}

PerturbationPair PerturbationPair::zero(const Grid& grid) {
    return {std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0)};
}

PerturbationPair PerturbationPair::sample(const Grid& grid, const std::function<double(double)>& f0,
                                          const std::function<double(double)>& f1) {
    auto pair = zero(grid);
    for (std::size_t i = grid.omega_begin() + 1; i < grid.omega_end(); ++i) {
        const double y = grid.node(i);
        pair.f0[i] = f0(y);
        pair.f1[i] = f1(y);
    }
    return pair;
}

double PerturbationPair::amplitude_ratio(const ModelParams& params) const {
    double m = 0.0;
    for (double v : f0) m = std::max(m, std::abs(v));
    for (double v : f1) m = std::max(m, std::abs(v));
    return m / (0.5 * params.sigma0 * params.sigma0);
}

std::vector<std::string> PerturbationPair::check(const Grid& grid, const ModelParams& params) const {
    if (f0.size() != grid.size() || f1.size() != grid.size())
        throw ValidationError("perturbation size does not match grid");
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.in_omega(i) && i != grid.omega_begin() && i != grid.omega_end()) continue;
        if (f0[i] != 0.0 || f1[i] != 0.0) {
            warnings.push_back("perturbation is nonzero outside omega");
            break;
        }
    }
    const double ratio = amplitude_ratio(params);
    if (ratio > 0.25) {
        std::ostringstream msg;
        msg << "perturbation amplitude is " << ratio << " of sigma0^2/2; linearization may be poor";
        warnings.push_back(msg.str());
    }
    return warnings;
}

PerturbationPair perturbation_to_log(const OriginalPerturbation& original, const ModelParams& params) {
    if (original.f0_star.size() != original.f1_star.size())
        throw ValidationError("f0* and f1* sizes differ");
    PerturbationPair out{original.f0_star, original.f1_star};
    for (std::size_t i = 0; i < out.f0.size(); ++i) out.f0[i] += params.t_star * original.f1_star[i];
    return out;
}

OriginalPerturbation perturbation_from_log(const PerturbationPair& pair, const ModelParams& params) {
    if (pair.f0.size() != pair.f1.size()) throw ValidationError("f0 and f1 sizes differ");
    OriginalPerturbation out{pair.f0, pair.f1};
    for (std::size_t i = 0; i < out.f0_star.size(); ++i) out.f0_star[i] -= params.t_star * pair.f1[i];
    return out;
}

DataCurves build_data_curves(std::span<const double> U1, std::span<const double> U2,
                             const ModelParams& params, const Grid& grid) {
    if (U1.size() != grid.size() || U2.size() != grid.size())
        throw ValidationError("data curves do not match the grid");
    DataCurves out;
    const std::span<const double> U[2] = {U1, U2};
    const double c = params.c();
    const double d = params.d();
    for (int j = 0; j < 2; ++j) {
        const double tau = params.tau(j + 1);
        out.U[j].assign(U[j].begin(), U[j].end());
        out.V[j].resize(grid.size());
        out.W[j].resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double y = grid.node(i);
            const double strike = params.s_star * std::exp(y);
            out.V[j][i] = U[j][i] - bs_call_price(params, strike, tau, params.sigma0);
            out.W[j][i] = std::exp(-c * y - d * tau) * out.V[j][i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Black-Scholes

double bs_call_price(const ModelParams& params, double strike, double tau, double sigma) {
    if (!(strike > 0.0)) throw DomainError("strike must be positive");
    if (!(sigma > 0.0)) throw DomainError("volatility must be positive");
    if (tau < 0.0) throw DomainError("time to expiry must be non-negative");
    if (tau == 0.0) return std::max(params.s_star - strike, 0.0);
    const double vol = sigma * std::sqrt(tau);
    const double d_plus = (std::log(params.s_star / strike) + (params.mu + 0.5 * sigma * sigma) * tau) / vol;
    const double d_minus = d_plus - vol;
    return params.s_star * std::exp((params.mu - params.r) * tau) * normal_cdf(d_plus) -
           strike * std::exp(-params.r * tau) * normal_cdf(d_minus);
}

double implied_vol(const ModelParams& params, double atm_price) {
    constexpr double lo_vol = 1e-6;
    constexpr double hi_vol = 5.0;
    const double tau = params.tau1();
    const double strike = params.s_star;
    auto excess = [&](double sigma) { return bs_call_price(params, strike, tau, sigma) - atm_price; };

    double a = lo_vol, b = hi_vol;
    double fa = excess(a), fb = excess(b);
    if (!(fa < 0.0) || !(fb > 0.0) || !std::isfinite(atm_price)) {
        std::ostringstream msg;
        msg << "price " << atm_price << " outside the attainable range (" << fa + atm_price << ", "
            << fb + atm_price << ") for sigma in [" << lo_vol << ", " << hi_vol << "]";
        throw NoSolutionError(msg.str(), fa + atm_price, fb + atm_price);
    }
    // Bisection with a secant proposal accepted only if it stays inside the bracket
    // and shrinks it by at least half of what bisection would.
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (a + b);
        double x = a - fa * (b - a) / (fb - fa);
        if (!(x > a && x < b) || std::abs(x - mid) > 0.25 * (b - a)) x = mid;
        const double fx = excess(x);
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * b) break;
    }
    return std::abs(fa) < std::abs(fb) ? a : b;
}

LogVars to_log_vars(const ModelParams& params, double strike, double expiry) {
    if (!(strike > 0.0)) throw DomainError("strike must be positive");
    if (expiry < params.t_star) throw DomainError("expiry precedes valuation time");
    return {std::log(strike / params.s_star), expiry - params.t_star};
}

MarketVars from_log_vars(const ModelParams& params, double y, double tau) {
    return {params.s_star * std::exp(y), tau + params.t_star};
}

}  // namespace volcal
