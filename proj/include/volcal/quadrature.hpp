#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace volcal {

/// Gauss-Legendre rule on [-1, 1].
class GaussLegendre {
public:
    explicit GaussLegendre(int order);
    int order() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Composite rule over `panels` equal panels of [a, b].
    template <class F>
    double integrate(F&& f, double a, double b, int panels = 1) const {
        const double width = (b - a) / panels;
        double total = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double lo = a + p * width;
            const double half = 0.5 * width;
            const double mid = lo + half;
            double s = 0.0;
            for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(mid + half * nodes_[i]);
            total += half * s;
        }
        return total;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Shared 10-point rule used by the panel-doubling integrators.
const GaussLegendre& gauss_legendre_10();

struct QuadratureResult {
    double value = 0.0;
    double change = 0.0;  ///< |last - previous| estimate
    int panels = 0;
    bool converged = false;
};

/// Composite Gauss-Legendre with panel doubling until two successive estimates agree
/// to rel_tol (or abs_tol).
template <class F>
QuadratureResult integrate_doubling(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0,
                                    int initial_panels = 1, int max_doublings = 14) {
    const auto& rule = gauss_legendre_10();
    QuadratureResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    int panels = initial_panels;
    double prev = rule.integrate(f, a, b, panels);
    for (int k = 0; k < max_doublings; ++k) {
        panels *= 2;
        const double cur = rule.integrate(f, a, b, panels);
        res.value = cur;
        res.change = std::abs(cur - prev);
        res.panels = panels;
        if (res.change <= rel_tol * std::abs(cur) || res.change <= abs_tol) {
            res.converged = true;
            return res;
        }
        prev = cur;
    }
    return res;
}

/// Composite Newton-Cotes weights for `intervals` equal intervals of width h:
/// Simpson when even, Simpson plus a leading 3/8 block when odd (>= 3), trapezoid for one.
/// Weights are accumulated into out[0 .. intervals].
void add_simpson_weights(std::span<double> out, std::size_t intervals, double h);

}  // namespace volcal
