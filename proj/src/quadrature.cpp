#include "volcal/quadrature.hpp"

#include <numbers>
#include <stdexcept>

namespace volcal {

GaussLegendre::GaussLegendre(int order) : nodes_(order), weights_(order) {
    if (order < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p0 = 1.0;
                p1 = x;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes_[i] = -x;
        nodes_[n - 1 - i] = x;
        weights_[i] = weights_[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

const GaussLegendre& gauss_legendre_10() {
    static const GaussLegendre rule(10);
    return rule;
}

void add_simpson_weights(std::span<double> out, std::size_t intervals, double h) {
    if (intervals == 0) return;
    if (out.size() < intervals + 1) throw std::invalid_argument("weight span too short");
    if (intervals == 1) {
        out[0] += 0.5 * h;
        out[1] += 0.5 * h;
        return;
    }
    std::size_t start = 0;
    if (intervals % 2 == 1) {
        out[0] += 3.0 * h / 8.0;
        out[1] += 9.0 * h / 8.0;
        out[2] += 9.0 * h / 8.0;
        out[3] += 3.0 * h / 8.0;
        start = 3;
    }
    for (std::size_t i = start; i + 2 <= intervals; i += 2) {
        out[i] += h / 3.0;
        out[i + 1] += 4.0 * h / 3.0;
        out[i + 2] += h / 3.0;
    }
}

}  // namespace volcal
