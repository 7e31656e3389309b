#include "volcal/spline.hpp"

#include "volcal/errors.hpp"

#include <algorithm>

namespace volcal {

CubicSpline::CubicSpline(std::vector<double> knots, std::vector<double> values, std::vector<double> second)
    : knots_(std::move(knots)), values_(std::move(values)), second_(std::move(second)) {
    if (knots_.size() < 2 || values_.size() != knots_.size() || second_.size() != knots_.size())
        throw ValidationError("spline needs at least two knots and matching coefficient arrays");
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (!(knots_[i] > knots_[i - 1])) throw ValidationError("spline knots must be strictly increasing");
}

CubicSpline CubicSpline::natural(std::span<const double> x, std::span<const double> v) {
    const std::size_t n = x.size();
    if (n < 2 || v.size() != n) throw ValidationError("natural spline needs at least two matching points");
    std::vector<double> m(n, 0.0);
    if (n > 2) {
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        std::vector<double> diag(n - 2), rhs(n - 2), upper(n - 2);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x[i] - x[i - 1];
            const double h1 = x[i + 1] - x[i];
            diag[i - 1] = (h0 + h1) / 3.0;
            upper[i - 1] = h1 / 6.0;
            rhs[i - 1] = (v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0;
        }
        for (std::size_t i = 1; i < n - 2; ++i) {
            const double lower = (x[i + 1] - x[i]) / 6.0;
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m[n - 2] = rhs[n - 3] / diag[n - 3];
        for (std::size_t i = n - 3; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    return CubicSpline({x.begin(), x.end()}, {v.begin(), v.end()}, std::move(m));
}

std::size_t CubicSpline::segment(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(i, knots_.size() - 2);
}

double CubicSpline::operator()(double x) const {
    if (x < knots_.front()) return values_.front() + derivative(knots_.front()) * (x - knots_.front());
    if (x > knots_.back()) return values_.back() + derivative(knots_.back()) * (x - knots_.back());
    const std::size_t i = segment(x);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - x) / h;
    const double b = (x - knots_[i]) / h;
    return a * values_[i] + b * values_[i + 1] +
           ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
    const double xc = std::clamp(x, knots_.front(), knots_.back());
    const std::size_t i = segment(xc);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - xc) / h;
    const double b = (xc - knots_[i]) / h;
    return (values_[i + 1] - values_[i]) / h +
           ((1.0 - 3.0 * a * a) * second_[i] + (3.0 * b * b - 1.0) * second_[i + 1]) * h / 6.0;
}

double CubicSpline::second_derivative(double x) const {
    if (x <= knots_.front() || x >= knots_.back()) {
        if (x == knots_.front()) return second_.front();
        if (x == knots_.back()) return second_.back();
        return 0.0;
    }
    const std::size_t i = segment(x);
    const double h = knots_[i + 1] - knots_[i];
    return ((knots_[i + 1] - x) * second_[i] + (x - knots_[i]) * second_[i + 1]) / h;
}

}  // namespace volcal
