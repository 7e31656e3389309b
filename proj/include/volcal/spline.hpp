#pragma once

#include <span>
#include <vector>

namespace volcal {

/// Cubic spline stored by knot values and knot second derivatives. Outside the knot
/// range it continues linearly (natural end conditions).
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> knots, std::vector<double> values, std::vector<double> second);

    /// Natural cubic interpolant of (x, v); x strictly increasing, at least two points.
    static CubicSpline natural(std::span<const double> x, std::span<const double> v);

    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& second() const { return second_; }
    bool empty() const { return knots_.empty(); }

private:
    std::size_t segment(double x) const;

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> second_;
};

}  // namespace volcal
