#include "volcal/special_functions.hpp"

#include <gsl/gsl_sf_dawson.h>

#include <cmath>
#include <numbers>

namespace volcal {

namespace {
constexpr double kHalfSqrtPi = 0.5 * 1.7724538509055160272981674833411;
}

double normal_cdf(double x) {
    if (std::isnan(x)) return 0.5;
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double upper_gauss_integral(double z) {
    return kHalfSqrtPi * std::erfc(z);
}

double scaled_upper_gauss(double z) {
    if (!(z > 0.0)) return kHalfSqrtPi;
    if (z < 26.0) return kHalfSqrtPi * std::exp(z * z) * std::erfc(z);
    // Asymptotic series e^{z^2} erfc(z) ~ 1/(z sqrt(pi)) sum (-1)^k (2k-1)!! / (2z^2)^k.
    const double inv2z2 = 1.0 / (2.0 * z * z);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv2z2;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return 0.5 * sum / z;
}

double dawson(double x) {
    if (!std::isfinite(x)) return 0.0;
    if (std::abs(x) > 1e8) return 0.5 / x;
    gsl_sf_result result;
    gsl_sf_dawson_e(x, &result);
    return result.val;
}

}  // namespace volcal
