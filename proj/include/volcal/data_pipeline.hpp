#pragma once

#include "volcal/model.hpp"
#include "volcal/spline.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace volcal {

enum class QuoteFormat { detect, csv, json };

/// Parameters that a JSON quote file may carry. Missing entries stay empty.
struct FileParams {
    std::optional<double> s_star;
    std::optional<double> t_star;
    std::optional<double> r;
    std::optional<double> mu;
    std::optional<double> T1;
    std::optional<double> T2;
    std::optional<double> sigma0;
};

struct QuoteFile {
    std::array<QuoteSlice, 2> slices;  ///< sorted by expiry, strikes increasing
    FileParams params;
    std::vector<std::string> warnings;
};

/// Reads `expiry,strike,price[,bid,ask]` rows. Errors name the offending line.
QuoteFile parse_quotes_csv(std::istream& in);
/// Reads `{quotes: [{T, K, price}], params: {...}}`. Quote-level errors name the entry index
/// and the line on which that entry starts.
QuoteFile parse_quotes_json(const std::string& text);
/// Format from the extension when `detect` (".json" means JSON, anything else CSV).
QuoteFile load_quotes(const std::string& path, QuoteFormat format = QuoteFormat::detect);

/// Writes the two slices as CSV with 17 significant digits.
void write_quotes_csv(std::ostream& out, const std::array<QuoteSlice, 2>& slices);

/// Cubic smoothing spline of data (x_i, v_i) with penalty lambda \int (g'')^2.
struct SmoothedCurve {
    CubicSpline spline;
    double lambda = 0.0;
    std::vector<double> residuals;  ///< g(x_i) - v_i
    double gcv = 0.0;               ///< n RSS / (n - tr A)^2

    double operator()(double x) const { return spline(x); }
    double derivative(double x) const { return spline.derivative(x); }
    double second_derivative(double x) const { return spline.second_derivative(x); }
    double max_residual() const;
};

/// Reinsch smoothing spline: minimizes sum (g(x_i) - v_i)^2 + lambda \int g''^2.
/// lambda = 0 gives the natural interpolating spline. Needs at least three points.
SmoothedCurve smoothing_spline(std::span<const double> x, std::span<const double> v, double lambda);

struct GcvOptions {
    double log10_min = -6.0;  ///< lambda grid is hbar^3 10^p for p in [log10_min, log10_max]
    double log10_max = 10.0;
    std::size_t points = 65;
};

/// Smoothing spline with lambda minimizing the generalized cross-validation score.
SmoothedCurve smoothing_spline_gcv(std::span<const double> x, std::span<const double> v,
                                   const GcvOptions& opts = {});

/// Smoothing spline of W_j = e^{-c y - d tau}(u - BS(sigma0)) at the quote sites of the slice
/// (quotes with |y| < B). An empty lambda selects it by GCV. Needs four quotes in [-b, b].
SmoothedCurve smooth_to_c2(const QuoteSlice& slice, std::optional<double> lambda, const Grid& grid,
                           const ModelParams& params);

/// Curve times a C^2 multiplier equal to 1 on [-inner, inner], a quintic smoothstep down to 0
/// on inner <= |y| <= inner + (B - inner)/2, and 0 beyond. inner defaults to b.
std::vector<double> extend_data(const SmoothedCurve& curve, const Grid& grid,
                                std::optional<double> inner = std::nullopt);

/// Exact spline second derivative at every grid node.
std::vector<double> second_derivative(const SmoothedCurve& curve, const Grid& grid);

struct PipelineOptions {
    std::optional<double> lambda;  ///< empty selects by GCV per expiry
    std::optional<double> sigma0;  ///< empty infers it from the T1 quotes at y = 0
    std::optional<double> extension_inner;  ///< blend start for extend_data, default b
};

struct PipelineResult {
    ModelParams params;  ///< with the sigma0 actually used
    DataCurves curves;   ///< W extended over Omega, Wxx and w on omega nodes
    std::array<SmoothedCurve, 2> smoothed;
    std::vector<std::string> warnings;
};

/// sigma0 from the interpolating spline of the T1 prices at y = 0.
double infer_sigma0(const QuoteSlice& slice, const ModelParams& params);

/// Quotes to sampled curves: sigma0, smoothing, extension and right-hand sides.
/// params.T1/T2 are replaced by the slice expiries.
PipelineResult run_pipeline(const std::array<QuoteSlice, 2>& slices, ModelParams params, const Grid& grid,
                            const PipelineOptions& opts = {});

}  // namespace volcal
