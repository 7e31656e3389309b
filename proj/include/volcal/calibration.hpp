#pragma once

#include "volcal/data_pipeline.hpp"
#include "volcal/fredholm.hpp"
#include "volcal/model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace volcal {

enum class Method { fredholm, spectral, sine };

Method parse_method(const std::string& name);
std::string to_string(Method method);

struct CalibrationOptions {
    Method method = Method::fredholm;
    std::optional<double> lambda;  ///< empty selects by GCV
    std::optional<double> sigma0;  ///< empty infers it from the T1 quotes
    double tol = 1e-10;
    std::size_t max_iter = 500;
    bool force = false;            ///< solve even when the uniqueness check fails
    std::size_t modes = 0;         ///< sine modes, 0 means min(256, n - 2)
    A2Variant variant = A2Variant::corrected;
};

struct CalibrationResult {
    PipelineResult data;
    PerturbationPair f;              ///< log variables, zero outside omega
    OriginalPerturbation f_original;
    UniquenessReport report;
    std::string solver;              ///< "neumann", "direct", "fourier" or "sine"
    std::size_t iterations = 0;
    double residual = 0.0;           ///< Fredholm residual or worst per-frequency residual
};

/// Full inversion from two quote slices. For the Fredholm method a failed uniqueness check
/// throws ContractionError unless `force` is set; forced solves with rho >= 1 use a direct
/// dense solve instead of the Neumann iteration. The spectral routes trust the data out to
/// the quote coverage before blending to zero.
CalibrationResult calibrate(const std::array<QuoteSlice, 2>& slices, const ModelParams& params, const Grid& grid,
                            const CalibrationOptions& opts = {});

/// sigma(s, t) = sqrt(sigma0^2 + 2 (f0*(s) + t f1*(s))) at the nodes s = s* e^{y}.
std::vector<double> local_volatility(const CalibrationResult& result, const Grid& grid, double t);

}  // namespace volcal
