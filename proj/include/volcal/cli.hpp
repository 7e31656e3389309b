#pragma once

#include "volcal/calibration.hpp"
#include "volcal/data_pipeline.hpp"
#include "volcal/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace volcal::cli {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_validation = 2,
    exit_condition = 3,
    exit_nonconvergence = 4,
};

/// One bump A (1 - t^2)^4, t = (y - center)/width, added to f0 or f1 (log variables).
struct Bump {
    std::string target = "f0";
    double amplitude = 0.0;
    double center = 0.0;
    std::optional<double> width;  ///< defaults to b - |center|
};

struct SynthSpec {
    std::vector<Bump> bumps;
    std::string perturbation_file;  ///< CSV y,f0,f1; used instead of bumps when set
    double noise_half_width = 0.0;
    std::uint64_t seed = 0;
    double quote_half_width = 0.0;
    std::size_t stride = 1;
    std::size_t time_steps = 800;
};

struct KernelSpec {
    std::vector<double> taus{0.25, 1.0};
    double x_min = -0.3;
    double x_max = 0.3;
    std::size_t points = 21;
    bool oracle = false;
};

struct SweepSpec {
    double b_min = 0.0;
    double b_max = 0.0;
    std::size_t count = 0;
};

struct RunConfig {
    FileParams params;  ///< entries left empty fall back to the quote file, then to defaults
    double b = 0.1;
    std::optional<double> B;            ///< lower bound on the half-width; default rule when empty
    std::optional<std::size_t> grid_n;  ///< total nodes; empty means omega_intervals across [0, b]
    std::size_t omega_intervals = 20;
    Method method = Method::fredholm;
    double tol = 1e-10;
    std::size_t max_iter = 500;
    std::optional<double> lambda;  ///< empty selects by GCV
    bool force = false;
    std::size_t modes = 0;
    std::string quotes;
    std::string out;
    std::vector<double> times;  ///< calendar times of the sigma(s, t) slices; default T1, T2
    SynthSpec synth;
    KernelSpec kernels;
    std::optional<SweepSpec> sweep;

    /// Overlays the keys present in `j` onto this config. Unknown keys are rejected.
    void merge_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// Throws ValidationError on out-of-range or contradictory settings.
    void validate() const;

    /// Parameters from file values (if any) overlaid with this config's, on top of defaults.
    ModelParams resolve_params(const FileParams& file = {}) const;
    Grid make_grid(const ModelParams& params) const;
    Grid make_grid(const ModelParams& params, double b_override) const;
};

/// Parses a "min:max:count" sweep specification.
SweepSpec parse_sweep(const std::string& text);

/// Runs the command line and returns the process exit code. Normal output goes to `out`,
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace volcal::cli
