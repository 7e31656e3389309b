#pragma once

#include "volcal/errors.hpp"
#include "volcal/forward.hpp"
#include "volcal/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace volcal {

/// Coefficient choices for the first term of the A_j2 kernel.
enum class A2Variant {
    corrected,        ///< |y|/(2 sigma0^2), E argument with tau_j (consistent with the kernels)
    doubled_tau1,     ///< |y|/sigma0^2, E argument with tau_1
    sqrt_tau_scaled,  ///< |y|/(sqrt(2 tau_j) sigma0^2), E argument with tau_j
};

/// Pointwise kernels of A_j1 and A_j2 at time tau_j (tau1 is only used by doubled_tau1).
double kernel_a1(double x, double y, double tau, double sigma0);
double kernel_a2(double x, double y, double tau, double tau1, double sigma0, A2Variant variant = A2Variant::corrected);

/// w_j(x) = -(sqrt(pi tau_j) sigma0^3 / (sqrt2 s*)) e^{x^2/(2 tau_j sigma0^2)} W_j''(x) on omega nodes.
std::vector<double> rhs_w(std::span<const double> Wxx, double tau, const ModelParams& params, const Grid& grid);

/// Nystrom matrix of A_jk on the omega nodes (j, k in {1, 2}); each row uses composite
/// Simpson on segments split at y = 0 and y = x_i.
Eigen::MatrixXd assemble_operator(int j, int k, const ModelParams& params, const Grid& grid,
                                  A2Variant variant = A2Variant::corrected);

/// A_jk f for f sampled on the omega nodes.
std::vector<double> apply_A(int j, int k, std::span<const double> f, const ModelParams& params, const Grid& grid,
                            A2Variant variant = A2Variant::corrected);

/// Analytic sup-norm bounds: 3b^2/(2 tau sigma0^2) for A_j1 and the integrated kernel bound
/// of A_j2 for the chosen variant.
double A1_norm_bound(double b, double tau, double sigma0);
double A2_norm_bound(double b, double tau, double sigma0, A2Variant variant = A2Variant::corrected);

/// Row-sum infinity norm.
double inf_norm(const Eigen::MatrixXd& m);

/// Discretized system f0 + tau_j f1 + A_j1 f0 + A_j2 f1 = w_j and its decoupled form
/// (I + M) (f0, f1) = (g0, g1).
struct FredholmSystem {
    ModelParams params;
    std::vector<double> x;  ///< omega nodes
    Eigen::MatrixXd A[2][2];
    Eigen::VectorXd w[2];
    Eigen::MatrixXd M;  ///< [[M00, M01], [M10, M11]]
    Eigen::VectorXd g;  ///< [g0; g1]

    static FredholmSystem assemble(const ModelParams& params, const Grid& grid,
                                   A2Variant variant = A2Variant::corrected);
    static FredholmSystem assemble(const ModelParams& params, const Grid& grid, std::span<const double> w1,
                                   std::span<const double> w2, A2Variant variant = A2Variant::corrected);

    /// Replaces the right-hand sides (and g).
    void set_rhs(std::span<const double> w1, std::span<const double> w2);

    std::size_t size() const { return x.size(); }
    /// Numeric contraction factor: infinity norm of M.
    double rho() const;
    /// Residuals of the original two equations, stacked.
    Eigen::VectorXd residual(const Eigen::VectorXd& f0, const Eigen::VectorXd& f1) const;
};

struct UniquenessReport {
    double margin1 = 0.0;  ///< 1 - LHS of the first inequality
    double margin2 = 0.0;  ///< 1 - LHS of the second inequality
    double rho = 0.0;      ///< numeric contraction factor
    double A_norm[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    double A1_bound[2] = {0.0, 0.0};
    double A2_bound[2] = {0.0, 0.0};

    bool analytic_pass() const { return margin1 > 0.0 && margin2 > 0.0; }
    bool numeric_pass() const { return rho < 1.0; }
    bool pass() const { return analytic_pass() && numeric_pass(); }
    /// "analytic-pass"/"analytic-fail" and "numeric-pass"/"numeric-fail", comma separated.
    std::string verdict() const;
};

/// The two analytic margins only.
std::pair<double, double> uniqueness_margins(double tau1, double tau2, double sigma0, double b);

UniquenessReport check_uniqueness(const ModelParams& params, const Grid& grid,
                                  A2Variant variant = A2Variant::corrected);
UniquenessReport check_uniqueness(const FredholmSystem& system, const Grid& grid,
                                  A2Variant variant = A2Variant::corrected);

/// Thrown by solve_neumann when the numeric contraction factor is not below one.
class ContractionError : public Error {
public:
    ContractionError(const std::string& what, UniquenessReport r) : Error(what), report(r) {}
    UniquenessReport report;
};

struct NeumannResult {
    std::vector<double> f0;  ///< on omega nodes
    std::vector<double> f1;
    std::size_t iterations = 0;
    double residual = 0.0;            ///< infinity norm of the original-system residual
    std::vector<double> step_norms;   ///< infinity norms of successive iterate changes
};

/// Fixed-point iteration x <- g - M x from zero until the change drops below tol.
NeumannResult solve_neumann(const FredholmSystem& system, double tol = 1e-10, std::size_t max_iter = 500);

/// Embeds omega-node values into a full-grid perturbation pair.
PerturbationPair to_grid(const NeumannResult& result, const Grid& grid);

struct ConsistencyResidual {
    std::vector<double> r[2];  ///< on omega nodes
    double max_abs() const;
};

/// Residual of f0 + tau_j f1 + A_j1 f0 + A_j2 f1 - w_j with w_j built from the exact
/// curvature of forward_linear.
ConsistencyResidual consistency_residual(const PerturbationFunctions& f, const ModelParams& params,
                                         const Grid& grid, A2Variant variant = A2Variant::corrected);

}  // namespace volcal
