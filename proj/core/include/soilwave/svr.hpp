#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace soilwave::svr {

struct SvrHyper {
  double c = 0.1;        // regularization weight, > 0
  double epsilon = 0.1;  // tube half-width, >= 0
  double gamma = 1.0;    // RBF width, > 0
};

void validate(const SvrHyper& hyper);

/// Kernel expansion model: f(x) = sum_i coeffs[i] * K(x, sv_i) + bias, with
/// coeffs the dual-coefficient differences (each nonzero, |coeff| <= C,
/// summing to zero within 1e-6).
struct SvrModel {
  Eigen::MatrixXd support_vectors;  // s x d
  Eigen::VectorXd coeffs;           // s
  double bias = 0.0;
  SvrHyper hyper;
};

/// exp(-gamma * |x - y|^2), in (0, 1] with 1 iff x == y.
double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y, double gamma);

enum class StopReason { kConverged, kMaxPasses };

/// Solver diagnostics; `duals` is the full coefficient vector over the
/// training points (the model keeps only the nonzero ones).
struct TrainReport {
  StopReason reason = StopReason::kConverged;
  std::size_t passes = 0;
  double max_kkt_violation = 0.0;
  Eigen::VectorXd duals;
  double bias = 0.0;
};

/// Sequential two-variable dual ascent. Each sweep visits every point; a
/// point whose optimality-condition violation exceeds tol is paired with a
/// partner drawn from the seeded stream (with a deterministic largest-
/// residual-gap fallback when the random partner makes no progress) and the
/// pair subproblem is solved exactly. Terminates when the max violation
/// drops below tol or after max_passes sweeps.
SvrModel svr_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SvrHyper& hyper,
                   double tol = 1e-3, std::size_t max_passes = 10000, std::uint64_t seed = 0,
                   TrainReport* report = nullptr);

double svr_predict(const SvrModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd svr_predict_all(const SvrModel& model, const Eigen::MatrixXd& X);

/// Regularized empirical-risk objective C * sum(xi + xi*) + 0.5*|w|^2 at the
/// given dual coefficients, with the slacks reconstructed as the positive
/// parts of the tube violations and the bias derived from free coefficients
/// (midpoint of the feasible interval when none are free). Throws
/// ValidationError when the box constraint is violated.
double svr_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& duals, const SvrHyper& hyper);

/// Bias implied by a dual vector (free coefficients averaged, midpoint
/// fallback) and the maximum optimality-condition violation at that bias.
double bias_from_duals(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& duals, const SvrHyper& hyper);
double kkt_max_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& duals, double bias, const SvrHyper& hyper);

struct GridPoint {
  SvrHyper hyper;
  double mean_mse = 0.0;  // mean validation MSE across folds (1/2m convention)
};

struct GridSearchResult {
  SvrHyper best;
  std::vector<GridPoint> table;  // rows in gamma-major, then C, then epsilon order
};

/// Exhaustive grid evaluation over contiguous chronological folds: fold f is
/// the validation block, the remaining rows train. Rows keep deterministic
/// grid order regardless of `jobs`; ties for the best score break toward
/// smaller C, then smaller gamma, then larger epsilon.
GridSearchResult grid_search_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 std::span<const double> gamma_grid,
                                 std::span<const double> c_grid,
                                 std::span<const double> eps_grid, std::size_t folds = 3,
                                 double tol = 1e-3, std::size_t max_passes = 10000,
                                 std::uint64_t seed = 0, std::size_t jobs = 1);

/// Versioned JSON model document (full-precision doubles).
std::string to_json(const SvrModel& model);
SvrModel svr_model_from_json(const std::string& text);

std::string grid_table_to_csv(const GridSearchResult& result);

}  // namespace soilwave::svr
