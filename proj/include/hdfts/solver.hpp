#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hdfts/design.hpp"

namespace hdfts {

enum class PenaltyMode { none, global, global_local };

const char* penalty_mode_name(PenaltyMode mode);
PenaltyMode penalty_mode_from_name(const std::string& name);

/// Two-level group-bridge penalty configuration.
///
/// Groups are the L triangle blocks of each predictor plus the whole
/// predictor block as group L+1. Weights default to the square root of the
/// group size: c_{g,l} = sqrt(Q), c_g = sqrt(L*Q).
struct PenaltyConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double nu = 0.5;
  PenaltyMode mode = PenaltyMode::global_local;
  Eigen::VectorXd local_weights;  // size L when set
  double global_weight = 0.0;     // 0 means default

  double local_weight(int l, int q_per_triangle) const {
    return local_weights.size() > 0 ? local_weights[l] : std::sqrt(double(q_per_triangle));
  }
  double resolved_global_weight(int dim_per_predictor) const {
    return global_weight > 0.0 ? global_weight : std::sqrt(double(dim_per_predictor));
  }
  void validate() const;
};

/// tau = [lambda1 * nu^nu * (1-nu)^(1-nu)]^(1/(1-nu)).
double tau(double lambda1, double nu);

/// Closed-form minimizer of theta^(1-1/nu) c^(1/nu) ||gamma||_1 + tau*theta
/// over theta >= 0: theta = c * ||gamma||_1^nu * ((1-nu)/(tau*nu))^nu,
/// and 0 when ||gamma||_1 = 0.
double theta_update(double gamma_l1norm, double c, double nu, double tau);

struct LassoResult {
  Eigen::VectorXd gamma;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes ||y - X g||^2 + sum_j w_j |g_j| by cyclic coordinate descent
/// with exact univariate soft-threshold updates. Stops when the largest
/// coefficient change in a pass is below tol * (1 + ||g||_inf).
LassoResult weighted_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& weights, Eigen::VectorXd warm_start,
                           double tol = 1e-6, int max_iter = 1000);

/// Gram-form core of weighted_lasso: minimizes g'Gg - 2 b'g + sum w_j |g_j|
/// (G = X'X, b = X'y). Coordinates outside active_set, when given, are held
/// at zero. Passes are accelerated by exact sign-face solves once the
/// support stabilizes; full_llt, when given, must factor gram restricted to
/// active_set and is reused for full-support faces.
LassoResult weighted_lasso_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& weights, Eigen::VectorXd warm_start,
                                double tol, int max_iter,
                                const std::vector<int>* active_set = nullptr,
                                const Eigen::LLT<Eigen::MatrixXd>* full_llt = nullptr);

/// Max violation of the weighted-lasso subgradient conditions at gamma.
double weighted_lasso_kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights, const Eigen::VectorXd& gamma);

struct FitOptions {
  double inner_tol = 1e-6;
  int inner_max_iter = 1000;
  double outer_tol = 1e-4;
  int max_sweeps = 50;
  bool refit = true;
  double zero_tol = 1e-10;       // group L1 norms below this are exact zeros
  double weight_cap = 1e12;
  std::uint64_t seed = 0;
};

struct FitResult {
  Eigen::VectorXd gamma;            // final coefficients (after refit when enabled)
  Eigen::VectorXd gamma_selection;  // solution of the penalized problem (before refit)
  Eigen::MatrixXd theta;            // S x (L+1), consistent with gamma_selection
  std::vector<int> active_predictors;
  std::vector<std::vector<int>> active_triangles;  // per predictor g
  std::vector<double> objective_trace;             // after every predictor update
  Eigen::VectorXd constraint_residual;             // ||H0 gamma_g||_inf per predictor
  bool refit_done = false;
  bool converged = false;
  int sweeps = 0;
  PenaltyConfig config;
  std::uint64_t seed = 0;

  Eigen::VectorXd predictor_block(int g, int block_dim) const {
    return gamma.segment(static_cast<Eigen::Index>(g) * block_dim, block_dim);
  }
};

/// Backfitting group-bridge fit for one target region (algorithm of the
/// estimation section: ridge initialization, seeded shuffled predictor
/// sweeps with theta updates and weighted-lasso inner solves, zero freezing,
/// and a ridge refit on the selected support). With lambda1 = 0 or mode none
/// the problem is an ordinary ridge regression and is solved exactly in one
/// joint factorization.
FitResult fit(const DesignContext& ctx, int target, const PenaltyConfig& cfg,
              const FitOptions& opt = {});

/// Exact ridge solutions (lambda1 = 0) for every target at once, sharing a
/// single factorization. Returns a P x S matrix of coefficient vectors.
Eigen::MatrixXd joint_ridge_all_targets(const DesignContext& ctx, double lambda2);

/// Wraps a ridge coefficient vector as a FitResult (no sparsity stage).
FitResult make_ridge_result(const DesignContext& ctx, int target, const PenaltyConfig& cfg,
                            Eigen::VectorXd gamma);

/// Convenience overload for a self-contained assembled system.
FitResult fit(const DesignSystem& sys, const PenaltyConfig& cfg, const FitOptions& opt = {});

/// Objective of the penalized problem (soft-constraint form) at gamma:
/// ||y - Psi g||^2 + ||H g||^2 + lambda2 g'Rg + lambda1 * sum_g (sum_l
/// c_{g,l} ||g_{g,l}||_1^nu + c_g ||g_g||_1^nu). Used by equivalence tests.
double group_bridge_objective(const DesignSystem& sys, const PenaltyConfig& cfg,
                              const Eigen::VectorXd& gamma);

}  // namespace hdfts
