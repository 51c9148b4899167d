#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hdfts/basis.hpp"

namespace hdfts {

/// Panel of S functional time series observed on a common grid.
/// values[s] is the n x M matrix of curve evaluations for region s.
struct FunctionalPanel {
  Eigen::VectorXd grid;                  // M strictly increasing points
  std::vector<std::string> regions;      // S labels
  std::vector<double> times;             // n labels
  std::vector<Eigen::MatrixXd> values;   // S matrices, each n x M

  int num_regions() const { return static_cast<int>(values.size()); }
  int num_times() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
  int num_grid() const { return static_cast<int>(grid.size()); }

  void validate() const;

  /// Panel restricted to times [0, n_keep).
  FunctionalPanel head(int n_keep) const;
};

/// Per-region standardization: subtract the pointwise temporal mean curve,
/// divide by the scalar RMS of the centered values.
struct StandardizeTransform {
  Eigen::MatrixXd means;              // S x M
  Eigen::VectorXd scales;             // S
  std::vector<bool> zero_variance;    // warning flags

  Eigen::VectorXd apply(int region, const Eigen::VectorXd& curve) const {
    return (curve - means.row(region).transpose()) / scales[region];
  }
  Eigen::VectorXd invert(int region, const Eigen::VectorXd& curve) const {
    return curve * scales[region] + means.row(region).transpose();
  }
};

std::pair<FunctionalPanel, StandardizeTransform> standardize(const FunctionalPanel& panel);

/// Trapezoid weights of a (possibly non-uniform) grid.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

/// Row of the design operator: entry (l, q) approximates
/// int B_{l,q}(u, v) X(u) du over the u-slice of triangle l at height v.
///
/// Quadrature: composite trapezoid over the grid refined by the triangle
/// slice boundaries; each subinterval is assigned to the unique triangle
/// owning its midpoint (locate() tie-break), and the curve is linearly
/// interpolated at non-grid nodes. Under the basis partition of unity the
/// entries at fixed v sum exactly to the slice width.
Eigen::VectorXd integrate_basis_against_curve(const BasisSpec& spec, const Eigen::VectorXd& grid,
                                              const Eigen::VectorXd& curve, double v);

/// Assembled least-squares system for one target region.
///
/// psi has (n - delta) * M rows scaled by 1/sqrt(M); the row for (time t,
/// grid index m) sits at row m * (n - delta) + (t - delta - 1), matching the
/// response ordering y = [X_{1+delta}(v_1) ... X_n(v_1), ..., X_n(v_M)].
/// Column blocks are ordered predictor-major, then triangle, then basis
/// index. H and R are block diagonal over predictors.
struct DesignSystem {
  BasisSpec spec;
  int num_predictors = 0;
  Eigen::MatrixXd psi;
  Eigen::VectorXd y;
  Eigen::MatrixXd H;       // constraint rows (already scaled by the constraint weight)
  Eigen::MatrixXd R;       // roughness matrix (unscaled)
  double lambda2 = 0.0;

  /// Vertical stack [psi; H; sqrt(lambda2) * R^{1/2}]; the R rows are omitted
  /// when lambda2 = 0.
  Eigen::MatrixXd psi_star() const;
  Eigen::VectorXd y_star() const;
};

DesignSystem assemble(const FunctionalPanel& panel, int target, int delta, const BasisSpec& spec,
                      double lambda2, int continuity_order, double constraint_weight = 1.0);

/// Shared precomputation for fitting every target region of a panel: the
/// design Gram matrix, the per-target correlation vectors, and the
/// per-predictor penalty blocks. This is what the solver consumes; it never
/// touches the raw design matrix again.
struct DesignContext {
  BasisSpec spec;
  int delta = 1;
  int num_predictors = 0;
  int block_dim = 0;              // L*Q coefficients per predictor
  Eigen::MatrixXd gram;           // P x P, P = S*L*Q
  Eigen::MatrixXd b;              // P x S, column s = psi' y_s
  Eigen::VectorXd y_norm2;        // S
  Eigen::MatrixXd h0;             // per-predictor constraint rows (scaled)
  Eigen::MatrixXd h0_gram;        // h0' h0
  Eigen::MatrixXd r0;             // per-predictor roughness block
  int n_rows = 0;
};

DesignContext build_design_context(const FunctionalPanel& panel, const BasisSpec& spec, int delta,
                                   int continuity_order, double constraint_weight = 1.0);

/// Design rows of one lagged curve: the M x (L*Q) matrix whose row m is
/// integrate_basis_against_curve(spec, grid, curve, v_m), without the
/// 1/sqrt(M) scaling. Used for forecasting.
Eigen::MatrixXd design_rows_for_curve(const BasisSpec& spec, const Eigen::VectorXd& grid,
                                      const Eigen::VectorXd& curve);

}  // namespace hdfts
