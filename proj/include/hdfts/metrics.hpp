#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hdfts/basis.hpp"
#include "hdfts/solver.hpp"

namespace hdfts {

/// Mean absolute forecast error: (1/n')(1/S) sum_t sum_s int |X - Xhat| dv,
/// with the v-integral taken by trapezoid on the panel grid. actual[s] and
/// predicted[s] are n' x M matrices.
double mafe(const std::vector<Eigen::MatrixXd>& actual,
            const std::vector<Eigen::MatrixXd>& predicted, const Eigen::VectorXd& grid);

/// Mean squared forecast error; as mafe with squared integrand.
double msfe(const std::vector<Eigen::MatrixXd>& actual,
            const std::vector<Eigen::MatrixXd>& predicted, const Eigen::VectorXd& grid);

/// Integrated squared error between a true surface and an estimate, by
/// tensor-grid trapezoid quadrature over the mesh domain.
double ise(const std::function<double(double, double)>& truth, const CoefficientSurface& estimate,
           int resolution = 101);

/// Raw confusion counts for global (predictor) and local (triangle)
/// selection of one target's fit against the ground truth. Local counts
/// cover triangles within truly-nonzero predictors only.
struct SelectionCounts {
  int global_tp = 0, global_fp = 0, global_fn = 0, global_tn = 0;
  int local_tp = 0, local_fp = 0, local_fn = 0, local_tn = 0;

  SelectionCounts& operator+=(const SelectionCounts& o);
};

struct SelectionScores {
  double global_tpr = 0.0, global_fpr = 0.0;
  double local_tpr = 0.0, local_fpr = 0.0;
  bool global_fpr_defined = true;  // false when there are no truly-zero predictors
  bool local_fpr_defined = true;
};

SelectionScores scores_from(const SelectionCounts& c);

}  // namespace hdfts
