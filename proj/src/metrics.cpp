#include "hdfts/metrics.hpp"

#include <cmath>

#include "hdfts/design.hpp"

namespace hdfts {

namespace {

double forecast_error(const std::vector<Eigen::MatrixXd>& actual,
                      const std::vector<Eigen::MatrixXd>& predicted, const Eigen::VectorXd& grid,
                      bool squared) {
  if (actual.size() != predicted.size() || actual.empty()) {
    throw error(errc::invalid_config, "forecast error: region count mismatch");
  }
  const Eigen::VectorXd w = trapezoid_weights(grid);
  const Eigen::Index n = actual.front().rows();
  double total = 0.0;
  for (std::size_t s = 0; s < actual.size(); ++s) {
    if (actual[s].rows() != n || actual[s].cols() != grid.size() ||
        predicted[s].rows() != n || predicted[s].cols() != grid.size()) {
      throw error(errc::invalid_config, "forecast error: shape mismatch");
    }
    const Eigen::MatrixXd diff = actual[s] - predicted[s];
    if (squared) {
      total += (diff.array().square().matrix() * w).sum();
    } else {
      total += (diff.cwiseAbs() * w).sum();
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(actual.size()));
}

}  // namespace

double mafe(const std::vector<Eigen::MatrixXd>& actual,
            const std::vector<Eigen::MatrixXd>& predicted, const Eigen::VectorXd& grid) {
  return forecast_error(actual, predicted, grid, false);
}

double msfe(const std::vector<Eigen::MatrixXd>& actual,
            const std::vector<Eigen::MatrixXd>& predicted, const Eigen::VectorXd& grid) {
  return forecast_error(actual, predicted, grid, true);
}

double ise(const std::function<double(double, double)>& truth, const CoefficientSurface& estimate,
           int resolution) {
  const auto& dom = estimate.basis.mesh().domain();
  Eigen::VectorXd us(resolution), vs(resolution);
  for (int i = 0; i < resolution; ++i) {
    us[i] = dom.u_lo + dom.width() * i / (resolution - 1);
    vs[i] = dom.v_lo + dom.height() * i / (resolution - 1);
  }
  const Eigen::VectorXd wu = trapezoid_weights(us);
  const Eigen::VectorXd wv = trapezoid_weights(vs);
  double total = 0.0;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double d = truth(us[i], vs[j]) - eval_surface(estimate, {us[i], vs[j]});
      total += wu[i] * wv[j] * d * d;
    }
  }
  return total;
}

SelectionCounts& SelectionCounts::operator+=(const SelectionCounts& o) {
  global_tp += o.global_tp;
  global_fp += o.global_fp;
  global_fn += o.global_fn;
  global_tn += o.global_tn;
  local_tp += o.local_tp;
  local_fp += o.local_fp;
  local_fn += o.local_fn;
  local_tn += o.local_tn;
  return *this;
}

SelectionScores scores_from(const SelectionCounts& c) {
  SelectionScores s;
  const int gpos = c.global_tp + c.global_fn;
  const int gneg = c.global_fp + c.global_tn;
  s.global_tpr = gpos > 0 ? static_cast<double>(c.global_tp) / gpos : 1.0;
  s.global_fpr_defined = gneg > 0;
  s.global_fpr = s.global_fpr_defined ? static_cast<double>(c.global_fp) / gneg : 0.0;
  const int lpos = c.local_tp + c.local_fn;
  const int lneg = c.local_fp + c.local_tn;
  s.local_tpr = lpos > 0 ? static_cast<double>(c.local_tp) / lpos : 1.0;
  s.local_fpr_defined = lneg > 0;
  s.local_fpr = s.local_fpr_defined ? static_cast<double>(c.local_fp) / lneg : 0.0;
  return s;
}

}  // namespace hdfts
