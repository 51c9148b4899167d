#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hdfts/design.hpp"
#include "hdfts/solver.hpp"

namespace hdfts {

struct ModelConfig {
  Rect domain{};
  int mesh_rows = 3;
  int mesh_cols = 3;
  int degree = 3;
  int continuity_order = 0;
  double constraint_weight = 1.0;
  int delta = 1;
  PenaltyConfig penalty;
  FitOptions fit_options;

  BasisSpec make_spec() const;
};

struct RegionRecord {
  FitResult fit;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double validation_msfe = std::numeric_limits<double>::quiet_NaN();
  double test_msfe = std::numeric_limits<double>::quiet_NaN();
};

/// Fitted additive model: one coefficient-surface set per target region plus
/// the shared mesh, basis, lag and standardization transform.
struct HdftsModel {
  BasisSpec spec;
  int delta = 1;
  ModelConfig config;
  StandardizeTransform transform;
  Eigen::VectorXd grid;
  std::vector<std::string> region_labels;
  std::vector<RegionRecord> regions;

  int num_regions() const { return static_cast<int>(regions.size()); }
  CoefficientSurface surface(int target, int predictor) const;

  std::string to_json() const;
  static HdftsModel from_json(const std::string& text);
};

/// Fits every target region at the configuration's fixed penalties.
HdftsModel fit_model(const FunctionalPanel& panel, const ModelConfig& cfg, int threads = 1);

/// Direct delta-step forecast of region `target` at time index `t`
/// (0-based; the lagged curves at t - delta must exist in the panel, so t
/// may point up to delta steps beyond the panel end). Computed in
/// standardized space and inverse-transformed.
Eigen::VectorXd forecast(const HdftsModel& model, const FunctionalPanel& panel, int target, int t);

/// One-step-ahead forecasts for all regions over times [t_begin, t_end).
std::vector<Eigen::MatrixXd> forecast_window(const HdftsModel& model, const FunctionalPanel& panel,
                                             int t_begin, int t_end);

struct TuneGrid {
  std::vector<double> lambda1;
  std::vector<double> lambda2;

  /// Default 5x5 logarithmic grid 1e-5 .. 1e-1 (lambda1 collapses to {0} for
  /// the unpenalized mode).
  static TuneGrid defaults(PenaltyMode mode);
};

struct TuneCell {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double validation_msfe = 0.0;
};

struct TuneResult {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<TuneCell> table;
  double test_msfe = std::numeric_limits<double>::quiet_NaN();
};

/// Chronological 60/20/20 tuning for one target region: grid fits on the
/// first 60%, validation MSFE on the next 20% selects (lambda1, lambda2)
/// (ties resolved toward larger lambda1, then larger lambda2), refit on the
/// first 80%, test MSFE reported on the final 20%.
TuneResult tune(const FunctionalPanel& panel, int target, const TuneGrid& grid,
                const ModelConfig& cfg);

struct TunedModel {
  HdftsModel model;  // refit on the first 80%
  std::vector<TuneResult> per_region;
};

/// Prebuilt 60/20/20 split state: standardized design contexts for the
/// train and train+validation segments plus the lagged design rows of the
/// validation and test windows. Depends only on the mesh, basis, lag and
/// constraint settings, so it can be shared across penalty modes and grids.
struct TuneStages {
  int n_train = 0;
  int n_dev = 0;
  HdftsModel model_a;  // skeleton fit on the first 60% (transform, spec)
  HdftsModel model_b;  // skeleton fit on the first 80%
  DesignContext ctx_a;
  DesignContext ctx_b;
  std::vector<Eigen::MatrixXd> val_rows;
  std::vector<Eigen::MatrixXd> test_rows;
};

TuneStages build_tune_stages(const FunctionalPanel& panel, const ModelConfig& cfg);

/// Tunes every region sharing one design context per split; equivalent to
/// calling tune() per region but far cheaper.
TunedModel tune_and_fit(const FunctionalPanel& panel, const TuneGrid& grid, const ModelConfig& cfg,
                        int threads = 1);

/// As above but reusing prebuilt split state (the penalty mode and grid may
/// differ between calls).
TunedModel tune_and_fit(const TuneStages& stages, const FunctionalPanel& panel,
                        const TuneGrid& grid, const ModelConfig& cfg, int threads = 1);

}  // namespace hdfts
