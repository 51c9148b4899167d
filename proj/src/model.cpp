#include "hdfts/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hdfts/metrics.hpp"
#include "hdfts/parallel.hpp"
#include "hdfts/rng.hpp"

namespace hdfts {

BasisSpec ModelConfig::make_spec() const {
  auto mesh = std::make_shared<Triangulation>(triangulate_rect(domain, mesh_rows, mesh_cols));
  return BasisSpec(std::move(mesh), degree);
}

CoefficientSurface HdftsModel::surface(int target, int predictor) const {
  const int p = spec.dimension();
  return {spec, regions[static_cast<std::size_t>(target)].fit.predictor_block(predictor, p)};
}

TuneGrid TuneGrid::defaults(PenaltyMode mode) {
  TuneGrid g;
  g.lambda2 = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  if (mode == PenaltyMode::none) {
    g.lambda1 = {0.0};
  } else {
    g.lambda1 = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  }
  return g;
}

HdftsModel fit_model(const FunctionalPanel& panel, const ModelConfig& cfg, int threads) {
  panel.validate();
  auto [std_panel, transform] = standardize(panel);
  const BasisSpec spec = cfg.make_spec();
  const DesignContext ctx = build_design_context(std_panel, spec, cfg.delta,
                                                 cfg.continuity_order, cfg.constraint_weight);
  HdftsModel model;
  model.spec = spec;
  model.delta = cfg.delta;
  model.config = cfg;
  model.transform = std::move(transform);
  model.grid = panel.grid;
  model.region_labels = panel.regions;
  model.regions.resize(static_cast<std::size_t>(panel.num_regions()));

  parallel_for(panel.num_regions(), threads, [&](int s) {
    FitOptions opt = cfg.fit_options;
    opt.seed = derive_seed(cfg.fit_options.seed, static_cast<std::uint64_t>(s));
    auto& rec = model.regions[static_cast<std::size_t>(s)];
    rec.fit = fit(ctx, s, cfg.penalty, opt);
    rec.lambda1 = cfg.penalty.lambda1;
    rec.lambda2 = cfg.penalty.lambda2;
  });
  return model;
}

namespace {

/// Unscaled design rows (M x P) of the standardized lagged curves at one
/// time index: block g holds design_rows_for_curve of predictor g.
Eigen::MatrixXd lagged_design_rows(const BasisSpec& spec, const StandardizeTransform& tf,
                                   const FunctionalPanel& panel, int lag_index) {
  const int S = panel.num_regions();
  const int p = spec.dimension();
  Eigen::MatrixXd rows(panel.num_grid(), static_cast<Eigen::Index>(S) * p);
  for (int g = 0; g < S; ++g) {
    const Eigen::VectorXd z =
        tf.apply(g, panel.values[static_cast<std::size_t>(g)].row(lag_index).transpose());
    rows.middleCols(static_cast<Eigen::Index>(g) * p, p) =
        design_rows_for_curve(spec, panel.grid, z);
  }
  return rows;
}

Eigen::VectorXd forecast_from_rows(const HdftsModel& model, const Eigen::MatrixXd& rows,
                                   int target) {
  const int p = model.spec.dimension();
  const auto& fit = model.regions[static_cast<std::size_t>(target)].fit;
  Eigen::VectorXd std_forecast = Eigen::VectorXd::Zero(rows.rows());
  for (int g : fit.active_predictors) {
    std_forecast += rows.middleCols(static_cast<Eigen::Index>(g) * p, p) *
                    fit.gamma.segment(static_cast<Eigen::Index>(g) * p, p);
  }
  return model.transform.invert(target, std_forecast);
}

}  // namespace

Eigen::VectorXd forecast(const HdftsModel& model, const FunctionalPanel& panel, int target, int t) {
  panel.validate();
  if (panel.num_regions() != model.num_regions()) {
    throw error(errc::invalid_config, "forecast: panel region count does not match the model");
  }
  if (panel.grid.size() != model.grid.size() ||
      (panel.grid - model.grid).cwiseAbs().maxCoeff() > 1e-12) {
    throw error(errc::grid_mismatch, "forecast: panel grid does not match the model grid");
  }
  const int lag = t - model.delta;
  if (lag < 0 || lag >= panel.num_times()) {
    throw error(errc::insufficient_data, "forecast: lagged observation not in the panel");
  }
  const Eigen::MatrixXd rows = lagged_design_rows(model.spec, model.transform, panel, lag);
  return forecast_from_rows(model, rows, target);
}

std::vector<Eigen::MatrixXd> forecast_window(const HdftsModel& model, const FunctionalPanel& panel,
                                             int t_begin, int t_end) {
  const int S = model.num_regions();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(S));
  for (auto& m : out) m.resize(t_end - t_begin, panel.num_grid());
  for (int t = t_begin; t < t_end; ++t) {
    const Eigen::MatrixXd rows =
        lagged_design_rows(model.spec, model.transform, panel, t - model.delta);
    for (int s = 0; s < S; ++s) {
      out[static_cast<std::size_t>(s)].row(t - t_begin) =
          forecast_from_rows(model, rows, s).transpose();
    }
  }
  return out;
}

namespace {

struct SplitSizes {
  int n_train;  // first 60%
  int n_dev;    // first 80%
  int n_total;
};

SplitSizes chrono_split(int n, int delta) {
  SplitSizes s;
  s.n_total = n;
  s.n_train = static_cast<int>(std::floor(0.6 * n));
  s.n_dev = static_cast<int>(std::floor(0.8 * n));
  if (s.n_train <= delta || s.n_dev - s.n_train < 1 || s.n_total - s.n_dev < 1) {
    throw error(errc::insufficient_data, "tune: 60/20/20 split leaves an empty segment");
  }
  return s;
}

/// MSFE of single-region forecasts given per-time design rows.
double window_msfe(const HdftsModel& model, const FunctionalPanel& panel,
                   const std::vector<Eigen::MatrixXd>& rows_by_time, int target, int t_begin) {
  const Eigen::VectorXd w = trapezoid_weights(panel.grid);
  const int n_times = static_cast<int>(rows_by_time.size());
  double total = 0.0;
  for (int i = 0; i < n_times; ++i) {
    const Eigen::VectorXd pred = forecast_from_rows(model, rows_by_time[static_cast<std::size_t>(i)], target);
    const Eigen::VectorXd diff =
        panel.values[static_cast<std::size_t>(target)].row(t_begin + i).transpose() - pred;
    total += diff.array().square().matrix().dot(w);
  }
  return total / n_times;
}

HdftsModel make_stage_model(const FunctionalPanel& head_panel, const ModelConfig& cfg,
                            const BasisSpec& spec, StandardizeTransform transform) {
  HdftsModel m;
  m.spec = spec;
  m.delta = cfg.delta;
  m.config = cfg;
  m.transform = std::move(transform);
  m.grid = head_panel.grid;
  m.region_labels = head_panel.regions;
  m.regions.resize(static_cast<std::size_t>(head_panel.num_regions()));
  return m;
}

}  // namespace

TuneStages build_tune_stages(const FunctionalPanel& panel, const ModelConfig& cfg) {
  panel.validate();
  const SplitSizes split = chrono_split(panel.num_times(), cfg.delta);
  const BasisSpec spec = cfg.make_spec();

  TuneStages st;
  st.n_train = split.n_train;
  st.n_dev = split.n_dev;

  const auto head_a = panel.head(split.n_train);
  auto [std_a, tf_a] = standardize(head_a);
  st.model_a = make_stage_model(head_a, cfg, spec, std::move(tf_a));
  st.ctx_a = build_design_context(std_a, spec, cfg.delta, cfg.continuity_order,
                                  cfg.constraint_weight);
  for (int t = split.n_train; t < split.n_dev; ++t) {
    st.val_rows.push_back(lagged_design_rows(spec, st.model_a.transform, panel, t - cfg.delta));
  }

  const auto head_b = panel.head(split.n_dev);
  auto [std_b, tf_b] = standardize(head_b);
  st.model_b = make_stage_model(head_b, cfg, spec, std::move(tf_b));
  st.ctx_b = build_design_context(std_b, spec, cfg.delta, cfg.continuity_order,
                                  cfg.constraint_weight);
  for (int t = split.n_dev; t < split.n_total; ++t) {
    st.test_rows.push_back(lagged_design_rows(spec, st.model_b.transform, panel, t - cfg.delta));
  }
  return st;
}

TunedModel tune_and_fit(const TuneStages& stages, const FunctionalPanel& panel,
                        const TuneGrid& grid, const ModelConfig& cfg, int threads) {
  if (grid.lambda1.empty() || grid.lambda2.empty()) {
    throw error(errc::invalid_config, "tune: empty lambda grid");
  }
  const int S = panel.num_regions();
  const bool ridge_only = cfg.penalty.mode == PenaltyMode::none;

  const int n_cells = static_cast<int>(grid.lambda1.size() * grid.lambda2.size());
  std::vector<TuneResult> results(static_cast<std::size_t>(S));
  for (auto& r : results) r.table.resize(static_cast<std::size_t>(n_cells));

  const auto cell_lambdas = [&](int cell) {
    const int i1 = cell / static_cast<int>(grid.lambda2.size());
    const int i2 = cell % static_cast<int>(grid.lambda2.size());
    return std::pair<double, double>(grid.lambda1[static_cast<std::size_t>(i1)],
                                     grid.lambda2[static_cast<std::size_t>(i2)]);
  };

  // Stage A: fits on the first 60%, validated on the next 20%.
  parallel_for(n_cells, threads, [&](int cell) {
    const auto [l1, l2] = cell_lambdas(cell);
    PenaltyConfig pc = cfg.penalty;
    pc.lambda1 = l1;
    pc.lambda2 = l2;
    HdftsModel probe = stages.model_a;  // shares the spec and transform
    Eigen::MatrixXd ridge;
    if (ridge_only || pc.lambda1 == 0.0) ridge = joint_ridge_all_targets(stages.ctx_a, l2);
    for (int s = 0; s < S; ++s) {
      FitOptions opt = cfg.fit_options;
      opt.seed = derive_seed(cfg.fit_options.seed, static_cast<std::uint64_t>(s),
                             static_cast<std::uint64_t>(cell));
      FitResult fr = (ridge_only || pc.lambda1 == 0.0)
                         ? make_ridge_result(stages.ctx_a, s, pc, ridge.col(s))
                         : fit(stages.ctx_a, s, pc, opt);
      probe.regions[static_cast<std::size_t>(s)].fit = std::move(fr);
      const double v = window_msfe(probe, panel, stages.val_rows, s, stages.n_train);
      results[static_cast<std::size_t>(s)].table[static_cast<std::size_t>(cell)] = {l1, l2, v};
    }
  });

  // Select per region: smallest validation MSFE, ties toward larger lambda1,
  // then larger lambda2.
  for (int s = 0; s < S; ++s) {
    auto& r = results[static_cast<std::size_t>(s)];
    const TuneCell* best = nullptr;
    for (const auto& cell : r.table) {
      if (!best || cell.validation_msfe < best->validation_msfe ||
          (cell.validation_msfe == best->validation_msfe &&
           (cell.lambda1 > best->lambda1 ||
            (cell.lambda1 == best->lambda1 && cell.lambda2 > best->lambda2)))) {
        best = &cell;
      }
    }
    r.lambda1 = best->lambda1;
    r.lambda2 = best->lambda2;
  }

  // Stage B: refit on the first 80% at the selected penalties; test MSFE on
  // the final 20%.
  HdftsModel model_b = stages.model_b;
  std::map<double, Eigen::MatrixXd> ridge_cache;
  if (ridge_only) {
    for (const auto& r : results) {
      if (!ridge_cache.count(r.lambda2)) {
        ridge_cache[r.lambda2] = joint_ridge_all_targets(stages.ctx_b, r.lambda2);
      }
    }
  }
  parallel_for(S, threads, [&](int s) {
    auto& r = results[static_cast<std::size_t>(s)];
    PenaltyConfig pc = cfg.penalty;
    pc.lambda1 = r.lambda1;
    pc.lambda2 = r.lambda2;
    FitOptions opt = cfg.fit_options;
    opt.seed = derive_seed(cfg.fit_options.seed, static_cast<std::uint64_t>(s), 0xf17ULL);
    FitResult fr = ridge_only
                       ? make_ridge_result(stages.ctx_b, s, pc, ridge_cache.at(r.lambda2).col(s))
                       : fit(stages.ctx_b, s, pc, opt);
    auto& rec = model_b.regions[static_cast<std::size_t>(s)];
    rec.fit = std::move(fr);
    rec.lambda1 = r.lambda1;
    rec.lambda2 = r.lambda2;
    rec.validation_msfe = 0.0;
    for (const auto& cell : r.table) {
      if (cell.lambda1 == r.lambda1 && cell.lambda2 == r.lambda2) {
        rec.validation_msfe = cell.validation_msfe;
      }
    }
    r.test_msfe = window_msfe(model_b, panel, stages.test_rows, s, stages.n_dev);
    rec.test_msfe = r.test_msfe;
  });

  TunedModel out;
  out.model = std::move(model_b);
  out.per_region = std::move(results);
  return out;
}

TunedModel tune_and_fit(const FunctionalPanel& panel, const TuneGrid& grid, const ModelConfig& cfg,
                        int threads) {
  const TuneStages stages = build_tune_stages(panel, cfg);
  return tune_and_fit(stages, panel, grid, cfg, threads);
}

TuneResult tune(const FunctionalPanel& panel, int target, const TuneGrid& grid,
                const ModelConfig& cfg) {
  if (target < 0 || target >= panel.num_regions()) {
    throw error(errc::invalid_config, "tune: bad target index");
  }
  TunedModel tm = tune_and_fit(panel, grid, cfg, 1);
  return tm.per_region[static_cast<std::size_t>(target)];
}

}  // namespace hdfts
