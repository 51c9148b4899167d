#include "hdfts/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hdfts/parallel.hpp"
#include "hdfts/rng.hpp"

namespace hdfts {

const char* surface_kind_name(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::self_kernel: return "self";
    case SurfaceKind::shape1: return "shapeI";
    case SurfaceKind::shape2: return "shapeII";
    case SurfaceKind::shape3: return "shapeIII";
    case SurfaceKind::zero: return "zero";
  }
  return "unknown";
}

bool TrueSurface::in_mask(double u, double v) const {
  switch (kind) {
    case SurfaceKind::self_kernel: return true;
    case SurfaceKind::shape1: return std::abs(u - v) <= 0.4;
    case SurfaceKind::shape2: {
      const double du = u - 0.5, dv = v - 0.5;
      return du * du + dv * dv <= 0.45 * 0.45;
    }
    case SurfaceKind::shape3: return u + v <= 1.2;
    case SurfaceKind::zero: return false;
  }
  return false;
}

double TrueSurface::operator()(double u, double v) const {
  if (is_zero() || !in_mask(u, v)) return 0.0;
  if (kind == SurfaceKind::self_kernel) {
    return amplitude * std::exp(-0.5 * (u + v) * (u + v));
  }
  const double du = u - 0.5, dv = v - 0.5;
  return amplitude * std::exp(-(du * du + dv * dv));
}

std::vector<bool> TrueSurfaceSet::nonzero_triangles(int s, int g,
                                                    const Triangulation& mesh) const {
  const auto& surf = at(s, g);
  std::vector<bool> out(static_cast<std::size_t>(mesh.num_triangles()), false);
  if (surf.is_zero()) return out;
  for (int l = 0; l < mesh.num_triangles(); ++l) {
    const auto v = mesh.triangle_vertices(l);
    const double cu = (v[0].u + v[1].u + v[2].u) / 3.0;
    const double cv = (v[0].v + v[1].v + v[2].v) / 3.0;
    out[static_cast<std::size_t>(l)] = surf.in_mask(cu, cv);
  }
  return out;
}

TrueSurfaceSet SimConfig::surfaces() const {
  TrueSurfaceSet set;
  set.S = S;
  set.entries.assign(static_cast<std::size_t>(S) * S, TrueSurface{});
  for (int s = 0; s < S; ++s) {
    set.at(s, s) = {SurfaceKind::self_kernel, self_c(s)};
    if (S > 1) set.at(s, (s + 1) % S) = {SurfaceKind::shape1, shape_amplitude};
    if (S > 2) set.at(s, (s + 2) % S) = {SurfaceKind::shape2, shape_amplitude};
    if (S > 3) set.at(s, (s + 3) % S) = {SurfaceKind::shape3, shape_amplitude};
  }
  return set;
}

namespace {

Eigen::VectorXd unit_grid(int M) {
  Eigen::VectorXd g(M);
  for (int m = 0; m < M; ++m) g[m] = static_cast<double>(m) / (M - 1);
  return g;
}

/// Trapezoid-discretized kernel operator of one surface: row m applies the
/// integral at response height v_m.
Eigen::MatrixXd kernel_matrix(const TrueSurface& surf, const Eigen::VectorXd& grid) {
  const int M = static_cast<int>(grid.size());
  const Eigen::VectorXd w = trapezoid_weights(grid);
  Eigen::MatrixXd k(M, M);
  for (int m = 0; m < M; ++m) {
    for (int mp = 0; mp < M; ++mp) k(m, mp) = surf(grid[mp], grid[m]) * w[mp];
  }
  return k;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  // Power iteration on a'a.
  Eigen::VectorXd x = Eigen::VectorXd::Ones(a.cols()).normalized();
  double norm2 = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd y = a.transpose() * (a * x);
    const double next = y.norm();
    if (next == 0.0) return 0.0;
    y /= next;
    if (std::abs(next - norm2) <= 1e-12 * std::max(1.0, next)) {
      norm2 = next;
      break;
    }
    norm2 = next;
    x = y;
  }
  return std::sqrt(norm2);
}

Eigen::MatrixXd composite_matrix(const TrueSurfaceSet& set, const Eigen::VectorXd& grid) {
  const int S = set.S;
  const int M = static_cast<int>(grid.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S) * M,
                                            static_cast<Eigen::Index>(S) * M);
  for (int s = 0; s < S; ++s) {
    for (int g = 0; g < S; ++g) {
      if (set.at(s, g).is_zero()) continue;
      b.block(static_cast<Eigen::Index>(s) * M, static_cast<Eigen::Index>(g) * M, M, M) =
          kernel_matrix(set.at(s, g), grid);
    }
  }
  return b;
}

}  // namespace

double SimConfig::composite_operator_norm() const {
  return spectral_norm(composite_matrix(surfaces(), unit_grid(M)));
}

void SimConfig::validate() const {
  if (S < 1 || n < 2 || M < 2 || replicates < 1) {
    throw error(errc::invalid_config, "sim: S, n, M, replicates out of range");
  }
  for (int s = 0; s < S; ++s) {
    if (self_c(s) < 0.0 || self_c(s) > 1.0) {
      throw error(errc::invalid_config, "sim: C_s must lie in [0, 1]");
    }
  }
  const double norm = composite_operator_norm();
  if (!(norm < 1.0)) {
    throw error(errc::invalid_config,
                "sim: composite kernel operator norm " + std::to_string(norm) + " >= 1");
  }
}

Eigen::MatrixXd gen_far1(const SimConfig& config, int region, std::uint64_t seed) {
  const Eigen::VectorXd grid = unit_grid(config.M);
  const TrueSurface gamma{SurfaceKind::self_kernel, config.self_c(region)};
  const Eigen::MatrixXd k = kernel_matrix(gamma, grid);
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(region)));

  Eigen::MatrixXd out(config.n, config.M);
  Eigen::VectorXd x(config.M), noise(config.M);
  for (int m = 0; m < config.M; ++m) x[m] = config.omega_sd * standard_normal(rng);
  for (int t = 0; t < config.burn_in + config.n; ++t) {
    for (int m = 0; m < config.M; ++m) noise[m] = config.omega_sd * standard_normal(rng);
    x = k * x + noise;
    if (t >= config.burn_in) out.row(t - config.burn_in) = x.transpose();
  }
  return out;
}

std::pair<FunctionalPanel, TrueSurfaceSet> gen_panel(const SimConfig& config, std::uint64_t seed,
                                                     const TrueSurfaceSet* truth_override) {
  const Eigen::VectorXd grid = unit_grid(config.M);
  TrueSurfaceSet truth = truth_override ? *truth_override : config.surfaces();
  const int S = config.S;
  const int M = config.M;

  std::vector<Eigen::MatrixXd> kernels(static_cast<std::size_t>(S) * S);
  for (int s = 0; s < S; ++s) {
    for (int g = 0; g < S; ++g) {
      if (!truth.at(s, g).is_zero()) {
        kernels[static_cast<std::size_t>(s) * S + g] = kernel_matrix(truth.at(s, g), grid);
      }
    }
  }

  // One noise stream per region, drawn in lockstep with gen_far1 so the
  // single-surface panel reproduces it exactly.
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(s)));

  Eigen::MatrixXd state(S, M), next(S, M);
  for (int s = 0; s < S; ++s) {
    for (int m = 0; m < M; ++m) state(s, m) = config.eps_sd * standard_normal(rngs[static_cast<std::size_t>(s)]);
  }

  FunctionalPanel panel;
  panel.grid = grid;
  for (int s = 0; s < S; ++s) panel.regions.push_back("region" + std::to_string(s));
  panel.times.resize(static_cast<std::size_t>(config.n));
  std::iota(panel.times.begin(), panel.times.end(), 1.0);
  panel.values.assign(static_cast<std::size_t>(S), Eigen::MatrixXd(config.n, M));

  for (int t = 0; t < config.burn_in + config.n; ++t) {
    for (int s = 0; s < S; ++s) {
      Eigen::VectorXd acc(M);
      for (int m = 0; m < M; ++m) {
        acc[m] = config.eps_sd * standard_normal(rngs[static_cast<std::size_t>(s)]);
      }
      for (int g = 0; g < S; ++g) {
        const auto& k = kernels[static_cast<std::size_t>(s) * S + g];
        if (k.size() > 0) acc += k * state.row(g).transpose();
      }
      next.row(s) = acc.transpose();
    }
    state.swap(next);
    if (t >= config.burn_in) {
      for (int s = 0; s < S; ++s) {
        panel.values[static_cast<std::size_t>(s)].row(t - config.burn_in) = state.row(s);
      }
    }
  }
  return {std::move(panel), std::move(truth)};
}

SelectionCounts selection_counts(const TrueSurfaceSet& truth, int target, const FitResult& fit,
                                 const Triangulation& mesh) {
  SelectionCounts c;
  const int S = truth.S;
  std::vector<bool> selected(static_cast<std::size_t>(S), false);
  for (int g : fit.active_predictors) selected[static_cast<std::size_t>(g)] = true;
  for (int g = 0; g < S; ++g) {
    const bool truly = !truth.at(target, g).is_zero();
    const bool sel = selected[static_cast<std::size_t>(g)];
    if (truly && sel) ++c.global_tp;
    if (truly && !sel) ++c.global_fn;
    if (!truly && sel) ++c.global_fp;
    if (!truly && !sel) ++c.global_tn;

    if (!truly) continue;
    const auto nz = truth.nonzero_triangles(target, g, mesh);
    std::vector<bool> sel_tri(nz.size(), false);
    if (sel) {
      for (int l : fit.active_triangles[static_cast<std::size_t>(g)]) {
        sel_tri[static_cast<std::size_t>(l)] = true;
      }
    }
    for (std::size_t l = 0; l < nz.size(); ++l) {
      if (nz[l] && sel_tri[l]) ++c.local_tp;
      if (nz[l] && !sel_tri[l]) ++c.local_fn;
      if (!nz[l] && sel_tri[l]) ++c.local_fp;
      if (!nz[l] && !sel_tri[l]) ++c.local_tn;
    }
  }
  return c;
}

double McModeResult::mean(const std::function<double(const McReplicate&)>& f) const {
  double total = 0.0;
  int count = 0;
  for (const auto& r : replicates) {
    if (!r.failed) {
      total += f(r);
      ++count;
    }
  }
  return count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
}

double McModeResult::sd(const std::function<double(const McReplicate&)>& f) const {
  const double m = mean(f);
  double total = 0.0;
  int count = 0;
  for (const auto& r : replicates) {
    if (!r.failed) {
      total += (f(r) - m) * (f(r) - m);
      ++count;
    }
  }
  return count > 1 ? std::sqrt(total / (count - 1)) : 0.0;
}

double McModeResult::median(const std::function<double(const McReplicate&)>& f) const {
  std::vector<double> xs;
  for (const auto& r : replicates) {
    if (!r.failed) xs.push_back(f(r));
  }
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[k] : 0.5 * (xs[k - 1] + xs[k]);
}

McReport run_monte_carlo(const McConfig& config) {
  config.sim.validate();
  if (config.modes.empty()) throw error(errc::invalid_config, "monte carlo: no modes");

  McReport report;
  report.config = config;
  report.per_mode.resize(config.modes.size());
  for (std::size_t mi = 0; mi < config.modes.size(); ++mi) {
    report.per_mode[mi].mode = config.modes[mi];
    report.per_mode[mi].replicates.resize(static_cast<std::size_t>(config.sim.replicates));
  }

  const int n = config.sim.n;
  const int n_dev = static_cast<int>(std::floor(0.8 * n));

  parallel_for(config.sim.replicates, config.threads, [&](int rep) {
    const std::uint64_t rep_seed = derive_seed(config.sim.base_seed, static_cast<std::uint64_t>(rep));
    auto [panel, truth] = gen_panel(config.sim, rep_seed);
    auto mesh = std::make_shared<Triangulation>(
        triangulate_rect(config.model.domain, config.model.mesh_rows, config.model.mesh_cols));
    // The split contexts depend only on mesh/basis/lag settings; share them
    // across penalty modes.
    const TuneStages stages = build_tune_stages(panel, config.model);

    for (std::size_t mi = 0; mi < config.modes.size(); ++mi) {
      auto& out = report.per_mode[mi].replicates[static_cast<std::size_t>(rep)];
      out.replicate = rep;
      try {
        ModelConfig mc = config.model;
        mc.penalty.mode = config.modes[mi];
        mc.fit_options.seed = derive_seed(rep_seed, 0xabcdULL, mi);
        TuneGrid grid = config.grid;
        if (config.modes[mi] == PenaltyMode::none) grid.lambda1 = {0.0};

        TunedModel tuned = tune_and_fit(stages, panel, grid, mc, 1);

        // Held-out forecasts over the last 20%.
        const auto preds = forecast_window(tuned.model, panel, n_dev, n);
        std::vector<Eigen::MatrixXd> actual;
        for (int s = 0; s < config.sim.S; ++s) {
          actual.push_back(
              panel.values[static_cast<std::size_t>(s)].middleRows(n_dev, n - n_dev));
        }
        out.mafe = mafe(actual, preds, panel.grid);
        out.msfe = msfe(actual, preds, panel.grid);

        out.ise_by_kind.setZero();
        if (config.compute_ise) {
          Eigen::Vector4d totals = Eigen::Vector4d::Zero();
          Eigen::Vector4i counts = Eigen::Vector4i::Zero();
          for (int s = 0; s < config.sim.S; ++s) {
            for (int g = 0; g < config.sim.S; ++g) {
              const auto& surf = truth.at(s, g);
              if (surf.is_zero()) continue;
              const int kind_index = static_cast<int>(surf.kind);
              const CoefficientSurface est = tuned.model.surface(s, g);
              totals[kind_index] +=
                  ise([&surf](double u, double v) { return surf(u, v); }, est,
                      config.ise_resolution);
              counts[kind_index] += 1;
            }
          }
          for (int k = 0; k < 4; ++k) {
            out.ise_by_kind[k] = counts[k] > 0 ? totals[k] / counts[k] : 0.0;
          }
        }

        for (int s = 0; s < config.sim.S; ++s) {
          out.selection +=
              selection_counts(truth, s, tuned.model.regions[static_cast<std::size_t>(s)].fit,
                               *mesh);
        }
      } catch (const std::exception& e) {
        out.failed = true;
        out.failure = e.what();
      }
    }
  });

  for (const auto& mode : report.per_mode) {
    int failures = 0;
    std::string first;
    for (const auto& r : mode.replicates) {
      if (r.failed) {
        ++failures;
        if (first.empty()) first = r.failure;
      }
    }
    if (failures * 20 > config.sim.replicates) {
      throw error(errc::numeric_error, "monte carlo: more than 5% of replicates failed (first: " +
                                           first + ")");
    }
  }
  return report;
}

std::string McReport::to_csv() const {
  char buf[256];
  std::string out;
  out += "# hdfts monte carlo report\n";
  std::snprintf(buf, sizeof(buf),
                "# S=%d n=%d M=%d replicates=%d eps_sd=%g omega_sd=%g shape_amplitude=%g "
                "base_seed=%llu\n",
                config.sim.S, config.sim.n, config.sim.M, config.sim.replicates,
                config.sim.eps_sd, config.sim.omega_sd, config.sim.shape_amplitude,
                static_cast<unsigned long long>(config.sim.base_seed));
  out += buf;
  out += "# C_s defaults to 0.5; figure-style shape masks and amplitudes are config defaults\n";
  out += "mode,n,metric,mean,sd\n";
  const auto row = [&](const McModeResult& m, const char* metric,
                       const std::function<double(const McReplicate&)>& f) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%.17g,%.17g\n", penalty_mode_name(m.mode),
                  config.sim.n, metric, m.mean(f), m.sd(f));
    out += buf;
  };
  for (const auto& m : per_mode) {
    row(m, "mafe", [](const McReplicate& r) { return r.mafe; });
    row(m, "msfe", [](const McReplicate& r) { return r.msfe; });
    row(m, "ise_self", [](const McReplicate& r) { return r.ise_by_kind[0]; });
    row(m, "ise_shapeI", [](const McReplicate& r) { return r.ise_by_kind[1]; });
    row(m, "ise_shapeII", [](const McReplicate& r) { return r.ise_by_kind[2]; });
    row(m, "ise_shapeIII", [](const McReplicate& r) { return r.ise_by_kind[3]; });
    row(m, "tpr_global", [](const McReplicate& r) { return scores_from(r.selection).global_tpr; });
    row(m, "fpr_global", [](const McReplicate& r) { return scores_from(r.selection).global_fpr; });
    row(m, "tpr_local", [](const McReplicate& r) { return scores_from(r.selection).local_tpr; });
    row(m, "fpr_local", [](const McReplicate& r) { return scores_from(r.selection).local_fpr; });
  }
  return out;
}

}  // namespace hdfts
