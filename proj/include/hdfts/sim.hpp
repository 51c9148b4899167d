#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdfts/design.hpp"
#include "hdfts/metrics.hpp"
#include "hdfts/model.hpp"

namespace hdfts {

enum class SurfaceKind { self_kernel, shape1, shape2, shape3, zero };

const char* surface_kind_name(SurfaceKind kind);

/// Ground-truth coefficient surface of the data-generating process: a smooth
/// analytic surface times a sparsity mask.
///  self_kernel: C * exp(-(u+v)^2 / 2), no mask
///  shape1: bump on the band |u - v| <= 0.4
///  shape2: bump on the disc of radius 0.45 centered at (0.5, 0.5)
///  shape3: bump on the half-plane u + v <= 1.2
/// where bump(u,v) = amplitude * exp(-((u-0.5)^2 + (v-0.5)^2)).
struct TrueSurface {
  SurfaceKind kind = SurfaceKind::zero;
  double amplitude = 0.0;

  bool in_mask(double u, double v) const;
  double operator()(double u, double v) const;
  bool is_zero() const { return kind == SurfaceKind::zero || amplitude == 0.0; }
};

/// S x S grid of true surfaces; at(s, g) drives predictor g of target s.
struct TrueSurfaceSet {
  int S = 0;
  std::vector<TrueSurface> entries;  // row-major

  const TrueSurface& at(int s, int g) const { return entries[static_cast<std::size_t>(s) * S + g]; }
  TrueSurface& at(int s, int g) { return entries[static_cast<std::size_t>(s) * S + g]; }

  /// Triangle-level truth: triangle l of (s, g) counts as truly nonzero iff
  /// the mask is nonzero at its centroid (and the surface is not the zero
  /// kind).
  std::vector<bool> nonzero_triangles(int s, int g, const Triangulation& mesh) const;
};

struct SimConfig {
  int S = 7;
  int n = 100;
  int M = 50;
  Eigen::VectorXd c_s;            // per-region self-kernel constants; default 0.5
  double omega_sd = 1.0;          // innovation sd of the standalone FAR(1)
  double eps_sd = 0.5;            // innovation sd of the panel recursion
  double shape_amplitude = 0.3;   // bump amplitude of the partially sparse surfaces
  int burn_in = 50;
  int replicates = 100;
  std::uint64_t base_seed = 20250810;

  double self_c(int s) const { return c_s.size() > 0 ? c_s[s] : 0.5; }

  /// Default shape assignment: beta_ss is the self kernel; predictors
  /// s+1, s+2, s+3 (mod S) carry shapes I, II, III; the rest are zero.
  TrueSurfaceSet surfaces() const;

  /// Spectral norm of the trapezoid-discretized composite kernel operator.
  double composite_operator_norm() const;

  /// Checks C_s in [0,1] and the stationarity guard (operator norm < 1).
  void validate() const;
};

/// Standalone FAR(1) series of one region: n x M matrix of curve values,
/// innovations omega ~ iid N(0, omega_sd^2) at the grid points, a burn-in of
/// config.burn_in steps discarded, X_0 drawn from the noise process.
Eigen::MatrixXd gen_far1(const SimConfig& config, int region, std::uint64_t seed);

/// Panel generated by the vector recursion X_{ts} = sum_g int beta_sg(u, .)
/// X_{t-1,g}(u) du + eps_ts with the true surface set; reduces exactly to
/// gen_far1 per region when only the diagonal is nonzero and the innovation
/// sds match (shared per-region noise streams). A custom surface set may be
/// supplied in place of the config default.
std::pair<FunctionalPanel, TrueSurfaceSet> gen_panel(const SimConfig& config, std::uint64_t seed,
                                                     const TrueSurfaceSet* truth_override = nullptr);

SelectionCounts selection_counts(const TrueSurfaceSet& truth, int target, const FitResult& fit,
                                 const Triangulation& mesh);

struct McConfig {
  SimConfig sim;
  ModelConfig model;
  TuneGrid grid;                      // lambda1 x lambda2 for penalized modes
  std::vector<PenaltyMode> modes = {PenaltyMode::none, PenaltyMode::global,
                                    PenaltyMode::global_local};
  int threads = 0;                    // 0 = hardware concurrency
  bool compute_ise = true;
  int ise_resolution = 101;
};

/// Per-replicate outcomes of one mode.
struct McReplicate {
  int replicate = -1;
  double mafe = 0.0;
  double msfe = 0.0;
  Eigen::Vector4d ise_by_kind;  // self, shape1, shape2, shape3 (mean over pairs)
  SelectionCounts selection;
  bool failed = false;
  std::string failure;
};

struct McModeResult {
  PenaltyMode mode;
  std::vector<McReplicate> replicates;

  double mean(const std::function<double(const McReplicate&)>& f) const;
  double sd(const std::function<double(const McReplicate&)>& f) const;
  double median(const std::function<double(const McReplicate&)>& f) const;
};

struct McReport {
  McConfig config;
  std::vector<McModeResult> per_mode;

  std::string to_csv() const;  // header comments + mode,n,metric,mean,sd rows
};

McReport run_monte_carlo(const McConfig& config);

}  // namespace hdfts
