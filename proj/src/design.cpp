#include "hdfts/design.hpp"

#include <algorithm>
#include <cmath>

namespace hdfts {

void FunctionalPanel::validate() const {
  if (num_grid() < 2) throw error(errc::invalid_config, "panel: grid needs at least 2 points");
  for (int m = 1; m < num_grid(); ++m) {
    if (!(grid[m] > grid[m - 1])) {
      throw error(errc::invalid_config, "panel: grid must be strictly increasing");
    }
  }
  if (values.empty()) throw error(errc::invalid_config, "panel: no regions");
  if (regions.size() != values.size()) {
    throw error(errc::invalid_config, "panel: region label count mismatch");
  }
  const int n = num_times();
  if (static_cast<int>(times.size()) != n) {
    throw error(errc::invalid_config, "panel: time label count mismatch");
  }
  for (const auto& mat : values) {
    if (mat.rows() != n || mat.cols() != grid.size()) {
      throw error(errc::invalid_config, "panel: value matrix shape mismatch");
    }
    if (!mat.allFinite()) {
      throw error(errc::invalid_config, "panel: missing or non-finite values");
    }
  }
}

FunctionalPanel FunctionalPanel::head(int n_keep) const {
  FunctionalPanel out;
  out.grid = grid;
  out.regions = regions;
  out.times.assign(times.begin(), times.begin() + n_keep);
  out.values.reserve(values.size());
  for (const auto& mat : values) out.values.push_back(mat.topRows(n_keep));
  return out;
}

std::pair<FunctionalPanel, StandardizeTransform> standardize(const FunctionalPanel& panel) {
  panel.validate();
  const int S = panel.num_regions();
  const int M = panel.num_grid();
  FunctionalPanel out = panel;
  StandardizeTransform tf;
  tf.means.resize(S, M);
  tf.scales.resize(S);
  tf.zero_variance.assign(static_cast<std::size_t>(S), false);
  for (int s = 0; s < S; ++s) {
    tf.means.row(s) = panel.values[static_cast<std::size_t>(s)].colwise().mean();
    Eigen::MatrixXd centered =
        panel.values[static_cast<std::size_t>(s)].rowwise() - tf.means.row(s);
    const double ss = centered.squaredNorm() / static_cast<double>(centered.size());
    if (ss > 0.0) {
      tf.scales[s] = std::sqrt(ss);
    } else {
      tf.scales[s] = 1.0;
      tf.zero_variance[static_cast<std::size_t>(s)] = true;
    }
    out.values[static_cast<std::size_t>(s)] = centered / tf.scales[s];
  }
  return {std::move(out), std::move(tf)};
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
  const Eigen::Index m = grid.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    const double h = 0.5 * (grid[i + 1] - grid[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

namespace {

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 + x);
    weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

/// One quadrature subinterval of a u-slice at fixed v, owned by a single
/// triangle. The curve is the piecewise-linear interpolant of the grid
/// values (the trapezoidal data treatment); the basis factor is integrated
/// exactly against it with a Gauss rule of degree d+1, so entries are exact
/// whenever the curve is piecewise linear on the grid.
struct SliceInterval {
  int tri = 0;
  Eigen::MatrixXd basis_weighted;  // nodes x Q, premultiplied by length * weight
  std::vector<int> idx;            // lower grid index per node
  Eigen::VectorXd w_lo;            // linear interpolation weight per node
};

struct InterpWeight {
  int idx;
  double w;
};

InterpWeight interp_weight(const Eigen::VectorXd& grid, double u) {
  const Eigen::Index m = grid.size();
  if (u <= grid[0]) return {0, 1.0};
  if (u >= grid[m - 1]) return {static_cast<int>(m - 2), 0.0};
  Eigen::Index hi = std::upper_bound(grid.data(), grid.data() + m, u) - grid.data();
  const Eigen::Index lo = hi - 1;
  return {static_cast<int>(lo), (grid[hi] - u) / (grid[hi] - grid[lo])};
}

/// Quadrature layout for all grid heights v_m, reusable across curves.
std::vector<std::vector<SliceInterval>> build_slice_table(const BasisSpec& spec,
                                                          const Eigen::VectorXd& grid,
                                                          const Eigen::VectorXd& heights) {
  const auto& mesh = spec.mesh();
  const auto& dom = mesh.domain();
  const double u_min = std::max(dom.u_lo, grid[0]);
  const double u_max = std::min(dom.u_hi, grid[grid.size() - 1]);
  const double tol = 1e-12 * std::max(1.0, dom.width());
  const int n_gauss = (spec.degree() + 3) / 2;  // exact through degree d+1
  std::vector<double> gl_nodes, gl_weights;
  gauss_legendre_01(n_gauss, gl_nodes, gl_weights);

  std::vector<std::vector<SliceInterval>> table(static_cast<std::size_t>(heights.size()));
  std::vector<double> nodes;
  for (Eigen::Index hm = 0; hm < heights.size(); ++hm) {
    const double v = heights[hm];
    if (v < dom.v_lo - 1e-12 || v > dom.v_hi + 1e-12) continue;

    nodes.clear();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (grid[i] >= u_min - tol && grid[i] <= u_max + tol) nodes.push_back(grid[i]);
    }
    // Slice boundaries: intersections of triangle edges with the line at v.
    for (int l = 0; l < mesh.num_triangles(); ++l) {
      const auto tv = mesh.triangle_vertices(l);
      for (int e = 0; e < 3; ++e) {
        const Point p = tv[static_cast<std::size_t>(e)];
        const Point q = tv[static_cast<std::size_t>((e + 1) % 3)];
        if (std::abs(p.v - v) <= tol) nodes.push_back(p.u);
        if ((p.v - v) * (q.v - v) < 0.0) {
          nodes.push_back(p.u + (v - p.v) * (q.u - p.u) / (q.v - p.v));
        }
      }
    }
    std::sort(nodes.begin(), nodes.end());
    auto& intervals = table[static_cast<std::size_t>(hm)];
    double prev = u_min;
    for (double u : nodes) {
      const double a = std::clamp(prev, u_min, u_max);
      const double b = std::clamp(u, u_min, u_max);
      prev = std::max(prev, u);
      if (b - a <= tol) continue;
      int tri;
      try {
        tri = mesh.locate({0.5 * (a + b), v});
      } catch (const error&) {
        continue;  // interval not covered by the mesh
      }
      SliceInterval iv;
      iv.tri = tri;
      iv.basis_weighted.resize(n_gauss, spec.q_per_triangle());
      iv.w_lo.resize(n_gauss);
      iv.idx.resize(static_cast<std::size_t>(n_gauss));
      for (int k = 0; k < n_gauss; ++k) {
        const double u_k = a + (b - a) * gl_nodes[static_cast<std::size_t>(k)];
        iv.basis_weighted.row(k) = ((b - a) * gl_weights[static_cast<std::size_t>(k)]) *
                                   eval_basis(spec, tri, {u_k, v}).transpose();
        const auto w = interp_weight(grid, u_k);
        iv.idx[static_cast<std::size_t>(k)] = w.idx;
        iv.w_lo[k] = w.w;
      }
      intervals.push_back(std::move(iv));
    }
  }
  return table;
}

void accumulate_row(const std::vector<SliceInterval>& intervals, int q_per_tri,
                    const Eigen::VectorXd& curve, Eigen::RowVectorXd& row) {
  for (const auto& iv : intervals) {
    Eigen::VectorXd x(iv.w_lo.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const int lo = iv.idx[static_cast<std::size_t>(k)];
      x[k] = iv.w_lo[k] * curve[lo] + (1.0 - iv.w_lo[k]) * curve[lo + 1];
    }
    row.segment(static_cast<Eigen::Index>(iv.tri) * q_per_tri, q_per_tri) +=
        (iv.basis_weighted.transpose() * x).transpose();
  }
}

}  // namespace

Eigen::VectorXd integrate_basis_against_curve(const BasisSpec& spec, const Eigen::VectorXd& grid,
                                              const Eigen::VectorXd& curve, double v) {
  if (grid.size() != curve.size()) {
    throw error(errc::grid_mismatch, "integrate_basis_against_curve: grid/curve length mismatch");
  }
  Eigen::VectorXd heights(1);
  heights[0] = v;
  const auto table = build_slice_table(spec, grid, heights);
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(spec.dimension());
  accumulate_row(table[0], spec.q_per_triangle(), curve, row);
  return row.transpose();
}

Eigen::MatrixXd design_rows_for_curve(const BasisSpec& spec, const Eigen::VectorXd& grid,
                                      const Eigen::VectorXd& curve) {
  if (grid.size() != curve.size()) {
    throw error(errc::grid_mismatch, "design_rows_for_curve: grid/curve length mismatch");
  }
  const auto table = build_slice_table(spec, grid, grid);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(grid.size(), spec.dimension());
  Eigen::RowVectorXd row(spec.dimension());
  for (Eigen::Index m = 0; m < grid.size(); ++m) {
    row.setZero();
    accumulate_row(table[static_cast<std::size_t>(m)], spec.q_per_triangle(), curve, row);
    rows.row(m) = row;
  }
  return rows;
}

namespace {

/// Fills the (n - delta) * M design rows for one predictor. Rows are scaled
/// by 1/sqrt(M) to match the Riemann factor of the squared-loss objective.
void fill_predictor_block(const FunctionalPanel& panel, int predictor, int delta,
                          const BasisSpec& spec,
                          const std::vector<std::vector<SliceInterval>>& table,
                          Eigen::Ref<Eigen::MatrixXd> block) {
  const int n = panel.num_times();
  const int M = panel.num_grid();
  const int q_per_tri = spec.q_per_triangle();
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  const auto& mat = panel.values[static_cast<std::size_t>(predictor)];
  block.setZero();
  Eigen::VectorXd curve(M);
  Eigen::RowVectorXd row(spec.dimension());
  for (int t = delta; t < n; ++t) {
    curve = mat.row(t - delta).transpose();
    for (int m = 0; m < M; ++m) {
      row.setZero();
      accumulate_row(table[static_cast<std::size_t>(m)], q_per_tri, curve, row);
      block.row(static_cast<Eigen::Index>(m) * (n - delta) + (t - delta)) = scale * row;
    }
  }
}

Eigen::VectorXd response_vector(const FunctionalPanel& panel, int target, int delta) {
  const int n = panel.num_times();
  const int M = panel.num_grid();
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  const auto& mat = panel.values[static_cast<std::size_t>(target)];
  Eigen::VectorXd y(static_cast<Eigen::Index>(n - delta) * M);
  for (int m = 0; m < M; ++m) {
    for (int t = delta; t < n; ++t) {
      y[static_cast<Eigen::Index>(m) * (n - delta) + (t - delta)] = scale * mat(t, m);
    }
  }
  return y;
}

}  // namespace

DesignSystem assemble(const FunctionalPanel& panel, int target, int delta, const BasisSpec& spec,
                      double lambda2, int continuity_order, double constraint_weight) {
  panel.validate();
  const int n = panel.num_times();
  const int S = panel.num_regions();
  if (delta < 1) throw error(errc::invalid_config, "assemble: delta must be >= 1");
  if (n <= delta) throw error(errc::insufficient_data, "assemble: need more than delta time points");
  if (target < 0 || target >= S) throw error(errc::invalid_config, "assemble: bad target index");
  if (lambda2 < 0.0) throw error(errc::invalid_config, "assemble: lambda2 must be >= 0");

  const int M = panel.num_grid();
  const int p = spec.dimension();
  const auto table = build_slice_table(spec, panel.grid, panel.grid);

  DesignSystem sys;
  sys.spec = spec;
  sys.num_predictors = S;
  sys.lambda2 = lambda2;
  sys.psi.resize(static_cast<Eigen::Index>(n - delta) * M, static_cast<Eigen::Index>(S) * p);
  for (int g = 0; g < S; ++g) {
    fill_predictor_block(panel, g, delta, spec, table,
                         sys.psi.middleCols(static_cast<Eigen::Index>(g) * p, p));
  }
  sys.y = response_vector(panel, target, delta);

  const Eigen::MatrixXd h0 = constraint_weight * smoothness_matrix(spec, continuity_order);
  const Eigen::MatrixXd r0 = roughness_matrix(spec);
  sys.H = Eigen::MatrixXd::Zero(h0.rows() * S, static_cast<Eigen::Index>(S) * p);
  sys.R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S) * p, static_cast<Eigen::Index>(S) * p);
  for (int g = 0; g < S; ++g) {
    sys.H.block(h0.rows() * g, static_cast<Eigen::Index>(g) * p, h0.rows(), p) = h0;
    sys.R.block(static_cast<Eigen::Index>(g) * p, static_cast<Eigen::Index>(g) * p, p, p) = r0;
  }
  return sys;
}

Eigen::MatrixXd DesignSystem::psi_star() const {
  const Eigen::Index p = psi.cols();
  const Eigen::Index r_rows = lambda2 > 0.0 ? p : 0;
  Eigen::MatrixXd out(psi.rows() + H.rows() + r_rows, p);
  out.topRows(psi.rows()) = psi;
  out.middleRows(psi.rows(), H.rows()) = H;
  if (r_rows > 0) out.bottomRows(r_rows) = std::sqrt(lambda2) * psd_sqrt(R);
  return out;
}

Eigen::VectorXd DesignSystem::y_star() const {
  const Eigen::Index r_rows = lambda2 > 0.0 ? psi.cols() : 0;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(psi.rows() + H.rows() + r_rows);
  out.head(y.size()) = y;
  return out;
}

DesignContext build_design_context(const FunctionalPanel& panel, const BasisSpec& spec, int delta,
                                   int continuity_order, double constraint_weight) {
  panel.validate();
  const int n = panel.num_times();
  const int S = panel.num_regions();
  if (delta < 1) throw error(errc::invalid_config, "design context: delta must be >= 1");
  if (n <= delta) {
    throw error(errc::insufficient_data, "design context: need more than delta time points");
  }
  const int M = panel.num_grid();
  const int p = spec.dimension();
  const Eigen::Index rows = static_cast<Eigen::Index>(n - delta) * M;
  const Eigen::Index P = static_cast<Eigen::Index>(S) * p;

  DesignContext ctx;
  ctx.spec = spec;
  ctx.delta = delta;
  ctx.num_predictors = S;
  ctx.block_dim = p;
  ctx.n_rows = static_cast<int>(rows);

  const auto table = build_slice_table(spec, panel.grid, panel.grid);
  Eigen::MatrixXd psi(rows, P);
  for (int g = 0; g < S; ++g) {
    fill_predictor_block(panel, g, delta, spec, table,
                         psi.middleCols(static_cast<Eigen::Index>(g) * p, p));
  }
  Eigen::MatrixXd ys(rows, S);
  ctx.y_norm2.resize(S);
  for (int s = 0; s < S; ++s) {
    ys.col(s) = response_vector(panel, s, delta);
    ctx.y_norm2[s] = ys.col(s).squaredNorm();
  }
  ctx.gram = Eigen::MatrixXd::Zero(P, P);
  ctx.gram.selfadjointView<Eigen::Lower>().rankUpdate(psi.transpose());
  ctx.gram.triangularView<Eigen::Upper>() = ctx.gram.transpose();
  ctx.b = psi.transpose() * ys;

  ctx.h0 = constraint_weight * smoothness_matrix(spec, continuity_order);
  ctx.h0_gram = Eigen::MatrixXd::Zero(p, p);
  ctx.h0_gram.selfadjointView<Eigen::Lower>().rankUpdate(ctx.h0.transpose());
  ctx.h0_gram.triangularView<Eigen::Upper>() = ctx.h0_gram.transpose();
  ctx.r0 = roughness_matrix(spec);
  return ctx;
}

}  // namespace hdfts
