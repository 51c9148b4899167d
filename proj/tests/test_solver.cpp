#include <cmath>

#include "doctest.h"
#include "hdfts/sim.hpp"
#include "hdfts/solver.hpp"
#include "test_util.hpp"

using namespace hdfts;

namespace {

void check_monotone_trace(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] + 1e-10);
  }
}

/// Golden-section minimizer on [lo, hi].
double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  while (b - a > tol) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - phi * (b - a);
    d = a + phi * (b - a);
  }
  return 0.5 * (a + b);
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& gen) {
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return standard_normal(gen); });
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("tau") {
  CHECK(tau(0.0, 0.5) == 0.0);
  CHECK(tau(1.0, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  SUBCASE("matches an extended-precision evaluation") {
    const long double l1 = 2.0L, nu = 0.3L;
    const long double expect =
        powl(l1 * powl(nu, nu) * powl(1.0L - nu, 1.0L - nu), 1.0L / (1.0L - nu));
    CHECK(std::abs(tau(2.0, 0.3) - static_cast<double>(expect)) < 1e-14);
  }
  CHECK_THROWS_AS(tau(1.0, 0.0), error);
  CHECK_THROWS_AS(tau(1.0, 1.0), error);
  CHECK_THROWS_AS(tau(-1.0, 0.5), error);
}

TEST_CASE("theta update") {
  CHECK(theta_update(0.0, 1.0, 0.5, 0.25) == 0.0);
  CHECK(theta_update(1.0, 1.0, 0.5, 0.25) == doctest::Approx(2.0).epsilon(1e-14));

  SUBCASE("closed form is the argmin (grid search oracle)") {
    const double c = 1.0, nu = 0.5, tau_v = 0.25, norm = 1.0;
    const auto objective = [&](double th) {
      return std::pow(th, 1.0 - 1.0 / nu) * std::pow(c, 1.0 / nu) * norm + tau_v * th;
    };
    double best = 1e-3, best_val = objective(best);
    for (int i = 1; i <= 100000; ++i) {
      const double th = 100.0 * i / 100000.0;
      if (objective(th) < best_val) {
        best_val = objective(th);
        best = th;
      }
    }
    CHECK(std::abs(best - theta_update(norm, c, nu, tau_v)) < 1e-3);
    CHECK(objective(theta_update(norm, c, nu, tau_v)) <= best_val + 1e-12);
  }
  SUBCASE("matches golden-section minimization on random inputs") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 25; ++trial) {
      const double norm = 0.05 + 3.0 * uniform01(gen);
      const double c = 0.2 + 2.0 * uniform01(gen);
      const double nu = 0.1 + 0.8 * uniform01(gen);
      const double tau_v = 0.01 + uniform01(gen);
      const auto objective = [&](double th) {
        return std::pow(th, 1.0 - 1.0 / nu) * std::pow(c, 1.0 / nu) * norm + tau_v * th;
      };
      const double closed = theta_update(norm, c, nu, tau_v);
      const double numeric = golden_min(objective, 1e-9, std::max(10.0, 4.0 * closed), 1e-9);
      CHECK(std::abs(closed - numeric) < 1e-6 * std::max(1.0, closed));
    }
  }
  SUBCASE("tau = 0 with a nonzero group is inconsistent") {
    CHECK_THROWS_AS(theta_update(1.0, 1.0, 0.5, 0.0), error);
  }
}

TEST_CASE("weighted lasso") {
  std::mt19937_64 gen(101);

  SUBCASE("overwhelming penalty zeroes everything") {
    const Eigen::MatrixXd x = random_matrix(30, 8, gen);
    const Eigen::VectorXd y = random_matrix(30, 1, gen);
    const auto res = weighted_lasso(x, y, Eigen::VectorXd::Constant(8, 1e12),
                                    Eigen::VectorXd::Zero(8), 1e-8, 1000);
    CHECK(res.gamma.cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.converged);
  }
  SUBCASE("zero weights with roughness rows match the ridge closed form") {
    const auto spec = hdtest::unit_spec(1, 1, 2);
    const int p = spec.dimension();
    const Eigen::MatrixXd psi = random_matrix(60, p, gen);
    const Eigen::VectorXd y = random_matrix(60, 1, gen);
    const Eigen::MatrixXd r = roughness_matrix(spec);
    const double lambda2 = 0.3;
    Eigen::MatrixXd star(60 + p, p);
    star.topRows(60) = psi;
    star.bottomRows(p) = std::sqrt(lambda2) * psd_sqrt(r);
    Eigen::VectorXd y_star = Eigen::VectorXd::Zero(60 + p);
    y_star.head(60) = y;
    const auto res = weighted_lasso(star, y_star, Eigen::VectorXd::Zero(p),
                                    Eigen::VectorXd::Zero(p), 1e-12, 20000);
    const Eigen::VectorXd ridge =
        (psi.transpose() * psi + lambda2 * r).ldlt().solve(psi.transpose() * y);
    CHECK((res.gamma - ridge).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("orthonormal design reduces to coordinatewise soft thresholding") {
    const Eigen::MatrixXd raw = random_matrix(20, 5, gen);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(20, 5);
    const Eigen::VectorXd y = random_matrix(20, 1, gen);
    Eigen::VectorXd w(5);
    w << 0.1, 0.5, 1.0, 2.0, 4.0;
    const auto res = weighted_lasso(q, y, w, Eigen::VectorXd::Zero(5), 1e-12, 1000);
    const Eigen::VectorXd z = q.transpose() * y;
    for (int j = 0; j < 5; ++j) {
      const double expect = std::copysign(std::max(std::abs(z[j]) - w[j] / 2.0, 0.0), z[j]);
      CHECK(std::abs(res.gamma[j] - expect) < 1e-10);
    }
  }
  SUBCASE("KKT conditions hold on random problems") {
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 30 + static_cast<int>(uniform_below(gen, 50));
      const int p = 5 + static_cast<int>(uniform_below(gen, 30));
      const Eigen::MatrixXd x = random_matrix(n, p, gen);
      const Eigen::VectorXd y = random_matrix(n, 1, gen);
      Eigen::VectorXd w(p);
      for (int j = 0; j < p; ++j) w[j] = 4.0 * uniform01(gen);
      const auto res = weighted_lasso(x, y, w, Eigen::VectorXd::Zero(p), 1e-10, 50000);
      CHECK(weighted_lasso_kkt_residual(x, y, w, res.gamma) < 1e-6);
    }
  }
  SUBCASE("non-finite inputs are a numeric error") {
    Eigen::MatrixXd x = random_matrix(10, 3, gen);
    x(4, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(weighted_lasso(x, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Ones(3),
                                   Eigen::VectorXd::Zero(3), 1e-8, 10),
                    error);
  }
}

namespace {

/// Panel of iid noise curves; rough enough to make the design full rank.
FunctionalPanel noise_panel(int S, int n, int M, std::uint64_t seed) {
  FunctionalPanel p;
  p.grid.resize(M);
  for (int m = 0; m < M; ++m) p.grid[m] = static_cast<double>(m) / (M - 1);
  std::mt19937_64 gen(seed);
  for (int s = 0; s < S; ++s) {
    p.regions.push_back("r" + std::to_string(s));
    Eigen::MatrixXd mat(n, M);
    for (int t = 0; t < n; ++t) {
      for (int m = 0; m < M; ++m) mat(t, m) = standard_normal(gen);
    }
    p.values.push_back(std::move(mat));
  }
  p.times.resize(n);
  for (int t = 0; t < n; ++t) p.times[static_cast<std::size_t>(t)] = t;
  return p;
}

}  // namespace

TEST_CASE("unpenalized fit equals least squares") {
  const auto spec = hdtest::unit_spec(1, 1, 1);
  const auto panel = noise_panel(2, 40, 12, 77);
  // constraint weight zero: the augmented system is plain least squares
  const auto sys = assemble(panel, 0, 1, spec, 0.0, 0, 0.0);
  PenaltyConfig cfg;
  cfg.mode = PenaltyMode::none;
  const auto res = fit(sys, cfg);
  const Eigen::VectorXd ls = sys.psi.colPivHouseholderQr().solve(sys.y);
  CHECK((res.gamma - ls).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(res.converged);
  CHECK(static_cast<int>(res.active_predictors.size()) == 2);
}

TEST_CASE("penalized fit: descent, freezing, and theta consistency") {
  SimConfig sim;
  sim.S = 3;
  sim.n = 80;
  sim.M = 20;
  sim.eps_sd = 0.5;
  sim.shape_amplitude = 0.25;
  auto [panel, truth] = gen_panel(sim, 99);
  auto [std_panel, tf] = standardize(panel);
  const auto spec = hdtest::unit_spec(2, 2, 2);
  const auto ctx = build_design_context(std_panel, spec, 1, 0, 1.0);

  PenaltyConfig cfg;
  cfg.mode = PenaltyMode::global_local;
  cfg.lambda1 = 5e-3;
  cfg.lambda2 = 1e-3;
  FitOptions opt;
  opt.seed = 1234;
  opt.refit = false;

  const auto res = fit(ctx, 0, cfg, opt);

  SUBCASE("objective trace never increases") { check_monotone_trace(res.objective_trace); }

  SUBCASE("zeros are exact and consistent with the active sets") {
    const int p = ctx.block_dim;
    const int Q = spec.q_per_triangle();
    const int L = spec.mesh().num_triangles();
    std::vector<bool> active_pred(3, false);
    for (int g : res.active_predictors) active_pred[static_cast<std::size_t>(g)] = true;
    for (int g = 0; g < 3; ++g) {
      const Eigen::VectorXd blockv = res.gamma_selection.segment(g * p, p);
      if (!active_pred[static_cast<std::size_t>(g)]) {
        CHECK(blockv.cwiseAbs().maxCoeff() == 0.0);
        CHECK(res.theta.row(g).cwiseAbs().maxCoeff() == 0.0);
        continue;
      }
      std::vector<bool> active_tri(static_cast<std::size_t>(L), false);
      for (int l : res.active_triangles[static_cast<std::size_t>(g)]) {
        active_tri[static_cast<std::size_t>(l)] = true;
      }
      for (int l = 0; l < L; ++l) {
        const double norm = blockv.segment(l * Q, Q).cwiseAbs().sum();
        if (active_tri[static_cast<std::size_t>(l)]) {
          CHECK(norm > 0.0);
        } else {
          CHECK(norm == 0.0);
          CHECK(res.theta(g, l) == 0.0);
        }
      }
    }
  }

  SUBCASE("theta matches the closed-form update at the final coefficients") {
    const int p = ctx.block_dim;
    const int Q = spec.q_per_triangle();
    const int L = spec.mesh().num_triangles();
    const double tau_v = tau(cfg.lambda1, cfg.nu);
    for (int g = 0; g < 3; ++g) {
      const Eigen::VectorXd blockv = res.gamma_selection.segment(g * p, p);
      for (int l = 0; l < L; ++l) {
        const double expect = theta_update(blockv.segment(l * Q, Q).cwiseAbs().sum(),
                                           cfg.local_weight(l, Q), cfg.nu, tau_v);
        CHECK(std::abs(res.theta(g, l) - expect) < 1e-8);
      }
      const double expect_g = theta_update(blockv.cwiseAbs().sum(),
                                           cfg.resolved_global_weight(p), cfg.nu, tau_v);
      CHECK(std::abs(res.theta(g, L) - expect_g) < 1e-8);
    }
  }

  SUBCASE("global mode prunes fewer triangles, similar in-sample fit") {
    PenaltyConfig cfg_g = cfg;
    cfg_g.mode = PenaltyMode::global;
    FitOptions opt2 = opt;
    opt2.refit = true;
    PenaltyConfig cfg_gl = cfg;
    const auto res_g = fit(ctx, 0, cfg_g, opt2);
    const auto res_gl = fit(ctx, 0, cfg_gl, opt2);
    int tris_g = 0, tris_gl = 0;
    for (const auto& v : res_g.active_triangles) tris_g += static_cast<int>(v.size());
    for (const auto& v : res_gl.active_triangles) tris_gl += static_cast<int>(v.size());
    CHECK(tris_gl <= tris_g);

    const auto quad = [&](const FitResult& r) {
      return ctx.y_norm2[0] - 2.0 * ctx.b.col(0).dot(r.gamma) +
             r.gamma.dot(ctx.gram.selfadjointView<Eigen::Lower>() * r.gamma);
    };
    CHECK(quad(res_gl) < 1.05 * quad(res_g));
  }
}

TEST_CASE("selection consistency on a single-surface panel") {
  // Among S=3 regions only the self-surface of region 0 is nonzero; the
  // penalized fit should recover exactly that predictor almost always.
  SimConfig sim;
  sim.S = 3;
  sim.n = 200;
  sim.M = 20;
  sim.eps_sd = 0.5;
  TrueSurfaceSet truth;
  truth.S = 3;
  truth.entries.assign(9, TrueSurface{});
  truth.at(0, 0) = {SurfaceKind::self_kernel, 0.9};

  const auto spec = hdtest::unit_spec(2, 2, 2);
  PenaltyConfig cfg;
  cfg.mode = PenaltyMode::global_local;
  cfg.lambda1 = 8e-2;
  cfg.lambda2 = 1e-3;

  int exact_hits = 0;
  const int runs = 100;
  for (int rep = 0; rep < runs; ++rep) {
    auto [panel, t] = gen_panel(sim, derive_seed(4242, rep), &truth);
    auto [std_panel, tf] = standardize(panel);
    const auto ctx = build_design_context(std_panel, spec, 1, 0, 1.0);
    FitOptions opt;
    opt.seed = derive_seed(1, rep);
    const auto res = fit(ctx, 0, cfg, opt);
    if (res.active_predictors == std::vector<int>{0}) ++exact_hits;
    check_monotone_trace(res.objective_trace);
  }
  CHECK(exact_hits >= 95);
}

TEST_CASE("estimation error decays with the sample size") {
  // y = Psi gamma_star + eps with a basis-representable truth; the median
  // coefficient error must fall monotonically over n.
  const auto spec = hdtest::unit_spec(2, 2, 2);
  const int p = spec.dimension();
  const auto truth0 = interpolate(spec, [](Point q) { return 0.5 * std::exp(-(q.u + q.v)); });
  const auto truth1 = interpolate(spec, [](Point q) { return 0.3 * std::sin(3 * q.u) * q.v; });
  Eigen::VectorXd gamma_star(2 * p);
  gamma_star << truth0.gamma, truth1.gamma;

  PenaltyConfig cfg;
  cfg.mode = PenaltyMode::global_local;
  cfg.lambda1 = 1e-4;
  cfg.lambda2 = 1e-4;

  std::vector<double> medians;
  for (int n : {50, 100, 200, 500}) {
    std::vector<double> errs;
    for (int rep = 0; rep < 11; ++rep) {
      auto panel = noise_panel(2, n, 15, derive_seed(555, n, rep));
      auto sys = assemble(panel, 0, 1, spec, cfg.lambda2, 0, 1.0);
      std::mt19937_64 gen(derive_seed(777, n, rep));
      Eigen::VectorXd eps(sys.psi.rows());
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = 0.2 * standard_normal(gen);
      sys.y = sys.psi * gamma_star + eps;
      FitOptions opt;
      opt.seed = rep;
      const auto res = fit(sys, cfg, opt);
      errs.push_back((res.gamma - gamma_star).norm());
    }
    std::sort(errs.begin(), errs.end());
    medians.push_back(errs[errs.size() / 2]);
  }
  for (std::size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] < medians[i - 1]);
}

}  // TEST_SUITE
