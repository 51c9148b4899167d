#include <cmath>

#include "doctest.h"
#include "hdfts/sim.hpp"
#include "test_util.hpp"

using namespace hdfts;

TEST_SUITE("sim") {

TEST_CASE("true surface shapes") {
  const TrueSurface self{SurfaceKind::self_kernel, 0.5};
  CHECK(self(0.0, 0.0) == doctest::Approx(0.5));
  CHECK(self(1.0, 1.0) == doctest::Approx(0.5 * std::exp(-2.0)));

  const TrueSurface band{SurfaceKind::shape1, 0.3};
  CHECK(band(0.5, 0.5) > 0.0);
  CHECK(band(0.0, 0.9) == 0.0);  // outside |u-v| <= 0.4

  const TrueSurface disc{SurfaceKind::shape2, 0.3};
  CHECK(disc(0.5, 0.5) == doctest::Approx(0.3));
  CHECK(disc(0.02, 0.02) == 0.0);

  const TrueSurface half{SurfaceKind::shape3, 0.3};
  CHECK(half(0.2, 0.2) > 0.0);
  CHECK(half(0.9, 0.9) == 0.0);  // u + v > 1.2

  const TrueSurface zero{SurfaceKind::zero, 0.0};
  CHECK(zero(0.4, 0.4) == 0.0);
  CHECK(zero.is_zero());
}

TEST_CASE("default assignment covers self, shapes, and zeros") {
  SimConfig sim;  // S = 7
  const auto surfaces = sim.surfaces();
  for (int s = 0; s < 7; ++s) {
    CHECK(surfaces.at(s, s).kind == SurfaceKind::self_kernel);
    CHECK(surfaces.at(s, (s + 1) % 7).kind == SurfaceKind::shape1);
    CHECK(surfaces.at(s, (s + 2) % 7).kind == SurfaceKind::shape2);
    CHECK(surfaces.at(s, (s + 3) % 7).kind == SurfaceKind::shape3);
    int zeros = 0;
    for (int g = 0; g < 7; ++g) zeros += surfaces.at(s, g).is_zero() ? 1 : 0;
    CHECK(zeros == 3);
  }
}

TEST_CASE("mask rasterization marks centroid-zero triangles") {
  SimConfig sim;
  const auto surfaces = sim.surfaces();
  const auto mesh = hdtest::unit_mesh(3, 3);
  const auto nz = surfaces.nonzero_triangles(0, 1, *mesh);  // shape1 band
  int on = 0;
  for (int l = 0; l < mesh->num_triangles(); ++l) {
    const auto v = mesh->triangle_vertices(l);
    const double cu = (v[0].u + v[1].u + v[2].u) / 3;
    const double cv = (v[0].v + v[1].v + v[2].v) / 3;
    CHECK(nz[static_cast<std::size_t>(l)] == (std::abs(cu - cv) <= 0.4));
    on += nz[static_cast<std::size_t>(l)] ? 1 : 0;
  }
  CHECK(on > 0);
  CHECK(on < mesh->num_triangles());
}

TEST_CASE("gen_far1") {
  SUBCASE("zero kernel gives white noise in time") {
    SimConfig sim;
    sim.S = 1;
    sim.n = 500;
    sim.M = 12;
    sim.c_s = Eigen::VectorXd::Zero(1);
    const auto x = gen_far1(sim, 0, 99);
    // Pointwise lag-1 autocorrelation close to zero.
    for (int m = 0; m < sim.M; m += 3) {
      const auto col = x.col(m);
      const double mean = col.mean();
      double num = 0.0, den = 0.0;
      for (int t = 0; t + 1 < sim.n; ++t) {
        num += (col[t] - mean) * (col[t + 1] - mean);
      }
      for (int t = 0; t < sim.n; ++t) den += (col[t] - mean) * (col[t] - mean);
      CHECK(std::abs(num / den) < 0.1);
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    SimConfig sim;
    sim.S = 2;
    sim.n = 50;
    sim.M = 10;
    const auto a = gen_far1(sim, 1, 12345);
    const auto b = gen_far1(sim, 1, 12345);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const auto c = gen_far1(sim, 1, 54321);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("self-kernel operator norm stays below one for all C <= 1") {
    // Direct SVD of the trapezoid-discretized kernel at C = 1.
    const int M = 80;
    Eigen::VectorXd grid(M), w(M);
    for (int m = 0; m < M; ++m) grid[m] = static_cast<double>(m) / (M - 1);
    w = trapezoid_weights(grid);
    Eigen::MatrixXd k(M, M);
    for (int m = 0; m < M; ++m) {
      for (int mp = 0; mp < M; ++mp) {
        k(m, mp) = std::exp(-0.5 * (grid[mp] + grid[m]) * (grid[mp] + grid[m])) * w[mp];
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k);
    CHECK(svd.singularValues()[0] < 1.0);
  }
}

TEST_CASE("gen_panel") {
  SUBCASE("all-zero surfaces give centered noise") {
    SimConfig sim;
    sim.S = 2;
    sim.n = 400;
    sim.M = 10;
    TrueSurfaceSet truth;
    truth.S = 2;
    truth.entries.assign(4, TrueSurface{});
    auto [panel, t] = gen_panel(sim, 31, &truth);
    for (int s = 0; s < 2; ++s) {
      const double mean = panel.values[static_cast<std::size_t>(s)].mean();
      const double se = sim.eps_sd / std::sqrt(double(sim.n) * sim.M);
      CHECK(std::abs(mean) < 3.0 * se);
    }
  }
  SUBCASE("diagonal-only truth reproduces gen_far1 exactly") {
    SimConfig sim;
    sim.S = 3;
    sim.n = 60;
    sim.M = 14;
    sim.eps_sd = sim.omega_sd;  // matched innovation scales
    TrueSurfaceSet truth;
    truth.S = 3;
    truth.entries.assign(9, TrueSurface{});
    for (int s = 0; s < 3; ++s) truth.at(s, s) = {SurfaceKind::self_kernel, sim.self_c(s)};
    auto [panel, t] = gen_panel(sim, 777, &truth);
    for (int s = 0; s < 3; ++s) {
      const auto far = gen_far1(sim, s, 777);
      CHECK((panel.values[static_cast<std::size_t>(s)] - far).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("default config uses seven predictors and passes the guard") {
    SimConfig sim;
    CHECK(sim.S == 7);
    CHECK_NOTHROW(sim.validate());
    const double norm = sim.composite_operator_norm();
    CHECK(norm < 1.0);
    CHECK(norm > 0.0);
  }
  SUBCASE("C_s outside [0,1] fails validation") {
    SimConfig sim;
    sim.c_s = Eigen::VectorXd::Constant(7, 1.4);
    CHECK_THROWS_AS(sim.validate(), error);
  }
}

TEST_CASE("monte carlo runner basics") {
  McConfig mc;
  mc.sim.S = 4;
  mc.sim.n = 40;
  mc.sim.M = 12;
  mc.sim.replicates = 2;
  mc.model.mesh_rows = 2;
  mc.model.mesh_cols = 2;
  mc.model.degree = 2;
  mc.grid.lambda1 = {1e-3, 1e-1};
  mc.grid.lambda2 = {1e-3};
  mc.modes = {PenaltyMode::none, PenaltyMode::global_local};
  mc.compute_ise = true;
  mc.ise_resolution = 41;
  mc.threads = 2;

  const auto report = run_monte_carlo(mc);
  REQUIRE(report.per_mode.size() == 2);
  for (const auto& mode : report.per_mode) {
    REQUIRE(mode.replicates.size() == 2);
    for (const auto& rep : mode.replicates) {
      CHECK_FALSE(rep.failed);
      CHECK(rep.mafe > 0.0);
      CHECK(rep.msfe > 0.0);
    }
  }

  SUBCASE("csv layout: one row per mode and metric") {
    const auto csv = report.to_csv();
    int lines = 0;
    for (char c : csv) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 4 + 2 * 10);  // header block + |modes| * metrics
  }
  SUBCASE("thread count does not change results") {
    McConfig mc1 = mc;
    mc1.threads = 1;
    const auto again = run_monte_carlo(mc1);
    CHECK(again.to_csv() == report.to_csv());
  }
}

}  // TEST_SUITE
