#include <cmath>

#include "doctest.h"
#include "hdfts/mortality.hpp"
#include "test_util.hpp"

using namespace hdfts;

namespace {

/// Synthetic table with log10 m = a + b * age (Gompertz-style line).
RawMortalityTable synthetic_table(int regions, int years, int ages, double noise_sd,
                                  std::uint64_t seed) {
  RawMortalityTable t;
  std::mt19937_64 gen(seed);
  for (int r = 0; r < regions; ++r) {
    for (int y = 0; y < years; ++y) {
      const double a = -4.0 + 0.02 * y + 0.1 * r;
      const double b = 2.5 / 100.0;
      for (int age = 0; age < ages; ++age) {
        const double log_m = a + b * age + noise_sd * standard_normal(gen);
        t.rows.push_back({"pref" + std::to_string(r), 1990.0 + y, double(age),
                          std::pow(10.0, log_m), 1e5});
      }
    }
  }
  return t;
}

}  // namespace

TEST_SUITE("mortality") {

TEST_CASE("inverse-variance weight formula") {
  CHECK(mortality_weight(0.5, 300) == doctest::Approx(300.0).epsilon(1e-14));
  CHECK(mortality_weight(0.1, 1000) == doctest::Approx(1000.0 * 0.1 / 0.9).epsilon(1e-14));
}

TEST_CASE("zero penalty interpolates on-grid data") {
  Eigen::VectorXd ages(11);
  for (int i = 0; i <= 10; ++i) ages[i] = 10.0 * i;
  RawMortalityTable t;
  std::mt19937_64 gen(4);
  std::vector<double> logm(11);
  for (int i = 0; i <= 10; ++i) {
    logm[static_cast<std::size_t>(i)] = -3.5 + 0.02 * i + 0.3 * uniform01(gen);
    t.rows.push_back({"r", 2000.0, ages[i], std::pow(10.0, logm[static_cast<std::size_t>(i)]), 5e4});
  }
  const auto out = smooth_curves(t, 0.0, ages);
  for (int i = 0; i <= 10; ++i) {
    CHECK(std::abs(out.panel.values[0](0, i) - logm[static_cast<std::size_t>(i)]) < 1e-6);
  }
  CHECK(out.clamp_count == 0);
}

TEST_CASE("noiseless log-linear mortality is recovered at moderate penalty") {
  // Affine curves lie in the null space of the second-difference penalty,
  // so any penalty level reproduces them.
  Eigen::VectorXd ages(21);
  for (int i = 0; i <= 20; ++i) ages[i] = 5.0 * i;
  RawMortalityTable t;
  const double a = -4.2, b = 0.025;
  for (int i = 0; i <= 20; ++i) {
    t.rows.push_back({"r", 2001.0, ages[i], std::pow(10.0, a + b * ages[i]), 2e5});
  }
  const auto out = smooth_curves(t, 10.0, ages);
  for (int i = 0; i <= 20; ++i) {
    CHECK(std::abs(out.panel.values[0](0, i) - (a + b * ages[i])) < 1e-3);
  }
}

TEST_CASE("rates at or beyond the unit interval are clamped and counted") {
  Eigen::VectorXd ages(6);
  ages << 0, 1, 2, 3, 4, 5;
  RawMortalityTable t;
  t.rows.push_back({"r", 2000, 0, 0.0, 100});   // clamped up
  t.rows.push_back({"r", 2000, 1, 0.01, 100});
  t.rows.push_back({"r", 2000, 2, 0.02, 100});
  t.rows.push_back({"r", 2000, 3, 1.2, 100});   // clamped down
  t.rows.push_back({"r", 2000, 4, 0.05, 100});
  t.rows.push_back({"r", 2000, 5, 0.08, 100});
  const auto out = smooth_curves(t, 1.0, ages);
  CHECK(out.clamp_count == 2);
  CHECK(out.panel.values[0].allFinite());
}

TEST_CASE("too few ages are rejected with identifiers") {
  RawMortalityTable t;
  for (int age = 0; age < 4; ++age) {
    t.rows.push_back({"tiny", 1999, double(age), 0.01, 100});
  }
  try {
    smooth_curves(t, 1.0);
    FAIL("expected rejection");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("tiny") != std::string::npos);
    CHECK(std::string(e.what()).find("1999") != std::string::npos);
  }
}

TEST_CASE("mismatched year coverage across regions is rejected") {
  auto t = synthetic_table(2, 3, 30, 0.0, 8);
  t.rows.push_back({"pref0", 2030.0, 10.0, 0.01, 100});  // extra year in one region
  CHECK_THROWS_AS(smooth_curves(t, 1.0, [] {
                    Eigen::VectorXd a(30);
                    for (int i = 0; i < 30; ++i) a[i] = i;
                    return a;
                  }()),
                  error);
}

TEST_CASE("smoothed panel is rectangular and rescaled to the unit interval") {
  const auto t = synthetic_table(3, 8, 40, 0.02, 15);
  Eigen::VectorXd ages(40);
  for (int i = 0; i < 40; ++i) ages[i] = i;
  const auto out = smooth_curves(t, 1.0, ages);
  CHECK(out.panel.num_regions() == 3);
  CHECK(out.panel.num_times() == 8);
  CHECK(out.panel.num_grid() == 40);
  CHECK(out.panel.grid[0] == 0.0);
  CHECK(out.panel.grid[39] == 1.0);
  CHECK_NOTHROW(out.panel.validate());
}

}  // TEST_SUITE
