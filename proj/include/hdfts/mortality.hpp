#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hdfts/design.hpp"

namespace hdfts {

struct MortalityRow {
  std::string region;
  double year = 0.0;
  double age = 0.0;
  double rate = 0.0;        // deaths-based rate m
  double population = 0.0;  // exposure N
};

struct RawMortalityTable {
  std::vector<MortalityRow> rows;
};

/// Binomial-variance smoothing weight w = N * m / (1 - m) (inverse variance
/// of log m under the Taylor approximation).
double mortality_weight(double rate, double population);

struct SmoothedPanel {
  FunctionalPanel panel;  // grid rescaled to [0, 1]; values are log10 rates
  Eigen::VectorXd ages;   // original age grid
  int clamp_count = 0;    // rates clamped into (1e-8, 1 - 1e-8) before logging
};

/// Ages 0..100 in unit steps.
Eigen::VectorXd default_age_grid();

/// Weighted penalized least-squares smoothing of log10 mortality against
/// age, one curve per (region, year), evaluated on the common age grid with
/// a second-difference roughness penalty. Every (region, year) needs at
/// least 5 age observations and all regions must share the same year set.
SmoothedPanel smooth_curves(const RawMortalityTable& table, double penalty,
                            const Eigen::VectorXd& age_grid = default_age_grid());

}  // namespace hdfts
