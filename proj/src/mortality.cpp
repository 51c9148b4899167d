#include "hdfts/mortality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hdfts {

Eigen::VectorXd default_age_grid() {
  Eigen::VectorXd ages(101);
  for (int i = 0; i <= 100; ++i) ages[i] = i;
  return ages;
}

double mortality_weight(double rate, double population) {
  return population * rate / (1.0 - rate);
}

namespace {

int nearest_grid_index(const Eigen::VectorXd& grid, double x) {
  int best = 0;
  for (int i = 1; i < grid.size(); ++i) {
    if (std::abs(grid[i] - x) < std::abs(grid[best] - x)) best = i;
  }
  return best;
}

}  // namespace

SmoothedPanel smooth_curves(const RawMortalityTable& table, double penalty,
                            const Eigen::VectorXd& age_grid) {
  if (penalty < 0.0) throw error(errc::invalid_config, "smooth_curves: penalty must be >= 0");
  if (age_grid.size() < 3) throw error(errc::invalid_config, "smooth_curves: age grid too small");
  const int M = static_cast<int>(age_grid.size());

  // Group observations per (region, year), preserving region first-appearance
  // order.
  std::vector<std::string> regions;
  std::map<std::string, std::map<double, std::vector<const MortalityRow*>>> grouped;
  for (const auto& row : table.rows) {
    if (row.population <= 0.0) {
      throw error(errc::invalid_config, "smooth_curves: nonpositive population for region " +
                                            row.region);
    }
    if (!grouped.count(row.region)) regions.push_back(row.region);
    grouped[row.region][row.year].push_back(&row);
  }
  if (regions.empty()) throw error(errc::insufficient_data, "smooth_curves: empty table");

  // All regions need the same year set for a rectangular panel.
  std::set<double> years_set;
  for (const auto& [year, rows] : grouped[regions.front()]) years_set.insert(year);
  for (const auto& region : regions) {
    std::set<double> ys;
    for (const auto& [year, rows] : grouped[region]) ys.insert(year);
    if (ys != years_set) {
      throw error(errc::insufficient_data,
                  "smooth_curves: region " + region + " is missing years present elsewhere");
    }
  }
  const std::vector<double> years(years_set.begin(), years_set.end());

  // Second-difference penalty matrix on the age grid.
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(M - 2, M);
  for (int i = 0; i < M - 2; ++i) {
    d2(i, i) = 1.0;
    d2(i, i + 1) = -2.0;
    d2(i, i + 2) = 1.0;
  }
  const Eigen::MatrixXd pen = d2.transpose() * d2;

  SmoothedPanel out;
  out.ages = age_grid;
  out.panel.regions = regions;
  out.panel.times = years;
  // Internal grid rescaled to [0, 1] so the mesh domain is fixed.
  out.panel.grid = (age_grid.array() - age_grid[0]) / (age_grid[M - 1] - age_grid[0]);
  out.panel.values.assign(regions.size(),
                          Eigen::MatrixXd(static_cast<Eigen::Index>(years.size()), M));

  for (std::size_t ri = 0; ri < regions.size(); ++ri) {
    for (std::size_t yi = 0; yi < years.size(); ++yi) {
      const auto& obs = grouped[regions[ri]][years[yi]];
      if (static_cast<int>(obs.size()) < 5) {
        throw error(errc::insufficient_data,
                    "smooth_curves: region " + regions[ri] + " year " +
                        std::to_string(years[yi]) + " has fewer than 5 age observations");
      }
      Eigen::MatrixXd ata = penalty * pen;
      // Tiny ridge floor keeps the system solvable at penalty = 0 with
      // unobserved grid ages.
      double wsum = 0.0;
      Eigen::VectorXd aty = Eigen::VectorXd::Zero(M);
      for (const auto* row : obs) {
        const double m = std::clamp(row->rate, 1e-8, 1.0 - 1e-8);
        if (m != row->rate) ++out.clamp_count;
        const double y = std::log10(m);
        const double w = mortality_weight(m, row->population);
        wsum += w;
        // Observation mapped onto the two bracketing grid ages.
        if (row->age <= age_grid[0] || row->age >= age_grid[M - 1]) {
          const int idx = nearest_grid_index(age_grid, row->age);
          ata(idx, idx) += w;
          aty[idx] += w * y;
        } else {
          const int hi = static_cast<int>(
              std::upper_bound(age_grid.data(), age_grid.data() + M, row->age) - age_grid.data());
          const int lo = hi - 1;
          const double a = (age_grid[hi] - row->age) / (age_grid[hi] - age_grid[lo]);
          ata(lo, lo) += w * a * a;
          ata(lo, hi) += w * a * (1.0 - a);
          ata(hi, lo) += w * a * (1.0 - a);
          ata(hi, hi) += w * (1.0 - a) * (1.0 - a);
          aty[lo] += w * a * y;
          aty[hi] += w * (1.0 - a) * y;
        }
      }
      ata.diagonal().array() += 1e-12 * std::max(1.0, wsum);
      out.panel.values[ri].row(static_cast<Eigen::Index>(yi)) =
          ata.ldlt().solve(aty).transpose();
    }
  }
  out.panel.validate();
  return out;
}

}  // namespace hdfts
