#pragma once

#include <string>
#include <vector>

#include "hdfts/model.hpp"
#include "hdfts/mortality.hpp"
#include "hdfts/sim.hpp"

namespace hdfts {

/// Long-format panel CSV: region,time,grid_point,value. Values are written
/// with round-trip precision; rows are region-major, then time, then grid.
std::string panel_to_csv(const FunctionalPanel& panel);
FunctionalPanel panel_from_csv(const std::string& text);

/// Panel JSON: { "grid": [...], "times": [...], "regions": {name: n x M} }.
std::string panel_to_json(const FunctionalPanel& panel);
FunctionalPanel panel_from_json(const std::string& text);

FunctionalPanel read_panel_file(const std::string& path);  // dispatches on extension
void write_panel_file(const FunctionalPanel& panel, const std::string& path);

RawMortalityTable mortality_from_csv(const std::string& text);  // region,year,age,rate,population

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Application configuration (single JSON schema shared by the CLI).
struct AppConfig {
  ModelConfig model;
  SimConfig sim;
  TuneGrid grid = TuneGrid::defaults(PenaltyMode::global_local);
  std::vector<int> delta_list = {1};
  std::vector<PenaltyMode> modes = {PenaltyMode::none, PenaltyMode::global,
                                    PenaltyMode::global_local};
  double mortality_penalty = 1.0;
  int threads = 0;
  bool compute_ise = true;
};

AppConfig config_from_json(const std::string& text);
std::string config_to_json(const AppConfig& cfg);

}  // namespace hdfts
