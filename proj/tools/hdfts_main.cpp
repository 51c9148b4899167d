#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hdfts/io.hpp"
#include "hdfts/metrics.hpp"
#include "hdfts/model.hpp"
#include "hdfts/mortality.hpp"
#include "hdfts/sim.hpp"
#include "json.hpp"

namespace {

using namespace hdfts;

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;
constexpr int kExitNumeric = 5;

int exit_code_for(errc code) {
  switch (code) {
    case errc::io_error:
      return kExitIo;
    case errc::invalid_config:
    case errc::inconsistent_config:
    case errc::unsupported_smoothness:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

void print_error_json(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

AppConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return config_from_json(read_file(path));
}

FunctionalPanel load_panel(const std::string& path, const AppConfig& cfg) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    const std::string text = read_file(path);
    // Mortality tables carry 5 columns; panels carry 4.
    const auto header_end = text.find('\n');
    const std::string header = text.substr(0, header_end);
    if (header.find("population") != std::string::npos) {
      const auto table = mortality_from_csv(text);
      return smooth_curves(table, cfg.mortality_penalty).panel;
    }
  }
  return read_panel_file(path);
}

std::string forecast_csv(const HdftsModel& model, const FunctionalPanel& panel, int t) {
  std::string out = "region,time,grid_point,value\n";
  const double time_label = t < panel.num_times()
                                ? panel.times[static_cast<std::size_t>(t)]
                                : panel.times.back() + (t - panel.num_times() + 1);
  for (int s = 0; s < model.num_regions(); ++s) {
    const Eigen::VectorXd fc = forecast(model, panel, s, t);
    for (int m = 0; m < panel.num_grid(); ++m) {
      out += model.region_labels[static_cast<std::size_t>(s)] + ',' + num(time_label) + ',' +
             num(panel.grid[m]) + ',' + num(fc[m]) + '\n';
    }
  }
  return out;
}

int cmd_simulate(const std::string& config_path, int reps, long long seed, int n,
                 const std::string& out, int threads) {
  AppConfig cfg = load_config(config_path);
  if (reps > 0) cfg.sim.replicates = reps;
  if (seed >= 0) cfg.sim.base_seed = static_cast<std::uint64_t>(seed);
  if (n > 0) cfg.sim.n = n;
  McConfig mc;
  mc.sim = cfg.sim;
  mc.model = cfg.model;
  mc.grid = cfg.grid;
  mc.modes = cfg.modes;
  mc.threads = threads > 0 ? threads : cfg.threads;
  mc.compute_ise = cfg.compute_ise;
  const auto report = run_monte_carlo(mc);
  write_file(out, report.to_csv());
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_fit(const std::string& panel_path, const std::string& config_path, const std::string& out,
            int threads) {
  const AppConfig cfg = load_config(config_path);
  const auto panel = load_panel(panel_path, cfg);
  const auto model = fit_model(panel, cfg.model, threads > 0 ? threads : cfg.threads);
  write_file(out, model.to_json());
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_tune(const std::string& panel_path, const std::string& config_path, const std::string& out,
             const std::string& table_out, int threads) {
  const AppConfig cfg = load_config(config_path);
  const auto panel = load_panel(panel_path, cfg);
  const auto tuned = tune_and_fit(panel, cfg.grid, cfg.model, threads > 0 ? threads : cfg.threads);
  write_file(out, tuned.model.to_json());
  if (!table_out.empty()) {
    std::string csv = "region,lambda1,lambda2,validation_msfe,selected,test_msfe\n";
    for (int s = 0; s < tuned.model.num_regions(); ++s) {
      const auto& r = tuned.per_region[static_cast<std::size_t>(s)];
      for (const auto& cell : r.table) {
        const bool sel = cell.lambda1 == r.lambda1 && cell.lambda2 == r.lambda2;
        csv += tuned.model.region_labels[static_cast<std::size_t>(s)] + ',' + num(cell.lambda1) +
               ',' + num(cell.lambda2) + ',' + num(cell.validation_msfe) + ',' +
               (sel ? "1" : "0") + ',' + (sel ? num(r.test_msfe) : "") + '\n';
      }
    }
    write_file(table_out, csv);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_forecast(const std::string& model_path, const std::string& panel_path,
                 const std::string& config_path, const std::string& out, int time_index) {
  const AppConfig cfg = load_config(config_path);
  const auto model = HdftsModel::from_json(read_file(model_path));
  const auto panel = load_panel(panel_path, cfg);
  const int t = time_index >= 0 ? time_index : panel.num_times();  // one step past the end
  write_file(out, forecast_csv(model, panel, t));
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& panel_path, const std::string& config_path,
             const std::string& model_path, const std::string& out, bool dgp_truth, int threads) {
  const AppConfig cfg = load_config(config_path);
  const auto panel = load_panel(panel_path, cfg);
  std::string csv = "delta,region,metric,value\n";

  const auto append_window_metrics = [&](const HdftsModel& model, int t_begin, int delta) {
    const int n = panel.num_times();
    const auto preds = forecast_window(model, panel, t_begin, n);
    std::vector<Eigen::MatrixXd> actual;
    for (int s = 0; s < panel.num_regions(); ++s) {
      actual.push_back(panel.values[static_cast<std::size_t>(s)].middleRows(t_begin, n - t_begin));
    }
    for (int s = 0; s < panel.num_regions(); ++s) {
      const std::vector<Eigen::MatrixXd> a1{actual[static_cast<std::size_t>(s)]};
      const std::vector<Eigen::MatrixXd> p1{preds[static_cast<std::size_t>(s)]};
      csv += std::to_string(delta) + ',' + panel.regions[static_cast<std::size_t>(s)] + ",mafe," +
             num(mafe(a1, p1, panel.grid)) + '\n';
      csv += std::to_string(delta) + ',' + panel.regions[static_cast<std::size_t>(s)] + ",msfe," +
             num(msfe(a1, p1, panel.grid)) + '\n';
    }
    csv += std::to_string(delta) + ",all,mafe," + num(mafe(actual, preds, panel.grid)) + '\n';
    csv += std::to_string(delta) + ",all,msfe," + num(msfe(actual, preds, panel.grid)) + '\n';
  };

  if (!model_path.empty()) {
    const auto model = HdftsModel::from_json(read_file(model_path));
    const int t_begin = std::max(model.delta, (panel.num_times() * 4) / 5);
    append_window_metrics(model, t_begin, model.delta);
  } else {
    for (int delta : cfg.delta_list) {
      ModelConfig mc = cfg.model;
      mc.delta = delta;
      const auto tuned = tune_and_fit(panel, cfg.grid, mc, threads > 0 ? threads : cfg.threads);
      const int t_begin = std::max(delta, (panel.num_times() * 4) / 5);
      append_window_metrics(tuned.model, t_begin, delta);
      if (dgp_truth) {
        const auto truth = cfg.sim.surfaces();
        if (truth.S == panel.num_regions()) {
          for (int s = 0; s < truth.S; ++s) {
            for (int g = 0; g < truth.S; ++g) {
              if (truth.at(s, g).is_zero()) continue;
              const auto& surf = truth.at(s, g);
              const double v = ise([&surf](double u, double w) { return surf(u, w); },
                                   tuned.model.surface(s, g), 101);
              csv += std::to_string(delta) + ',' + panel.regions[static_cast<std::size_t>(s)] +
                     ",ise_" + surface_kind_name(surf.kind) + "_from_" +
                     panel.regions[static_cast<std::size_t>(g)] + ',' + num(v) + '\n';
            }
          }
        }
      }
    }
  }
  write_file(out, csv);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_export_surfaces(const std::string& model_path, const std::string& out_dir,
                        int resolution) {
  const auto model = HdftsModel::from_json(read_file(model_path));
  std::filesystem::create_directories(out_dir);
  const auto& dom = model.spec.mesh().domain();

  std::string surf_csv = "target,predictor,u,v,value\n";
  for (int s = 0; s < model.num_regions(); ++s) {
    const auto& fit = model.regions[static_cast<std::size_t>(s)].fit;
    for (int g : fit.active_predictors) {
      const auto surface = model.surface(s, g);
      for (int i = 0; i < resolution; ++i) {
        const double u = dom.u_lo + dom.width() * i / (resolution - 1);
        for (int j = 0; j < resolution; ++j) {
          const double v = dom.v_lo + dom.height() * j / (resolution - 1);
          surf_csv += model.region_labels[static_cast<std::size_t>(s)] + ',' +
                      model.region_labels[static_cast<std::size_t>(g)] + ',' + num(u) + ',' +
                      num(v) + ',' + num(eval_surface(surface, {u, v})) + '\n';
        }
      }
    }
  }
  write_file(out_dir + "/surfaces.csv", surf_csv);

  // Receiving: the predictor's history enters the target's model.
  // Regulating: the target's history enters the predictor's model.
  std::string conn_csv = "target,predictor,direction\n";
  for (int s = 0; s < model.num_regions(); ++s) {
    for (int g : model.regions[static_cast<std::size_t>(s)].fit.active_predictors) {
      if (g == s) continue;
      conn_csv += model.region_labels[static_cast<std::size_t>(s)] + ',' +
                  model.region_labels[static_cast<std::size_t>(g)] + ",receiving\n";
    }
  }
  for (int s = 0; s < model.num_regions(); ++s) {
    for (int g = 0; g < model.num_regions(); ++g) {
      if (g == s) continue;
      const auto& act = model.regions[static_cast<std::size_t>(g)].fit.active_predictors;
      if (std::find(act.begin(), act.end(), s) != act.end()) {
        conn_csv += model.region_labels[static_cast<std::size_t>(s)] + ',' +
                    model.region_labels[static_cast<std::size_t>(g)] + ",regulating\n";
      }
    }
  }
  write_file(out_dir + "/connections.csv", conn_csv);
  std::cout << "wrote " << out_dir << "/surfaces.csv and connections.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse additive modeling of high-dimensional functional time series"};
  app.require_subcommand(1);

  std::string config_path, panel_path, model_path, out_path, table_path, out_dir;
  int reps = -1, n_override = -1, time_index = -1, threads = 0, resolution = 61;
  long long seed = -1;
  bool dgp_truth = false;

  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo experiment");
  simulate->add_option("--config", config_path, "Config JSON");
  simulate->add_option("--reps", reps, "Replicate count override");
  simulate->add_option("--seed", seed, "Base seed override");
  simulate->add_option("--n", n_override, "Series length override");
  simulate->add_option("--out", out_path, "Report CSV path")->default_val("report.csv");
  simulate->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model at fixed penalties");
  fit_cmd->add_option("--panel", panel_path, "Panel CSV/JSON (or mortality CSV)")->required();
  fit_cmd->add_option("--config", config_path, "Config JSON");
  fit_cmd->add_option("--out", out_path, "Model bundle path")->default_val("model.json");
  fit_cmd->add_option("--threads", threads, "Worker threads");

  auto* tune_cmd = app.add_subcommand("tune", "Tune penalties on a 60/20/20 split");
  tune_cmd->add_option("--panel", panel_path, "Panel CSV/JSON (or mortality CSV)")->required();
  tune_cmd->add_option("--config", config_path, "Config JSON");
  tune_cmd->add_option("--out", out_path, "Model bundle path")->default_val("model.json");
  tune_cmd->add_option("--table", table_path, "Validation table CSV");
  tune_cmd->add_option("--threads", threads, "Worker threads");

  auto* fc_cmd = app.add_subcommand("forecast", "Forecast one time point");
  fc_cmd->add_option("--model", model_path, "Model bundle")->required();
  fc_cmd->add_option("--panel", panel_path, "Panel CSV/JSON")->required();
  fc_cmd->add_option("--config", config_path, "Config JSON");
  fc_cmd->add_option("--time", time_index, "0-based target time index (default: one past the end)");
  fc_cmd->add_option("--out", out_path, "Forecast CSV path")->default_val("forecast.csv");

  auto* eval_cmd = app.add_subcommand("eval", "Forecast-error metrics on the test window");
  eval_cmd->add_option("--panel", panel_path, "Panel CSV/JSON (or mortality CSV)")->required();
  eval_cmd->add_option("--config", config_path, "Config JSON");
  eval_cmd->add_option("--model", model_path, "Evaluate an existing bundle instead of refitting");
  eval_cmd->add_option("--out", out_path, "Metrics CSV path")->default_val("metrics.csv");
  eval_cmd->add_flag("--dgp-truth", dgp_truth, "Also report ISE against the config DGP surfaces");
  eval_cmd->add_option("--threads", threads, "Worker threads");

  auto* exp_cmd = app.add_subcommand("export-surfaces", "Export fitted surfaces and connections");
  exp_cmd->add_option("--model", model_path, "Model bundle")->required();
  exp_cmd->add_option("--out-dir", out_dir, "Output directory")->default_val("surfaces");
  exp_cmd->add_option("--resolution", resolution, "Grid resolution per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error_json("usage", e.what());
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(config_path, reps, seed, n_override, out_path, threads);
    }
    if (fit_cmd->parsed()) return cmd_fit(panel_path, config_path, out_path, threads);
    if (tune_cmd->parsed()) {
      return cmd_tune(panel_path, config_path, out_path, table_path, threads);
    }
    if (fc_cmd->parsed()) {
      return cmd_forecast(model_path, panel_path, config_path, out_path, time_index);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(panel_path, config_path, model_path, out_path, dgp_truth, threads);
    }
    if (exp_cmd->parsed()) return cmd_export_surfaces(model_path, out_dir, resolution);
  } catch (const error& e) {
    print_error_json(errc_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    print_error_json("malformed_json", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error_json("runtime", e.what());
    return kExitNumeric;
  }
  return kExitUsage;
}
