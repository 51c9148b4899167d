#include "hdfts/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace hdfts {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_error, "cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io_error, "cannot write file: " + path);
  out << content;
}

std::string panel_to_csv(const FunctionalPanel& panel) {
  std::string out = "region,time,grid_point,value\n";
  for (int s = 0; s < panel.num_regions(); ++s) {
    for (int t = 0; t < panel.num_times(); ++t) {
      for (int m = 0; m < panel.num_grid(); ++m) {
        out += panel.regions[static_cast<std::size_t>(s)];
        out += ',';
        out += num(panel.times[static_cast<std::size_t>(t)]);
        out += ',';
        out += num(panel.grid[m]);
        out += ',';
        out += num(panel.values[static_cast<std::size_t>(s)](t, m));
        out += '\n';
      }
    }
  }
  return out;
}

FunctionalPanel panel_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw error(errc::io_error, "panel csv: empty file");

  std::vector<std::string> region_order;
  std::map<std::string, std::map<double, std::map<double, double>>> data;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) throw error(errc::io_error, "panel csv: expected 4 columns");
    const std::string& region = fields[0];
    if (!data.count(region)) region_order.push_back(region);
    data[region][std::stod(fields[1])][std::stod(fields[2])] = std::stod(fields[3]);
  }
  if (region_order.empty()) throw error(errc::io_error, "panel csv: no data rows");

  const auto& first = data[region_order.front()];
  std::vector<double> times;
  for (const auto& [t, curve] : first) times.push_back(t);
  std::vector<double> grid;
  for (const auto& [g, v] : first.begin()->second) grid.push_back(g);

  FunctionalPanel panel;
  panel.regions = region_order;
  panel.times = times;
  panel.grid = Eigen::Map<const Eigen::VectorXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
  panel.values.assign(region_order.size(),
                      Eigen::MatrixXd(static_cast<Eigen::Index>(times.size()),
                                      static_cast<Eigen::Index>(grid.size())));
  for (std::size_t s = 0; s < region_order.size(); ++s) {
    const auto& by_time = data[region_order[s]];
    if (by_time.size() != times.size()) {
      throw error(errc::io_error, "panel csv: ragged time coverage in region " + region_order[s]);
    }
    std::size_t ti = 0;
    for (const auto& [t, curve] : by_time) {
      if (curve.size() != grid.size()) {
        throw error(errc::io_error, "panel csv: ragged grid coverage in region " + region_order[s]);
      }
      std::size_t gi = 0;
      for (const auto& [g, v] : curve) {
        panel.values[s](static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(gi)) = v;
        ++gi;
      }
      ++ti;
    }
  }
  panel.validate();
  return panel;
}

std::string panel_to_json(const FunctionalPanel& panel) {
  nlohmann::json j;
  j["grid"] = vector_to_json(panel.grid);
  j["times"] = panel.times;
  auto& regions = j["regions"] = nlohmann::json::object();
  for (int s = 0; s < panel.num_regions(); ++s) {
    regions[panel.regions[static_cast<std::size_t>(s)]] =
        matrix_to_json(panel.values[static_cast<std::size_t>(s)]);
  }
  j["region_order"] = panel.regions;
  return j.dump();
}

FunctionalPanel panel_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FunctionalPanel panel;
  panel.grid = vector_from_json(j.at("grid"));
  panel.times = j.at("times").get<std::vector<double>>();
  panel.regions = j.at("region_order").get<std::vector<std::string>>();
  for (const auto& name : panel.regions) {
    panel.values.push_back(matrix_from_json(j.at("regions").at(name)));
  }
  panel.validate();
  return panel;
}

FunctionalPanel read_panel_file(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return panel_from_json(text);
  return panel_from_csv(text);
}

void write_panel_file(const FunctionalPanel& panel, const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    write_file(path, panel_to_json(panel));
  } else {
    write_file(path, panel_to_csv(panel));
  }
}

RawMortalityTable mortality_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw error(errc::io_error, "mortality csv: empty file");
  RawMortalityTable table;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) throw error(errc::io_error, "mortality csv: expected 5 columns");
    table.rows.push_back({fields[0], std::stod(fields[1]), std::stod(fields[2]),
                          std::stod(fields[3]), std::stod(fields[4])});
  }
  return table;
}

AppConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  AppConfig cfg;
  if (j.contains("mesh")) {
    const auto& m = j.at("mesh");
    cfg.model.mesh_rows = m.value("rows", cfg.model.mesh_rows);
    cfg.model.mesh_cols = m.value("cols", cfg.model.mesh_cols);
    if (m.contains("domain")) {
      const auto& d = m.at("domain");
      cfg.model.domain = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>(),
                          d.at(3).get<double>()};
    }
  }
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    cfg.model.degree = b.value("degree", cfg.model.degree);
    cfg.model.continuity_order = b.value("continuity_order", cfg.model.continuity_order);
    cfg.model.constraint_weight = b.value("constraint_weight", cfg.model.constraint_weight);
  }
  if (j.contains("penalty")) {
    const auto& p = j.at("penalty");
    cfg.model.penalty.lambda1 = p.value("lambda1", cfg.model.penalty.lambda1);
    cfg.model.penalty.lambda2 = p.value("lambda2", cfg.model.penalty.lambda2);
    cfg.model.penalty.nu = p.value("nu", cfg.model.penalty.nu);
    if (p.contains("mode")) {
      cfg.model.penalty.mode = penalty_mode_from_name(p.at("mode").get<std::string>());
    }
    if (p.contains("local_weights")) {
      cfg.model.penalty.local_weights = vector_from_json(p.at("local_weights"));
    }
    cfg.model.penalty.global_weight = p.value("global_weight", 0.0);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    cfg.model.fit_options.inner_tol = f.value("inner_tol", cfg.model.fit_options.inner_tol);
    cfg.model.fit_options.inner_max_iter =
        f.value("inner_max_iter", cfg.model.fit_options.inner_max_iter);
    cfg.model.fit_options.outer_tol = f.value("outer_tol", cfg.model.fit_options.outer_tol);
    cfg.model.fit_options.max_sweeps = f.value("max_sweeps", cfg.model.fit_options.max_sweeps);
    cfg.model.fit_options.refit = f.value("refit", cfg.model.fit_options.refit);
    cfg.model.fit_options.seed = f.value("seed", cfg.model.fit_options.seed);
  }
  cfg.model.delta = j.value("delta", cfg.model.delta);
  if (j.contains("delta_list")) cfg.delta_list = j.at("delta_list").get<std::vector<int>>();
  if (j.contains("tuning")) {
    const auto& t = j.at("tuning");
    if (t.contains("lambda1_grid")) cfg.grid.lambda1 = t.at("lambda1_grid").get<std::vector<double>>();
    if (t.contains("lambda2_grid")) cfg.grid.lambda2 = t.at("lambda2_grid").get<std::vector<double>>();
  }
  if (j.contains("dgp")) {
    const auto& d = j.at("dgp");
    cfg.sim.S = d.value("S", cfg.sim.S);
    cfg.sim.n = d.value("n", cfg.sim.n);
    cfg.sim.M = d.value("M", cfg.sim.M);
    if (d.contains("C_s")) cfg.sim.c_s = vector_from_json(d.at("C_s"));
    cfg.sim.omega_sd = d.value("omega_sd", cfg.sim.omega_sd);
    cfg.sim.eps_sd = d.value("eps_sd", cfg.sim.eps_sd);
    cfg.sim.shape_amplitude = d.value("shape_amplitude", cfg.sim.shape_amplitude);
    cfg.sim.burn_in = d.value("burn_in", cfg.sim.burn_in);
    cfg.sim.replicates = d.value("replicates", cfg.sim.replicates);
    cfg.sim.base_seed = d.value("base_seed", cfg.sim.base_seed);
  }
  if (j.contains("modes")) {
    cfg.modes.clear();
    for (const auto& m : j.at("modes")) {
      cfg.modes.push_back(penalty_mode_from_name(m.get<std::string>()));
    }
  }
  cfg.mortality_penalty = j.value("mortality_penalty", cfg.mortality_penalty);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.compute_ise = j.value("compute_ise", cfg.compute_ise);
  return cfg;
}

std::string config_to_json(const AppConfig& cfg) {
  nlohmann::json j;
  j["mesh"] = {{"rows", cfg.model.mesh_rows},
               {"cols", cfg.model.mesh_cols},
               {"domain", {cfg.model.domain.u_lo, cfg.model.domain.u_hi, cfg.model.domain.v_lo,
                           cfg.model.domain.v_hi}}};
  j["basis"] = {{"degree", cfg.model.degree},
                {"continuity_order", cfg.model.continuity_order},
                {"constraint_weight", cfg.model.constraint_weight}};
  j["penalty"] = {{"lambda1", cfg.model.penalty.lambda1},
                  {"lambda2", cfg.model.penalty.lambda2},
                  {"nu", cfg.model.penalty.nu},
                  {"mode", penalty_mode_name(cfg.model.penalty.mode)}};
  j["fit"] = {{"inner_tol", cfg.model.fit_options.inner_tol},
              {"inner_max_iter", cfg.model.fit_options.inner_max_iter},
              {"outer_tol", cfg.model.fit_options.outer_tol},
              {"max_sweeps", cfg.model.fit_options.max_sweeps},
              {"refit", cfg.model.fit_options.refit},
              {"seed", cfg.model.fit_options.seed}};
  j["delta"] = cfg.model.delta;
  j["delta_list"] = cfg.delta_list;
  j["tuning"] = {{"lambda1_grid", cfg.grid.lambda1}, {"lambda2_grid", cfg.grid.lambda2}};
  j["dgp"] = {{"S", cfg.sim.S},
              {"n", cfg.sim.n},
              {"M", cfg.sim.M},
              {"omega_sd", cfg.sim.omega_sd},
              {"eps_sd", cfg.sim.eps_sd},
              {"shape_amplitude", cfg.sim.shape_amplitude},
              {"burn_in", cfg.sim.burn_in},
              {"replicates", cfg.sim.replicates},
              {"base_seed", cfg.sim.base_seed}};
  nlohmann::json modes = nlohmann::json::array();
  for (const auto m : cfg.modes) modes.push_back(penalty_mode_name(m));
  j["modes"] = modes;
  j["mortality_penalty"] = cfg.mortality_penalty;
  j["threads"] = cfg.threads;
  j["compute_ise"] = cfg.compute_ise;
  return j.dump(2);
}

}  // namespace hdfts

// --- model serialization -------------------------------------------------

namespace hdfts {

namespace {

nlohmann::json fit_to_json(const FitResult& f) {
  nlohmann::json j;
  j["gamma"] = vector_to_json(f.gamma);
  j["gamma_selection"] = vector_to_json(f.gamma_selection);
  j["theta"] = matrix_to_json(f.theta);
  j["active_predictors"] = f.active_predictors;
  j["active_triangles"] = f.active_triangles;
  j["objective_trace"] = f.objective_trace;
  j["constraint_residual"] = vector_to_json(f.constraint_residual);
  j["refit_done"] = f.refit_done;
  j["converged"] = f.converged;
  j["sweeps"] = f.sweeps;
  j["seed"] = f.seed;
  j["config"] = {{"lambda1", f.config.lambda1},
                 {"lambda2", f.config.lambda2},
                 {"nu", f.config.nu},
                 {"mode", penalty_mode_name(f.config.mode)}};
  return j;
}

FitResult fit_from_json(const nlohmann::json& j) {
  FitResult f;
  f.gamma = vector_from_json(j.at("gamma"));
  f.gamma_selection = vector_from_json(j.at("gamma_selection"));
  f.theta = matrix_from_json(j.at("theta"));
  f.active_predictors = j.at("active_predictors").get<std::vector<int>>();
  f.active_triangles = j.at("active_triangles").get<std::vector<std::vector<int>>>();
  f.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  f.constraint_residual = vector_from_json(j.at("constraint_residual"));
  f.refit_done = j.at("refit_done").get<bool>();
  f.converged = j.at("converged").get<bool>();
  f.sweeps = j.at("sweeps").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.config.lambda1 = j.at("config").at("lambda1").get<double>();
  f.config.lambda2 = j.at("config").at("lambda2").get<double>();
  f.config.nu = j.at("config").at("nu").get<double>();
  f.config.mode = penalty_mode_from_name(j.at("config").at("mode").get<std::string>());
  return f;
}

}  // namespace

std::string HdftsModel::to_json() const {
  nlohmann::json j;
  const auto& mesh = spec.mesh();
  j["domain"] = {mesh.domain().u_lo, mesh.domain().u_hi, mesh.domain().v_lo, mesh.domain().v_hi};
  j["mesh"] = {{"rows", mesh.rows()}, {"cols", mesh.cols()}};
  j["degree"] = spec.degree();
  j["continuity_order"] = config.continuity_order;
  j["constraint_weight"] = config.constraint_weight;
  j["delta"] = delta;
  j["grid"] = vector_to_json(grid);
  j["region_labels"] = region_labels;
  j["transform"] = {{"means", matrix_to_json(transform.means)},
                    {"scales", vector_to_json(transform.scales)},
                    {"zero_variance", transform.zero_variance}};
  auto& rs = j["regions"] = nlohmann::json::array();
  for (const auto& rec : regions) {
    nlohmann::json r;
    r["fit"] = fit_to_json(rec.fit);
    r["lambda1"] = rec.lambda1;
    r["lambda2"] = rec.lambda2;
    if (std::isfinite(rec.validation_msfe)) r["validation_msfe"] = rec.validation_msfe;
    if (std::isfinite(rec.test_msfe)) r["test_msfe"] = rec.test_msfe;
    rs.push_back(std::move(r));
  }
  return j.dump();
}

HdftsModel HdftsModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  HdftsModel m;
  const auto& d = j.at("domain");
  ModelConfig cfg;
  cfg.domain = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>(),
                d.at(3).get<double>()};
  cfg.mesh_rows = j.at("mesh").at("rows").get<int>();
  cfg.mesh_cols = j.at("mesh").at("cols").get<int>();
  cfg.degree = j.at("degree").get<int>();
  cfg.continuity_order = j.at("continuity_order").get<int>();
  cfg.constraint_weight = j.at("constraint_weight").get<double>();
  cfg.delta = j.at("delta").get<int>();
  m.spec = cfg.make_spec();
  m.config = cfg;
  m.delta = cfg.delta;
  m.grid = vector_from_json(j.at("grid"));
  m.region_labels = j.at("region_labels").get<std::vector<std::string>>();
  m.transform.means = matrix_from_json(j.at("transform").at("means"));
  m.transform.scales = vector_from_json(j.at("transform").at("scales"));
  m.transform.zero_variance = j.at("transform").at("zero_variance").get<std::vector<bool>>();
  for (const auto& r : j.at("regions")) {
    RegionRecord rec;
    rec.fit = fit_from_json(r.at("fit"));
    rec.lambda1 = r.at("lambda1").get<double>();
    rec.lambda2 = r.at("lambda2").get<double>();
    if (r.contains("validation_msfe")) rec.validation_msfe = r.at("validation_msfe").get<double>();
    if (r.contains("test_msfe")) rec.test_msfe = r.at("test_msfe").get<double>();
    m.regions.push_back(std::move(rec));
  }
  return m;
}

}  // namespace hdfts
