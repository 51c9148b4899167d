#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hdfts/io.hpp"
#include "hdfts/metrics.hpp"
#include "hdfts/model.hpp"
#include "hdfts/mortality.hpp"
#include "hdfts/sim.hpp"

namespace py = pybind11;
using namespace hdfts;

namespace {

FunctionalPanel make_panel(const Eigen::VectorXd& grid, const std::vector<Eigen::MatrixXd>& values,
                           std::vector<std::string> regions, std::vector<double> times) {
  FunctionalPanel p;
  p.grid = grid;
  p.values = values;
  if (regions.empty()) {
    for (std::size_t s = 0; s < values.size(); ++s) regions.push_back("region" + std::to_string(s));
  }
  if (times.empty() && !values.empty()) {
    for (Eigen::Index t = 0; t < values.front().rows(); ++t) times.push_back(double(t + 1));
  }
  p.regions = std::move(regions);
  p.times = std::move(times);
  p.validate();
  return p;
}

ModelConfig make_config(int mesh_rows, int mesh_cols, int degree, int continuity_order,
                        double constraint_weight, int delta, const std::string& mode,
                        double lambda1, double lambda2, double nu, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.mesh_rows = mesh_rows;
  cfg.mesh_cols = mesh_cols;
  cfg.degree = degree;
  cfg.continuity_order = continuity_order;
  cfg.constraint_weight = constraint_weight;
  cfg.delta = delta;
  cfg.penalty.mode = penalty_mode_from_name(mode);
  cfg.penalty.lambda1 = lambda1;
  cfg.penalty.lambda2 = lambda2;
  cfg.penalty.nu = nu;
  cfg.fit_options.seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_hdfts, m) {
  m.doc() = "Sparse additive models for high-dimensional functional time series";

  py::register_exception<error>(m, "HdftsError");

  py::class_<Triangulation, std::shared_ptr<Triangulation>>(m, "Triangulation")
      .def_property_readonly("num_triangles", &Triangulation::num_triangles)
      .def_property_readonly("num_vertices", &Triangulation::num_vertices)
      .def("locate", [](const Triangulation& t, double u, double v) { return t.locate({u, v}); })
      .def("barycentric",
           [](const Triangulation& t, int tri, double u, double v) {
             const auto b = t.barycentric(tri, {u, v});
             return std::vector<double>{b[0], b[1], b[2]};
           })
      .def("triangle_area", &Triangulation::triangle_area)
      .def("min_shape_ratio", &Triangulation::min_shape_ratio)
      .def("to_json", &Triangulation::to_json)
      .def_static("from_json", &Triangulation::from_json);

  m.def(
      "triangulate_rect",
      [](double u_lo, double u_hi, double v_lo, double v_hi, int rows, int cols) {
        return std::make_shared<Triangulation>(
            triangulate_rect({u_lo, u_hi, v_lo, v_hi}, rows, cols));
      },
      py::arg("u_lo") = 0.0, py::arg("u_hi") = 1.0, py::arg("v_lo") = 0.0, py::arg("v_hi") = 1.0,
      py::arg("rows") = 3, py::arg("cols") = 3);

  py::class_<BasisSpec>(m, "BasisSpec")
      .def(py::init([](std::shared_ptr<Triangulation> tri, int degree) {
             return BasisSpec(std::move(tri), degree);
           }),
           py::arg("mesh"), py::arg("degree") = 3)
      .def_property_readonly("degree", &BasisSpec::degree)
      .def_property_readonly("q_per_triangle", &BasisSpec::q_per_triangle)
      .def_property_readonly("dimension", &BasisSpec::dimension);

  m.def("eval_basis", [](const BasisSpec& spec, int tri, double u, double v) {
    return eval_basis(spec, tri, {u, v});
  });
  m.def("smoothness_matrix", &smoothness_matrix, py::arg("spec"), py::arg("order") = 0);
  m.def("roughness_matrix", &roughness_matrix);

  py::class_<CoefficientSurface>(m, "CoefficientSurface")
      .def(py::init([](const BasisSpec& spec, const Eigen::VectorXd& gamma) {
             return CoefficientSurface{spec, gamma};
           }),
           py::arg("spec"), py::arg("gamma"))
      .def_readonly("gamma", &CoefficientSurface::gamma)
      .def("__call__",
           [](const CoefficientSurface& s, double u, double v) { return eval_surface(s, {u, v}); });

  py::class_<FunctionalPanel>(m, "FunctionalPanel")
      .def(py::init(&make_panel), py::arg("grid"), py::arg("values"),
           py::arg("regions") = std::vector<std::string>{},
           py::arg("times") = std::vector<double>{})
      .def_readonly("grid", &FunctionalPanel::grid)
      .def_readonly("regions", &FunctionalPanel::regions)
      .def_readonly("times", &FunctionalPanel::times)
      .def_readonly("values", &FunctionalPanel::values)
      .def("to_csv", &panel_to_csv)
      .def_static("from_csv", &panel_from_csv);

  py::class_<StandardizeTransform>(m, "StandardizeTransform")
      .def_readonly("means", &StandardizeTransform::means)
      .def_readonly("scales", &StandardizeTransform::scales);

  m.def("standardize", [](const FunctionalPanel& p) {
    auto [panel, tf] = standardize(p);
    return py::make_tuple(panel, tf);
  });

  m.def("integrate_basis_against_curve", &integrate_basis_against_curve, py::arg("spec"),
        py::arg("grid"), py::arg("curve"), py::arg("v"));

  py::class_<DesignSystem>(m, "DesignSystem")
      .def_readonly("psi", &DesignSystem::psi)
      .def_readonly("y", &DesignSystem::y)
      .def_readonly("H", &DesignSystem::H)
      .def_readonly("R", &DesignSystem::R)
      .def_readonly("lambda2", &DesignSystem::lambda2)
      .def("psi_star", &DesignSystem::psi_star)
      .def("y_star", &DesignSystem::y_star);

  m.def("assemble", &assemble, py::arg("panel"), py::arg("target"), py::arg("delta"),
        py::arg("spec"), py::arg("lambda2") = 0.0, py::arg("continuity_order") = 0,
        py::arg("constraint_weight") = 1.0);

  m.def("tau", &tau, py::arg("lambda1"), py::arg("nu"));
  m.def("theta_update", &theta_update, py::arg("gamma_l1norm"), py::arg("c"), py::arg("nu"),
        py::arg("tau"));

  m.def(
      "weighted_lasso",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
         std::optional<Eigen::VectorXd> warm, double tol, int max_iter) {
        Eigen::VectorXd start = warm ? *warm : Eigen::VectorXd::Zero(x.cols());
        const auto res = weighted_lasso(x, y, w, std::move(start), tol, max_iter);
        return py::make_tuple(res.gamma, res.iterations, res.converged);
      },
      py::arg("X"), py::arg("y"), py::arg("weights"), py::arg("warm_start") = std::nullopt,
      py::arg("tol") = 1e-6, py::arg("max_iter") = 1000);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("gamma", &FitResult::gamma)
      .def_readonly("gamma_selection", &FitResult::gamma_selection)
      .def_readonly("theta", &FitResult::theta)
      .def_readonly("active_predictors", &FitResult::active_predictors)
      .def_readonly("active_triangles", &FitResult::active_triangles)
      .def_readonly("objective_trace", &FitResult::objective_trace)
      .def_readonly("constraint_residual", &FitResult::constraint_residual)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("refit_done", &FitResult::refit_done)
      .def_readonly("sweeps", &FitResult::sweeps);

  py::class_<RegionRecord>(m, "RegionRecord")
      .def_readonly("fit", &RegionRecord::fit)
      .def_readonly("lambda1", &RegionRecord::lambda1)
      .def_readonly("lambda2", &RegionRecord::lambda2)
      .def_readonly("validation_msfe", &RegionRecord::validation_msfe)
      .def_readonly("test_msfe", &RegionRecord::test_msfe);

  py::class_<HdftsModel>(m, "Model")
      .def_readonly("delta", &HdftsModel::delta)
      .def_readonly("grid", &HdftsModel::grid)
      .def_readonly("region_labels", &HdftsModel::region_labels)
      .def_readonly("regions", &HdftsModel::regions)
      .def("surface", &HdftsModel::surface, py::arg("target"), py::arg("predictor"))
      .def("to_json", &HdftsModel::to_json)
      .def_static("from_json", &HdftsModel::from_json);

  m.def(
      "fit",
      [](const FunctionalPanel& panel, int mesh_rows, int mesh_cols, int degree,
         int continuity_order, double constraint_weight, int delta, const std::string& mode,
         double lambda1, double lambda2, double nu, std::uint64_t seed, int threads) {
        return fit_model(panel,
                         make_config(mesh_rows, mesh_cols, degree, continuity_order,
                                     constraint_weight, delta, mode, lambda1, lambda2, nu, seed),
                         threads);
      },
      py::arg("panel"), py::arg("mesh_rows") = 3, py::arg("mesh_cols") = 3, py::arg("degree") = 3,
      py::arg("continuity_order") = 0, py::arg("constraint_weight") = 1.0, py::arg("delta") = 1,
      py::arg("mode") = "global_local", py::arg("lambda1") = 1e-3, py::arg("lambda2") = 1e-3,
      py::arg("nu") = 0.5, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "tune",
      [](const FunctionalPanel& panel, const std::vector<double>& lambda1_grid,
         const std::vector<double>& lambda2_grid, int mesh_rows, int mesh_cols, int degree,
         int continuity_order, double constraint_weight, int delta, const std::string& mode,
         double nu, std::uint64_t seed, int threads) {
        TuneGrid grid;
        grid.lambda1 = lambda1_grid;
        grid.lambda2 = lambda2_grid;
        const auto cfg = make_config(mesh_rows, mesh_cols, degree, continuity_order,
                                     constraint_weight, delta, mode, 0.0, 0.0, nu, seed);
        const auto tuned = tune_and_fit(panel, grid, cfg, threads);
        py::list rows;
        for (const auto& r : tuned.per_region) {
          py::dict d;
          d["lambda1"] = r.lambda1;
          d["lambda2"] = r.lambda2;
          d["test_msfe"] = r.test_msfe;
          rows.append(std::move(d));
        }
        return py::make_tuple(tuned.model, rows);
      },
      py::arg("panel"), py::arg("lambda1_grid") = std::vector<double>{1e-5, 1e-4, 1e-3, 1e-2, 1e-1},
      py::arg("lambda2_grid") = std::vector<double>{1e-5, 1e-4, 1e-3, 1e-2, 1e-1},
      py::arg("mesh_rows") = 3, py::arg("mesh_cols") = 3, py::arg("degree") = 3,
      py::arg("continuity_order") = 0, py::arg("constraint_weight") = 1.0, py::arg("delta") = 1,
      py::arg("mode") = "global_local", py::arg("nu") = 0.5, py::arg("seed") = 0,
      py::arg("threads") = 1);

  m.def("forecast", &forecast, py::arg("model"), py::arg("panel"), py::arg("target"),
        py::arg("t"));

  m.def(
      "gen_far1",
      [](int n, int M, double c, double omega_sd, int burn_in, std::uint64_t seed) {
        SimConfig cfg;
        cfg.S = 1;
        cfg.n = n;
        cfg.M = M;
        cfg.c_s = Eigen::VectorXd::Constant(1, c);
        cfg.omega_sd = omega_sd;
        cfg.burn_in = burn_in;
        return gen_far1(cfg, 0, seed);
      },
      py::arg("n"), py::arg("M") = 50, py::arg("c") = 0.5, py::arg("omega_sd") = 1.0,
      py::arg("burn_in") = 50, py::arg("seed") = 0);

  m.def(
      "gen_panel",
      [](int S, int n, int M, double eps_sd, double shape_amplitude, std::uint64_t seed) {
        SimConfig cfg;
        cfg.S = S;
        cfg.n = n;
        cfg.M = M;
        cfg.eps_sd = eps_sd;
        cfg.shape_amplitude = shape_amplitude;
        return gen_panel(cfg, seed).first;
      },
      py::arg("S") = 7, py::arg("n") = 100, py::arg("M") = 50, py::arg("eps_sd") = 0.5,
      py::arg("shape_amplitude") = 0.3, py::arg("seed") = 0);

  m.def("mafe", &mafe, py::arg("actual"), py::arg("predicted"), py::arg("grid"));
  m.def("msfe", &msfe, py::arg("actual"), py::arg("predicted"), py::arg("grid"));
  m.def(
      "ise",
      [](const std::function<double(double, double)>& truth, const CoefficientSurface& est,
         int resolution) { return ise(truth, est, resolution); },
      py::arg("truth"), py::arg("estimate"), py::arg("resolution") = 101);

  m.def(
      "smooth_mortality",
      [](const std::vector<std::tuple<std::string, double, double, double, double>>& rows,
         double penalty, std::optional<Eigen::VectorXd> age_grid) {
        RawMortalityTable t;
        for (const auto& [region, year, age, rate, pop] : rows) {
          t.rows.push_back({region, year, age, rate, pop});
        }
        const auto out = smooth_curves(t, penalty, age_grid ? *age_grid : default_age_grid());
        return py::make_tuple(out.panel, out.clamp_count);
      },
      py::arg("rows"), py::arg("penalty") = 1.0, py::arg("age_grid") = std::nullopt,
      "Rows of (region, year, age, rate, population)");
  m.def("mortality_weight", &mortality_weight, py::arg("rate"), py::arg("population"));
}
