#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mks/pipeline.hpp"

namespace py = pybind11;
using namespace mks;

namespace {

Vec2 to_vec(const std::pair<double, double>& p) { return {p.first, p.second}; }

py::object json_to_py(const nlohmann::json& j) {
  py::module_ pyjson = py::module_::import("json");
  return pyjson.attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return nlohmann::json::parse(obj.cast<std::string>());
  py::module_ pyjson = py::module_::import("json");
  std::string dumped = pyjson.attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(dumped);
}

Scenario scenario_from(const py::object& config, int resolution, int samples,
                       const std::string& out_dir) {
  if (py::isinstance<py::str>(config)) {
    std::string name = config.cast<std::string>();
    if (is_scenario_preset(name)) return build_scenario(scenario_preset(name), resolution, samples, out_dir);
    return build_scenario(nlohmann::json::parse(name), resolution, samples, out_dir);
  }
  return build_scenario(py_to_json(config), resolution, samples, out_dir);
}

Stage stage_from(const std::string& s) {
  if (s == "validate") return Stage::Validate;
  if (s == "solve") return Stage::Solve;
  if (s == "diagnose") return Stage::Diagnose;
  if (s == "render") return Stage::Render;
  throw std::invalid_argument("stage must be validate/solve/diagnose/render");
}

py::array_t<double> field_array(const ScalarField& f) {
  py::array_t<double> out({f.grid.ny, f.grid.nx});
  auto buf = out.mutable_unchecked<2>();
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i)
      buf(j, i) = f.mask[f.grid.idx(i, j)] ? f.values[f.grid.idx(i, j)]
                                           : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace

PYBIND11_MODULE(_mksandpile, m) {
  m.doc() = "Monge-Kantorovich sandpile solver: maximal/minimal profiles, transport "
            "density, singular sets and uniqueness diagnosis on 2-D polygonal domains";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ZeroVectorError>(m, "ZeroVectorError");
  py::register_exception<NonDifferentiableError>(m, "NonDifferentiableError");
  py::register_exception<EmptyTError>(m, "EmptyTError");

  py::class_<ConvexBody>(m, "Body")
      .def_static("ball", &ConvexBody::ball, py::arg("radius") = 1.0)
      .def_static("ellipse", &ConvexBody::ellipse, py::arg("a11"), py::arg("a12"), py::arg("a22"))
      .def_static("p_ball", &ConvexBody::p_ball, py::arg("p"))
      .def_static("lens", &ConvexBody::lens, py::arg("polar_role") = true)
      .def_static(
          "polygon",
          [](const std::vector<std::pair<double, double>>& verts, bool polar_role) {
            std::vector<Vec2> v;
            for (auto& p : verts) v.push_back(to_vec(p));
            return ConvexBody::polygon(v, polar_role);
          },
          py::arg("vertices"), py::arg("polar_role") = false)
      .def("gauge",
           [](const ConvexBody& b, std::pair<double, double> xi) { return b.gauge(to_vec(xi)); })
      .def("polar_gauge", [](const ConvexBody& b,
                             std::pair<double, double> xi) { return b.polar_gauge(to_vec(xi)); })
      .def("gauge_gradient",
           [](const ConvexBody& b, std::pair<double, double> xi) {
             Vec2 g = b.gauge_gradient(to_vec(xi));
             return std::make_pair(g.x, g.y);
           })
      .def("negated", &ConvexBody::negated)
      .def("is_c1", &ConvexBody::is_c1)
      .def("family", &ConvexBody::family_name)
      .def("equivalence_constants", [](const ConvexBody& b) {
        double c1, c2;
        b.equivalence_constants(c1, c2);
        return std::make_pair(c1, c2);
      });

  py::class_<PolygonalDomain, std::shared_ptr<PolygonalDomain>>(m, "Domain")
      .def(py::init([](const std::vector<std::pair<double, double>>& outer,
                       const std::vector<std::vector<std::pair<double, double>>>& holes) {
             std::vector<Vec2> o;
             for (auto& p : outer) o.push_back(to_vec(p));
             std::vector<std::vector<Vec2>> hs;
             for (auto& h : holes) {
               std::vector<Vec2> loop;
               for (auto& p : h) loop.push_back(to_vec(p));
               hs.push_back(loop);
             }
             return std::make_shared<PolygonalDomain>(o, hs);
           }),
           py::arg("outer"), py::arg("holes") = std::vector<std::vector<std::pair<double, double>>>{})
      .def_static("preset",
                  [](const py::object& spec) { return make_preset_domain(py_to_json(spec)); })
      .def("contains",
           [](const PolygonalDomain& d, std::pair<double, double> p) {
             switch (d.classify(to_vec(p))) {
               case PointClass::Inside: return "inside";
               case PointClass::Boundary: return "boundary";
               default: return "outside";
             }
           })
      .def("visible",
           [](const PolygonalDomain& d, std::pair<double, double> y, std::pair<double, double> x) {
             return d.visible(to_vec(y), to_vec(x));
           })
      .def("geodesic_distance",
           [](const PolygonalDomain& d, std::pair<double, double> a, std::pair<double, double> b,
              const ConvexBody& body) {
             GeodesicResult r = d.geodesic(to_vec(a), to_vec(b), body);
             std::vector<std::pair<double, double>> line;
             for (const Vec2& p : r.polyline) line.emplace_back(p.x, p.y);
             return std::make_pair(r.length, line);
           })
      .def("perimeter", &PolygonalDomain::perimeter)
      .def("convex", &PolygonalDomain::convex)
      .def("vertex_count", &PolygonalDomain::vertex_count);

  m.def("scenario_presets", &scenario_preset_names);

  m.def(
      "run_scenario",
      [](const py::object& config, const std::string& stage, py::object out_dir, int resolution,
         int samples) {
        std::string out = out_dir.is_none() ? std::string() : out_dir.cast<std::string>();
        Scenario sc = scenario_from(config, resolution, samples, out);
        PipelineResult res = run_pipeline(sc, stage_from(stage), true, !out.empty());
        return json_to_py(diagnosis_json(sc, res));
      },
      py::arg("config"), py::arg("stage") = "diagnose", py::arg("out_dir") = py::none(),
      py::arg("resolution") = 0, py::arg("samples") = 0,
      "Run the pipeline and return the diagnosis document; artifacts are "
      "written when out_dir is given.");

  m.def(
      "solve_fields",
      [](const py::object& config, int resolution, int samples) {
        Scenario sc = scenario_from(config, resolution, samples, "");
        PipelineResult res = run_pipeline(sc, Stage::Diagnose, true, false);
        if (res.exit_code != 0)
          throw std::runtime_error("pipeline failed with exit code " +
                                   std::to_string(res.exit_code));
        py::dict out;
        out["h"] = sc.frame.grid.h;
        out["origin"] = std::make_pair(sc.frame.grid.origin.x, sc.frame.grid.origin.y);
        out["nx"] = sc.frame.grid.nx;
        out["ny"] = sc.frame.grid.ny;
        out["uphi"] = field_array(res.uphi->u);
        out["uf"] = field_array(*res.uf);
        out["vf"] = field_array(*res.vf);
        out["div_theta"] = field_array(res.direction->div_theta);
        out["t_measure"] = res.sets->t_measure;
        out["diagnosis"] = json_to_py(diagnosis_json(sc, res));
        return out;
      },
      py::arg("config"), py::arg("resolution") = 0, py::arg("samples") = 0,
      "Solve and return the grid fields as (ny, nx) arrays (NaN outside).");
}
