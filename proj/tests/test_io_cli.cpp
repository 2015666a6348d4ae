#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mks/expression.hpp"
#include "mks/io.hpp"
#include "mks/pipeline.hpp"

using namespace mks;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json mini_config() {
  nlohmann::json c = scenario_preset("square-tray");
  c["resolution"] = 32;
  c["samples"] = 160;
  return c;
}

}  // namespace

TEST_CASE("expression grammar") {
  Expression e = Expression::parse("2*x + abs(y - 1) / 4");
  CHECK(e.eval(3.0, 0.5) == doctest::Approx(6.125));
  CHECK(Expression::parse("min(x, y) + max(x, y)").eval(2, 5) == doctest::Approx(7.0));
  CHECK(Expression::parse("pi").eval(0, 0) == doctest::Approx(M_PI));
  CHECK(Expression::parse("theta").eval(0, 2) == doctest::Approx(M_PI / 2));
  CHECK(Expression::parse("s*s").eval(0, 0, 3) == doctest::Approx(9.0));
  CHECK(Expression::parse("-x*-y").eval(2, 3) == doctest::Approx(6.0));
  CHECK_THROWS_AS(Expression::parse("2 +"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("foo(3)"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("min(1)"), ExpressionError);
  try {
    Expression::parse("1 + $");
  } catch (const ExpressionError& err) {
    CHECK(std::string(err.what()).find("offset 4") != std::string::npos);
  }
}

TEST_CASE("config parsing and errors") {
  CHECK(is_scenario_preset("square-tray"));
  CHECK(scenario_preset_names().size() == 6);
  CHECK_THROWS_AS(scenario_preset("no-such"), ConfigError);

  // parse errors carry line/column context
  try {
    parse_config_text("{\n  \"domain\": [,]\n}", "bad.json");
    CHECK(false);
  } catch (const ConfigError& e) {
    std::string what = e.what();
    CHECK(what.find("bad.json:2") != std::string::npos);
  }

  nlohmann::json c = mini_config();
  c["resolution"] = 8;
  CHECK_THROWS_AS(build_scenario(c), ConfigError);
  c = mini_config();
  c["body"] = {{"family", "dodecahedron"}};
  CHECK_THROWS_AS(build_scenario(c), ConfigError);
  c = mini_config();
  c["datum"] = {{"kind", "formula"}, {"expr", "y +"}};
  CHECK_THROWS_AS(build_scenario(c), ExpressionError);
}

TEST_CASE("piecewise datum interpolates in the arc parameter") {
  nlohmann::json c = mini_config();
  // tent profile on the bottom edge (arc 0..1 of the unit square loop)
  c["datum"] = {{"kind", "piecewise"},
                {"loop", 0},
                {"table", {{0.0, 0.0}, {0.5, 0.2}, {1.0, 0.0}}}};
  Scenario sc = build_scenario(c);
  CHECK(sc.datum({0.5, 0.0}) == doctest::Approx(0.2));
  CHECK(sc.datum({0.25, 0.0}) == doctest::Approx(0.1));
  CHECK(sc.datum({1.0, 0.5}) == doctest::Approx(0.0));  // clamped beyond the table
  PipelineResult r = run_pipeline(sc, Stage::Solve, true, false);
  CHECK(r.exit_code == 0);
  CHECK(r.uphi->u.interpolate({0.5, 0.5}) <= 0.5 + 1e-6);
}

TEST_CASE("CSV export format") {
  GridSpec g;
  g.origin = {0, 0};
  g.h = 0.5;
  g.nx = 3;
  g.ny = 2;
  ScalarField f(g);
  f.mask.assign(g.size(), 1);
  f.mask[g.idx(2, 0)] = 0;
  f.values[g.idx(0, 0)] = 1.0 / 3.0;
  f.values[g.idx(1, 1)] = -2.25;
  std::string csv = field_to_csv(f);
  CHECK(csv.substr(0, 10) == "x,y,value\n");
  CHECK(csv.find("0.33333333333333331") != std::string::npos);  // 17 significant digits
  CHECK(csv.find("nan") != std::string::npos);                  // outside node
  CHECK(csv.find("\r") == std::string::npos);                   // LF endings only
  // row-major: the second row starts after nx entries
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 1 + g.nx * g.ny);
}

TEST_CASE("pipeline artifacts and reproducibility") {
  fs::path dir = fs::temp_directory_path() / "mks_io_test";
  fs::remove_all(dir);
  nlohmann::json c = mini_config();
  c["output_dir"] = (dir / "run1").string();
  Scenario sc = build_scenario(c);
  PipelineResult r = run_pipeline(sc, Stage::Render, true);
  CHECK(r.exit_code == 0);
  for (const char* name : {"uphi.csv", "uf.csv", "vf.csv", "div_theta.csv",
                           "singular_sets.json", "diagnosis.json", "scene.svg"})
    CHECK(fs::exists(dir / "run1" / name));

  // byte-identical reruns of the same config
  std::map<std::string, std::string> snapshot;
  for (const char* name : {"uphi.csv", "vf.csv", "diagnosis.json", "scene.svg"})
    snapshot[name] = slurp((dir / "run1" / name).string());
  Scenario sc2 = build_scenario(c);
  run_pipeline(sc2, Stage::Render, true);
  for (const char* name : {"uphi.csv", "vf.csv", "diagnosis.json", "scene.svg"})
    CHECK(slurp((dir / "run1" / name).string()) == snapshot[name]);

  // sorted JSON keys, UTF-8, and the effective-config echo round-trips
  nlohmann::json diag = nlohmann::json::parse(slurp((dir / "run1" / "diagnosis.json").string()));
  CHECK(diag.contains("config"));
  CHECK(diag.contains("diagnosis"));
  std::string dumped = diag.dump();
  CHECK(dumped.find("\"config\"") < dumped.find("\"datum_check\""));
  CHECK(dumped.find("\"datum_check\"") < dumped.find("\"diagnosis\""));

  nlohmann::json echo = diag["config"];
  echo["output_dir"] = (dir / "run3").string();
  Scenario sc3 = build_scenario(echo);
  run_pipeline(sc3, Stage::Render, true);
  CHECK(slurp((dir / "run1" / "uphi.csv").string()) == slurp((dir / "run3" / "uphi.csv").string()));
  fs::remove_all(dir);
}

TEST_CASE("SVG scene structure") {
  nlohmann::json c = mini_config();
  Scenario sc = build_scenario(c);
  PipelineResult r = run_pipeline(sc, Stage::Diagnose, true, false);
  std::string svg = render_svg(sc.frame, *r.vf, *r.rays, *r.sets, sc.name);
  CHECK(svg.rfind("<svg", 0) == 0);
  for (const char* id : {"\"bg\"", "\"vf\"", "\"t_set\"", "\"rays\"", "\"sigma\"", "\"d_set\"",
                         "\"j_set\"", "\"outline\"", "\"legend\""})
    CHECK(svg.find(id) != std::string::npos);
  // deterministic: same inputs, same bytes
  CHECK(svg == render_svg(sc.frame, *r.vf, *r.rays, *r.sets, sc.name));
  // square tray: the T region is populated and rays point upward
  CHECK(svg.find("t_set") < svg.find("rays"));
}

TEST_CASE("exit codes") {
  fs::path dir = fs::temp_directory_path() / "mks_exit_test";
  fs::remove_all(dir);
  // slope-2 datum violates (H4) on the square: exit 2
  nlohmann::json c = mini_config();
  c["datum"] = {{"kind", "formula"}, {"expr", "2*y"}};
  c["output_dir"] = (dir / "bad").string();
  Scenario sc = build_scenario(c);
  PipelineResult r = run_pipeline(sc, Stage::Solve, true);
  CHECK(r.exit_code == 2);
  CHECK_FALSE(r.uphi.has_value());
  nlohmann::json diag = nlohmann::json::parse(slurp((dir / "bad" / "diagnosis.json").string()));
  CHECK(diag["datum_check"]["is_compatible"] == false);
  CHECK(diag["exit_code"] == 2);
  fs::remove_all(dir);
}

TEST_CASE("field summary") {
  GridSpec g;
  g.origin = {0, 0};
  g.h = 1.0;
  g.nx = 2;
  g.ny = 2;
  ScalarField f(g);
  f.mask.assign(4, 1);
  f.values = {3.0, -1.0, 7.0, 0.0};
  nlohmann::json s = field_summary(f);
  CHECK(s["min"] == -1.0);
  CHECK(s["max"] == 7.0);
  CHECK(s["nodes"] == 4);
  CHECK(s["argmax"][0] == 0.0);
  CHECK(s["argmax"][1] == 1.0);
}
