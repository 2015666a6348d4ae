#include "mks/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mks/expression.hpp"

namespace mks {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

double num(const json& j, const std::string& field, double dflt,
           bool required = false) {
  if (!j.contains(field)) {
    if (required) fail(field, "missing");
    return dflt;
  }
  if (!j[field].is_number()) fail(field, "expected a number");
  return j[field].get<double>();
}

std::vector<Vec2> vertex_list(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of [x, y] pairs");
  std::vector<Vec2> out;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(field, "expected [x, y] pairs");
    out.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return out;
}

std::vector<Vec2> circle_polygon(double r, int n, Vec2 center = {0, 0}) {
  std::vector<Vec2> v;
  v.reserve(n);
  for (int k = 0; k < n; ++k) {
    double a = 2.0 * M_PI * k / n;
    v.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  return v;
}

std::vector<Vec2> ellipse_polygon(double a, double b, int n) {
  std::vector<Vec2> v;
  v.reserve(n);
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * M_PI * k / n;
    v.push_back({a * std::cos(t), b * std::sin(t)});
  }
  return v;
}

// annulus sector {1 < r < 2, -pi < theta < pi - eps}: outer arc CCW, radial
// inward, inner arc CW, radial outward
std::vector<Vec2> annulus_sector_polygon(double eps, int n) {
  double span = 2.0 * M_PI - eps;
  double len_outer = 2.0 * span, len_inner = span;
  double total = len_outer + len_inner + 2.0;
  int n_outer = std::max(8, static_cast<int>(std::lround(n * len_outer / total)));
  int n_inner = std::max(8, static_cast<int>(std::lround(n * len_inner / total)));
  int n_rad = std::max(2, static_cast<int>(std::lround(n * 1.0 / total)));
  std::vector<Vec2> v;
  for (int k = 0; k <= n_outer; ++k) {
    double th = -M_PI + span * k / n_outer;
    v.push_back({2.0 * std::cos(th), 2.0 * std::sin(th)});
  }
  for (int k = 1; k < n_rad; ++k) {
    double r = 2.0 - k * 1.0 / n_rad;
    v.push_back({r * std::cos(M_PI - eps), r * std::sin(M_PI - eps)});
  }
  for (int k = 0; k <= n_inner; ++k) {
    double th = (M_PI - eps) - span * k / n_inner;
    v.push_back({std::cos(th), std::sin(th)});
  }
  for (int k = 1; k < n_rad; ++k) {
    double r = 1.0 + k * 1.0 / n_rad;
    v.push_back({-r, 0.0});
  }
  return v;
}

}  // namespace

std::shared_ptr<PolygonalDomain> make_preset_domain(const json& spec) {
  if (spec.contains("outer")) {
    std::vector<std::vector<Vec2>> holes;
    if (spec.contains("holes"))
      for (const auto& h : spec["holes"]) holes.push_back(vertex_list(h, "domain.holes"));
    return std::make_shared<PolygonalDomain>(vertex_list(spec["outer"], "domain.outer"), holes);
  }
  if (!spec.contains("preset")) fail("domain", "needs either 'preset' or explicit 'outer' loop");
  std::string name = spec["preset"].get<std::string>();
  int n = static_cast<int>(num(spec, "vertices", 720));
  if (name == "square") {
    double s = num(spec, "side", 1.0);
    return std::make_shared<PolygonalDomain>(
        std::vector<Vec2>{{0, 0}, {s, 0}, {s, s}, {0, s}});
  }
  if (name == "hexagon") {
    return std::make_shared<PolygonalDomain>(
        std::vector<Vec2>{{2, 0}, {1, 1}, {-1, 1}, {-2, 0}, {-1, -1}, {1, -1}});
  }
  if (name == "l-shape") {
    return std::make_shared<PolygonalDomain>(
        std::vector<Vec2>{{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}});
  }
  if (name == "disk")
    return std::make_shared<PolygonalDomain>(circle_polygon(num(spec, "radius", 1.0), n));
  if (name == "ellipse")
    return std::make_shared<PolygonalDomain>(
        ellipse_polygon(num(spec, "a", 2.0), num(spec, "b", 1.0), n));
  if (name == "annulus-sector")
    return std::make_shared<PolygonalDomain>(
        annulus_sector_polygon(num(spec, "epsilon", 0.5), n));
  fail("domain.preset", "unknown preset '" + name + "'");
}

bool is_scenario_preset(const std::string& name) {
  for (const auto& p : scenario_preset_names())
    if (p == name) return true;
  return false;
}

std::vector<std::string> scenario_preset_names() {
  return {"square-tray", "hexagon-lens", "annulus-sector",
          "ellipse-foci", "disk-homogeneous", "l-shape"};
}

json scenario_preset(const std::string& name) {
  json c;
  c["name"] = name;
  c["resolution"] = 128;
  c["samples"] = 720;
  c["seed"] = 20260808;
  c["output_dir"] = "out";
  if (name == "square-tray") {
    c["domain"] = {{"preset", "square"}};
    c["body"] = {{"family", "ball"}, {"radius", 1.0}};
    c["datum"] = {{"kind", "formula"}, {"expr", "y"}};
    c["source"] = {{"kind", "constant"}, {"value", 1.0}};
  } else if (name == "hexagon-lens") {
    c["domain"] = {{"preset", "hexagon"}};
    c["body"] = {{"family", "lens"}, {"role", "polar"}};
    c["datum"] = {{"kind", "constant"}, {"value", 0.0}};
    c["source"] = {{"kind", "constant"}, {"value", 1.0}};
  } else if (name == "annulus-sector") {
    double eps = 0.5;
    c["domain"] = {{"preset", "annulus-sector"}, {"epsilon", eps}, {"vertices", 720}};
    c["body"] = {{"family", "ball"}, {"radius", 1.0}};
    c["datum"] = {{"kind", "angle"}, {"branch_cut", M_PI - 0.5 * eps}};
    c["source"] = {{"kind", "constant"}, {"value", 1.0}};
  } else if (name == "ellipse-foci") {
    c["domain"] = {{"preset", "ellipse"}, {"a", 2.0}, {"b", 1.0}, {"vertices", 720}};
    c["body"] = {{"family", "ball"}, {"radius", 1.0}};
    c["datum"] = {{"kind", "constant"}, {"value", 0.0}};
    c["source"] = {{"kind", "constant"}, {"value", 1.0}};
  } else if (name == "disk-homogeneous") {
    c["domain"] = {{"preset", "disk"}, {"radius", 1.0}, {"vertices", 720}};
    c["body"] = {{"family", "ball"}, {"radius", 1.0}};
    c["datum"] = {{"kind", "constant"}, {"value", 0.0}};
    c["source"] = {{"kind", "constant"}, {"value", 1.0}};
  } else if (name == "l-shape") {
    c["domain"] = {{"preset", "l-shape"}};
    c["body"] = {{"family", "ball"}, {"radius", 1.0}};
    c["datum"] = {{"kind", "constant"}, {"value", 0.0}};
    c["source"] = {{"kind", "constant"}, {"value", 1.0}};
  } else {
    throw ConfigError("unknown scenario preset '" + name + "'");
  }
  return c;
}

json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // recover the line/column from the byte offset
    size_t line = 1, col = 1;
    for (size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                      e.what());
  }
}

namespace {

ConvexBody build_body(const json& b) {
  if (!b.contains("family")) fail("body.family", "missing");
  std::string fam = b["family"].get<std::string>();
  bool polar = b.value("role", "primal") == std::string("polar");
  if (fam == "ball") {
    if (polar) return ConvexBody::ball(1.0 / num(b, "radius", 1.0));
    return ConvexBody::ball(num(b, "radius", 1.0));
  }
  if (fam == "ellipse") {
    double a11 = 1, a12 = 0, a22 = 1;
    if (b.contains("matrix")) {
      const auto& m = b["matrix"];
      if (!m.is_array() || m.size() != 3) fail("body.matrix", "expected [a11, a12, a22]");
      a11 = m[0].get<double>();
      a12 = m[1].get<double>();
      a22 = m[2].get<double>();
    } else {
      double a = num(b, "a", 1.0), bb = num(b, "b", 1.0);
      a11 = 1.0 / (a * a);
      a22 = 1.0 / (bb * bb);
    }
    if (polar) {
      // the polar of {xi^T A xi <= 1} is {xi^T A^-1 xi <= 1}
      double det = a11 * a22 - a12 * a12;
      if (!(det > 0.0)) fail("body.matrix", "matrix must be positive definite");
      return ConvexBody::ellipse(a22 / det, -a12 / det, a11 / det);
    }
    return ConvexBody::ellipse(a11, a12, a22);
  }
  if (fam == "p_ball") {
    if (polar) {
      double p = num(b, "p", 2.0, true);
      return ConvexBody::p_ball(p / (p - 1.0));
    }
    return ConvexBody::p_ball(num(b, "p", 2.0, true));
  }
  if (fam == "lens") return ConvexBody::lens(polar);
  if (fam == "polygon") {
    if (!b.contains("vertices")) fail("body.vertices", "missing");
    return ConvexBody::polygon(vertex_list(b["vertices"], "body.vertices"), polar);
  }
  fail("body.family", "unknown family '" + fam + "'");
}

std::function<double(const Vec2&)> build_datum(const json& d,
                                               const std::shared_ptr<PolygonalDomain>& dom) {
  std::string kind = d.value("kind", "constant");
  if (kind == "constant") {
    double v = num(d, "value", 0.0);
    return [v](const Vec2&) { return v; };
  }
  if (kind == "formula") {
    if (!d.contains("expr")) fail("datum.expr", "missing");
    Expression e = Expression::parse(d["expr"].get<std::string>());
    return [e](const Vec2& p) { return e.eval(p.x, p.y); };
  }
  if (kind == "angle") {
    double cut = num(d, "branch_cut", M_PI);
    return [cut](const Vec2& p) {
      double a = std::atan2(p.y, p.x);
      if (a >= cut) a -= 2.0 * M_PI;
      if (a < cut - 2.0 * M_PI) a += 2.0 * M_PI;
      return a;
    };
  }
  if (kind == "piecewise") {
    // linear interpolation in the arc parameter of one loop
    if (!d.contains("table")) fail("datum.table", "missing");
    std::vector<std::pair<double, double>> table;
    for (const auto& row : d["table"]) {
      if (!row.is_array() || row.size() != 2) fail("datum.table", "expected [arc, value] rows");
      table.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    std::sort(table.begin(), table.end());
    if (table.empty()) fail("datum.table", "empty");
    int loop = static_cast<int>(num(d, "loop", 0.0));
    auto domp = dom;
    return [table, loop, domp](const Vec2& p) {
      // locate p's arc parameter on the requested loop
      double best = std::numeric_limits<double>::infinity();
      double arc = 0.0, acc = 0.0;
      const auto& lp = domp->loops()[static_cast<size_t>(loop)];
      for (size_t i = 0; i < lp.size(); ++i) {
        Vec2 a = lp[i], b = lp[(i + 1) % lp.size()];
        double len = dist(a, b);
        double t = len > 0 ? std::clamp(dot(p - a, b - a) / (len * len), 0.0, 1.0) : 0.0;
        double dd = dist(p, a + (b - a) * t);
        if (dd < best) {
          best = dd;
          arc = acc + t * len;
        }
        acc += len;
      }
      // piecewise-linear in arc, clamped at the table ends
      if (arc <= table.front().first) return table.front().second;
      if (arc >= table.back().first) return table.back().second;
      for (size_t k = 0; k + 1 < table.size(); ++k) {
        if (arc <= table[k + 1].first) {
          double w = (arc - table[k].first) / (table[k + 1].first - table[k].first);
          return table[k].second * (1 - w) + table[k + 1].second * w;
        }
      }
      return table.back().second;
    };
  }
  fail("datum.kind", "unknown kind '" + kind + "'");
}

std::function<double(const Vec2&)> build_source(const json& s) {
  std::string kind = s.value("kind", "constant");
  if (kind == "zero") return [](const Vec2&) { return 0.0; };
  if (kind == "constant") {
    double v = num(s, "value", 1.0);
    return [v](const Vec2&) { return v; };
  }
  if (kind == "formula") {
    if (!s.contains("expr")) fail("source.expr", "missing");
    Expression e = Expression::parse(s["expr"].get<std::string>());
    return [e](const Vec2& p) { return std::max(0.0, e.eval(p.x, p.y)); };
  }
  if (kind == "indicator_annulus") {
    double r0 = num(s, "r_inner", 0.0), r1 = num(s, "r_outer", 1.0, true);
    Vec2 c{0, 0};
    if (s.contains("center")) {
      auto v = vertex_list(json::array({s["center"]}), "source.center");
      c = v[0];
    }
    double v = num(s, "value", 1.0);
    return [r0, r1, c, v](const Vec2& p) {
      double r = dist(p, c);
      return (r >= r0 && r <= r1) ? v : 0.0;
    };
  }
  if (kind == "indicator_rect") {
    auto lo = vertex_list(json::array({s.at("min")}), "source.min")[0];
    auto hi = vertex_list(json::array({s.at("max")}), "source.max")[0];
    double v = num(s, "value", 1.0);
    return [lo, hi, v](const Vec2& p) {
      return (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y) ? v : 0.0;
    };
  }
  fail("source.kind", "unknown kind '" + kind + "'");
}

}  // namespace

Scenario build_scenario(const json& config, int resolution_override, int samples_override,
                        const std::string& out_override, int64_t seed_override) {
  json c = config;
  if (c.is_string()) c = scenario_preset(c.get<std::string>());
  if (c.contains("scenario")) {
    json base = scenario_preset(c["scenario"].get<std::string>());
    base.update(c);
    base.erase("scenario");
    c = base;
  }
  Scenario sc;
  sc.name = c.value("name", std::string("custom"));
  sc.resolution = static_cast<int>(num(c, "resolution", 128));
  sc.sample_count = static_cast<int>(num(c, "samples", 720));
  sc.max_cells = static_cast<int>(num(c, "max_cells", 296));
  sc.seed = static_cast<uint64_t>(num(c, "seed", 20260808));
  sc.output_dir = c.value("output_dir", std::string("out"));
  if (resolution_override > 0) sc.resolution = resolution_override;
  if (samples_override > 0) sc.sample_count = samples_override;
  if (!out_override.empty()) sc.output_dir = out_override;
  if (seed_override >= 0) sc.seed = static_cast<uint64_t>(seed_override);
  if (sc.resolution < 16) fail("resolution", "must be >= 16");

  if (!c.contains("domain")) fail("domain", "missing");
  sc.domain = make_preset_domain(c["domain"]);
  if (sc.sample_count < 4 * sc.domain->vertex_count() &&
      sc.sample_count < sc.domain->vertex_count() + 8) {
    // curved presets have vertices ~ samples; only enforce the 4x rule for
    // hand-listed polygons
    if (sc.domain->vertex_count() <= 64)
      fail("samples", "must be >= 4x the polygon vertex count");
    if (sc.sample_count < sc.domain->vertex_count())
      fail("samples", "must be >= the polygon vertex count");
  }
  if (!c.contains("body")) fail("body", "missing");
  sc.body = build_body(c["body"]);
  sc.datum = build_datum(c.value("datum", json{{"kind", "constant"}, {"value", 0.0}}), sc.domain);
  sc.source = build_source(c.value("source", json{{"kind", "constant"}, {"value", 1.0}}));

  sc.frame = Frame::build(*sc.domain, sc.body, sc.datum, sc.sample_count, 1.0 / sc.resolution,
                          sc.max_cells);

  // defaults-filled echo
  json eff = c;
  eff["name"] = sc.name;
  eff["resolution"] = sc.resolution;
  eff["samples"] = sc.sample_count;
  eff["max_cells"] = sc.max_cells;
  eff["seed"] = sc.seed;
  eff["output_dir"] = sc.output_dir;
  if (!eff.contains("datum")) eff["datum"] = {{"kind", "constant"}, {"value", 0.0}};
  if (!eff.contains("source")) eff["source"] = {{"kind", "constant"}, {"value", 1.0}};
  sc.effective = eff;
  return sc;
}

Scenario load_scenario(const std::string& path_or_preset, int resolution_override,
                       int samples_override, const std::string& out_override,
                       int64_t seed_override) {
  if (is_scenario_preset(path_or_preset))
    return build_scenario(scenario_preset(path_or_preset), resolution_override, samples_override,
                          out_override, seed_override);
  std::ifstream in(path_or_preset);
  if (!in) throw ConfigError("cannot open config file '" + path_or_preset + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json c = parse_config_text(ss.str(), path_or_preset);
  return build_scenario(c, resolution_override, samples_override, out_override, seed_override);
}

}  // namespace mks
