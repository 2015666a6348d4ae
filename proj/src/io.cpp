#include "mks/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mks {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string field_to_csv(const ScalarField& field) {
  std::string out = "x,y,value\n";
  out.reserve(field.grid.size() * 40);
  for (int j = 0; j < field.grid.ny; ++j)
    for (int i = 0; i < field.grid.nx; ++i) {
      Vec2 p = field.grid.node(i, j);
      std::size_t id = field.grid.idx(i, j);
      out += fmt17(p.x);
      out += ',';
      out += fmt17(p.y);
      out += ',';
      out += field.mask[id] ? fmt17(field.values[id]) : std::string("nan");
      out += '\n';
    }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << content;
}

nlohmann::json vec2_json(const Vec2& v) { return nlohmann::json::array({v.x, v.y}); }

nlohmann::json field_summary(const ScalarField& field) {
  auto st = field.stats();
  nlohmann::json j;
  j["min"] = st.min;
  j["max"] = st.max;
  j["argmin"] = vec2_json(st.argmin);
  j["argmax"] = vec2_json(st.argmax);
  j["nodes"] = st.count;
  return j;
}

nlohmann::json singular_sets_json(const Frame& frame, const SingularSets& sets) {
  const GridSpec& g = frame.grid;
  nlohmann::json j;
  long sigma_count = 0, d_count = 0, t_count = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    sigma_count += sets.sigma_mask[k];
    d_count += sets.d_mask[k];
    t_count += sets.t_mask[k];
  }
  j["sigma_cells"] = sigma_count;
  j["d_cells"] = d_count;
  j["t_cells"] = t_count;
  j["t_measure"] = sets.t_measure;
  j["d_outside_sigma"] = sets.d_outside_sigma;
  j["d_subset_sigma"] = sets.d_subset_sigma;
  j["j_far_from_d"] = sets.j_far_from_d;

  nlohmann::json jp = nlohmann::json::array();
  for (std::size_t k = 0; k < sets.j_points.size(); ++k) {
    nlohmann::json e;
    e["point"] = vec2_json(sets.j_points[k]);
    e["source"] = sets.j_source[k] == 0 ? "ray_endpoint" : "multiprojection";
    jp.push_back(e);
  }
  j["j_points"] = jp;

  nlohmann::json ep = nlohmann::json::array();
  for (const EPair& e : sets.e_pairs) {
    nlohmann::json r;
    r["p"] = vec2_json(e.p);
    r["q"] = vec2_json(e.q);
    r["p_sample"] = e.p_sample;
    r["datum_gap"] = e.datum_gap;
    ep.push_back(r);
  }
  j["e_pairs"] = ep;

  nlohmann::json sp = nlohmann::json::array();
  for (const Vec2& p : sets.sigma_points) sp.push_back(vec2_json(p));
  j["sigma_points"] = sp;
  return j;
}

std::string render_svg(const Frame& frame, const ScalarField& vf, const RayField& rays,
                       const SingularSets& sets, const std::string& title) {
  const GridSpec& g = frame.grid;
  const BBox& bb = frame.domain->bbox();
  double margin = 0.06 * std::max(bb.width(), bb.height());
  double w = bb.width() + 2 * margin, h = bb.height() + 2 * margin;
  double scale = 860.0 / std::max(w, h);
  double W = w * scale, H = h * scale + 40.0;  // legend strip at the bottom
  auto X = [&](double x) { return (x - bb.min.x + margin) * scale; };
  auto Y = [&](double y) { return (bb.max.y + margin - y) * scale; };

  auto st = vf.stats();
  double vlo = st.min, vhi = st.max;
  if (vhi - vlo < 1e-12) vhi = vlo + 1.0;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt6(W) << "\" height=\""
    << fmt6(H) << "\" viewBox=\"0 0 " << fmt6(W) << " " << fmt6(H) << "\">\n";
  s << "<rect id=\"bg\" width=\"" << fmt6(W) << "\" height=\"" << fmt6(H)
    << "\" fill=\"white\"/>\n";

  // v_f shading, subsampled to keep the document small
  int stride = std::max(1, std::max(g.nx, g.ny) / 160);
  double cell = g.h * stride;
  s << "<g id=\"vf\">\n";
  for (int j = 0; j < g.ny; j += stride)
    for (int i = 0; i < g.nx; i += stride) {
      std::size_t id = g.idx(i, j);
      if (!vf.mask[id]) continue;
      double t = (vf.values[id] - vlo) / (vhi - vlo);
      int shade = static_cast<int>(std::lround(245.0 - 195.0 * std::clamp(t, 0.0, 1.0)));
      Vec2 p = g.node(i, j);
      s << "<rect x=\"" << fmt6(X(p.x - 0.5 * cell)) << "\" y=\"" << fmt6(Y(p.y + 0.5 * cell))
        << "\" width=\"" << fmt6(cell * scale) << "\" height=\"" << fmt6(cell * scale)
        << "\" fill=\"rgb(" << shade << "," << shade << ",255)\"/>\n";
    }
  s << "</g>\n";

  // T hatched
  s << "<g id=\"t_set\" fill=\"rgb(180,220,180)\" fill-opacity=\"0.45\">\n";
  for (int j = 0; j < g.ny; j += stride)
    for (int i = 0; i < g.nx; i += stride) {
      if (!sets.t_mask[g.idx(i, j)]) continue;
      Vec2 p = g.node(i, j);
      s << "<rect x=\"" << fmt6(X(p.x - 0.5 * cell)) << "\" y=\"" << fmt6(Y(p.y + 0.5 * cell))
        << "\" width=\"" << fmt6(cell * scale) << "\" height=\"" << fmt6(cell * scale) << "\"/>\n";
    }
  s << "</g>\n";

  // subsampled rays
  int rstride = std::max(1, std::max(g.nx, g.ny) / 24);
  s << "<g id=\"rays\" stroke=\"rgb(120,120,120)\" stroke-width=\"0.7\">\n";
  for (int j = 0; j < g.ny; j += rstride)
    for (int i = 0; i < g.nx; i += rstride) {
      const RayNodeData& nd = rays.nodes[g.idx(i, j)];
      if (!nd.has_ray || nd.tau <= 0.0) continue;
      Vec2 a = g.node(i, j);
      s << "<line x1=\"" << fmt6(X(a.x)) << "\" y1=\"" << fmt6(Y(a.y)) << "\" x2=\""
        << fmt6(X(nd.q.x)) << "\" y2=\"" << fmt6(Y(nd.q.y)) << "\"/>\n";
    }
  s << "</g>\n";

  // Sigma (red) and D (orange)
  s << "<g id=\"sigma\" fill=\"rgb(220,60,60)\">\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!sets.sigma_mask[g.idx(i, j)]) continue;
      Vec2 p = g.node(i, j);
      s << "<rect x=\"" << fmt6(X(p.x) - 1.2) << "\" y=\"" << fmt6(Y(p.y) - 1.2)
        << "\" width=\"2.4\" height=\"2.4\"/>\n";
    }
  s << "</g>\n<g id=\"d_set\" fill=\"rgb(240,150,40)\">\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!sets.d_mask[g.idx(i, j)]) continue;
      Vec2 p = g.node(i, j);
      s << "<rect x=\"" << fmt6(X(p.x) - 1.4) << "\" y=\"" << fmt6(Y(p.y) - 1.4)
        << "\" width=\"2.8\" height=\"2.8\"/>\n";
    }
  s << "</g>\n";

  // J points
  s << "<g id=\"j_set\" fill=\"black\">\n";
  for (const Vec2& p : sets.j_points)
    s << "<circle cx=\"" << fmt6(X(p.x)) << "\" cy=\"" << fmt6(Y(p.y)) << "\" r=\"1.8\"/>\n";
  s << "</g>\n";

  // domain outline
  s << "<g id=\"outline\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\">\n";
  for (const auto& loop : frame.domain->loops()) {
    s << "<path d=\"M";
    for (std::size_t k = 0; k < loop.size(); ++k) {
      if (k) s << " L";
      s << fmt6(X(loop[k].x)) << " " << fmt6(Y(loop[k].y));
    }
    s << " Z\"/>\n";
  }
  s << "</g>\n";

  // legend
  s << "<g id=\"legend\" font-family=\"monospace\" font-size=\"12\">\n";
  s << "<text x=\"8\" y=\"" << fmt6(H - 24) << "\">" << title << "</text>\n";
  s << "<text x=\"8\" y=\"" << fmt6(H - 8) << "\">v_f range [" << fmt6(vlo) << ", " << fmt6(vhi)
    << "]; rays gray, Sigma red, D orange, J black, T green</text>\n";
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace mks
