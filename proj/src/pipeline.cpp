#include "mks/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

namespace mks {

namespace fs = std::filesystem;
using nlohmann::json;

ScalarField build_source_field(const Frame& frame, const std::function<double(const Vec2&)>& src) {
  ScalarField f(frame.grid);
  f.mask = frame.mask.inside;
  for (int j = 0; j < frame.grid.ny; ++j)
    for (int i = 0; i < frame.grid.nx; ++i) {
      std::size_t id = frame.grid.idx(i, j);
      if (f.mask[id]) f.values[id] = std::max(0.0, src(frame.grid.node(i, j)));
    }
  return f;
}

std::vector<uint8_t> build_support_mask(const Frame& frame,
                                        const std::function<double(const Vec2&)>& src) {
  // closed union of cells where the source is positive, at cell resolution
  const GridSpec& g = frame.grid;
  std::vector<uint8_t> node_mask(g.size(), 0);
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      std::size_t c[4] = {g.idx(i, j), g.idx(i + 1, j), g.idx(i, j + 1), g.idx(i + 1, j + 1)};
      bool any_inside = frame.mask.inside[c[0]] || frame.mask.inside[c[1]] ||
                        frame.mask.inside[c[2]] || frame.mask.inside[c[3]];
      if (!any_inside) continue;
      Vec2 center = g.node(i, j) + Vec2{0.5 * g.h, 0.5 * g.h};
      bool positive = src(center) > 0.0 || src(g.node(i, j)) > 0.0 ||
                      src(g.node(i + 1, j)) > 0.0 || src(g.node(i, j + 1)) > 0.0 ||
                      src(g.node(i + 1, j + 1)) > 0.0;
      if (!positive) continue;
      for (std::size_t id : c)
        if (frame.mask.inside[id]) node_mask[id] = 1;
    }
  return node_mask;
}

namespace {

json datum_json(const DatumReport& r) {
  json j;
  j["is_compatible"] = r.is_compatible;
  j["chord_ok"] = r.chord_ok;
  j["h4_margin"] = r.h4_margin;
  j["chord_margin"] = r.chord_margin;
  j["h4_worst_pair"] = json::array({r.h4_worst_pair.first, r.h4_worst_pair.second});
  j["chord_worst_pair"] = json::array({r.chord_worst_pair.first, r.chord_worst_pair.second});
  j["tolerance"] = r.tolerance;
  j["h4_pairs_tested"] = r.h4_pairs_tested;
  j["chord_pairs_tested"] = r.chord_pairs_tested;
  j["sample_count"] = r.sample_count;
  return j;
}

json membership_json(const MembershipReport& m) {
  json j;
  j["boundary_error"] = m.boundary_error;
  j["lipschitz_violation"] = m.lipschitz_violation;
  j["gradient_gauge_max"] = m.gradient_gauge_max;
  j["pairs_tested"] = m.pairs_tested;
  return j;
}

json residuals_json(const std::vector<WeakResidual>& rs) {
  json arr = json::array();
  for (const auto& r : rs) {
    json e;
    e["center"] = vec2_json(r.center);
    e["flux"] = r.flux;
    e["source"] = r.source;
    e["residual"] = r.residual;
    arr.push_back(e);
  }
  return arr;
}

bool field_has_nan(const ScalarField& f) {
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (f.mask[k] && !std::isfinite(f.values[k])) return true;
  return false;
}

}  // namespace

json diagnosis_json(const Scenario& sc, const PipelineResult& result) {
  json j;
  j["config"] = sc.effective;
  j["datum_check"] = datum_json(result.datum);
  json grid;
  grid["origin"] = vec2_json(sc.frame.grid.origin);
  grid["h"] = sc.frame.grid.h;
  grid["nx"] = sc.frame.grid.nx;
  grid["ny"] = sc.frame.grid.ny;
  long inside = 0;
  for (uint8_t m : sc.frame.mask.inside) inside += m;
  grid["inside_nodes"] = inside;
  grid["boundary_samples"] = sc.frame.samples.size();
  j["grid"] = grid;

  double c1, c2;
  sc.body.equivalence_constants(c1, c2);
  j["conditioning"] = {{"c1", c1}, {"c2", c2}, {"body", sc.body.family_name()},
                       {"body_c1_smooth", sc.body.is_c1()}};

  if (result.uphi) {
    json fields;
    fields["uphi"] = field_summary(result.uphi->u);
    if (result.uf) fields["uf"] = field_summary(*result.uf);
    if (result.vf) fields["vf"] = field_summary(*result.vf);
    if (result.direction) fields["div_theta"] = field_summary(result.direction->div_theta);
    j["fields"] = fields;
    MembershipReport mu = check_xphi_membership(sc.frame, result.uphi->u, 500, sc.seed);
    j["membership"] = {{"uphi", membership_json(mu)}};
    if (result.uf)
      j["membership"]["uf"] = membership_json(check_xphi_membership(sc.frame, *result.uf, 500,
                                                                    sc.seed + 1));
  }
  if (result.sets) j["singular"] = singular_sets_json(sc.frame, *result.sets);
  if (result.diagnosis) {
    const Diagnosis& d = *result.diagnosis;
    json dg;
    dg["t_measure"] = d.t_measure;
    dg["t_measure_tolerance"] = d.t_measure_tolerance;
    dg["v_unique"] = d.v_unique;
    dg["u_unique"] = d.u_unique;
    dg["j_in_support"] = d.j_in_support;
    dg["energy_gap"] = d.energy_gap;
    dg["j_points_total"] = d.j_points_total;
    dg["j_points_outside_support"] = d.j_points_outside_support;
    dg["weak_residuals"] = residuals_json(d.weak_residuals);
    dg["max_weak_residual"] = d.max_weak_residual;
    if (d.witness_residual)
      dg["witness_residual"] = *d.witness_residual;
    else
      dg["witness_residual"] = nullptr;
    j["diagnosis"] = dg;
  }
  j["exit_code"] = result.exit_code;
  return j;
}

PipelineResult run_pipeline(const Scenario& sc, Stage stage, bool quiet, bool write_files) {
  PipelineResult res;
  auto t0 = std::chrono::steady_clock::now();
  auto note = [&](const std::string& what) {
    if (quiet) return;
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "[" << sc.name << "] " << what << " (" << dt << " s)\n";
  };

  if (write_files) fs::create_directories(sc.output_dir);
  auto out_path = [&](const std::string& name) { return sc.output_dir + "/" + name; };

  res.datum = sc.domain->validate_datum(sc.frame.samples, sc.body);
  note("validate: H4 " + std::string(res.datum.is_compatible ? "ok" : "VIOLATED") + ", chord " +
       (res.datum.chord_ok ? "ok" : "violated"));
  if (!res.datum.is_compatible) {
    res.exit_code = 2;
    if (write_files)
      write_text_file(out_path("diagnosis.json"), diagnosis_json(sc, res).dump(2) + "\n");
    return res;
  }
  if (stage == Stage::Validate) {
    if (write_files)
      write_text_file(out_path("diagnosis.json"), diagnosis_json(sc, res).dump(2) + "\n");
    return res;
  }
  if (!sc.body.is_c1())
    throw ConfigError("body family '" + sc.body.family_name() +
                      "' is not C1-smooth; solving needs gauge gradients (validate still works)");

  try {
    res.uphi = solve_uphi(sc.frame);
    note("solve_uphi");
    res.source_field = build_source_field(sc.frame, sc.source);
    res.support_mask = build_support_mask(sc.frame, sc.source);
    res.uf = solve_uf(sc.frame, res.uphi->u, res.support_mask);
    note("solve_uf");
    res.rays = extract_rays(sc.frame, *res.uphi);
    note("extract_rays");
    SigmaMask sigma = detect_sigma(sc.frame, res.uphi->u);
    res.sets = detect_singular_sets(sc.frame, *res.uphi, *res.rays, sigma);
    note("singular_sets");
    res.direction = direction_divergence(sc.frame, res.uphi->u, sigma.mask);
    res.vf = solve_vf(sc.frame, *res.rays, *res.source_field, *res.direction);
    note("solve_vf");

    if (field_has_nan(res.uphi->u) || field_has_nan(*res.uf) || field_has_nan(*res.vf)) {
      res.exit_code = 3;
    }
  } catch (const NoVisibleBoundaryError& e) {
    if (!quiet) std::cout << "numerical failure: " << e.what() << "\n";
    res.exit_code = 3;
    return res;
  }

  if (write_files) {
    write_text_file(out_path("uphi.csv"), field_to_csv(res.uphi->u));
    write_text_file(out_path("uf.csv"), field_to_csv(*res.uf));
    write_text_file(out_path("vf.csv"), field_to_csv(*res.vf));
    write_text_file(out_path("div_theta.csv"), field_to_csv(res.direction->div_theta));
  }
  if (res.exit_code == 3) {
    if (write_files)
      write_text_file(out_path("diagnosis.json"), diagnosis_json(sc, res).dump(2) + "\n");
    return res;
  }

  if (static_cast<int>(stage) >= static_cast<int>(Stage::Diagnose)) {
    std::optional<double> witness_res;
    try {
      res.witness = nonuniqueness_witness(sc.frame, *res.uphi, *res.sets, *res.direction);
      witness_res = res.witness->max_residual;
      note("witness");
    } catch (const EmptyTError&) {
      witness_res = std::nullopt;
    }
    res.diagnosis = diagnose(sc.frame, res.uphi->u, *res.uf, *res.vf, *res.sets, *res.direction,
                             *res.source_field, res.support_mask, witness_res);
    note("diagnose");
  }

  if (write_files) {
    if (res.sets)
      write_text_file(out_path("singular_sets.json"),
                      singular_sets_json(sc.frame, *res.sets).dump(2) + "\n");
    write_text_file(out_path("diagnosis.json"), diagnosis_json(sc, res).dump(2) + "\n");
    if (static_cast<int>(stage) >= static_cast<int>(Stage::Render)) {
      write_text_file(out_path("scene.svg"),
                      render_svg(sc.frame, *res.vf, *res.rays, *res.sets, sc.name));
      note("render");
    }
  }
  return res;
}

}  // namespace mks
