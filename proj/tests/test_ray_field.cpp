#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "mks/config.hpp"
#include "mks/pipeline.hpp"

using namespace mks;

namespace {

struct Solved {
  Scenario sc;
  LaxHopfSolution uphi;
  RayField rays;
  SigmaMask sigma;
  SingularSets sets;
};

Solved solve_preset(const std::string& name, int res, int samples, int vertices = 0) {
  nlohmann::json c = scenario_preset(name);
  if (vertices > 0) c["domain"]["vertices"] = vertices;
  Solved out{build_scenario(c, res, samples), {}, {}, {}, {}};
  out.uphi = solve_uphi(out.sc.frame);
  out.rays = extract_rays(out.sc.frame, out.uphi);
  out.sigma = detect_sigma(out.sc.frame, out.uphi.u);
  out.sets = detect_singular_sets(out.sc.frame, out.uphi, out.rays, out.sigma);
  return out;
}

const Solved& square() {
  static Solved s = solve_preset("square-tray", 64, 360);
  return s;
}
const Solved& disk() {
  static Solved s = solve_preset("disk-homogeneous", 64, 320, 320);
  return s;
}
const Solved& hexagon() {
  static Solved s = solve_preset("hexagon-lens", 64, 480);
  return s;
}

std::pair<int, int> node_at(const Frame& f, const Vec2& p) {
  return {static_cast<int>(std::lround((p.x - f.grid.origin.x) / f.grid.h)),
          static_cast<int>(std::lround((p.y - f.grid.origin.y) / f.grid.h))};
}

}  // namespace

TEST_CASE("projection clusters") {
  // square tray: a single cluster at the foot of the vertical
  auto reps = projection_clusters(square().sc.frame, {0.5, 0.3});
  REQUIRE(reps.size() == 1);
  const auto& p = square().sc.frame.samples[reps[0]];
  CHECK(std::abs(p.point.x - 0.5) < 0.02);
  CHECK(p.point.y == doctest::Approx(0.0));

  // disk center sees the whole circle
  auto dreps = projection_clusters(disk().sc.frame, {0.0, 0.0});
  CHECK(dreps.size() >= 2);

  // hexagon: one cluster on the top side, two on the midline
  auto h1 = projection_clusters(hexagon().sc.frame, {0.0, 0.5});
  REQUIRE(h1.size() == 1);
  CHECK(std::abs(hexagon().sc.frame.samples[h1[0]].point.y - 1.0) < 1e-9);
  auto h2 = projection_clusters(hexagon().sc.frame, {0.5, 0.0});
  CHECK(h2.size() == 2);
}

TEST_CASE("ray extraction on the square tray") {
  const Solved& s = square();
  auto [i, j] = node_at(s.sc.frame, {0.5, 0.3});
  RayNodeData nd = ray_of(s.sc.frame, s.uphi, i, j, &s.rays);
  double h = s.sc.frame.h();
  CHECK(nd.has_ray);
  CHECK(nd.boundary_exit);
  CHECK(std::abs(nd.dir.x) < 0.01);
  CHECK(nd.dir.y == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(nd.tau == doctest::Approx(0.7).epsilon(0.03));
  CHECK(std::abs(nd.q.x - 0.5) < 2 * h);
  CHECK(nd.q.y == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ray extraction on the disk") {
  const Solved& s = disk();
  double h = s.sc.frame.h();
  auto [i, j] = node_at(s.sc.frame, {0.5, 0.0});
  RayNodeData nd = ray_of(s.sc.frame, s.uphi, i, j, &s.rays);
  CHECK(nd.has_ray);
  CHECK_FALSE(nd.boundary_exit);
  CHECK(nd.dir.x == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(std::abs(nd.dir.y) < 0.01);
  CHECK(nd.tau == doctest::Approx(0.5).epsilon(2.5 * h / 0.5));
  CHECK(norm(nd.q) <= 3 * h);  // q lands in J near the center

  // the center itself carries multiple projections
  auto [ci, cj] = node_at(s.sc.frame, {0.0, 0.0});
  CHECK_THROWS_AS(ray_of(s.sc.frame, s.uphi, ci, cj, &s.rays), MultivaluedDirectionError);
}

TEST_CASE("tau is positive away from the closure of D") {
  const Solved& s = disk();
  const GridSpec& g = s.sc.frame.grid;
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> pick_i(0, g.nx - 1), pick_j(0, g.ny - 1);
  int tested = 0, viol = 0;
  while (tested < 300) {
    int i = pick_i(rng), j = pick_j(rng);
    std::size_t id = g.idx(i, j);
    if (!s.sc.frame.mask.inside[id] || s.rays.nodes[id].in_d) continue;
    bool near_d = false;
    for (int dj = -2; dj <= 2 && !near_d; ++dj)
      for (int di = -2; di <= 2 && !near_d; ++di) {
        int ii = i + di, jj = j + dj;
        if (g.valid(ii, jj) && s.sets.d_mask[g.idx(ii, jj)]) near_d = true;
      }
    if (near_d) continue;
    ++tested;
    if (!(s.rays.nodes[id].tau > 0.0)) ++viol;
  }
  CHECK(viol == 0);
}

TEST_CASE("sigma detection") {
  // the square-tray profile is smooth: no flags
  long flags = 0;
  for (uint8_t m : square().sigma.mask) flags += m;
  CHECK(flags == 0);

  // disk: flags concentrate at the center
  double worst = 0.0;
  const GridSpec& g = disk().sc.frame.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (disk().sigma.mask[g.idx(i, j)]) worst = std::max(worst, norm(g.node(i, j)));
  CHECK(worst <= 8.0 * g.h);

  // hexagon: flags cover {y = 0} and {|x| = 1} and nothing else
  const Solved& s = hexagon();
  const GridSpec& hg = s.sc.frame.grid;
  double hh = hg.h;
  long off_lines = 0;
  for (int j = 0; j < hg.ny; ++j)
    for (int i = 0; i < hg.nx; ++i) {
      if (!s.sigma.mask[hg.idx(i, j)]) continue;
      Vec2 p = hg.node(i, j);
      if (std::abs(p.y) > 1.5 * hh && std::abs(std::abs(p.x) - 1.0) > 1.5 * hh) ++off_lines;
    }
  CHECK(off_lines == 0);
  // and the midline is covered within one cell
  int j0 = static_cast<int>(std::lround((0.0 - hg.origin.y) / hh));
  int missing = 0;
  for (int i = 0; i < hg.nx; ++i) {
    Vec2 p = hg.node(i, j0);
    if (std::abs(p.x) >= 2.0 - 6 * hh) continue;
    if (!s.sc.frame.mask.interior[hg.idx(i, j0)]) continue;
    bool cov = false;
    for (int dj = -1; dj <= 1 && !cov; ++dj)
      for (int di = -1; di <= 1 && !cov; ++di)
        if (hg.valid(i + di, j0 + dj) && s.sigma.mask[hg.idx(i + di, j0 + dj)]) cov = true;
    if (!cov) ++missing;
  }
  CHECK(missing == 0);
}

TEST_CASE("hexagon D flags hug the midline") {
  const Solved& s = hexagon();
  const GridSpec& g = s.sc.frame.grid;
  long off = 0, total = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (s.sets.d_mask[g.idx(i, j)]) {
        ++total;
        if (std::abs(g.node(i, j).y) > 1.5 * g.h) ++off;
      }
  CHECK(total > 0);
  CHECK(off == 0);
}

TEST_CASE("singular sets on the square tray") {
  const Solved& s = square();
  double h = s.sc.frame.h();
  CHECK(s.sets.t_measure >= 0.9);
  CHECK(s.sets.e_pairs.size() > 50);
  for (const EPair& e : s.sets.e_pairs) {
    CHECK(std::abs(e.p.y) < 1e-9);
    CHECK(std::abs(e.q.y - 1.0) < 1e-9);
    CHECK(std::abs(e.p.x - e.q.x) < 3 * h);
    CHECK(std::abs(e.datum_gap) <= 3 * h * 1.0001);
  }
}

TEST_CASE("u_phi is affine with unit slope along E segments") {
  const Solved& s = square();
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pick(0, s.sets.e_pairs.size() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const EPair& e = s.sets.e_pairs[pick(rng)];
    double len = s.sc.body.polar_gauge(e.q - e.p);
    double phi_p = s.sc.frame.samples[e.p_sample].datum;
    for (int k = 1; k < 10; ++k) {
      double t = k / 10.0;
      Vec2 z = e.p + (e.q - e.p) * t;
      double uv = s.uphi.u.interpolate(z);
      CHECK(std::abs(uv - (phi_p + t * len)) <= 3 * s.sc.frame.h());
    }
  }
}

TEST_CASE("disk: D and J collapse to the center, T is empty") {
  const Solved& s = disk();
  const GridSpec& g = s.sc.frame.grid;
  double dmax = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (s.sets.d_mask[g.idx(i, j)]) dmax = std::max(dmax, norm(g.node(i, j)));
  CHECK(dmax <= 2.0 * g.h);
  double jmax = 0.0;
  for (const Vec2& q : s.sets.j_points) jmax = std::max(jmax, norm(q));
  // the endpoint spread scales with the boundary chord length (miss distance
  // of polygon chord normals), a few cells at this resolution
  CHECK(jmax <= 6.0 * g.h);
  CHECK(s.sets.t_measure <= 5.0 * g.h * s.sc.domain->perimeter());
}

TEST_CASE("D lies inside Sigma (one cell of slack)") {
  CHECK(disk().sets.d_outside_sigma == 0);
  CHECK(hexagon().sets.d_outside_sigma == 0);
  CHECK(square().sets.d_outside_sigma == 0);
}

TEST_CASE("projection constancy along rays") {
  const Solved& s = disk();
  const GridSpec& g = s.sc.frame.grid;
  std::mt19937_64 rng(37);
  std::uniform_int_distribution<int> pick_i(0, g.nx - 1), pick_j(0, g.ny - 1);
  int tested = 0, viol = 0;
  while (tested < 60) {
    int i = pick_i(rng), j = pick_j(rng);
    std::size_t id = g.idx(i, j);
    if (!s.sc.frame.mask.inside[id]) continue;
    const RayNodeData& nd = s.rays.nodes[id];
    if (nd.in_d || !nd.has_ray || nd.tau < 6 * g.h) continue;
    ++tested;
    Vec2 x = g.node(i, j);
    double ref_arc = s.sc.frame.samples[nd.primary].arc;
    double perim = s.sc.domain->loop_perimeter(nd.cluster_loop);
    for (int k = 1; k <= 5; ++k) {
      double t = nd.tau * k / 6.0;
      auto reps = projection_clusters(s.sc.frame, x + nd.dir * t);
      REQUIRE(!reps.empty());
      const auto& sp = s.sc.frame.samples[reps[0]];
      double gap = std::abs(sp.arc - ref_arc);
      gap = std::min(gap, perim - gap);
      if (sp.loop != nd.cluster_loop ||
          gap > nd.arc_halfwidth + std::max(s.rays.cluster_gap, 0.02 * perim) + 1e-9)
        ++viol;
    }
  }
  CHECK(viol == 0);
}

TEST_CASE("u_phi grows affinely along rays from the projection") {
  const Solved& s = disk();
  const GridSpec& g = s.sc.frame.grid;
  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> pick_i(0, g.nx - 1), pick_j(0, g.ny - 1);
  int tested = 0, viol = 0;
  while (tested < 50) {
    int i = pick_i(rng), j = pick_j(rng);
    std::size_t id = g.idx(i, j);
    if (!s.sc.frame.mask.inside[id]) continue;
    const RayNodeData& nd = s.rays.nodes[id];
    if (nd.in_d || !nd.has_ray || nd.tau < 4 * g.h || nd.primary < 0) continue;
    ++tested;
    Vec2 x = g.node(i, j);
    const auto& p = s.sc.frame.samples[nd.primary];
    double r0 = s.sc.body.polar_gauge(x - p.point);
    for (int k = 0; k <= 10; ++k) {
      // 10 points of [p(x), q(x)] against phi(p) + rho0(z - p)
      Vec2 z = p.point + (x - p.point) * (1e-3 + (1.0 - 2e-3) * k / 10.0);
      Vec2 zq = x + nd.dir * (nd.tau * k / 10.0);
      double affine1 = p.datum + s.sc.body.polar_gauge(z - p.point);
      double affine2 = p.datum + r0 + nd.tau * k / 10.0;
      double u1 = s.uphi.u.interpolate(z);
      double u2 = s.uphi.u.interpolate(zq);
      if (!std::isnan(u1) && std::abs(u1 - affine1) > 3 * g.h) ++viol;
      if (!std::isnan(u2) && std::abs(u2 - affine2) > 3 * g.h) ++viol;
    }
  }
  CHECK(viol == 0);
}

TEST_CASE("J cell area shrinks under coupled refinement") {
  // disk and ellipse: halving h (with the boundary refined in step) at least
  // halves the area of the cells containing J points
  auto j_area = [](const Solved& s) {
    const GridSpec& g = s.sc.frame.grid;
    std::set<std::pair<long, long>> cells;
    for (const Vec2& q : s.sets.j_points)
      cells.insert({std::lround((q.x - g.origin.x) / g.h), std::lround((q.y - g.origin.y) / g.h)});
    return cells.size() * g.h * g.h;
  };
  Solved coarse_disk = solve_preset("disk-homogeneous", 32, 160, 160);
  double a_coarse = j_area(coarse_disk);
  double a_fine = j_area(disk());
  CHECK(a_fine <= 0.5 * a_coarse * 1.05);

  Solved coarse_ell = solve_preset("ellipse-foci", 32, 180, 180);
  Solved fine_ell = solve_preset("ellipse-foci", 64, 360, 360);
  CHECK(j_area(fine_ell) <= 0.5 * j_area(coarse_ell) * 1.05);
}
