// Acceptance suite: runs the paper-derived scenarios at desk-scale defaults
// (h = 1/128 on unit-scale domains, 720 boundary samples) and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "mks/config.hpp"
#include "mks/pipeline.hpp"

using namespace mks;

namespace {

int g_failures = 0;

void criterion(const std::string& label, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", label.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

struct Solved {
  Scenario sc;
  PipelineResult res;
  double seconds = 0.0;
};

Solved run_preset(const std::string& name, int res = 0, int samples = 0, int vertices = 0,
                  Stage stage = Stage::Diagnose) {
  nlohmann::json c = scenario_preset(name);
  if (vertices > 0) c["domain"]["vertices"] = vertices;
  Solved out{build_scenario(c, res, samples), {}, 0.0};
  auto t0 = std::chrono::steady_clock::now();
  out.res = run_pipeline(out.sc, stage, true, false);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  [%s solved in %.1f s, grid %dx%d, h = %g]\n", name.c_str(), out.seconds,
              out.sc.frame.grid.nx, out.sc.frame.grid.ny, out.sc.frame.grid.h);
  return out;
}

double max_u_error(const Solved& s, const std::function<double(const Vec2&)>& exact) {
  const GridSpec& g = s.sc.frame.grid;
  double err = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t id = g.idx(i, j);
      if (!s.sc.frame.mask.inside[id]) continue;
      err = std::max(err, std::abs(s.res.uphi->u.values[id] - exact(g.node(i, j))));
    }
  return err;
}

// 1-D radial oracle for the disk: v * alpha solves d(m)/dr = f r with
// alpha(r) = r (regular-case formula with curvature 1), so v = m / r
double radial_vf_oracle(double r, const std::function<double(double)>& f) {
  int n = 4000;
  double m = 0.0, rr = 0.0, dr = r / n;
  for (int k = 0; k < n; ++k) {
    auto g = [&](double rho) { return f(rho) * rho; };
    double k1 = g(rr), k2 = g(rr + 0.5 * dr), k3 = g(rr + 0.5 * dr), k4 = g(rr + dr);
    m += dr / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    rr += dr;
  }
  return m / r;
}

char buf[512];

}  // namespace

// ---------------------------------------------------------------------------

static void criterion_1(const Solved& sq) {
  const GridSpec& g = sq.sc.frame.grid;
  double h = g.h;
  double uerr = max_u_error(sq, [](const Vec2& p) { return p.y; });
  double verr = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t id = g.idx(i, j);
      if (!sq.sc.frame.mask.inside[id]) continue;
      Vec2 p = g.node(i, j);
      if (p.y > 1.0 - 4 * h) continue;
      verr = std::max(verr, std::abs(sq.res.vf->values[id] - (1.0 - p.y)));
    }
  const Diagnosis& d = *sq.res.diagnosis;
  bool pass = uerr <= 2 * h && verr <= 0.05 && !d.v_unique && d.t_measure >= 0.9 && d.u_unique;
  std::snprintf(buf, sizeof(buf),
                "max|u-y| = %.2e (<= 2h = %.2e), max|v-(1-y)| = %.2e (<= 0.05), "
                "v_unique = %s (t_measure = %.3f >= 0.9), u_unique = %s",
                uerr, 2 * h, verr, d.v_unique ? "true" : "false", d.t_measure,
                d.u_unique ? "true" : "false");
  criterion("criterion 1 (square tray)", pass, buf);
}

static void criterion_2(const Solved& hex) {
  const GridSpec& g = hex.sc.frame.grid;
  double h = g.h;
  const double s2 = std::sqrt(2.0);
  double uerr = max_u_error(hex, [&](const Vec2& p) {
    double ax = std::abs(p.x), ay = std::abs(p.y);
    return ax <= 1.0 ? s2 * (1.0 - ay) : s2 * (2.0 - ax - ay);
  });

  long sigma_off = 0, d_off = 0, line_missing = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t id = g.idx(i, j);
      Vec2 p = g.node(i, j);
      if (hex.res.sets->sigma_mask[id] && std::abs(p.y) > 1.5 * h &&
          std::abs(std::abs(p.x) - 1.0) > 1.5 * h)
        ++sigma_off;
      if (hex.res.sets->d_mask[id] && std::abs(p.y) > 1.5 * h) ++d_off;
    }
  // coverage of {y = 0} and {|x| = 1} within one cell
  auto covered = [&](int i, int j) {
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (g.valid(i + di, j + dj) && hex.res.sets->sigma_mask[g.idx(i + di, j + dj)])
          return true;
    return false;
  };
  int j0 = static_cast<int>(std::lround((0.0 - g.origin.y) / g.h));
  for (int i = 0; i < g.nx; ++i) {
    Vec2 p = g.node(i, j0);
    if (std::abs(p.x) < 2.0 - 6 * h && hex.sc.frame.mask.interior[g.idx(i, j0)] &&
        !covered(i, j0))
      ++line_missing;
  }
  for (double xl : {-1.0, 1.0}) {
    int i0 = static_cast<int>(std::lround((xl - g.origin.x) / g.h));
    for (int j = 0; j < g.ny; ++j) {
      Vec2 p = g.node(i0, j);
      if (std::abs(p.y) > 2 * h && std::abs(p.y) < 1.0 - 6 * h &&
          hex.sc.frame.mask.interior[g.idx(i0, j)] && !covered(i0, j))
        ++line_missing;
    }
  }
  bool pass = uerr <= 4 * h && sigma_off == 0 && d_off == 0 && line_missing == 0;
  std::snprintf(buf, sizeof(buf),
                "max|u0 - closed form| = %.2e (<= 4h = %.2e), sigma off-lines = %ld, "
                "sigma line gaps = %ld, D off the midline = %ld",
                uerr, 4 * h, sigma_off, line_missing, d_off);
  criterion("criterion 2 (hexagon with lens body)", pass, buf);
}

static void criterion_3(const Solved& ell) {
  double h = ell.sc.frame.grid.h;
  double d_j_seg = 0.0;
  for (const Vec2& q : ell.res.sets->j_points)
    d_j_seg = std::max(d_j_seg, dist_point_segment(q, {-1.5, 0}, {1.5, 0}));
  double d_seg_j = 0.0;
  for (int k = 0; k <= 600; ++k) {
    Vec2 s{-1.5 + 3.0 * k / 600, 0.0};
    double dmin = std::numeric_limits<double>::infinity();
    for (const Vec2& q : ell.res.sets->j_points) dmin = std::min(dmin, dist(s, q));
    d_seg_j = std::max(d_seg_j, dmin);
  }
  double hd = std::max(d_j_seg, d_seg_j);
  bool pass = hd <= 5 * h;
  std::snprintf(buf, sizeof(buf),
                "Hausdorff(J, [-1.5,1.5]x{0}) = %.2e (J->seg %.2e, seg->J %.2e; <= 5h = %.2e)",
                hd, d_j_seg, d_seg_j, 5 * h);
  criterion("criterion 3 (ellipse focal segment)", pass, buf);
}

static void criterion_4(const Solved& disk) {
  // oracle first: the 1-D radial ODE reproduces v(r) = r/2 analytically
  auto one = [](double) { return 1.0; };
  double oracle_err = 0.0;
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9})
    oracle_err = std::max(oracle_err, std::abs(radial_vf_oracle(r, one) - r / 2));
  const GridSpec& g = disk.sc.frame.grid;
  double h = g.h;
  double worst = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t id = g.idx(i, j);
      if (!disk.sc.frame.mask.inside[id]) continue;
      double r = norm(g.node(i, j));
      if (r < 0.1 || r > 1.0 - 4 * h) continue;
      double expect = r / 2;
      worst = std::max(worst, std::abs(disk.res.vf->values[id] - expect) / expect);
    }
  bool pass = oracle_err <= 1e-9 && worst <= 0.05;
  std::snprintf(buf, sizeof(buf),
                "radial oracle vs r/2: %.1e; max rel |v - r/2| = %.3f (<= 0.05) on 0.1 <= r <= 1-4h",
                oracle_err, worst);
  criterion("criterion 4 (disk transport density)", pass, buf);
}

static void criterion_5(const Solved& sq, const Solved& disk) {
  auto max_resid = [](const std::vector<WeakResidual>& rs) {
    double m = 0.0;
    for (const auto& r : rs) m = std::max(m, r.residual);
    return m;
  };
  double r_sq = max_resid(sq.res.diagnosis->weak_residuals);
  double r_disk = max_resid(disk.res.diagnosis->weak_residuals);

  const GridSpec& g = sq.sc.frame.grid;
  ScalarField vfam(g);
  vfam.mask = sq.sc.frame.mask.inside;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Vec2 p = g.node(i, j);
      vfam.values[g.idx(i, j)] = 1.0 - p.y + p.x * p.x;
    }
  auto bumps = make_test_bumps(sq.sc.frame);
  double r_fam = max_resid(weak_residual(sq.sc.frame, vfam, *sq.res.direction,
                                         *sq.res.source_field, bumps));
  int n_sq = static_cast<int>(sq.res.diagnosis->weak_residuals.size());
  int n_disk = static_cast<int>(disk.res.diagnosis->weak_residuals.size());
  bool pass = r_sq <= 0.05 && r_disk <= 0.05 && r_fam <= 0.05 && n_sq == 16 && n_disk == 16;
  std::snprintf(buf, sizeof(buf),
                "max residuals: square %.4f (16 bumps: %d), disk %.4f (16 bumps: %d), "
                "non-unique family 1-y+x^2: %.4f (all <= 0.05)",
                r_sq, n_sq, r_disk, n_disk, r_fam);
  criterion("criterion 5 (weak-equation residuals)", pass, buf);
}

static void criterion_6(const Solved& sq) {
  bool have = sq.res.witness.has_value();
  double err = 1e300, resid = 1e300;
  if (have) {
    const GridSpec& g = sq.sc.frame.grid;
    double h = g.h;
    err = 0.0;
    // measured away from the boundary band: T detection is corridor-limited
    // within ~h of the walls, mirroring the 4h carve-out of criterion 1
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        std::size_t id = g.idx(i, j);
        if (!sq.sc.frame.mask.inside[id]) continue;
        Vec2 p = g.node(i, j);
        if (p.x < 4 * h || p.x > 1 - 4 * h || p.y < 4 * h || p.y > 1 - 4 * h) continue;
        err = std::max(err, std::abs(sq.res.witness->v_plus.values[id] +
                                     sq.res.witness->v_minus.values[id] - 1.0));
      }
    resid = sq.res.witness->max_residual;
  }
  bool pass = have && err <= 0.05 && resid <= 0.05;
  std::snprintf(buf, sizeof(buf),
                "max|v+ + v- - 1| = %.2e (<= 0.05, 4h inside), homogeneous residual = %.4f (<= 0.05)",
                err, resid);
  criterion("criterion 6 (witness construction)", pass, buf);
}

static void criterion_7() {
  Scenario sc = load_scenario("annulus-sector");
  DatumReport rep = sc.domain->validate_datum(sc.frame.samples, sc.body);
  const double eps = 0.5;
  bool pair_ok = false;
  double viol = -rep.chord_margin;
  if (rep.chord_worst_pair.first >= 0) {
    const auto& y1 = sc.frame.samples[rep.chord_worst_pair.first];
    const auto& y2 = sc.frame.samples[rep.chord_worst_pair.second];
    pair_ok = dist(y1.point, {-1.0, 0.0}) < 1e-6 &&
              dist(y2.point, {std::cos(M_PI - eps), std::sin(M_PI - eps)}) < 1e-6;
  }
  double expect = (2.0 * M_PI - eps) - 2.0 * std::sin(eps / 2.0);
  bool pass = rep.is_compatible && !rep.chord_ok && pair_ok &&
              std::abs(viol - expect) < 1e-6;
  std::snprintf(buf, sizeof(buf),
                "H4 accepted (margin %.2e within tol %.2e); chord violated at the paper's pair "
                "by %.6f (expected 2pi-eps-2sin(eps/2) = %.6f)",
                rep.h4_margin, rep.tolerance, viol, expect);
  criterion("criterion 7 (annulus datum)", pass, buf);
}

static void criterion_8(const Solved& sq, const Solved& disk, const Solved& hex,
                        const Solved& ell) {
  long viol = 0;
  std::string notes;

  // gauge suite: 1000 trials per family
  {
    std::vector<ConvexBody> bodies = {ConvexBody::ball(1.0), ConvexBody::ball(2.0),
                                      ConvexBody::ellipse(0.25, 0.0, 1.0),
                                      ConvexBody::ellipse(0.5, 0.2, 1.5),
                                      ConvexBody::p_ball(3.0), ConvexBody::p_ball(1.5),
                                      ConvexBody::lens(true)};
    std::mt19937_64 rng(20260808);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI), mag(0.1, 4.0), tdist(0.0, 10.0);
    long bad = 0;
    for (const auto& body : bodies) {
      for (int trial = 0; trial < 1000; ++trial) {
        double a = ang(rng), b = ang(rng);
        Vec2 xi = Vec2{std::cos(a), std::sin(a)} * mag(rng);
        Vec2 eta = Vec2{std::cos(b), std::sin(b)} * mag(rng);
        double t = tdist(rng);
        double gx = body.gauge(xi);
        if (std::abs(body.gauge(xi * t) - t * gx) > 1e-12 * std::max(1.0, t * gx)) ++bad;
        if (body.gauge(xi + eta) > body.gauge(xi) + body.gauge(eta) + 1e-12) ++bad;
        Vec2 grad = body.gauge_gradient(xi);
        if (std::abs(dot(grad, xi) - gx) > 1e-10) ++bad;
        const double step = 1e-6;
        double fdx = (body.gauge({xi.x + step, xi.y}) - body.gauge({xi.x - step, xi.y})) / (2 * step);
        double fdy = (body.gauge({xi.x, xi.y + step}) - body.gauge({xi.x, xi.y - step})) / (2 * step);
        if (std::abs(fdx - grad.x) > 1e-5 || std::abs(fdy - grad.y) > 1e-5) ++bad;
      }
    }
    viol += bad;
    notes += "gauge " + std::to_string(bad);
  }

  // Lipschitz and maximality invariants, 500 random node pairs per scenario
  {
    long bad = 0;
    for (const Solved* s : {&sq, &disk, &hex, &ell}) {
      MembershipReport rep = check_xphi_membership(s->sc.frame, s->res.uphi->u, 500, s->sc.seed);
      if (rep.lipschitz_violation > 1e-9) ++bad;
      for (std::size_t k = 0; k < s->sc.frame.grid.size(); ++k) {
        if (!s->sc.frame.mask.inside[k]) continue;
        if (s->res.uf->values[k] > s->res.uphi->u.values[k] + 1e-10) ++bad;
      }
    }
    viol += bad;
    notes += ", lipschitz/maximality " + std::to_string(bad);
  }

  // projection constancy and D subset Sigma
  {
    long bad = 0;
    for (const Solved* s : {&sq, &disk, &hex, &ell}) bad += s->res.sets->d_outside_sigma;
    const Frame& f = disk.sc.frame;
    const GridSpec& g = f.grid;
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> pi(0, g.nx - 1), pj(0, g.ny - 1);
    int tested = 0;
    while (tested < 100) {
      int i = pi(rng), j = pj(rng);
      std::size_t id = g.idx(i, j);
      if (!f.mask.inside[id]) continue;
      const RayNodeData& nd = disk.res.rays->nodes[id];
      if (nd.in_d || !nd.has_ray || nd.tau < 6 * g.h) continue;
      ++tested;
      double perim = f.domain->loop_perimeter(nd.cluster_loop);
      for (int k = 1; k <= 5; ++k) {
        auto reps = projection_clusters(f, g.node(i, j) + nd.dir * (nd.tau * k / 6.0));
        if (reps.empty()) {
          ++bad;
          continue;
        }
        const auto& sp = f.samples[reps[0]];
        double gapv = std::abs(sp.arc - f.samples[nd.primary].arc);
        gapv = std::min(gapv, perim - gapv);
        if (sp.loop != nd.cluster_loop ||
            gapv > nd.arc_halfwidth + std::max(disk.res.rays->cluster_gap, 0.02 * perim) + 1e-9)
          ++bad;
      }
    }
    viol += bad;
    notes += ", rays " + std::to_string(bad);
  }

  // transport invariants: non-negativity, complementarity, linearity in f
  {
    long bad = 0;
    for (const Solved* s : {&sq, &disk}) {
      const GridSpec& g = s->sc.frame.grid;
      double vmax = s->res.vf->stats().max;
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          std::size_t id = g.idx(i, j);
          if (!s->sc.frame.mask.inside[id]) continue;
          if (s->res.vf->values[id] < -1e-10) ++bad;
          if (s->res.vf->values[id] <= 0.01 * vmax) continue;
          if (!s->sc.frame.mask.interior[id]) continue;
          bool stencil =
              s->sc.frame.mask.interior[id - 1] && s->sc.frame.mask.interior[id + 1] &&
              s->sc.frame.mask.interior[id - g.nx] && s->sc.frame.mask.interior[id + g.nx];
          if (!stencil) continue;
          bool near_sigma = false;
          for (int dj = -2; dj <= 2 && !near_sigma; ++dj)
            for (int di = -2; di <= 2 && !near_sigma; ++di)
              if (g.valid(i + di, j + dj) && s->res.sets->sigma_mask[g.idx(i + di, j + dj)])
                near_sigma = true;
          if (near_sigma) continue;
          double gx =
              (s->res.uphi->u.values[id + 1] - s->res.uphi->u.values[id - 1]) / (2 * g.h);
          double gy = (s->res.uphi->u.values[id + g.nx] - s->res.uphi->u.values[id - g.nx]) /
                      (2 * g.h);
          double gg = s->sc.body.gauge({gx, gy});
          if (gg < 1 - 5 * g.h || gg > 1 + 5 * g.h) ++bad;
        }
    }
    // linearity in f at a lighter resolution
    nlohmann::json c = scenario_preset("disk-homogeneous");
    c["domain"]["vertices"] = 320;
    Scenario sc1 = build_scenario(c, 64, 320);
    c["source"] = {{"kind", "constant"}, {"value", 2.0}};
    Scenario sc2 = build_scenario(c, 64, 320);
    PipelineResult r1 = run_pipeline(sc1, Stage::Solve, true, false);
    PipelineResult r2 = run_pipeline(sc2, Stage::Solve, true, false);
    for (std::size_t k = 0; k < sc1.frame.grid.size(); ++k) {
      if (!sc1.frame.mask.inside[k]) continue;
      double a = r1.vf->values[k];
      if (std::abs(a) > 1e-12 &&
          std::abs(r2.vf->values[k] - 2 * a) > 1e-9 * std::abs(2 * a))
        ++bad;
    }
    viol += bad;
    notes += ", transport " + std::to_string(bad);
  }

  std::snprintf(buf, sizeof(buf), "violations beyond stated tolerances: %ld (%s)", viol,
                notes.c_str());
  criterion("criterion 8 (property suites)", viol == 0, buf);
}

static void criterion_9(const Solved& sq, const Solved& disk) {
  // halving h with the boundary resolution scaled in step
  Solved sq_c = run_preset("square-tray", 64, 320, 0, Stage::Solve);
  Solved disk_c = run_preset("disk-homogeneous", 64, 320, 320, Stage::Solve);

  auto u_err_sq = [](const Solved& s) {
    return max_u_error(s, [](const Vec2& p) { return p.y; });
  };
  auto u_err_disk = [](const Solved& s) {
    return max_u_error(s, [](const Vec2& p) { return 1.0 - norm(p); });
  };
  auto v_err_sq = [](const Solved& s) {
    const GridSpec& g = s.sc.frame.grid;
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        std::size_t id = g.idx(i, j);
        if (!s.sc.frame.mask.inside[id]) continue;
        Vec2 p = g.node(i, j);
        if (p.y > 1.0 - 4 * g.h) continue;
        err = std::max(err, std::abs(s.res.vf->values[id] - (1.0 - p.y)));
      }
    return err;
  };
  auto v_err_disk = [](const Solved& s) {
    const GridSpec& g = s.sc.frame.grid;
    double err = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        std::size_t id = g.idx(i, j);
        if (!s.sc.frame.mask.inside[id]) continue;
        double r = norm(g.node(i, j));
        if (r < 0.1 || r > 1.0 - 4 * g.h) continue;
        err = std::max(err, std::abs(s.res.vf->values[id] - r / 2) / (r / 2));
      }
    return err;
  };

  double usq_c = u_err_sq(sq_c), usq_f = u_err_sq(sq);
  double ud_c = u_err_disk(disk_c), ud_f = u_err_disk(disk);
  double vsq_c = v_err_sq(sq_c), vsq_f = v_err_sq(sq);
  double vd_c = v_err_disk(disk_c), vd_f = v_err_disk(disk);
  // a comparison below the solver's accuracy floor carries no convergence
  // information (the square profile is exact up to the boundary-minimization
  // tolerance at every resolution)
  const double floor_u = 1e-8, floor_v = 1e-6;
  auto halves = [&](double fine, double coarse) { return fine <= 0.5 * coarse || fine <= floor_u; };
  auto reduces = [&](double fine, double coarse) { return fine < coarse || fine <= floor_v; };
  bool pass = halves(usq_f, usq_c) && halves(ud_f, ud_c) && reduces(vsq_f, vsq_c) &&
              reduces(vd_f, vd_c);
  std::snprintf(buf, sizeof(buf),
                "u errors halve: square %.2e -> %.2e, disk %.2e -> %.2e; "
                "v errors reduce: square %.2e -> %.2e, disk %.3f -> %.3f "
                "(floors: u %.0e, v %.0e)",
                usq_c, usq_f, ud_c, ud_f, vsq_c, vsq_f, vd_c, vd_f, floor_u, floor_v);
  criterion("criterion 9 (convergence sanity)", pass, buf);
}

int main() {
  std::printf("== acceptance suite: desk-scale defaults ==\n");
  Solved sq = run_preset("square-tray");
  Solved hex = run_preset("hexagon-lens");
  Solved ell = run_preset("ellipse-foci");
  Solved disk = run_preset("disk-homogeneous");

  criterion_1(sq);
  criterion_2(hex);
  criterion_3(ell);
  criterion_4(disk);
  criterion_5(sq, disk);
  criterion_6(sq);
  criterion_7();
  criterion_8(sq, disk, hex, ell);
  criterion_9(sq, disk);

  std::printf("== %d of 9 criteria passed ==\n", 9 - g_failures);
  return g_failures;
}
