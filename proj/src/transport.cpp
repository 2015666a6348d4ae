#include "mks/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mks/parallel.hpp"

namespace mks {

namespace {

void dilate(const GridSpec& g, const std::vector<uint8_t>& in, std::vector<uint8_t>& out, int r) {
  out.assign(in.size(), 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!in[g.idx(i, j)]) continue;
      for (int dj = -r; dj <= r; ++dj)
        for (int di = -r; di <= r; ++di) {
          int ii = i + di, jj = j + dj;
          if (g.valid(ii, jj)) out[g.idx(ii, jj)] = 1;
        }
    }
}

// multi-source BFS fill of invalid nodes from the nearest valid ones
void nearest_valid_fill(const GridSpec& g, const std::vector<uint8_t>& inside,
                        std::vector<uint8_t>& valid, std::vector<ScalarField*> fields) {
  std::deque<std::pair<int, int>> queue;
  std::vector<uint8_t> reached = valid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (valid[g.idx(i, j)]) queue.emplace_back(i, j);
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    auto [i, j] = queue.front();
    queue.pop_front();
    size_t id = g.idx(i, j);
    for (int k = 0; k < 4; ++k) {
      int ii = i + di[k], jj = j + dj[k];
      if (!g.valid(ii, jj)) continue;
      size_t nid = g.idx(ii, jj);
      if (!inside[nid] || reached[nid]) continue;
      reached[nid] = 1;
      for (ScalarField* f : fields) f->values[nid] = f->values[id];
      queue.emplace_back(ii, jj);
    }
  }
}

}  // namespace

DirectionField direction_divergence(const Frame& frame, const ScalarField& uphi,
                                    const std::vector<uint8_t>& sigma_mask) {
  const GridSpec& g = frame.grid;
  const double h = g.h;
  DirectionField out;
  out.theta_x = ScalarField(g);
  out.theta_y = ScalarField(g);
  out.div_theta = ScalarField(g);
  out.theta_x.mask = out.theta_y.mask = out.div_theta.mask = frame.mask.inside;
  out.theta_valid.assign(g.size(), 0);
  out.div_valid.assign(g.size(), 0);

  std::vector<uint8_t> sigma1, sigma2;
  dilate(g, sigma_mask, sigma1, 1);
  dilate(g, sigma_mask, sigma2, 2);

  const auto& inside = frame.mask.inside;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!inside[id] || sigma1[id]) continue;
      bool okl = i > 0 && inside[id - 1], okr = i + 1 < g.nx && inside[id + 1];
      bool okd = j > 0 && inside[id - g.nx], oku = j + 1 < g.ny && inside[id + g.nx];
      if (!(okl || okr) || !(okd || oku)) continue;
      double gx = okl && okr ? (uphi.values[id + 1] - uphi.values[id - 1]) / (2 * h)
                 : okr       ? (uphi.values[id + 1] - uphi.values[id]) / h
                             : (uphi.values[id] - uphi.values[id - 1]) / h;
      double gy = okd && oku ? (uphi.values[id + g.nx] - uphi.values[id - g.nx]) / (2 * h)
                 : oku       ? (uphi.values[id + g.nx] - uphi.values[id]) / h
                             : (uphi.values[id] - uphi.values[id - g.nx]) / h;
      try {
        Vec2 th = frame.body.gauge_gradient({gx, gy});
        out.theta_x.values[id] = th.x;
        out.theta_y.values[id] = th.y;
        out.theta_valid[id] = 1;
      } catch (const std::exception&) {
        // left invalid; filled below
      }
    }

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!inside[id] || sigma2[id] || !out.theta_valid[id]) continue;
      bool okl = i > 0 && out.theta_valid[id - 1], okr = i + 1 < g.nx && out.theta_valid[id + 1];
      bool okd = j > 0 && out.theta_valid[id - g.nx],
           oku = j + 1 < g.ny && out.theta_valid[id + g.nx];
      if (!(okl || okr) || !(okd || oku)) continue;
      double dxx = okl && okr ? (out.theta_x.values[id + 1] - out.theta_x.values[id - 1]) / (2 * h)
                  : okr       ? (out.theta_x.values[id + 1] - out.theta_x.values[id]) / h
                              : (out.theta_x.values[id] - out.theta_x.values[id - 1]) / h;
      double dyy = okd && oku
                       ? (out.theta_y.values[id + g.nx] - out.theta_y.values[id - g.nx]) / (2 * h)
                   : oku ? (out.theta_y.values[id + g.nx] - out.theta_y.values[id]) / h
                         : (out.theta_y.values[id] - out.theta_y.values[id - g.nx]) / h;
      out.div_theta.values[id] = dxx + dyy;
      out.div_valid[id] = 1;
    }

  {
    std::vector<uint8_t> v = out.theta_valid;
    nearest_valid_fill(g, inside, v, {&out.theta_x, &out.theta_y});
  }
  {
    std::vector<uint8_t> v = out.div_valid;
    nearest_valid_fill(g, inside, v, {&out.div_theta});
  }
  double clampv = 10.0 / h;
  for (double& v : out.div_theta.values) v = std::clamp(v, -clampv, clampv);
  return out;
}

ScalarField solve_vf(const Frame& frame, const RayField& rays, const ScalarField& f,
                     const DirectionField& dir) {
  const GridSpec& g = frame.grid;
  const double h = g.h;
  ScalarField vf(g);
  vf.mask = frame.mask.inside;

  ScalarField valid_field(g);
  valid_field.mask = frame.mask.inside;
  for (size_t k = 0; k < g.size(); ++k) valid_field.values[k] = dir.div_valid[k] ? 1.0 : 0.0;

  parallel_for(static_cast<size_t>(g.ny), [&](size_t jj) {
    int j = static_cast<int>(jj);
    std::vector<double> ts, fs, divs;
    std::vector<char> ok;
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      const RayNodeData& nd = rays.nodes[id];
      if (nd.in_d || !nd.has_ray || nd.tau <= 0.0) {
        vf.values[id] = 0.0;
        continue;
      }
      Vec2 x = g.node(i, j);
      double tau = nd.tau;
      int steps = std::max(1, static_cast<int>(std::ceil(tau / (0.5 * h))));
      ts.assign(steps + 1, 0.0);
      fs.assign(steps + 1, 0.0);
      divs.assign(steps + 1, 0.0);
      ok.assign(steps + 1, 1);
      for (int k = 0; k <= steps; ++k) {
        double t = tau * k / steps;
        Vec2 z = x + nd.dir * t;
        ts[k] = t;
        double fv = f.interpolate(z);
        double dv = dir.div_theta.interpolate(z);
        double va = valid_field.interpolate(z);
        fs[k] = std::isnan(fv) ? 0.0 : std::max(0.0, fv);
        divs[k] = std::isnan(dv) ? 0.0 : dv;
        ok[k] = !std::isnan(va) && va >= 0.5;
      }
      // last index from which the divergence data is invalid through to tau
      int m = steps;
      if (!nd.boundary_exit) {
        while (m > 0 && !ok[m]) --m;
      }
      double v = 0.0, I = 0.0, W = 1.0;
      double W_m = 1.0;
      for (int k = 1; k <= m; ++k) {
        double dt = ts[k] - ts[k - 1];
        double Wprev = W;
        I += 0.5 * (divs[k - 1] + divs[k]) * dt;
        W = std::exp(I);
        v += 0.5 * (fs[k - 1] * Wprev + fs[k] * W) * dt;
      }
      W_m = W;
      if (!nd.boundary_exit && m < steps) {
        // masked focusing tail: continue the weight with the exponent-matched
        // model W ~ ((tau - t)/(tau - t_m))^gexp
        double t_m = ts[m];
        double rem = tau - t_m;
        if (rem > 1e-15) {
          double gexp = std::clamp(-divs[m] * rem, 0.0, 2.0);
          int sub = std::max(2, 2 * (steps - m));
          double prevW = W_m, prevF = fs[m];
          for (int k = 1; k <= sub; ++k) {
            double t = t_m + rem * k / sub;
            double wfac = k == sub ? (gexp > 0.0 ? 0.0 : 1.0)
                                   : std::pow((tau - t) / rem, gexp);
            double Wt = W_m * wfac;
            Vec2 z = x + nd.dir * t;
            double fv = f.interpolate(z);
            double ft = std::isnan(fv) ? 0.0 : std::max(0.0, fv);
            v += 0.5 * (prevF * prevW + ft * Wt) * (rem / sub);
            prevW = Wt;
            prevF = ft;
          }
        }
      }
      vf.values[id] = v;
    }
  });
  return vf;
}

namespace {

// smooth bump b(s) = exp(1 - 1/(1 - s^2)) on (-1, 1)
double bump(double s) {
  double a = 1.0 - s * s;
  if (a <= 1e-12) return 0.0;
  return std::exp(1.0 - 1.0 / a);
}
double bump_deriv(double s) {
  double a = 1.0 - s * s;
  if (a <= 1e-12) return 0.0;
  return bump(s) * (-2.0 * s / (a * a));
}

bool square_inside(const PolygonalDomain& dom, const Vec2& c, double rx, double ry) {
  Vec2 corners[4] = {{c.x - rx, c.y - ry}, {c.x + rx, c.y - ry}, {c.x + rx, c.y + ry},
                     {c.x - rx, c.y + ry}};
  for (const Vec2& p : corners)
    if (dom.classify(p) != PointClass::Inside) return false;
  for (int k = 0; k < 4; ++k)
    if (!dom.open_segment_in_omega(corners[k], corners[(k + 1) % 4])) return false;
  return true;
}

}  // namespace

std::vector<BumpFunction> make_test_bumps(const Frame& frame) {
  const BBox& bb = frame.domain->bbox();
  double ex = bb.width(), ey = bb.height();
  std::vector<BumpFunction> bumps;
  for (int bj = 0; bj < 4; ++bj)
    for (int bi = 0; bi < 4; ++bi) {
      BumpFunction b;
      b.center = {bb.min.x + ex * (bi + 1) / 5.0, bb.min.y + ey * (bj + 1) / 5.0};
      double rx = 0.19 * ex, ry = 0.19 * ey;
      // shrink to fit inside Omega
      for (int it = 0; it < 24; ++it) {
        if (frame.domain->classify(b.center) == PointClass::Inside &&
            square_inside(*frame.domain, b.center, rx, ry)) {
          b.usable = true;
          break;
        }
        rx *= 0.85;
        ry *= 0.85;
        if (std::min(rx, ry) < 2.0 * frame.h()) break;
      }
      b.rx = rx;
      b.ry = ry;
      bumps.push_back(b);
    }
  return bumps;
}

std::vector<WeakResidual> weak_residual(const Frame& frame, const ScalarField& v,
                                        const DirectionField& dir, const ScalarField& f,
                                        const std::vector<BumpFunction>& bumps) {
  const GridSpec& g = frame.grid;
  const double h2 = g.h * g.h;
  std::vector<WeakResidual> out;
  double vmax = 0.0;
  for (size_t k = 0; k < g.size(); ++k)
    if (frame.mask.inside[k]) vmax = std::max(vmax, std::abs(v.values[k]));

  for (const BumpFunction& b : bumps) {
    if (!b.usable) continue;
    WeakResidual r;
    r.center = b.center;
    int i0 = std::max(0, static_cast<int>((b.center.x - b.rx - g.origin.x) / g.h));
    int i1 = std::min(g.nx - 1, static_cast<int>((b.center.x + b.rx - g.origin.x) / g.h) + 1);
    int j0 = std::max(0, static_cast<int>((b.center.y - b.ry - g.origin.y) / g.h));
    int j1 = std::min(g.ny - 1, static_cast<int>((b.center.y + b.ry - g.origin.y) / g.h) + 1);
    double flux = 0.0, src = 0.0, mass = 0.0;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        size_t id = g.idx(i, j);
        if (!frame.mask.inside[id]) continue;
        Vec2 p = g.node(i, j);
        double sx = (p.x - b.center.x) / b.rx, sy = (p.y - b.center.y) / b.ry;
        if (std::abs(sx) >= 1.0 || std::abs(sy) >= 1.0) continue;
        double psi = bump(sx) * bump(sy);
        double dpsix = bump_deriv(sx) * bump(sy) / b.rx;
        double dpsiy = bump(sx) * bump_deriv(sy) / b.ry;
        flux += v.values[id] * (dir.theta_x.values[id] * dpsix + dir.theta_y.values[id] * dpsiy) * h2;
        src += f.values[id] * psi * h2;
        mass += psi * h2;
      }
    r.flux = flux;
    r.source = src;
    double denom = src > 1e-9 ? src + 1e-12 : mass * std::max(1.0, vmax);
    r.residual = std::abs(flux - src) / denom;
    out.push_back(r);
  }
  return out;
}

WitnessResult nonuniqueness_witness(const Frame& frame, const LaxHopfSolution& uphi,
                                    const SingularSets& sets, const DirectionField& dir_forward) {
  const GridSpec& g = frame.grid;
  double tol = 5.0 * g.h * frame.domain->perimeter();
  if (sets.t_measure <= tol) throw EmptyTError();

  ScalarField gsrc(g);
  gsrc.mask = frame.mask.inside;
  for (size_t k = 0; k < g.size(); ++k) gsrc.values[k] = sets.t_mask[k] ? 1.0 : 0.0;

  WitnessResult w;
  {
    RayField rays = extract_rays(frame, uphi);
    w.v_plus = solve_vf(frame, rays, gsrc, dir_forward);
  }
  {
    Frame rev = frame.reversed();
    LaxHopfSolution wphi = solve_uphi(rev);
    SigmaMask sig = detect_sigma(rev, wphi.u);
    DirectionField drev = direction_divergence(rev, wphi.u, sig.mask);
    RayField rrev = extract_rays(rev, wphi);
    w.v_minus = solve_vf(rev, rrev, gsrc, drev);
  }

  ScalarField combined(g);
  combined.mask = frame.mask.inside;
  for (size_t k = 0; k < g.size(); ++k)
    combined.values[k] = w.v_plus.values[k] + w.v_minus.values[k];
  ScalarField zero(g);
  zero.mask = frame.mask.inside;
  auto bumps = make_test_bumps(frame);
  w.homogeneous_residuals = weak_residual(frame, combined, dir_forward, zero, bumps);
  for (const auto& r : w.homogeneous_residuals)
    w.max_residual = std::max(w.max_residual, r.residual);
  return w;
}

Diagnosis diagnose(const Frame& frame, const ScalarField& uphi, const ScalarField& uf,
                   const ScalarField& vf, const SingularSets& sets, const DirectionField& dir,
                   const ScalarField& f, const std::vector<uint8_t>& support_mask,
                   std::optional<double> witness_residual) {
  const GridSpec& g = frame.grid;
  Diagnosis d;
  d.t_measure = sets.t_measure;
  d.t_measure_tolerance = 5.0 * g.h * frame.domain->perimeter();
  d.v_unique = sets.t_measure <= d.t_measure_tolerance;
  d.witness_residual = witness_residual;

  d.j_points_total = static_cast<long>(sets.j_points.size());
  for (const Vec2& q : sets.j_points) {
    int ci = static_cast<int>(std::lround((q.x - g.origin.x) / g.h));
    int cj = static_cast<int>(std::lround((q.y - g.origin.y) / g.h));
    bool near = false;
    for (int dj = -1; dj <= 1 && !near; ++dj)
      for (int di = -1; di <= 1 && !near; ++di) {
        int ii = ci + di, jj = cj + dj;
        if (!g.valid(ii, jj)) continue;
        if (support_mask[g.idx(ii, jj)] &&
            dist(g.node(ii, jj), q) <= g.h * (1.0 + 1e-9))
          near = true;
      }
    if (!near) ++d.j_points_outside_support;
  }
  d.j_in_support = d.j_points_outside_support == 0;
  d.u_unique = d.j_in_support;

  double su = 0.0, sf = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      su += f.values[id] * uphi.values[id];
      sf += f.values[id] * uf.values[id];
    }
  d.energy_gap = g.h * g.h * std::abs(su - sf);

  auto bumps = make_test_bumps(frame);
  d.weak_residuals = weak_residual(frame, vf, dir, f, bumps);
  for (const auto& r : d.weak_residuals)
    d.max_weak_residual = std::max(d.max_weak_residual, r.residual);
  return d;
}

}  // namespace mks
