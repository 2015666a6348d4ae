#include "mks/ray_field.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mks/parallel.hpp"

namespace mks {

namespace {

double circular_gap(double a, double b, double perim) {
  double d = std::abs(a - b);
  return std::min(d, perim - d);
}

struct ClusterSet {
  struct Cluster {
    int32_t rep = -1;     // min-value sample
    double best = 0.0;
    double arc_center = 0.0;
    double arc_halfwidth = 0.0;
    int loop = 0;
  };
  std::vector<Cluster> clusters;  // ordered by best value
};

// candidates within delta of the Lax-Hopf minimum, grouped by arc gaps
ClusterSet cluster_projections(const Frame& f, const Vec2& x, double delta, double gap,
                               double vmin_hint = std::numeric_limits<double>::quiet_NaN()) {
  const auto& S = f.samples;
  thread_local std::vector<std::pair<double, int32_t>> vals;  // (value, sample)
  vals.clear();
  double vmin = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < S.size(); ++k) {
    double v = S[k].datum + f.body.polar_gauge(x - S[k].point);
    vals.emplace_back(v, static_cast<int32_t>(k));
    vmin = std::min(vmin, v);
  }
  if (!f.unrestricted) {
    // the visible minimum may exceed the unrestricted one
    vmin = std::isnan(vmin_hint) ? lax_hopf_at(f, x) : vmin_hint;
  }
  thread_local std::vector<int32_t> cand;
  cand.clear();
  for (const auto& [v, k] : vals) {
    if (v > vmin + delta) continue;
    if (!f.unrestricted && !f.domain->visible(S[k].point, x)) continue;
    cand.push_back(k);
  }
  std::sort(cand.begin(), cand.end(), [&](int32_t a, int32_t b) {
    if (S[a].loop != S[b].loop) return S[a].loop < S[b].loop;
    return S[a].arc < S[b].arc;
  });

  ClusterSet cs;
  size_t start = 0;
  auto flush = [&](size_t lo, size_t hi) {  // [lo, hi)
    ClusterSet::Cluster c;
    c.loop = S[cand[lo]].loop;
    c.best = std::numeric_limits<double>::infinity();
    for (size_t t = lo; t < hi; ++t) {
      double v = vals[cand[t]].first;
      if (v < c.best) {
        c.best = v;
        c.rep = cand[t];
      }
    }
    double perim = f.domain->loop_perimeter(c.loop);
    c.arc_center = S[c.rep].arc;
    for (size_t t = lo; t < hi; ++t)
      c.arc_halfwidth =
          std::max(c.arc_halfwidth, circular_gap(S[cand[t]].arc, c.arc_center, perim));
    cs.clusters.push_back(c);
  };
  for (size_t t = 1; t <= cand.size(); ++t) {
    bool brk = t == cand.size() || S[cand[t]].loop != S[cand[t - 1]].loop ||
               S[cand[t]].arc - S[cand[t - 1]].arc > gap;
    if (brk && t > start) {
      flush(start, t);
      start = t;
    }
  }
  // merge clusters that touch across the arc wrap-around
  for (size_t a = 0; a < cs.clusters.size(); ++a) {
    for (size_t b = a + 1; b < cs.clusters.size();) {
      auto& ca = cs.clusters[a];
      auto& cb = cs.clusters[b];
      double perim = f.domain->loop_perimeter(ca.loop);
      double centers = circular_gap(ca.arc_center, cb.arc_center, perim);
      if (ca.loop == cb.loop && centers <= ca.arc_halfwidth + cb.arc_halfwidth + gap) {
        if (cb.best < ca.best) std::swap(ca, cb);
        ca.arc_halfwidth = std::max(ca.arc_halfwidth, centers + cb.arc_halfwidth);
        cs.clusters.erase(cs.clusters.begin() + b);
      } else {
        ++b;
      }
    }
  }

  // an arc-connected tie set of macroscopic extent (disk center: the whole
  // circle) still carries multivalued directions; split it into sectors so
  // each direction family keeps a representative
  for (size_t a = 0; a < cs.clusters.size(); ++a) {
    auto& c = cs.clusters[a];
    double perim = f.domain->loop_perimeter(c.loop);
    if (c.arc_halfwidth <= 0.35 * perim) continue;
    const int bins = 8;
    std::vector<ClusterSet::Cluster> split(bins);
    for (int32_t k : cand) {
      if (S[k].loop != c.loop) continue;
      int bin = std::min(bins - 1, static_cast<int>(bins * S[k].arc / perim));
      auto& sb = split[bin];
      double v = vals[k].first;
      if (sb.rep < 0 || v < sb.best) {
        sb.rep = k;
        sb.best = v;
        sb.loop = c.loop;
        sb.arc_center = S[k].arc;
        sb.arc_halfwidth = 0.5 * perim / bins;
      }
    }
    cs.clusters.erase(cs.clusters.begin() + a);
    for (auto& sb : split)
      if (sb.rep >= 0) cs.clusters.push_back(sb);
    a = cs.clusters.size();  // split at most one macroscopic cluster
  }

  std::sort(cs.clusters.begin(), cs.clusters.end(),
            [](const auto& a, const auto& b) { return a.best < b.best; });
  return cs;
}

}  // namespace

// D is defined by the direction set Delta(x): a node is multivalued when an
// exact tie of the boundary minimum (to numerical tolerance) points more than
// pi/3 away from the best candidate's direction. Genuine branches (ridge,
// focal point) tie exactly and separate by a macroscopic angle; the wide
// delta_pi window of the projection-set report is deliberately not reused
// here, since it admits near-ties up the ray with reversed directions.
static bool directions_multivalued(const Frame& f, const Vec2& x, double delta,
                                   double vmin_hint = std::numeric_limits<double>::quiet_NaN()) {
  const auto& S = f.samples;
  double vmin = std::numeric_limits<double>::infinity();
  int32_t best = -1;
  thread_local std::vector<double> vals;
  vals.assign(S.size(), 0.0);
  for (size_t k = 0; k < S.size(); ++k) {
    double v = S[k].datum + f.body.polar_gauge(x - S[k].point);
    vals[k] = v;
    if (v < vmin) {
      vmin = v;
      best = static_cast<int32_t>(k);
    }
  }
  if (!f.unrestricted) {
    if (std::isnan(vmin_hint)) {
      vmin = lax_hopf_at(f, x, &best);
    } else {
      vmin = vmin_hint;
      // the best admissible candidate achieving the hinted minimum
      best = -1;
      double bv = std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < S.size(); ++k) {
        if (vals[k] > vmin + delta || vals[k] >= bv) continue;
        if (f.domain->visible(S[k].point, x)) {
          bv = vals[k];
          best = static_cast<int32_t>(k);
        }
      }
      if (best < 0) return false;
    }
  }
  if (best < 0) return false;
  Vec2 bd = x - S[best].point;
  if (norm(bd) <= 1e-14) return false;
  double base = std::atan2(bd.y, bd.x);
  const double thresh = M_PI / 3.0;
  for (size_t k = 0; k < S.size(); ++k) {
    if (vals[k] > vmin + delta) continue;
    Vec2 dv = x - S[k].point;
    if (norm(dv) <= 1e-14) continue;
    double d = std::abs(std::atan2(dv.y, dv.x) - base);
    d = std::min(d, 2.0 * M_PI - d);
    if (d <= thresh) continue;
    if (!f.unrestricted && !f.domain->visible(S[k].point, x)) continue;
    return true;
  }
  return false;
}

std::vector<int32_t> projection_clusters(const Frame& frame, const Vec2& x, double delta) {
  if (delta <= 0.0) delta = 3.0 * frame.h();
  double gap = 5.0 * frame.spacing;
  ClusterSet cs = cluster_projections(frame, x, delta, gap);
  std::vector<int32_t> reps;
  reps.reserve(cs.clusters.size());
  for (const auto& c : cs.clusters) reps.push_back(c.rep);
  return reps;
}

namespace {

struct Marcher {
  const Frame& f;
  const ScalarField& u;
  double eps_lin;
  double gap;

  bool linear_ok(const Vec2& x, double u0, const Vec2& d, double t) const {
    double uv = u.interpolate(x + d * t);
    return !std::isnan(uv) && std::abs(uv - (u0 + t)) <= eps_lin;
  }

  // coarse-to-fine argmin: stride scan plus local refinement localizes the
  // minimizer to within the stride, which is enough against the cluster gap
  int32_t argmin_fast(const Vec2& z) const {
    const auto& S = f.samples;
    int n = static_cast<int>(S.size());
    int stride = n > 128 ? 4 : 1;
    double best = std::numeric_limits<double>::infinity();
    int bi = 0;
    for (int k = 0; k < n; k += stride) {
      double v = S[k].datum + f.body.polar_gauge(z - S[k].point);
      if (v < best) {
        best = v;
        bi = k;
      }
    }
    if (stride > 1) {
      for (int k = std::max(0, bi - stride); k < std::min(n, bi + stride + 1); ++k) {
        double v = S[k].datum + f.body.polar_gauge(z - S[k].point);
        if (v < best) {
          best = v;
          bi = k;
        }
      }
    }
    return bi;
  }

  // Genuine projection jumps connect distinct boundary branches and move the
  // argmin by a macroscopic arc; sub-macroscopic drift is chord noise of the
  // polygonized boundary, so the gap gets a perimeter-fraction floor.
  bool constancy_ok(const Vec2& x, const Vec2& d, double t, int loop, double center,
                    double halfwidth) const {
    if (!f.unrestricted) return true;
    const auto& s = f.samples[argmin_fast(x + d * t)];
    if (s.loop != loop) return false;
    double perim = f.domain->loop_perimeter(loop);
    double allowance = halfwidth + std::max(gap, 0.02 * perim);
    return circular_gap(s.arc, center, perim) <= allowance;
  }
};

}  // namespace

RayField extract_rays(const Frame& frame, const LaxHopfSolution& uphi) {
  const GridSpec& g = frame.grid;
  RayField rf;
  rf.nodes.assign(g.size(), {});
  rf.delta_pi = 3.0 * g.h;
  rf.cluster_gap = 5.0 * frame.spacing;
  const double h = g.h;
  Marcher m{frame, uphi.u, 3.0 * h, rf.cluster_gap};

  // linearity march with the projection-constancy guard, then bisection of
  // the first failure bracket down to h/4
  auto march = [&](RayNodeData& nd, const Vec2& x, double u0, const Vec2& d,
                   bool use_constancy) {
    auto exit = frame.domain->ray_exit(x, d);
    if (!exit) return;
    double t_exit = exit->t;
    double step = 0.5 * h;
    auto predicate = [&](double t) {
      if (!m.linear_ok(x, u0, d, t)) return false;
      return !use_constancy ||
             m.constancy_ok(x, d, t, nd.cluster_loop, nd.arc_center, nd.arc_halfwidth);
    };
    double t_prev = 0.0, t_fail = -1.0;
    for (int k = 1;; ++k) {
      double t = std::min(k * step, t_exit);
      double uv = uphi.u.interpolate(x + d * t);
      double dev = std::isnan(uv) ? std::numeric_limits<double>::infinity()
                                  : std::abs(uv - (u0 + t));
      bool ok = dev <= m.eps_lin;
      if (ok && use_constancy && frame.unrestricted &&
          (dev > 0.5 * h || k % 16 == 0 || t >= t_exit))
        ok = m.constancy_ok(x, d, t, nd.cluster_loop, nd.arc_center, nd.arc_halfwidth);
      if (!ok) {
        t_fail = t;
        break;
      }
      t_prev = t;
      if (t >= t_exit) break;
    }
    nd.has_ray = true;
    nd.dir = d;
    if (t_fail < 0.0) {
      nd.boundary_exit = true;
      nd.tau = t_exit;
      nd.q = exit->point;
      nd.exit_loop = exit->loop;
      nd.exit_arc = exit->arc;
      nd.exit_datum = frame.datum(exit->point);
    } else {
      double lo = t_prev, hi = t_fail;
      while (hi - lo > 0.25 * h) {
        double mid = 0.5 * (lo + hi);
        if (predicate(mid)) lo = mid;
        else hi = mid;
      }
      nd.tau = lo;
      nd.q = x + d * lo;
      nd.boundary_exit = false;
    }
  };

  parallel_for(static_cast<size_t>(g.ny), [&](size_t jj) {
    int j = static_cast<int>(jj);
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      RayNodeData& nd = rf.nodes[id];
      Vec2 x = g.node(i, j);
      ClusterSet cs =
          cluster_projections(frame, x, rf.delta_pi, rf.cluster_gap, uphi.u.values[id]);
      if (cs.clusters.empty()) continue;
      nd.cluster_count = static_cast<uint8_t>(std::min<size_t>(cs.clusters.size(), 255));
      const auto& c0 = cs.clusters.front();
      nd.primary = c0.rep;
      nd.cluster_loop = c0.loop;
      nd.arc_center = c0.arc_center;
      nd.arc_halfwidth = c0.arc_halfwidth;
      double tie_tol = 1e-9 * frame.c2 * frame.domain->diameter();
      if (cs.clusters.size() >= 2 && !frame.mask.boundary[id] &&
          directions_multivalued(frame, x, tie_tol, uphi.u.values[id])) {
        nd.in_d = true;
        nd.tau = 0.0;
        nd.q = x;
        continue;
      }
      Vec2 p = refine_boundary_minimum(frame, x, c0.rep).point;
      Vec2 dvec = x - p;
      double r0 = frame.body.polar_gauge(dvec);
      if (r0 <= 0.25 * h) continue;  // node on the boundary; direction filled below
      march(nd, x, uphi.u.values[id], dvec / r0, true);
    }
  });

  // boundary nodes sit on their own projection; inherit the direction of the
  // nearest resolved ray and march from there
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      RayNodeData& nd = rf.nodes[id];
      if (nd.has_ray || nd.in_d || nd.primary < 0) continue;
      Vec2 d{0, 0};
      bool found = false;
      for (int r = 1; r <= 3 && !found; ++r)
        for (int dj = -r; dj <= r && !found; ++dj)
          for (int di = -r; di <= r && !found; ++di) {
            if (std::max(std::abs(di), std::abs(dj)) != r) continue;
            int ii = i + di, jj = j + dj;
            if (!g.valid(ii, jj)) continue;
            const RayNodeData& nb = rf.nodes[g.idx(ii, jj)];
            if (nb.has_ray && !nb.in_d && nb.tau > 0.5 * h) {
              d = nb.dir;
              found = true;
            }
          }
      // inherited directions carry an O(h) tilt that the constancy test
      // would flag far down the ray; linearity alone bounds tau there
      if (found) march(nd, g.node(i, j), uphi.u.values[id], d, false);
    }
  return rf;
}

RayNodeData ray_of(const Frame& frame, const LaxHopfSolution& uphi, int i, int j,
                   const RayField* cache) {
  if (cache) {
    const RayNodeData& nd = cache->nodes[frame.grid.idx(i, j)];
    if (nd.in_d) throw MultivaluedDirectionError();
    return nd;
  }
  RayField rf = extract_rays(frame, uphi);  // single-node callers should pass a cache
  const RayNodeData& nd = rf.nodes[frame.grid.idx(i, j)];
  if (nd.in_d) throw MultivaluedDirectionError();
  return nd;
}

SigmaMask detect_sigma(const Frame& frame, const ScalarField& uphi) {
  const GridSpec& g = frame.grid;
  SigmaMask sm;
  sm.mask.assign(g.size(), 0);
  std::vector<float> disag(g.size(), 0.0f);
  const double h = g.h;
  const double eps_sigma = 0.15;

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.interior[id]) continue;
      double qxp = (uphi.values[id + 1] - uphi.values[id]) / h;
      double qxm = (uphi.values[id] - uphi.values[id - 1]) / h;
      double qyp = (uphi.values[id + g.nx] - uphi.values[id]) / h;
      double qym = (uphi.values[id] - uphi.values[id - g.nx]) / h;
      double dis = std::max(std::abs(qxp - qxm), std::abs(qyp - qym)) / frame.c2;
      disag[id] = static_cast<float>(dis);
      if (dis > eps_sigma) sm.mask[id] = 1;
    }

  // sub-grid ridge estimate: parabolic refinement of the disagreement peak
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!sm.mask[id]) continue;
      Vec2 p = g.node(i, j);
      double dl = disag[id - 1], dc = disag[id], dr = disag[id + 1];
      double den = dl - 2.0 * dc + dr;
      if (std::abs(den) > 1e-12) p.x += std::clamp(0.5 * (dl - dr) / den, -0.5, 0.5) * h;
      double dd = disag[id - g.nx], du = disag[id + g.nx];
      den = dd - 2.0 * dc + du;
      if (std::abs(den) > 1e-12) p.y += std::clamp(0.5 * (dd - du) / den, -0.5, 0.5) * h;
      sm.points.push_back(p);
    }
  return sm;
}

SingularSets detect_singular_sets(const Frame& frame, const LaxHopfSolution& uphi,
                                  const RayField& rays, const SigmaMask& sigma) {
  (void)uphi;  // part of the operation contract; sets derive from the ray data
  const GridSpec& g = frame.grid;
  const double h = g.h;
  SingularSets out;
  out.sigma_mask = sigma.mask;
  out.sigma_points = sigma.points;
  out.d_mask.assign(g.size(), 0);
  out.t_mask.assign(g.size(), 0);

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (frame.mask.inside[id] && rays.nodes[id].in_d) out.d_mask[id] = 1;
    }

  // J: interior ray endpoints + multiprojection nodes, deduplicated on an
  // h/2 lattice
  std::map<std::pair<long, long>, size_t> dedup;
  auto push_j = [&](const Vec2& q, uint8_t source) {
    if (frame.domain->classify(q) != PointClass::Inside) return;
    std::pair<long, long> key{std::lround(q.x / (0.5 * h)), std::lround(q.y / (0.5 * h))};
    if (dedup.emplace(key, out.j_points.size()).second) {
      out.j_points.push_back(q);
      out.j_source.push_back(source);
    }
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      const RayNodeData& nd = rays.nodes[id];
      if (nd.in_d) push_j(g.node(i, j), 1);
      else if (nd.has_ray && !nd.boundary_exit) push_j(nd.q, 0);
    }

  // E pairs harvested from boundary-terminating rays
  double delta_e = 3.0 * h * frame.c2;
  std::map<std::pair<int32_t, long>, size_t> e_dedup;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      const RayNodeData& nd = rays.nodes[id];
      if (!nd.has_ray || !nd.boundary_exit || nd.primary < 0) continue;
      const auto& ps = frame.samples[nd.primary];
      // non-adjacent boundary locations
      if (ps.loop == nd.exit_loop &&
          circular_gap(ps.arc, nd.exit_arc, frame.domain->loop_perimeter(ps.loop)) <=
              2.0 * frame.spacing)
        continue;
      double gap_val = nd.exit_datum - ps.datum - frame.body.polar_gauge(nd.q - ps.point);
      if (std::abs(gap_val) > delta_e) continue;
      std::pair<int32_t, long> key{nd.primary, std::lround(nd.exit_arc / frame.spacing)};
      if (e_dedup.count(key)) continue;
      if (!frame.domain->open_segment_in_omega(ps.point, nd.q)) continue;
      e_dedup.emplace(key, out.e_pairs.size());
      EPair ep;
      ep.p_sample = nd.primary;
      ep.p = ps.point;
      ep.q = nd.q;
      ep.q_loop = nd.exit_loop;
      ep.q_arc = nd.exit_arc;
      ep.datum_gap = gap_val;
      out.e_pairs.push_back(ep);
    }

  // T: nodes (cell centers) within h/2 of an E segment
  for (const EPair& ep : out.e_pairs) {
    BBox bb;
    bb.expand(ep.p);
    bb.expand(ep.q);
    int i0 = std::max(0, static_cast<int>((bb.min.x - g.origin.x) / h) - 1);
    int i1 = std::min(g.nx - 1, static_cast<int>((bb.max.x - g.origin.x) / h) + 1);
    int j0 = std::max(0, static_cast<int>((bb.min.y - g.origin.y) / h) - 1);
    int j1 = std::min(g.ny - 1, static_cast<int>((bb.max.y - g.origin.y) / h) + 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        size_t id = g.idx(i, j);
        if (!frame.mask.inside[id] || out.t_mask[id]) continue;
        if (dist_point_segment(g.node(i, j), ep.p, ep.q) <= 0.5 * h) out.t_mask[id] = 1;
      }
  }
  long tcount = 0;
  for (uint8_t v : out.t_mask) tcount += v;
  out.t_measure = tcount * h * h;

  // D subset of Sigma, one cell of slack; checked where the Sigma stencil is
  // defined (nodes with a full interior neighborhood)
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!out.d_mask[id]) continue;
      bool deep = true;
      for (int dj = -3; dj <= 3 && deep; ++dj)
        for (int di = -3; di <= 3 && deep; ++di) {
          int ii = i + di, jj = j + dj;
          if (!g.valid(ii, jj) || !frame.mask.inside[g.idx(ii, jj)]) deep = false;
        }
      if (!deep) continue;
      bool near_sigma = false;
      for (int dj = -1; dj <= 1 && !near_sigma; ++dj)
        for (int di = -1; di <= 1 && !near_sigma; ++di) {
          int ii = i + di, jj = j + dj;
          if (g.valid(ii, jj) && out.sigma_mask[g.idx(ii, jj)]) near_sigma = true;
        }
      if (!near_sigma) ++out.d_outside_sigma;
    }
  out.d_subset_sigma = out.d_outside_sigma == 0;

  // J inside the closure of D (2h of slack; isolated ray endpoints reported)
  for (size_t k = 0; k < out.j_points.size(); ++k) {
    if (out.j_source[k] == 1) continue;
    const Vec2& q = out.j_points[k];
    int ci = static_cast<int>(std::lround((q.x - g.origin.x) / h));
    int cj = static_cast<int>(std::lround((q.y - g.origin.y) / h));
    bool near_d = false;
    for (int dj = -2; dj <= 2 && !near_d; ++dj)
      for (int di = -2; di <= 2 && !near_d; ++di) {
        int ii = ci + di, jj = cj + dj;
        if (g.valid(ii, jj) && out.d_mask[g.idx(ii, jj)]) near_d = true;
      }
    if (!near_d) ++out.j_far_from_d;
  }
  out.j_in_closure_d = out.j_far_from_d == 0;
  return out;
}

}  // namespace mks
