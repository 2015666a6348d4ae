#include "mks/lax_hopf.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "mks/parallel.hpp"

namespace mks {

Frame Frame::build(const PolygonalDomain& dom, const ConvexBody& body_,
                   std::function<double(const Vec2&)> datum_, int sample_target,
                   double target_h, int max_cells) {
  Frame f;
  f.domain = &dom;
  f.body = body_;
  f.datum = std::move(datum_);
  f.samples = dom.sample_boundary(sample_target, f.datum);
  f.grid = GridSpec::cover(dom.bbox(), target_h, max_cells);
  f.mask = rasterize_domain(dom, f.grid);
  f.spacing = dom.perimeter() / static_cast<double>(f.samples.size());
  double c1;
  f.body.equivalence_constants(c1, f.c2);

  // chord condition over all ordered sample pairs decides the fast path
  double margin = std::numeric_limits<double>::infinity();
  const auto& S = f.samples;
  for (size_t iy = 0; iy < S.size() && margin > -1.0; ++iy)
    for (size_t ix = 0; ix < S.size(); ++ix) {
      if (ix == iy) continue;
      margin = std::min(margin, f.body.polar_gauge(S[ix].point - S[iy].point) -
                                    (S[ix].datum - S[iy].datum));
    }
  f.unrestricted = margin >= -1e-9 * f.c2 * dom.diameter();
  return f;
}

Frame Frame::reversed() const {
  Frame r = *this;
  r.body = body.negated();
  for (auto& s : r.samples) s.datum = -s.datum;
  auto base = datum;
  r.datum = [base](const Vec2& p) { return -base(p); };
  // the chord condition is symmetric under (phi, rho0) -> (-phi, rho0-reversed)
  return r;
}

namespace {

// min over admissible samples; visibility checked lazily in ascending value
// order when the frame is not unrestricted
double lax_min(const Frame& f, const Vec2& p, int32_t* argmin) {
  const auto& S = f.samples;
  double best = std::numeric_limits<double>::infinity();
  int32_t bi = -1;
  for (size_t k = 0; k < S.size(); ++k) {
    double v = S[k].datum + f.body.polar_gauge(p - S[k].point);
    if (v < best) {
      best = v;
      bi = static_cast<int32_t>(k);
    }
  }
  if (f.unrestricted) {
    if (argmin) *argmin = bi;
    return best;
  }
  if (bi >= 0 && f.domain->visible(S[bi].point, p)) {
    if (argmin) *argmin = bi;
    return best;
  }
  // rank candidates and take the first visible one
  thread_local std::vector<std::pair<double, int32_t>> order;
  order.clear();
  order.reserve(S.size());
  for (size_t k = 0; k < S.size(); ++k)
    order.emplace_back(S[k].datum + f.body.polar_gauge(p - S[k].point), static_cast<int32_t>(k));
  std::sort(order.begin(), order.end());
  for (const auto& [v, k] : order) {
    if (f.domain->visible(S[k].point, p)) {
      if (argmin) *argmin = k;
      return v;
    }
  }
  throw NoVisibleBoundaryError();
}

}  // namespace

double lax_hopf_at(const Frame& frame, const Vec2& p, int32_t* argmin) {
  return lax_min(frame, p, argmin);
}

BoundaryFoot refine_boundary_minimum(const Frame& frame, const Vec2& x, int32_t rep) {
  const auto& s = frame.samples[rep];
  const auto* dom = frame.domain;
  double window = 1.5 * frame.spacing;
  BoundaryFoot best{s.point, s.datum + frame.body.polar_gauge(x - s.point)};

  int e = dom->edge_of_arc(s.loop, s.arc - window);
  int e_last = dom->edge_of_arc(s.loop, s.arc + window);
  for (int guard = 0; guard < 16; ++guard) {
    auto ev = dom->edge_view(e);
    auto fval = [&](double t) {
      Vec2 y = ev.a + (ev.b - ev.a) * t;
      return frame.datum(y) + frame.body.polar_gauge(x - y);
    };
    const double gr = 0.6180339887498949;
    double a = 0.0, b = 1.0;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = fval(c1), f2 = fval(c2);
    for (int it = 0; it < 40; ++it) {
      if (f1 <= f2) {
        b = c2; c2 = c1; f2 = f1;
        c1 = b - gr * (b - a);
        f1 = fval(c1);
      } else {
        a = c1; c1 = c2; f1 = f2;
        c2 = a + gr * (b - a);
        f2 = fval(c2);
      }
    }
    double tm = 0.5 * (a + b), fm = fval(tm);
    for (double t : {0.0, 1.0}) {
      double ft = fval(t);
      if (ft < fm) { fm = ft; tm = t; }
    }
    if (fm < best.value) best = {ev.a + (ev.b - ev.a) * tm, fm};
    if (e == e_last) break;
    e = dom->edge_of_arc(s.loop, ev.arc_a + ev.len + 1e-12);
  }
  return best;
}

LaxHopfSolution solve_uphi(const Frame& frame) {
  LaxHopfSolution sol;
  sol.u = ScalarField(frame.grid);
  sol.u.mask = frame.mask.inside;
  sol.argmin.assign(frame.grid.size(), -1);
  std::atomic<bool> failed{false};
  parallel_for(static_cast<size_t>(frame.grid.ny), [&](size_t j) {
    for (int i = 0; i < frame.grid.nx; ++i) {
      size_t id = frame.grid.idx(i, static_cast<int>(j));
      if (!frame.mask.inside[id]) continue;
      int32_t am = -1;
      double v;
      Vec2 x = frame.grid.node(i, static_cast<int>(j));
      try {
        v = lax_min(frame, x, &am);
      } catch (const NoVisibleBoundaryError&) {
        failed.store(true);
        continue;
      }
      v = std::min(v, refine_boundary_minimum(frame, x, am).value);
      // a boundary node is its own visible point (empty open segment): the
      // visibility-restricted minimum must not exceed the datum there
      if (!frame.unrestricted && frame.mask.boundary[id])
        v = std::min(v, frame.datum(x));
      sol.u.values[id] = v;
      sol.argmin[id] = am;
    }
  });
  if (failed.load()) throw NoVisibleBoundaryError();
  return sol;
}

LaxHopfSolution solve_w_reverse(const Frame& frame) { return solve_uphi(frame.reversed()); }

ScalarField solve_uf(const Frame& frame, const ScalarField& uphi,
                     const std::vector<uint8_t>& support_mask) {
  const GridSpec& g = frame.grid;
  ScalarField uf(g);
  uf.mask = frame.mask.inside;

  bool support_empty = true;
  for (uint8_t m : support_mask)
    if (m) { support_empty = false; break; }

  // candidates: boundary samples + support-rim nodes
  struct Cand {
    Vec2 z;
    double value;  // u_phi(z)
  };
  std::vector<Cand> cands;
  cands.reserve(frame.samples.size());
  for (const auto& s : frame.samples) cands.push_back({s.point, s.datum});
  if (!support_empty) {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        size_t id = g.idx(i, j);
        if (!support_mask[id] || !frame.mask.inside[id]) continue;
        bool rim = false;
        if (i == 0 || i + 1 == g.nx || j == 0 || j + 1 == g.ny) rim = true;
        else
          rim = !support_mask[id - 1] || !support_mask[id + 1] || !support_mask[id - g.nx] ||
                !support_mask[id + g.nx];
        if (rim) cands.push_back({g.node(i, j), uphi.values[id]});
      }
  }

  double c1, c2;
  frame.body.equivalence_constants(c1, c2);
  double step = 0.5 * g.h;

  // open segment from z to x staying in Omega \ spt(f); the Omega part is a
  // visibility test (skippable on unrestricted frames away from the mask)
  auto segment_clear = [&](const Vec2& z, const Vec2& x) {
    double len = dist(z, x);
    if (len <= frame.domain->boundary_tolerance()) return false;
    if (!support_empty) {
      int steps = std::max(2, static_cast<int>(std::ceil(len / step)));
      for (int k = 1; k < steps; ++k) {
        Vec2 p = z + (x - z) * (static_cast<double>(k) / steps);
        int pi = static_cast<int>(std::lround((p.x - g.origin.x) / g.h));
        int pj = static_cast<int>(std::lround((p.y - g.origin.y) / g.h));
        if (!g.valid(pi, pj)) return false;
        if (support_mask[g.idx(pi, pj)]) return false;
      }
    }
    if (!frame.unrestricted) return frame.domain->open_segment_in_omega(z, x);
    return true;
  };

  // candidates ranked by the upper bound value - c1 |z - x| >= value - rho0
  parallel_for(static_cast<size_t>(g.ny), [&](size_t jj) {
    int j = static_cast<int>(jj);
    std::vector<std::pair<double, int>> ranked;
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.inside[id]) continue;
      if (!support_empty && support_mask[id]) {
        uf.values[id] = uphi.values[id];
        continue;
      }
      Vec2 x = g.node(i, j);
      ranked.clear();
      ranked.reserve(cands.size());
      for (size_t c = 0; c < cands.size(); ++c)
        ranked.emplace_back(-(cands[c].value - c1 * dist(cands[c].z, x)), static_cast<int>(c));
      std::sort(ranked.begin(), ranked.end());
      double best = -std::numeric_limits<double>::infinity();
      bool found = false;
      for (const auto& [negub, c] : ranked) {
        if (-negub <= best) break;  // upper bounds only decrease from here
        const Cand& cd = cands[static_cast<size_t>(c)];
        double v = cd.value - frame.body.polar_gauge(cd.z - x);
        if (v <= best) continue;
        if (segment_clear(cd.z, x)) {
          best = v;
          found = true;
        }
      }
      if (!found) {
        uf.values[id] = uphi.values[id];  // isolated pocket; flagged by equality
      } else {
        uf.values[id] = best;
      }
    }
  });
  return uf;
}

MembershipReport check_xphi_membership(const Frame& frame, const ScalarField& field,
                                       int random_pairs, uint64_t seed) {
  MembershipReport rep;
  for (const auto& s : frame.samples) {
    double v = field.interpolate(s.point);
    if (std::isnan(v)) continue;
    rep.boundary_error = std::max(rep.boundary_error, std::abs(v - s.datum));
  }

  // Lipschitz test on random inside node pairs whose segment stays in Omega
  std::vector<std::pair<int, int>> nodes;
  const GridSpec& g = frame.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (frame.mask.interior[g.idx(i, j)]) nodes.emplace_back(i, j);
  rep.lipschitz_violation = -std::numeric_limits<double>::infinity();
  if (nodes.size() >= 2) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, nodes.size() - 1);
    int tested = 0;
    for (int trial = 0; trial < random_pairs * 10 && tested < random_pairs; ++trial) {
      auto [i1, j1] = nodes[pick(rng)];
      auto [i2, j2] = nodes[pick(rng)];
      if (i1 == i2 && j1 == j2) continue;
      Vec2 a = g.node(i1, j1), b = g.node(i2, j2);
      if (!frame.domain->convex() && !frame.domain->segment_in_closure(a, b)) continue;
      double viol = (field.at(i2, j2) - field.at(i1, j1)) - frame.body.polar_gauge(b - a);
      rep.lipschitz_violation = std::max(rep.lipschitz_violation, viol);
      ++tested;
    }
    rep.pairs_tested = tested;
  }
  if (!std::isfinite(rep.lipschitz_violation)) rep.lipschitz_violation = 0.0;

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t id = g.idx(i, j);
      if (!frame.mask.interior[id]) continue;
      double gx = (field.values[id + 1] - field.values[id - 1]) / (2.0 * g.h);
      double gy = (field.values[id + g.nx] - field.values[id - g.nx]) / (2.0 * g.h);
      rep.gradient_gauge_max = std::max(rep.gradient_gauge_max, frame.body.gauge({gx, gy}));
    }
  return rep;
}

}  // namespace mks
