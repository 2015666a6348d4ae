#include "mks/domain.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace mks {

namespace {

constexpr double kSegEps = 1e-12;

double signed_area(const std::vector<Vec2>& loop) {
  double a = 0.0;
  for (size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % loop.size()];
    a += cross(p, q);
  }
  return 0.5 * a;
}

// parity of a horizontal ray w.r.t. one loop (used only for load-time checks)
bool point_in_loop(const Vec2& p, const std::vector<Vec2>& loop) {
  bool in = false;
  for (size_t i = 0; i < loop.size(); ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % loop.size()];
    if ((a.y > p.y) != (b.y > p.y)) {
      double xh = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xh) in = !in;
    }
  }
  return in;
}

struct Scratch {
  std::vector<uint32_t> stamp;
  uint32_t epoch = 0;
  std::vector<int> cand;
  std::vector<double> params;
};
thread_local Scratch tl_scratch;

}  // namespace

PolygonalDomain::PolygonalDomain(std::vector<Vec2> outer, std::vector<std::vector<Vec2>> holes) {
  if (outer.size() < 3) throw std::invalid_argument("outer loop needs >= 3 vertices");
  if (signed_area(outer) < 0.0) std::reverse(outer.begin(), outer.end());
  loops_.push_back(std::move(outer));
  for (auto& h : holes) {
    if (h.size() < 3) throw std::invalid_argument("hole loop needs >= 3 vertices");
    if (signed_area(h) > 0.0) std::reverse(h.begin(), h.end());
    loops_.push_back(std::move(h));
  }

  loop_perimeter_.assign(loops_.size(), 0.0);
  for (size_t li = 0; li < loops_.size(); ++li) {
    double arc = 0.0;
    loop_edge_start_.push_back(static_cast<int>(edges_.size()));
    const auto& loop = loops_[li];
    for (size_t i = 0; i < loop.size(); ++i) {
      Edge e;
      e.a = loop[i];
      e.b = loop[(i + 1) % loop.size()];
      e.loop = static_cast<int>(li);
      e.arc_a = arc;
      e.len = dist(e.a, e.b);
      if (e.len <= 0.0) throw std::invalid_argument("degenerate (zero-length) polygon edge");
      arc += e.len;
      bbox_.expand(e.a);
      edges_.push_back(e);
    }
    loop_perimeter_[li] = arc;
    perimeter_total_ += arc;
  }
  boundary_tol_ = 1e-9 * bbox_.diameter();

  // simplicity: no two non-adjacent edges may intersect
  for (size_t i = 0; i < edges_.size(); ++i) {
    for (size_t j = i + 1; j < edges_.size(); ++j) {
      const Edge& e = edges_[i];
      const Edge& f = edges_[j];
      bool adjacent = e.loop == f.loop &&
                      (dist(e.b, f.a) <= boundary_tol_ || dist(f.b, e.a) <= boundary_tol_);
      if (adjacent) continue;
      SegmentHit h = intersect_segments(e.a, e.b, f.a, f.b, kSegEps);
      if (h.hit) throw std::invalid_argument("polygon loops are not simple (edges intersect)");
      if (h.collinear) {
        // collinear edges: reject only on true overlap
        Vec2 d = e.b - e.a;
        double den = norm2(d);
        double t0 = dot(f.a - e.a, d) / den, t1 = dot(f.b - e.a, d) / den;
        if (std::max(std::min(t0, t1), 0.0) < std::min(std::max(t0, t1), 1.0) - 1e-9)
          throw std::invalid_argument("polygon loops overlap along an edge");
      }
    }
  }
  // holes strictly inside the outer loop, pairwise non-nested
  for (size_t li = 1; li < loops_.size(); ++li) {
    for (const Vec2& v : loops_[li]) {
      if (!point_in_loop(v, loops_[0]))
        throw std::invalid_argument("hole vertex outside the outer loop");
      for (size_t lj = 1; lj < loops_.size(); ++lj)
        if (lj != li && point_in_loop(v, loops_[lj]))
          throw std::invalid_argument("nested holes are not allowed");
    }
  }

  // reflex vertices (domain-interior angle > pi); holes are CW so the same
  // cross-product sign rule applies
  for (size_t id = 0; id < edges_.size(); ++id) {
    const Edge& out = edges_[id];
    size_t loop_start = loop_edge_start_[out.loop];
    size_t n = loops_[out.loop].size();
    size_t pos = id - loop_start;
    const Edge& in = edges_[loop_start + (pos + n - 1) % n];
    if (cross(in.b - in.a, out.b - out.a) < -1e-12) reflex_vertices_.push_back(static_cast<int>(id));
  }
  convex_ = loops_.size() == 1 && reflex_vertices_.empty();

  build_buckets();
}

void PolygonalDomain::build_buckets() {
  double ext = std::max(bbox_.width(), bbox_.height());
  bx_ = by_ = 96;
  bucket_size_ = ext / 96.0 * (1.0 + 1e-12);
  bucket_origin_ = bbox_.min;
  bx_ = static_cast<int>(std::ceil(bbox_.width() / bucket_size_)) + 1;
  by_ = static_cast<int>(std::ceil(bbox_.height() / bucket_size_)) + 1;
  buckets_.assign(static_cast<size_t>(bx_) * by_, {});
  for (size_t id = 0; id < edges_.size(); ++id) {
    const Edge& e = edges_[id];
    int i0 = static_cast<int>((std::min(e.a.x, e.b.x) - bucket_origin_.x) / bucket_size_);
    int i1 = static_cast<int>((std::max(e.a.x, e.b.x) - bucket_origin_.x) / bucket_size_);
    int j0 = static_cast<int>((std::min(e.a.y, e.b.y) - bucket_origin_.y) / bucket_size_);
    int j1 = static_cast<int>((std::max(e.a.y, e.b.y) - bucket_origin_.y) / bucket_size_);
    i0 = std::clamp(i0, 0, bx_ - 1); i1 = std::clamp(i1, 0, bx_ - 1);
    j0 = std::clamp(j0, 0, by_ - 1); j1 = std::clamp(j1, 0, by_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        buckets_[static_cast<size_t>(j) * bx_ + i].push_back(static_cast<int32_t>(id));
  }
}

// candidate edges for a query segment, deduplicated (grid walk over the cells
// the segment passes through; edges are stored bbox-conservatively)
void PolygonalDomain::gather_edges(const Vec2& a, const Vec2& b, std::vector<int>& out) const {
  Scratch& s = tl_scratch;
  if (s.stamp.size() < edges_.size()) s.stamp.assign(edges_.size(), 0);
  uint32_t epoch = ++s.epoch;
  if (epoch == 0) {  // wrapped
    std::fill(s.stamp.begin(), s.stamp.end(), 0);
    epoch = ++s.epoch;
  }
  out.clear();

  auto cell_of = [&](const Vec2& p, int& i, int& j) {
    i = std::clamp(static_cast<int>((p.x - bucket_origin_.x) / bucket_size_), 0, bx_ - 1);
    j = std::clamp(static_cast<int>((p.y - bucket_origin_.y) / bucket_size_), 0, by_ - 1);
  };
  auto visit = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= bx_ || j >= by_) return;
    for (int32_t id : buckets_[static_cast<size_t>(j) * bx_ + i]) {
      if (s.stamp[id] != epoch) {
        s.stamp[id] = epoch;
        out.push_back(id);
      }
    }
  };

  int i0, j0, i1, j1;
  cell_of(a, i0, j0);
  cell_of(b, i1, j1);
  // conservative supercover walk: sample the segment at half-cell steps and
  // visit a 2x2 block around each sample
  double len = dist(a, b);
  int steps = std::max(1, static_cast<int>(std::ceil(len / (0.5 * bucket_size_))));
  for (int k = 0; k <= steps; ++k) {
    Vec2 p = a + (b - a) * (static_cast<double>(k) / steps);
    int i, j;
    cell_of(p, i, j);
    visit(i, j);
    visit(i + 1, j);
    visit(i, j + 1);
    visit(i + 1, j + 1);
    visit(i - 1, j);
    visit(i, j - 1);
  }
  (void)i0; (void)j0; (void)i1; (void)j1;
}

int PolygonalDomain::crossings_from(const Vec2& p) const {
  // even-odd parity of the horizontal ray p + t e_x, t > 0
  int j = std::clamp(static_cast<int>((p.y - bucket_origin_.y) / bucket_size_), 0, by_ - 1);
  Scratch& s = tl_scratch;
  if (s.stamp.size() < edges_.size()) s.stamp.assign(edges_.size(), 0);
  uint32_t epoch = ++s.epoch;
  if (epoch == 0) {
    std::fill(s.stamp.begin(), s.stamp.end(), 0);
    epoch = ++s.epoch;
  }
  int istart = std::clamp(static_cast<int>((p.x - bucket_origin_.x) / bucket_size_), 0, bx_ - 1);
  int count = 0;
  for (int dj = -1; dj <= 1; ++dj) {
    int jj = j + dj;
    if (jj < 0 || jj >= by_) continue;
    for (int i = istart; i < bx_; ++i) {
      for (int32_t id : buckets_[static_cast<size_t>(jj) * bx_ + i]) {
        if (s.stamp[id] == epoch) continue;
        s.stamp[id] = epoch;
        const Edge& e = edges_[id];
        if ((e.a.y > p.y) != (e.b.y > p.y)) {
          double xh = e.a.x + (p.y - e.a.y) / (e.b.y - e.a.y) * (e.b.x - e.a.x);
          if (p.x < xh) ++count;
        }
      }
    }
  }
  return count;
}

PointClass PolygonalDomain::classify(const Vec2& p) const {
  if (p.x < bbox_.min.x - boundary_tol_ || p.x > bbox_.max.x + boundary_tol_ ||
      p.y < bbox_.min.y - boundary_tol_ || p.y > bbox_.max.y + boundary_tol_)
    return PointClass::Outside;
  // boundary proximity: candidates live in the 3x3 cell block around p
  int ci = std::clamp(static_cast<int>((p.x - bucket_origin_.x) / bucket_size_), 0, bx_ - 1);
  int cj = std::clamp(static_cast<int>((p.y - bucket_origin_.y) / bucket_size_), 0, by_ - 1);
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      int i = ci + di, j = cj + dj;
      if (i < 0 || j < 0 || i >= bx_ || j >= by_) continue;
      for (int32_t id : buckets_[static_cast<size_t>(j) * bx_ + i]) {
        const Edge& e = edges_[id];
        if (dist_point_segment(p, e.a, e.b) <= boundary_tol_) return PointClass::Boundary;
      }
    }
  return (crossings_from(p) % 2 == 1) ? PointClass::Inside : PointClass::Outside;
}

bool PolygonalDomain::segment_admissible(const Vec2& a, const Vec2& b, bool open_interior) const {
  double len = dist(a, b);
  if (len <= boundary_tol_) return !open_interior && classify(a) != PointClass::Outside;

  Scratch& s = tl_scratch;
  gather_edges(a, b, s.cand);
  // collect touch parameters along [a,b]
  std::vector<double>& params = s.params;
  params.clear();
  params.push_back(0.0);
  params.push_back(1.0);
  Vec2 d = b - a;
  double den = norm2(d);
  double ptol_early = std::max(1e-12, boundary_tol_ / len);
  for (int id : s.cand) {
    const Edge& e = edges_[id];
    SegmentHit h = intersect_segments(a, b, e.a, e.b, kSegEps);
    if (h.hit) {
      // any boundary contact strictly inside the segment settles the open
      // query (this includes grazing a reflex vertex)
      if (open_interior && h.t > ptol_early && h.t < 1.0 - ptol_early) return false;
      params.push_back(std::clamp(h.t, 0.0, 1.0));
    } else if (h.collinear) {
      double t0 = dot(e.a - a, d) / den, t1 = dot(e.b - a, d) / den;
      double lo = std::max(std::min(t0, t1), 0.0), hi = std::min(std::max(t0, t1), 1.0);
      if (hi - lo > boundary_tol_ / len) {
        if (open_interior) return false;  // runs along the boundary
        params.push_back(lo);
        params.push_back(hi);
      }
    }
  }
  std::sort(params.begin(), params.end());
  double ptol = std::max(1e-12, boundary_tol_ / len);
  for (size_t k = 0; k + 1 < params.size(); ++k) {
    double t1 = params[k], t2 = params[k + 1];
    if (t2 - t1 <= ptol) continue;
    PointClass c = classify(a + d * (0.5 * (t1 + t2)));
    if (open_interior) {
      if (c != PointClass::Inside) return false;
    } else {
      if (c == PointClass::Outside) return false;
    }
  }
  return true;
}

bool PolygonalDomain::open_segment_in_omega(const Vec2& a, const Vec2& b) const {
  return segment_admissible(a, b, true);
}

bool PolygonalDomain::segment_in_closure(const Vec2& a, const Vec2& b) const {
  return segment_admissible(a, b, false);
}

bool PolygonalDomain::visible(const Vec2& y, const Vec2& x) const {
  if (dist(x, y) <= boundary_tol_) return false;
  return open_segment_in_omega(y, x);
}

std::vector<BoundarySample> PolygonalDomain::sample_boundary(
    int target_count, const std::function<double(const Vec2&)>& datum) const {
  if (target_count < vertex_count())
    throw std::invalid_argument("sample target below the polygon vertex count");
  std::vector<BoundarySample> out;
  out.reserve(target_count + vertex_count());
  for (const Edge& e : edges_) {
    int n = std::max(1, static_cast<int>(std::ceil(e.len * target_count / perimeter_total_ - 1e-9)));
    for (int k = 0; k < n; ++k) {
      double t = static_cast<double>(k) / n;
      BoundarySample s;
      s.point = e.a + (e.b - e.a) * t;
      s.loop = e.loop;
      s.arc = e.arc_a + t * e.len;
      s.datum = datum(s.point);
      out.push_back(s);
    }
  }
  return out;
}

std::optional<PolygonalDomain::RayHit> PolygonalDomain::ray_exit(const Vec2& x, const Vec2& dir) const {
  double dn = norm(dir);
  if (dn <= 0.0) return std::nullopt;
  double reach = 2.0 * bbox_.diameter() / dn + 1.0;
  Vec2 far = x + dir * reach;
  Scratch& s = tl_scratch;
  gather_edges(x, far, s.cand);
  double best = std::numeric_limits<double>::infinity();
  RayHit hit;
  for (int id : s.cand) {
    const Edge& e = edges_[id];
    SegmentHit h = intersect_segments(x, far, e.a, e.b, kSegEps);
    if (!h.hit) continue;
    double t = h.t * reach;
    if (t <= boundary_tol_ / dn) continue;
    if (t < best) {
      best = t;
      hit.t = t;
      hit.point = x + dir * t;
      hit.loop = e.loop;
      hit.arc = e.arc_a + std::clamp(h.u, 0.0, 1.0) * e.len;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return hit;
}

int PolygonalDomain::edge_of_arc(int loop, double arc) const {
  double perim = loop_perimeter_[loop];
  arc = std::fmod(arc, perim);
  if (arc < 0) arc += perim;
  int lo = loop_edge_start_[loop];
  int hi = (static_cast<size_t>(loop) + 1 < loop_edge_start_.size()
                ? loop_edge_start_[loop + 1]
                : static_cast<int>(edges_.size())) - 1;
  // binary search over the increasing arc_a within the loop
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (edges_[mid].arc_a <= arc) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

double PolygonalDomain::polygonization_chord_deficit() const {
  double deficit = 0.0;
  size_t id = 0;
  for (size_t li = 0; li < loops_.size(); ++li) {
    size_t n = loops_[li].size();
    for (size_t k = 0; k < n; ++k) {
      const Edge& in = edges_[id + (k + n - 1) % n];
      const Edge& out = edges_[id + k];
      Vec2 u = in.b - in.a, v = out.b - out.a;
      double beta = std::abs(std::atan2(cross(u, v), dot(u, v)));
      if (beta <= 0.35) deficit += 0.5 * (in.len + out.len) * beta * beta / 24.0;
    }
    id += n;
  }
  return deficit;
}

// ---------------------------------------------------------------------------
// geodesics

GeodesicResult PolygonalDomain::geodesic(const Vec2& from, const Vec2& to, const ConvexBody& body) const {
  GeodesicResult res;
  if (segment_in_closure(from, to)) {
    res.length = body.polar_gauge(to - from);
    res.polyline = {from, to};
    return res;
  }
  // nodes: 0 = from, 1 = to, then polygon vertices
  int V = vertex_count();
  int n = V + 2;
  std::vector<Vec2> pts(n);
  pts[0] = from;
  pts[1] = to;
  for (int k = 0; k < V; ++k) pts[2 + k] = edges_[k].a;

  std::vector<double> dist_(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -1);
  std::vector<char> done(n, 0);
  dist_[0] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.push({0.0, 0});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (u == 1) break;
    for (int v = 0; v < n; ++v) {
      if (done[v] || v == u || v == 0) continue;
      if (!segment_in_closure(pts[u], pts[v])) continue;
      double w = body.polar_gauge(pts[v] - pts[u]);
      if (du + w < dist_[v] - 1e-15) {
        dist_[v] = du + w;
        prev[v] = u;
        pq.push({dist_[v], v});
      }
    }
  }
  if (!std::isfinite(dist_[1])) throw UnreachableError();
  res.length = dist_[1];
  std::vector<Vec2> rev;
  for (int v = 1; v != -1; v = prev[v]) rev.push_back(pts[v]);
  res.polyline.assign(rev.rbegin(), rev.rend());
  return res;
}

DatumReport PolygonalDomain::validate_datum(const std::vector<BoundarySample>& samples,
                                            const ConvexBody& body, long max_h4_pairs) const {
  DatumReport rep;
  int N = static_cast<int>(samples.size());
  rep.sample_count = N;
  if (N < 2) return rep;

  // chord test (f:onelip) over all ordered pairs
  double chord_margin = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < N; ++iy) {
    for (int ix = 0; ix < N; ++ix) {
      if (ix == iy) continue;
      double m = body.polar_gauge(samples[ix].point - samples[iy].point) -
                 (samples[ix].datum - samples[iy].datum);
      if (m < chord_margin) {
        chord_margin = m;
        rep.chord_worst_pair = {iy, ix};
      }
    }
  }
  rep.chord_margin = chord_margin;
  rep.chord_pairs_tested = static_cast<long>(N) * (N - 1);
  double c1, c2;
  body.equivalence_constants(c1, c2);
  double value_scale = c2 * diameter();
  rep.chord_ok = chord_margin >= -1e-9 * value_scale;

  // (H4) via geodesic distances; on a convex domain every segment is
  // admissible, so d_L is the chord metric and the chord scan already covers
  // all pairs
  if (convex_) {
    rep.h4_margin = chord_margin;
    rep.h4_worst_pair = rep.chord_worst_pair;
    rep.h4_pairs_tested = rep.chord_pairs_tested;
    rep.tolerance = 2.0 * polygonization_chord_deficit() + 1e-9 * diameter();
    rep.is_compatible = rep.h4_margin >= -rep.tolerance;
    return rep;
  }

  int V = vertex_count();
  std::vector<Vec2> vp(V);
  for (int k = 0; k < V; ++k) vp[k] = edges_[k].a;

  // vertex-vertex admissibility and weights
  std::vector<char> adm(static_cast<size_t>(V) * V, 0);
  std::vector<double> wvv(static_cast<size_t>(V) * V, 0.0);
  for (int u = 0; u < V; ++u)
    for (int v = 0; v < V; ++v) {
      if (u == v) continue;
      if (segment_in_closure(vp[u], vp[v])) {
        adm[static_cast<size_t>(u) * V + v] = 1;
        wvv[static_cast<size_t>(u) * V + v] = body.polar_gauge(vp[v] - vp[u]);
      }
    }
  // vertex -> sample admissibility (symmetric as a segment predicate)
  std::vector<char> avs(static_cast<size_t>(V) * N, 0);
  for (int v = 0; v < V; ++v)
    for (int ix = 0; ix < N; ++ix)
      if (segment_in_closure(vp[v], samples[ix].point)) avs[static_cast<size_t>(v) * N + ix] = 1;

  long sources = std::max<long>(1, std::min<long>(N, max_h4_pairs / std::max(1, N - 1)));
  long stride = std::max<long>(1, N / sources);

  double h4_margin = std::numeric_limits<double>::infinity();
  std::vector<double> dv(V);
  std::vector<char> donev(V);
  auto run_source = [&](int iy) {
    const Vec2 y = samples[iy].point;
    std::fill(dv.begin(), dv.end(), std::numeric_limits<double>::infinity());
    std::fill(donev.begin(), donev.end(), 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int v = 0; v < V; ++v) {
      if (avs[static_cast<size_t>(v) * N + iy]) {
        dv[v] = body.polar_gauge(vp[v] - y);
        pq.push({dv[v], v});
      }
    }
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (donev[u]) continue;
      donev[u] = 1;
      const char* row = &adm[static_cast<size_t>(u) * V];
      const double* wr = &wvv[static_cast<size_t>(u) * V];
      for (int v = 0; v < V; ++v) {
        if (!row[v] || donev[v]) continue;
        double nd = du + wr[v];
        if (nd < dv[v] - 1e-15) {
          dv[v] = nd;
          pq.push({nd, v});
        }
      }
    }
    for (int ix = 0; ix < N; ++ix) {
      if (ix == iy) continue;
      double d = std::numeric_limits<double>::infinity();
      if (segment_in_closure(y, samples[ix].point))
        d = body.polar_gauge(samples[ix].point - y);
      for (int v = 0; v < V; ++v)
        if (avs[static_cast<size_t>(v) * N + ix])
          d = std::min(d, dv[v] + body.polar_gauge(samples[ix].point - vp[v]));
      double m = d - (samples[ix].datum - samples[iy].datum);
      ++rep.h4_pairs_tested;
      if (m < h4_margin) {
        h4_margin = m;
        rep.h4_worst_pair = {iy, ix};
      }
    }
  };
  for (long iy = 0; iy < N; iy += stride) run_source(static_cast<int>(iy));
  // always test the chord-critical source as well
  if (rep.chord_worst_pair.first >= 0 && rep.chord_worst_pair.first % stride != 0)
    run_source(rep.chord_worst_pair.first);

  rep.h4_margin = h4_margin;
  rep.tolerance = 2.0 * polygonization_chord_deficit() + 1e-9 * diameter();
  rep.is_compatible = h4_margin >= -rep.tolerance;
  return rep;
}

}  // namespace mks
