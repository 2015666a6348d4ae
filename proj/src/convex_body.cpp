#include "mks/convex_body.hpp"

#include <algorithm>
#include <cmath>

namespace mks {

namespace {
constexpr double kLensC = 0.70710678118654752440;  // sqrt(2)/2
constexpr double kDirTol = 1e-9;                   // facet-cone boundary tolerance
}  // namespace

ConvexBody ConvexBody::ball(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  ConvexBody b;
  b.family_ = BodyFamily::Ball;
  b.radius_ = radius;
  return b;
}

ConvexBody ConvexBody::ellipse(double a11, double a12, double a22) {
  double det = a11 * a22 - a12 * a12;
  if (!(a11 > 0.0) || !(det > 0.0))
    throw std::invalid_argument("ellipse matrix must be positive definite");
  ConvexBody b;
  b.family_ = BodyFamily::Ellipse;
  b.a11_ = a11;
  b.a12_ = a12;
  b.a22_ = a22;
  b.i11_ = a22 / det;
  b.i12_ = -a12 / det;
  b.i22_ = a11 / det;
  return b;
}

ConvexBody ConvexBody::p_ball(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument("p-ball exponent must lie in (1, inf)");
  ConvexBody b;
  b.family_ = BodyFamily::PBall;
  b.p_ = p;
  b.q_ = p / (p - 1.0);
  return b;
}

ConvexBody ConvexBody::lens(bool polar_role) {
  ConvexBody b;
  b.family_ = BodyFamily::Lens;
  b.polar_role_ = polar_role;
  return b;
}

ConvexBody ConvexBody::polygon(std::vector<Vec2> vertices_ccw, bool polar_role) {
  if (vertices_ccw.size() < 3) throw std::invalid_argument("polygon body needs >= 3 vertices");
  ConvexBody b;
  b.family_ = BodyFamily::Polygon;
  b.polar_role_ = polar_role;
  b.verts_ = std::move(vertices_ccw);
  size_t n = b.verts_.size();
  b.edge_normals_.resize(n);
  b.edge_offsets_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    Vec2 e = b.verts_[(i + 1) % n] - b.verts_[i];
    Vec2 nrm{e.y, -e.x};  // outward for a CCW loop
    double off = dot(nrm, b.verts_[i]);
    if (!(off > 0.0))
      throw std::invalid_argument("polygon body must contain the origin in its interior");
    b.edge_normals_[i] = nrm;
    b.edge_offsets_[i] = off;
  }
  return b;
}

ConvexBody ConvexBody::negated() const {
  ConvexBody b = *this;
  b.negate_ = !b.negate_;
  return b;
}

bool ConvexBody::is_c1() const {
  if (family_ == BodyFamily::Polygon) return false;
  if (family_ == BodyFamily::Lens && !polar_role_) return false;  // lens has corners
  return true;
}

std::string ConvexBody::family_name() const {
  switch (family_) {
    case BodyFamily::Ball: return "ball";
    case BodyFamily::Ellipse: return "ellipse";
    case BodyFamily::PBall: return "p_ball";
    case BodyFamily::Lens: return "lens";
    case BodyFamily::Polygon: return "polygon";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Primitives on the described set

double ConvexBody::set_gauge(const Vec2& xi) const {
  switch (family_) {
    case BodyFamily::Ball:
      return norm(xi) / radius_;
    case BodyFamily::Ellipse:
      return std::sqrt(std::max(0.0, a11_ * xi.x * xi.x + 2.0 * a12_ * xi.x * xi.y + a22_ * xi.y * xi.y));
    case BodyFamily::PBall:
      return std::pow(std::pow(std::abs(xi.x), p_) + std::pow(std::abs(xi.y), p_), 1.0 / p_);
    case BodyFamily::Lens:
      // positive root of (|x| + c t)^2 + y^2 = t^2 with c = sqrt(2)/2
      return std::sqrt(2.0) * std::abs(xi.x) + std::sqrt(4.0 * xi.x * xi.x + 2.0 * xi.y * xi.y);
    case BodyFamily::Polygon: {
      double g = 0.0;
      for (size_t i = 0; i < verts_.size(); ++i)
        g = std::max(g, dot(edge_normals_[i], xi) / edge_offsets_[i]);
      return g;
    }
  }
  return 0.0;
}

double ConvexBody::set_support(const Vec2& xi) const {
  switch (family_) {
    case BodyFamily::Ball:
      return radius_ * norm(xi);
    case BodyFamily::Ellipse:
      return std::sqrt(std::max(0.0, i11_ * xi.x * xi.x + 2.0 * i12_ * xi.x * xi.y + i22_ * xi.y * xi.y));
    case BodyFamily::PBall:
      return std::pow(std::pow(std::abs(xi.x), q_) + std::pow(std::abs(xi.y), q_), 1.0 / q_);
    case BodyFamily::Lens: {
      double n = norm(xi);
      if (n == 0.0) return 0.0;
      if (xi.x >= kLensC * n) return n - kLensC * xi.x;   // right arc, center (-c, 0)
      if (-xi.x >= kLensC * n) return n + kLensC * xi.x;  // left arc, center (c, 0)
      return kLensC * std::abs(xi.y);                     // corner (0, +-c)
    }
    case BodyFamily::Polygon: {
      double s = -std::numeric_limits<double>::infinity();
      for (const Vec2& v : verts_) s = std::max(s, dot(v, xi));
      return s;
    }
  }
  return 0.0;
}

Vec2 ConvexBody::set_gauge_gradient(const Vec2& xi) const {
  switch (family_) {
    case BodyFamily::Ball:
      return xi / (radius_ * norm(xi));
    case BodyFamily::Ellipse: {
      double g = set_gauge(xi);
      return Vec2{a11_ * xi.x + a12_ * xi.y, a12_ * xi.x + a22_ * xi.y} / g;
    }
    case BodyFamily::PBall: {
      double g = set_gauge(xi);
      auto comp = [&](double c) {
        if (c == 0.0) return 0.0;
        double s = c > 0 ? 1.0 : -1.0;
        return s * std::pow(std::abs(c) / g, p_ - 1.0);
      };
      return {comp(xi.x), comp(xi.y)};
    }
    case BodyFamily::Lens: {
      if (std::abs(xi.x) <= kDirTol * norm(xi))
        throw NonDifferentiableError("lens gauge is not differentiable on the y-axis");
      double s = xi.x > 0 ? 1.0 : -1.0;
      double r = std::sqrt(4.0 * xi.x * xi.x + 2.0 * xi.y * xi.y);
      return {std::sqrt(2.0) * s + 4.0 * xi.x / r, 2.0 * xi.y / r};
    }
    case BodyFamily::Polygon: {
      size_t best = 0, second = 0;
      double b1 = -1.0, b2 = -1.0;
      for (size_t i = 0; i < verts_.size(); ++i) {
        double v = dot(edge_normals_[i], xi) / edge_offsets_[i];
        if (v > b1) {
          second = best; b2 = b1;
          best = i; b1 = v;
        } else if (v > b2) {
          second = i; b2 = v;
        }
      }
      (void)second;
      if (b1 - b2 <= kDirTol * std::max(1.0, b1))
        throw NonDifferentiableError("direction on a facet-cone boundary of the polygon body");
      return edge_normals_[best] / edge_offsets_[best];
    }
  }
  return {0, 0};
}

Vec2 ConvexBody::set_support_argmax(const Vec2& xi) const {
  switch (family_) {
    case BodyFamily::Ball:
      return radius_ * xi / norm(xi);
    case BodyFamily::Ellipse: {
      double s = set_support(xi);
      return Vec2{i11_ * xi.x + i12_ * xi.y, i12_ * xi.x + i22_ * xi.y} / s;
    }
    case BodyFamily::PBall: {
      // gradient of the dual q-norm = the maximizer on the p-ball boundary
      double s = set_support(xi);
      auto comp = [&](double c) {
        if (c == 0.0) return 0.0;
        double sg = c > 0 ? 1.0 : -1.0;
        return sg * std::pow(std::abs(c) / s, q_ - 1.0);
      };
      return {comp(xi.x), comp(xi.y)};
    }
    case BodyFamily::Lens: {
      double n = norm(xi);
      if (xi.x >= kLensC * n) return Vec2{-kLensC, 0.0} + xi / n;
      if (-xi.x >= kLensC * n) return Vec2{kLensC, 0.0} + xi / n;
      return {0.0, xi.y >= 0 ? kLensC : -kLensC};
    }
    case BodyFamily::Polygon: {
      size_t best = 0;
      double b1 = -std::numeric_limits<double>::infinity(), b2 = b1;
      for (size_t i = 0; i < verts_.size(); ++i) {
        double v = dot(verts_[i], xi);
        if (v > b1) {
          b2 = b1;
          best = i; b1 = v;
        } else if (v > b2) {
          b2 = v;
        }
      }
      double scale = std::max(1.0, std::abs(b1));
      if (b1 - b2 <= kDirTol * scale)
        throw NonDifferentiableError("direction normal to an edge of the polygon body");
      return verts_[best];
    }
  }
  return {0, 0};
}

// ---------------------------------------------------------------------------
// Public surface (role + negation dispatch)

double ConvexBody::gauge(const Vec2& xi) const {
  Vec2 v = negate_ ? -xi : xi;
  if (v.x == 0.0 && v.y == 0.0) return 0.0;
  return polar_role_ ? set_support(v) : set_gauge(v);
}

double ConvexBody::polar_gauge(const Vec2& xi) const {
  Vec2 v = negate_ ? -xi : xi;
  if (v.x == 0.0 && v.y == 0.0) return 0.0;
  return polar_role_ ? set_gauge(v) : set_support(v);
}

Vec2 ConvexBody::gauge_gradient(const Vec2& xi) const {
  Vec2 v = negate_ ? -xi : xi;
  if (v.x == 0.0 && v.y == 0.0) throw ZeroVectorError();
  Vec2 g = polar_role_ ? set_support_argmax(v) : set_gauge_gradient(v);
  return negate_ ? -g : g;
}

void ConvexBody::equivalence_constants(double& c1, double& c2, int samples) const {
  c1 = std::numeric_limits<double>::infinity();
  c2 = 0.0;
  for (int k = 0; k < samples; ++k) {
    double a = 2.0 * M_PI * k / samples;
    double g = polar_gauge({std::cos(a), std::sin(a)});
    c1 = std::min(c1, g);
    c2 = std::max(c2, g);
  }
}

Vec2 ConvexBody::described_boundary_point(double angle) const {
  Vec2 dir{std::cos(angle), std::sin(angle)};
  double g = set_gauge(dir);
  return dir / g;
}

double ConvexBody::described_support_sampled(const Vec2& xi, int samples) const {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    double a = 2.0 * M_PI * k / samples;
    best = std::max(best, dot(described_boundary_point(a), xi));
  }
  return best;
}

}  // namespace mks
