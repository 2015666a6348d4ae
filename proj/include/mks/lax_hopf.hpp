#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mks/convex_body.hpp"
#include "mks/domain.hpp"
#include "mks/grid.hpp"

namespace mks {

struct NoVisibleBoundaryError : std::runtime_error {
  NoVisibleBoundaryError() : std::runtime_error("no boundary sample visible from an inside node") {}
};

// Everything a solve needs: domain, body, sampled boundary datum, grid, masks.
// `unrestricted` records that the chord condition (phi(x)-phi(y) <= rho0(x-y)
// on the boundary) holds, in which case the Lax-Hopf minimum may run over all
// samples without visibility tests.
struct Frame {
  const PolygonalDomain* domain = nullptr;
  ConvexBody body = ConvexBody::ball(1.0);
  std::vector<BoundarySample> samples;
  std::function<double(const Vec2&)> datum;
  GridSpec grid;
  DomainMask mask;
  bool unrestricted = false;
  double spacing = 0.0;  // mean boundary sample spacing
  double c2 = 1.0;       // max of rho0 over unit directions

  static Frame build(const PolygonalDomain& dom, const ConvexBody& body,
                     std::function<double(const Vec2&)> datum, int sample_target,
                     double target_h, int max_cells = 296);

  // The geometry of -K with datum -phi (Lax-Hopf of the reversed frame is the
  // w_phi field of the uniqueness construction).
  Frame reversed() const;

  double h() const { return grid.h; }
  bool node_inside(int i, int j) const { return mask.inside[grid.idx(i, j)] != 0; }
};

struct LaxHopfSolution {
  ScalarField u;
  std::vector<int32_t> argmin;  // best sample per node, -1 outside
};

// Maximal solution u_phi: per inside node, min over visible samples of
// datum + rho0(x - y).
LaxHopfSolution solve_uphi(const Frame& frame);

// w_phi(x) = min over visible y of -datum(y) + rho0(y - x); equals the
// Lax-Hopf solve of the reversed frame.
LaxHopfSolution solve_w_reverse(const Frame& frame);

// Minimal solution u_f: max over W_x of u_phi(z) - rho0(z - x), where W_x
// collects boundary samples and support-rim nodes whose open segment to x
// avoids spt(f). Equals u_phi on spt(f).
ScalarField solve_uf(const Frame& frame, const ScalarField& uphi,
                     const std::vector<uint8_t>& support_mask);

// Exact point evaluation of the Lax-Hopf minimum (same candidate rule as the
// grid solve). Returns the value; *argmin gets the best sample index.
double lax_hopf_at(const Frame& frame, const Vec2& p, int32_t* argmin = nullptr);

// Continuous minimization of datum(y) + rho0(x - y) over the boundary edges
// within ~1.5 sample spacings of the argmin sample. Removes the half-spacing
// ripple of the pure sample minimum (which otherwise contaminates gradients
// near the boundary).
struct BoundaryFoot {
  Vec2 point;
  double value = 0.0;
};
BoundaryFoot refine_boundary_minimum(const Frame& frame, const Vec2& x, int32_t rep);

struct MembershipReport {
  double boundary_error = 0.0;      // max |field - datum| at boundary samples
  double lipschitz_violation = 0.0; // max (u2 - u1) - rho0(x2 - x1), segments in Omega
  double gradient_gauge_max = 0.0;  // max gauge(finite-difference gradient)
  long pairs_tested = 0;
};

MembershipReport check_xphi_membership(const Frame& frame, const ScalarField& field,
                                       int random_pairs = 500, uint64_t seed = 1);

}  // namespace mks
