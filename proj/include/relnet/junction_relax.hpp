#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "relnet/fundamental_diagram.hpp"
#include "relnet/state_space.hpp"

namespace relnet {

/// Thrown when a user-supplied coupling rule produces an infeasible node
/// state (flux out of range or a state outside the physical domain).
class coupling_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data seen by a 2-to-1 node: z from both ingoing edges, w from the
/// outgoing edge.
struct MergeInputs {
  double z1 = 0.0;
  double z2 = 0.0;
  double w3 = 0.0;
};

/// Data seen by a 1-to-2 node: z from the ingoing edge, w from both
/// outgoing edges.
struct DivergeInputs {
  double z1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
};

/// The node state (rho^i, q^i) on each connected edge.
struct NodeSolution {
  std::array<PrimState, 3> edge{};
};

/// Largest flux reachable along a 1-curve with invariant z, attained on the
/// q = rho boundary: q_max(z) = z/(1+z).
inline double q_max(double z) { return z / (1.0 + z); }

namespace detail {

/// rho on the 1-curve of invariant z carrying flux q; at z = 0 the curve
/// degenerates (q must vanish) and `fallback` is used.
inline double rho_on_z_curve(double z, double q, double fallback) {
  if (z <= 0.0) return fallback;
  return 1.0 - q / z;
}

/// Common head of every merge solver: z3 and the outgoing node state.
struct MergeHead {
  double z3, rho3, q3;
};

inline MergeHead merge_head(double z3, double w3) {
  const double rho3 = (w3 + z3) / (1.0 + z3);
  return {z3, rho3, z3 * (1.0 - rho3)};
}

inline void check_merge_inputs(const MergeInputs& in) {
  if (in.z1 < -kDomainTol || in.z2 < -kDomainTol || in.w3 < -kDomainTol ||
      in.w3 > 1.0 + kDomainTol)
    throw std::domain_error("merge: inputs outside z >= 0, 0 <= w <= 1");
}

inline void check_diverge_inputs(const DivergeInputs& in) {
  if (in.z1 < -kDomainTol || in.w2 < -kDomainTol || in.w2 > 1.0 + kDomainTol ||
      in.w3 < -kDomainTol || in.w3 > 1.0 + kDomainTol)
    throw std::domain_error("diverge: inputs outside z >= 0, 0 <= w <= 1");
}

}  // namespace detail

/// Merge with the incoming fluxes split in the ratio of their z invariants
/// (q1/q2 = z1/z2, z3 = z1 + z2). All three node densities coincide. With
/// z2 = 0 the whole flux goes to edge 1; with z1 = z2 = 0 everything is at
/// rest and the node density equals w3.
inline NodeSolution merge_flux_ratio(const MergeInputs& in) {
  detail::check_merge_inputs(in);
  const double z1 = std::max(0.0, in.z1);
  const double z2 = std::max(0.0, in.z2);
  const auto head = detail::merge_head(z1 + z2, in.w3);

  NodeSolution out;
  const double rho = head.rho3;
  double q1 = 0.0;
  if (head.z3 > 0.0) q1 = head.q3 * z1 / head.z3;
  out.edge[0] = {rho, q1};
  out.edge[1] = {rho, head.q3 - q1};
  out.edge[2] = {rho, head.q3};
  return out;
}

/// Merge with (partial) priority for edge 1. P = 0 gives edge 1 absolute
/// priority, q1 = min(q3, q_max(z1)); P = 1 mirrors this for edge 2; values
/// in between interpolate linearly. The capped edge sits on the q = rho
/// boundary, a fully blocked edge ends at the jam state (rho = 1, q = 0).
inline NodeSolution merge_priority(const MergeInputs& in, double priority) {
  detail::check_merge_inputs(in);
  if (priority < 0.0 || priority > 1.0)
    throw std::domain_error("merge_priority: priority weight outside [0,1]");
  const double z1 = std::max(0.0, in.z1);
  const double z2 = std::max(0.0, in.z2);
  const auto head = detail::merge_head(z1 + z2, in.w3);

  const double qbar1 = std::min(head.q3, q_max(z1));
  const double qbar2 = std::min(head.q3, q_max(z2));
  double q1 = (1.0 - priority) * qbar1 + priority * (head.q3 - qbar2);
  q1 = std::clamp(q1, 0.0, head.q3);
  const double q2 = head.q3 - q1;

  NodeSolution out;
  out.edge[0] = {detail::rho_on_z_curve(z1, q1, head.rho3), q1};
  out.edge[1] = {detail::rho_on_z_curve(z2, q2, head.rho3), q2};
  out.edge[2] = {head.rho3, head.q3};
  return out;
}

using InvariantCombiner = std::function<double(double z1, double z2, double w3)>;
using MergeFluxRule = std::function<double(double q3, double z1, double z2, double w3)>;

/// Generic merge pipeline: z3 = g(z1, z2, w3) fixes the outgoing state, the
/// flux rule picks q1, and the remaining quantities follow. The rule must
/// produce a feasible split (0 <= q1 <= q3 and both fluxes reachable on
/// their 1-curves), otherwise a coupling_error is thrown.
inline NodeSolution merge_general(const MergeInputs& in, const InvariantCombiner& combine,
                                  const MergeFluxRule& rule) {
  detail::check_merge_inputs(in);
  const double z1 = std::max(0.0, in.z1);
  const double z2 = std::max(0.0, in.z2);
  const double z3 = combine(z1, z2, in.w3);
  if (!(z3 >= 0.0)) throw coupling_error("merge_general: combiner produced z3 < 0");
  const auto head = detail::merge_head(z3, in.w3);

  const double q1 = rule(head.q3, z1, z2, in.w3);
  constexpr double slack = 1e-10;
  if (!(q1 >= -slack) || q1 > head.q3 + slack)
    throw coupling_error("merge_general: flux rule gave q1 outside [0, q3]");
  const double q2 = head.q3 - q1;
  if (q1 > q_max(z1) + slack || q2 > q_max(z2) + slack)
    throw coupling_error("merge_general: flux not reachable on the 1-curve");

  NodeSolution out;
  out.edge[0] = {detail::rho_on_z_curve(z1, q1, head.rho3), std::max(0.0, q1)};
  out.edge[1] = {detail::rho_on_z_curve(z2, q2, head.rho3), std::max(0.0, q2)};
  out.edge[2] = {head.rho3, head.q3};
  return out;
}

/// Diverge with fixed turning fractions q2 = alpha q1, q3 = (1-alpha) q1.
/// The uncapped flux solves z1 = z2 + z3 evaluated at the node states, a
/// quadratic with a unique root below min((1-w2)/alpha, (1-w3)/(1-alpha));
/// q1 is additionally capped at q_max(z1) so the ingoing state stays in the
/// domain.
inline NodeSolution diverge_preferences(const DivergeInputs& in, double alpha) {
  detail::check_diverge_inputs(in);
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::domain_error("diverge_preferences: alpha outside (0,1)");
  const double z1 = std::max(0.0, in.z1);
  const double w2 = std::clamp(in.w2, 0.0, 1.0);
  const double w3 = std::clamp(in.w3, 0.0, 1.0);

  const double a = (1.0 - w2) / alpha;
  const double b = (1.0 - w3) / (1.0 - alpha);

  // (z1+2) q^2 - (z1+1)(a+b) q + z1 a b = 0, smaller root.
  double qbar = 0.0;
  const double A = z1 + 2.0;
  const double B = (z1 + 1.0) * (a + b);
  const double C = z1 * a * b;
  if (std::min(a, b) > 0.0 && C > 0.0) {
    const double disc = B * B - 4.0 * A * C;
    if (disc > 1e-14 * B * B) {
      qbar = 2.0 * C / (B + std::sqrt(std::max(0.0, disc)));
    } else {
      // near-degenerate discriminant: fall back to bisection on the
      // monotone form q/(a-q) + q/(b-q) = z1
      const double hi = std::min(a, b) * (1.0 - 1e-12);
      const auto g = [&](double q) { return q / (a - q) + q / (b - q) - z1; };
      qbar = (g(hi) <= 0.0) ? hi : detail::bisect(g, 0.0, hi);
    }
  }

  const double q1 = std::min(q_max(z1), qbar);
  const double q2 = alpha * q1;
  const double q3 = (1.0 - alpha) * q1;

  NodeSolution out;
  double rho1;
  if (z1 > 0.0) {
    rho1 = 1.0 - q1 / z1;
  } else {
    // continuous limit of 1 - qbar(z1)/z1 as z1 -> 0
    rho1 = 1.0 - a * b / (a + b);
  }
  out.edge[0] = {rho1, q1};
  out.edge[1] = {w2 + q2, q2};
  out.edge[2] = {w3 + q3, q3};
  return out;
}

/// Diverge without fixed preferences: the flux difference adapts to the
/// downstream situation, q2 - q3 = w3 - w2, under z1 = z2 + z3. When the
/// imbalance exceeds the available flux the emptier-bound flux is pinned at
/// zero and the whole flux takes the other edge (the z balance is dropped,
/// as it must be whenever it would leave the physical domain).
inline NodeSolution diverge_adaptive(const DivergeInputs& in) {
  detail::check_diverge_inputs(in);
  const double z1 = std::max(0.0, in.z1);
  const double w2 = std::clamp(in.w2, 0.0, 1.0);
  const double w3 = std::clamp(in.w3, 0.0, 1.0);
  const double s = w2 + w3;
  const double f = w3 - w2;

  double q1, rho1;
  if (s * (1.0 + z1) >= z1) {
    q1 = z1 * (2.0 - s) / (2.0 + z1);
    rho1 = (s + z1) / (2.0 + z1);
  } else {
    q1 = q_max(z1);
    rho1 = q1;
  }

  double q2 = 0.5 * (q1 + f);
  double q3 = 0.5 * (q1 - f);
  if (q3 < 0.0) {
    q3 = 0.0;
    q1 = z1 * (1.0 - w2) / (1.0 + z1);
    q2 = q1;
    rho1 = (z1 + w2) / (1.0 + z1);
  } else if (q2 < 0.0) {
    q2 = 0.0;
    q1 = z1 * (1.0 - w3) / (1.0 + z1);
    q3 = q1;
    rho1 = (z1 + w3) / (1.0 + z1);
  }

  NodeSolution out;
  out.edge[0] = {rho1, q1};
  out.edge[1] = {w2 + q2, q2};
  out.edge[2] = {w3 + q3, q3};
  return out;
}

}  // namespace relnet
