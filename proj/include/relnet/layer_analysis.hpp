#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "relnet/fundamental_diagram.hpp"
#include "relnet/junction_relax.hpp"
#include "relnet/state_space.hpp"

namespace relnet {

/// Which boundary of an edge the node sits at. Outgoing edges see the node
/// on their left, ingoing edges on their right.
enum class LayerSide { left, right };

/// The two roots of F(rho) = C: rho_minus on the free side of rho*, rho_plus
/// on the congested side, rho_plus = tau(rho_minus). They are the fixed
/// points of the near-node layer equation carrying flux C.
struct LayerFixedPoints {
  double rho_minus = 0.0;
  double rho_plus = 0.0;
  double flux = 0.0;
};

inline LayerFixedPoints layer_fixed_points(const FundamentalDiagram& fd, double flux) {
  if (flux < -kDomainTol || flux > fd.sigma() + 1e-12)
    throw std::domain_error("layer_fixed_points: no root, flux outside [0, sigma]");
  const double C = std::clamp(flux, 0.0, fd.sigma());
  if (C <= 0.0) return {0.0, 1.0, 0.0};
  if (fd.sigma() - C < 1e-14) return {fd.rho_star(), fd.rho_star(), C};
  const auto g = [&](double r) { return fd.eval(r) - C; };
  const double lo = detail::bisect(g, 0.0, fd.rho_star());
  const double hi = detail::bisect(g, fd.rho_star(), 1.0);
  return {lo, hi, C};
}

/// Numerical trajectory of the layer equation
///   d rho / dy = +/- (1 - rho) (F(rho) - C) / C
/// (+ on the left side, - on the right side), integrated by RK4 from rho0.
struct LayerTrajectory {
  std::vector<double> rho;       ///< samples at y = 0, dy, 2 dy, ...
  double dy = 0.0;
  double terminal = 0.0;         ///< last in-domain sample
  bool exited_domain = false;    ///< trajectory left [0,1] before y_max
  double exit_y = 0.0;
  bool converged = false;        ///< terminal within 1e-6 of a fixed point
  double limit_value = 0.0;      ///< the fixed point reached, if converged
};

inline LayerTrajectory integrate_layer(const FundamentalDiagram& fd, double rho0, double flux,
                                       LayerSide side, double y_max = 50.0, double dy = 1e-3) {
  if (!(flux > 0.0)) throw std::domain_error("integrate_layer: flux must be positive");
  if (rho0 < -kDomainTol || rho0 > 1.0 + kDomainTol)
    throw std::domain_error("integrate_layer: rho0 outside [0,1]");

  const double sgn = (side == LayerSide::left) ? 1.0 : -1.0;
  const auto rhs = [&](double r) {
    r = std::clamp(r, 0.0, 1.0);
    return sgn * (1.0 - r) * (fd.eval(r) - flux) / flux;
  };

  LayerTrajectory out;
  out.dy = dy;
  const int n_steps = static_cast<int>(std::ceil(y_max / dy));
  out.rho.reserve(n_steps + 1);
  double r = std::clamp(rho0, 0.0, 1.0);
  out.rho.push_back(r);
  for (int i = 0; i < n_steps; ++i) {
    const double k1 = rhs(r);
    const double k2 = rhs(r + 0.5 * dy * k1);
    const double k3 = rhs(r + 0.5 * dy * k2);
    const double k4 = rhs(r + dy * k3);
    const double next = r + dy / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (next < -1e-9 || next > 1.0 + 1e-9) {
      out.exited_domain = true;
      out.exit_y = (i + 1) * dy;
      break;
    }
    r = next;
    out.rho.push_back(r);
  }
  out.terminal = r;
  if (!out.exited_domain && flux <= fd.sigma() + 1e-12) {
    const auto fp = layer_fixed_points(fd, std::min(flux, fd.sigma()));
    for (double cand : {fp.rho_minus, fp.rho_plus}) {
      if (std::abs(r - cand) < 1e-6) {
        out.converged = true;
        out.limit_value = cand;
        break;
      }
    }
  }
  return out;
}

/// Whether rho_K can be reached from the boundary trace rho_B by waves that
/// leave the domain (non-negative speed at a left boundary, non-positive at
/// a right boundary).
inline bool half_riemann_admissible(const FundamentalDiagram& fd, LayerSide side, double rho_b,
                                    double rho_k) {
  constexpr double tol = 1e-12;
  const double rs = fd.rho_star();
  if (side == LayerSide::left) {
    if (rho_b <= rs + tol) return rho_k <= rs + tol;
    return rho_k <= fd.tau(rho_b) + tol || std::abs(rho_k - rho_b) <= tol;
  }
  if (rho_b >= rs - tol) return rho_k >= rs - tol;
  return std::abs(rho_k - rho_b) <= tol || rho_k >= fd.tau(rho_b) - tol;
}

enum class LayerStability { stable, unstable };

/// Limit node data produced by the matching of layer trajectories with the
/// admissible boundary states of the limit conservation law, for the
/// flux-ratio merge. `stability[i]` says whether edge i carries a genuine
/// (stable) layer or sits directly at the node value.
struct MatchResult {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double rho0 = 0.0;                          ///< common node value of all three edges
  std::array<LayerStability, 3> stability{};  ///< per-edge layer type
  std::array<double, 3> rho_k{};              ///< bulk value each layer connects to
  int rp_case = 0;                            ///< which of the eight trace configurations fired

  std::string tag() const {
    std::string t;
    for (auto s : stability) t += (s == LayerStability::stable) ? 'S' : 'U';
    return t;
  }
};

namespace detail {

inline MatchResult make_match(const FundamentalDiagram& fd, double C1, double C2, double C3,
                              double rho0, const char* tag, int rp_case) {
  MatchResult m;
  m.C1 = C1;
  m.C2 = C2;
  m.C3 = C3;
  m.rho0 = rho0;
  m.rp_case = rp_case;
  const std::array<double, 3> C{C1, C2, C3};
  for (int i = 0; i < 3; ++i) {
    m.stability[i] = (tag[i] == 'S') ? LayerStability::stable : LayerStability::unstable;
    const auto fp = layer_fixed_points(fd, C[i]);
    const bool ingoing = i < 2;
    if (m.stability[i] == LayerStability::stable)
      m.rho_k[i] = ingoing ? fp.rho_minus : fp.rho_plus;
    else
      m.rho_k[i] = ingoing ? fp.rho_plus : fp.rho_minus;
  }
  return m;
}

}  // namespace detail

/// Limit coupling data of the flux-ratio merge for constant initial traces
/// (rho_b1, rho_b2) on the ingoing edges and rho_b3 on the outgoing edge.
///
/// The eight combinations of subcritical/supercritical traces are treated
/// separately; within each, the surviving combination of stable/unstable
/// layers determines the fluxes and the node value. Ties between adjacent
/// combinations are broken toward the both-ingoing-unstable branch.
inline MatchResult match_fair_merge(const FundamentalDiagram& fd, double rho_b1, double rho_b2,
                                    double rho_b3) {
  for (double r : {rho_b1, rho_b2, rho_b3})
    if (r < -kDomainTol || r > 1.0 + kDomainTol)
      throw std::domain_error("match_fair_merge: trace density outside [0,1]");

  const double rs = fd.rho_star();
  const double sg = fd.sigma();
  const double F1 = fd.eval(rho_b1);
  const double F2 = fd.eval(rho_b2);
  const double F3 = fd.eval(rho_b3);
  const bool congested1 = rho_b1 >= rs;
  const bool congested2 = rho_b2 >= rs;
  const bool congested3 = rho_b3 > rs;

  const auto rp = [&](double c3max, int rp_case) {
    // ingoing edges congested: their demand is unconstrained (= sigma)
    const double d1 = congested1 ? sg : F1;
    const double d2 = congested2 ? sg : F2;
    const double half = 0.5 * c3max;
    if (d1 >= half && d2 >= half)
      return detail::make_match(fd, half, half, c3max,
                                layer_fixed_points(fd, half).rho_plus, "UUS", rp_case);
    if (d1 + d2 <= c3max)
      return detail::make_match(fd, d1, d2, d1 + d2,
                                layer_fixed_points(fd, d1 + d2).rho_minus, "SSU", rp_case);
    if (d2 < half)
      return detail::make_match(fd, c3max - d2, d2, c3max,
                                layer_fixed_points(fd, c3max - d2).rho_plus, "USS", rp_case);
    return detail::make_match(fd, d1, c3max - d1, c3max,
                              layer_fixed_points(fd, c3max - d1).rho_plus, "SUS", rp_case);
  };

  // Cases 1-8 ordered by (edge1, edge2, edge3) trace configuration; the
  // outgoing capacity is sigma while edge 3 is subcritical, F3 otherwise.
  if (congested1 && congested2 && !congested3) return rp(sg, 1);
  if (congested1 && congested2 && congested3) return rp(F3, 2);
  if (congested1 && !congested2 && !congested3) return rp(sg, 3);
  if (!congested1 && congested2 && !congested3) return rp(sg, 4);
  if (congested1 && !congested2 && congested3) return rp(F3, 5);
  if (!congested1 && congested2 && congested3) return rp(F3, 6);
  if (!congested1 && !congested2 && !congested3) return rp(sg, 7);
  return rp(F3, 8);
}

/// Node state of the flux-ratio merge itself (before any layer forms) for
/// equilibrium traces: z^i = Z(rho_b^i) on the ingoing edges and
/// w^3 = rho_b3 - F(rho_b3) on the outgoing one. This is the value the
/// time-dependent solution shows at the node before the temporal layer
/// carries it to the matched value rho0.
inline PrimState relax_node_state_fair(const FundamentalDiagram& fd, double rho_b1,
                                       double rho_b2, double rho_b3) {
  MergeInputs in;
  in.z1 = fd.equilibrium_z(rho_b1);
  in.z2 = fd.equilibrium_z(rho_b2);
  in.w3 = rho_b3 - fd.eval(rho_b3);
  return merge_flux_ratio(in).edge[2];
}

}  // namespace relnet
