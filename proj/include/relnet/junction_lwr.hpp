#pragma once

#include <algorithm>
#include <cmath>

#include "relnet/fundamental_diagram.hpp"

namespace relnet {

/// Maximal admissible flux per edge at a node, in supply/demand form.
struct Capacities {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// Realized node fluxes; always balanced (C3 = C1 + C2 at a merge,
/// C1 = C2 + C3 at a diverge).
struct LwrNodeFluxes {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
};

/// Maximal flux an ingoing edge can send given its boundary density.
inline double demand(const FundamentalDiagram& fd, double rho_b) {
  return rho_b <= fd.rho_star() ? fd.eval(rho_b) : fd.sigma();
}

/// Maximal flux an outgoing edge can absorb given its boundary density.
inline double supply(const FundamentalDiagram& fd, double rho_b) {
  return rho_b <= fd.rho_star() ? fd.sigma() : fd.eval(rho_b);
}

/// Fair merge: everything passes while it fits; a saturated outgoing edge is
/// split evenly, except that an edge demanding less than half keeps its
/// demand and the remainder goes to the other edge.
inline LwrNodeFluxes merge_fair(const Capacities& c) {
  if (c.c1 + c.c2 <= c.c3) return {c.c1, c.c2, c.c1 + c.c2};
  const double m = std::min({c.c1, c.c2, 0.5 * c.c3});
  const double C1 = std::min(c.c1, c.c3 - m);
  const double C2 = std::min(c.c2, c.c3 - m);
  return {C1, C2, C1 + C2};
}

/// Edge 1 is a priority lane: it takes as much of the outgoing capacity as
/// it can, edge 2 gets what is left (capped at its own demand).
inline LwrNodeFluxes merge_priority_lwr(const Capacities& c) {
  const double C1 = std::min(c.c1, c.c3);
  const double C2 = std::min(std::max(c.c3 - c.c1, 0.0), c.c2);
  return {C1, C2, C1 + C2};
}

/// Diverge with fixed turning fractions alpha : (1-alpha).
inline LwrNodeFluxes diverge_alpha_lwr(const Capacities& c, double alpha) {
  const double C1 = std::min({c.c1, c.c2 / alpha, c.c3 / (1.0 - alpha)});
  return {C1, alpha * C1, (1.0 - alpha) * C1};
}

/// Diverge adapting to the downstream supplies: even split when both edges
/// can take half, otherwise the tighter edge is filled and the rest flows to
/// the other one.
inline LwrNodeFluxes diverge_adaptive_lwr(const Capacities& c) {
  if (c.c2 + c.c3 <= c.c1) return {c.c2 + c.c3, c.c2, c.c3};
  const double m = std::min({c.c2, c.c3, 0.5 * c.c1});
  const double C2 = std::min(c.c2, c.c1 - m);
  return {c.c1, C2, c.c1 - C2};
}

}  // namespace relnet
