#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "relnet/fundamental_diagram.hpp"
#include "relnet/junction_lwr.hpp"
#include "relnet/junction_relax.hpp"
#include "relnet/state_space.hpp"

namespace relnet {

/// Thrown when a cell leaves the physical domain beyond the tolerance.
class domain_violation : public std::runtime_error {
 public:
  domain_violation(int edge, int cell, const std::string& what)
      : std::runtime_error("domain violation on edge " + std::to_string(edge + 1) + ", cell " +
                           std::to_string(cell) + ": " + what),
        edge_index(edge),
        cell_index(cell) {}
  int edge_index;
  int cell_index;
};

enum class Topology { merge_2to1, diverge_1to2 };

/// Node coupling for the relaxation model.
struct RelaxCoupling {
  enum class Kind { flux_ratio, priority, preferences, adaptive };
  Kind kind = Kind::flux_ratio;
  double param = 0.0;  // priority weight P or turning fraction alpha
};

/// Node coupling for the limit (LWR) model.
struct LwrCoupling {
  enum class Kind { fair, priority, preferences, adaptive };
  Kind kind = Kind::fair;
  double param = 0.0;
};

/// Cell-averaged states of one edge. Edges are the unit interval; ingoing
/// edges meet the node at x = 1, outgoing edges at x = 0.
template <class State>
struct EdgeGrid {
  double dx = 0.0;
  bool node_at_right = true;
  std::vector<State> cells;
};

/// Exact interface flux of the relaxation system: the two fields are
/// contacts with speeds -z_L <= 0 < 1, so the state at the interface has z
/// from the left and w from the right. Returns the (mass, z) flux pair.
struct RelaxFlux {
  double mass = 0.0;
  double z = 0.0;
};

inline RelaxFlux godunov_flux_relax(const ConsState& left, const ConsState& right) {
  const double w_right = right.rho - right.z * (1.0 - right.rho);
  const double rho_mid = (w_right + left.z) / (1.0 + left.z);
  return {left.z * (1.0 - rho_mid), left.z};
}

/// Godunov flux of the scalar model in supply/demand form.
inline double godunov_flux_lwr(const FundamentalDiagram& fd, double rho_left, double rho_right) {
  return std::min(demand(fd, rho_left), supply(fd, rho_right));
}

/// Exact solution of the stiff relaxation at frozen density:
/// z <- Z(rho) + (z - Z(rho)) exp(-dt/epsilon). Unconditionally stable.
inline ConsState relax_source_step(const ConsState& u, double dt, double epsilon,
                                   const FundamentalDiagram& fd) {
  const double zeq = (1.0 - u.rho < 1e-12) ? fd.jam_equilibrium_z() : fd.equilibrium_z(u.rho);
  return {u.rho, zeq + (u.z - zeq) * std::exp(-dt / epsilon)};
}

struct RelaxNetwork {
  FundamentalDiagram diagram = FundamentalDiagram::quadratic();
  Topology topology = Topology::merge_2to1;
  RelaxCoupling coupling{};
  double epsilon = 1e-3;
  std::array<EdgeGrid<ConsState>, 3> edges{};

  std::vector<RelaxFlux> flux_scratch;  // reused per step
};

struct LwrNetwork {
  FundamentalDiagram diagram = FundamentalDiagram::quadratic();
  Topology topology = Topology::merge_2to1;
  LwrCoupling coupling{};
  std::array<EdgeGrid<double>, 3> edges{};

  std::vector<double> flux_scratch;
};

namespace detail {

inline void set_orientation(Topology topo, bool (&node_at_right)[3]) {
  if (topo == Topology::merge_2to1) {
    node_at_right[0] = node_at_right[1] = true;
    node_at_right[2] = false;
  } else {
    node_at_right[0] = true;
    node_at_right[1] = node_at_right[2] = false;
  }
}

inline double equilibrium_z_of(const FundamentalDiagram& fd, double rho) {
  return (1.0 - rho < 1e-12) ? fd.jam_equilibrium_z() : fd.equilibrium_z(rho);
}

}  // namespace detail

/// Network with every edge in spatially constant equilibrium data
/// z = Z(rho_init).
inline RelaxNetwork make_relax_network(FundamentalDiagram fd, Topology topo,
                                       RelaxCoupling coupling, double epsilon, int n_cells,
                                       const std::array<double, 3>& rho_init) {
  if (n_cells < 2) throw std::invalid_argument("make_relax_network: need at least 2 cells");
  if (!(epsilon > 0.0)) throw std::invalid_argument("make_relax_network: epsilon must be > 0");
  RelaxNetwork net;
  net.diagram = std::move(fd);
  net.topology = topo;
  net.coupling = coupling;
  net.epsilon = epsilon;
  bool at_right[3];
  detail::set_orientation(topo, at_right);
  for (int e = 0; e < 3; ++e) {
    auto& g = net.edges[e];
    g.dx = 1.0 / n_cells;
    g.node_at_right = at_right[e];
    g.cells.assign(n_cells, ConsState{rho_init[e],
                                      detail::equilibrium_z_of(net.diagram, rho_init[e])});
  }
  return net;
}

inline LwrNetwork make_lwr_network(FundamentalDiagram fd, Topology topo, LwrCoupling coupling,
                                   int n_cells, const std::array<double, 3>& rho_init) {
  if (n_cells < 2) throw std::invalid_argument("make_lwr_network: need at least 2 cells");
  LwrNetwork net;
  net.diagram = std::move(fd);
  net.topology = topo;
  net.coupling = coupling;
  bool at_right[3];
  detail::set_orientation(topo, at_right);
  for (int e = 0; e < 3; ++e) {
    auto& g = net.edges[e];
    g.dx = 1.0 / n_cells;
    g.node_at_right = at_right[e];
    g.cells.assign(n_cells, rho_init[e]);
  }
  return net;
}

/// Node-adjacent cell of an edge (the trace fed to the junction solver).
template <class State>
const State& node_trace_cell(const EdgeGrid<State>& g) {
  return g.node_at_right ? g.cells.back() : g.cells.front();
}

/// Junction Riemann solution for the current traces.
inline NodeSolution solve_junction(const RelaxNetwork& net) {
  if (net.topology == Topology::merge_2to1) {
    MergeInputs in;
    in.z1 = node_trace_cell(net.edges[0]).z;
    in.z2 = node_trace_cell(net.edges[1]).z;
    in.w3 = w_invariant(node_trace_cell(net.edges[2]));
    switch (net.coupling.kind) {
      case RelaxCoupling::Kind::flux_ratio: return merge_flux_ratio(in);
      case RelaxCoupling::Kind::priority: return merge_priority(in, net.coupling.param);
      default: throw std::invalid_argument("solve_junction: coupling does not fit a merge");
    }
  }
  DivergeInputs in;
  in.z1 = node_trace_cell(net.edges[0]).z;
  in.w2 = w_invariant(node_trace_cell(net.edges[1]));
  in.w3 = w_invariant(node_trace_cell(net.edges[2]));
  switch (net.coupling.kind) {
    case RelaxCoupling::Kind::preferences: return diverge_preferences(in, net.coupling.param);
    case RelaxCoupling::Kind::adaptive: return diverge_adaptive(in);
    default: throw std::invalid_argument("solve_junction: coupling does not fit a diverge");
  }
}

/// Realized node fluxes for the current traces of the limit model.
inline LwrNodeFluxes solve_junction_lwr(const LwrNetwork& net) {
  Capacities c;
  if (net.topology == Topology::merge_2to1) {
    c.c1 = demand(net.diagram, node_trace_cell(net.edges[0]));
    c.c2 = demand(net.diagram, node_trace_cell(net.edges[1]));
    c.c3 = supply(net.diagram, node_trace_cell(net.edges[2]));
    switch (net.coupling.kind) {
      case LwrCoupling::Kind::fair: return merge_fair(c);
      case LwrCoupling::Kind::priority: return merge_priority_lwr(c);
      default: throw std::invalid_argument("solve_junction_lwr: coupling does not fit a merge");
    }
  }
  c.c1 = demand(net.diagram, node_trace_cell(net.edges[0]));
  c.c2 = supply(net.diagram, node_trace_cell(net.edges[1]));
  c.c3 = supply(net.diagram, node_trace_cell(net.edges[2]));
  switch (net.coupling.kind) {
    case LwrCoupling::Kind::preferences: return diverge_alpha_lwr(c, net.coupling.param);
    case LwrCoupling::Kind::adaptive: return diverge_adaptive_lwr(c);
    default: throw std::invalid_argument("solve_junction_lwr: coupling does not fit a diverge");
  }
}

/// Largest stable time step: dx / max(1, z) for the relaxation model,
/// dx / max |F'| for the limit model.
inline double cfl_dt(const RelaxNetwork& net, double cfl) {
  double lambda = 1.0;
  double dx = 0.0;
  bool any = false;
  for (const auto& g : net.edges) {
    if (g.cells.empty()) continue;
    any = true;
    dx = (dx == 0.0) ? g.dx : std::min(dx, g.dx);
    for (const auto& c : g.cells) lambda = std::max(lambda, c.z);
  }
  if (!any) throw std::invalid_argument("cfl_dt: empty network");
  return cfl * dx / lambda;
}

inline double cfl_dt(const LwrNetwork& net, double cfl) {
  // concavity puts the largest |F'| at the ends of [0,1]
  const double lambda =
      std::max({std::abs(net.diagram.deriv(0.0)), std::abs(net.diagram.deriv(1.0)), 1e-300});
  double dx = 0.0;
  bool any = false;
  for (const auto& g : net.edges) {
    if (g.cells.empty()) continue;
    any = true;
    dx = (dx == 0.0) ? g.dx : std::min(dx, g.dx);
  }
  if (!any) throw std::invalid_argument("cfl_dt: empty network");
  return cfl * dx / lambda;
}

/// Boundary fluxes applied during one step, for conservation bookkeeping.
/// All fluxes point in +x direction of the respective edge.
struct StepInfo {
  double dt = 0.0;
  std::array<double, 3> node_flux{};   ///< mass flux through the node end
  std::array<double, 3> outer_flux{};  ///< mass flux through the outer end
};

namespace detail {

inline void check_domain(RelaxNetwork& net) {
  for (int e = 0; e < 3; ++e) {
    auto& g = net.edges[e];
    for (int j = 0; j < static_cast<int>(g.cells.size()); ++j) {
      auto& c = g.cells[j];
      // snap rounding-level excursions onto the boundary, reject the rest
      if (c.rho < 0.0 && c.rho > -kDomainTol) c.rho = 0.0;
      if (c.rho > 1.0 && c.rho < 1.0 + kDomainTol) c.rho = 1.0;
      if (c.z < 0.0 && c.z > -kDomainTol) c.z = 0.0;
      if (!in_domain(c))
        throw domain_violation(e, j,
                               "rho = " + std::to_string(c.rho) + ", z = " + std::to_string(c.z));
    }
  }
}

inline void check_domain(LwrNetwork& net) {
  for (int e = 0; e < 3; ++e) {
    auto& g = net.edges[e];
    for (int j = 0; j < static_cast<int>(g.cells.size()); ++j) {
      auto& r = g.cells[j];
      if (r < 0.0 && r > -kDomainTol) r = 0.0;
      if (r > 1.0 && r < 1.0 + kDomainTol) r = 1.0;
      if (r < 0.0 || r > 1.0) throw domain_violation(e, j, "rho = " + std::to_string(r));
    }
  }
}

}  // namespace detail

/// One forward-Euler Godunov step of the whole network, followed by the
/// exact relaxation of z toward Z(rho). The node end of each edge uses the
/// Godunov flux between the interior trace cell and the junction node state;
/// because the node state lies on the trace's own wave curve this flux
/// equals the node flux q^i exactly and the junction conserves mass. Outer
/// boundaries copy the boundary cell (zero-order extrapolation).
inline StepInfo step_network(RelaxNetwork& net, double dt) {
  const NodeSolution node = solve_junction(net);
  std::array<ConsState, 3> node_cons;
  for (int e = 0; e < 3; ++e) {
    const PrimState& s = node.edge[e];
    node_cons[e] = {s.rho, (1.0 - s.rho < 1e-12) ? 0.0 : s.q / (1.0 - s.rho)};
  }

  StepInfo info;
  info.dt = dt;
  auto& flux = net.flux_scratch;
  for (int e = 0; e < 3; ++e) {
    auto& g = net.edges[e];
    const int n = static_cast<int>(g.cells.size());
    flux.resize(n + 1);
    flux[0] = g.node_at_right ? godunov_flux_relax(g.cells[0], g.cells[0])
                              : godunov_flux_relax(node_cons[e], g.cells[0]);
    for (int j = 1; j < n; ++j) flux[j] = godunov_flux_relax(g.cells[j - 1], g.cells[j]);
    flux[n] = g.node_at_right ? godunov_flux_relax(g.cells[n - 1], node_cons[e])
                              : godunov_flux_relax(g.cells[n - 1], g.cells[n - 1]);

    const double lam = dt / g.dx;
    for (int j = 0; j < n; ++j) {
      g.cells[j].rho -= lam * (flux[j + 1].mass - flux[j].mass);
      g.cells[j].z -= lam * (flux[j + 1].z - flux[j].z);
    }
    info.node_flux[e] = g.node_at_right ? flux[n].mass : flux[0].mass;
    info.outer_flux[e] = g.node_at_right ? flux[0].mass : flux[n].mass;
  }

  const double decay = std::exp(-dt / net.epsilon);
  for (auto& g : net.edges)
    for (auto& c : g.cells) {
      // realizability limiter: averaging in (rho, z) can overshoot the
      // non-convex bound z <= rho/(1-rho); pull such cells back onto the
      // boundary before relaxing. Density is untouched, mass is conserved.
      if (c.rho < 1.0) c.z = std::min(c.z, c.rho / (1.0 - c.rho));
      const double zeq = detail::equilibrium_z_of(net.diagram, c.rho);
      c.z = zeq + (c.z - zeq) * decay;
    }

  detail::check_domain(net);
  return info;
}

inline StepInfo step_network(LwrNetwork& net, double dt) {
  const LwrNodeFluxes node = solve_junction_lwr(net);
  const std::array<double, 3> node_flux{node.C1, node.C2, node.C3};

  StepInfo info;
  info.dt = dt;
  auto& flux = net.flux_scratch;
  for (int e = 0; e < 3; ++e) {
    auto& g = net.edges[e];
    const int n = static_cast<int>(g.cells.size());
    flux.resize(n + 1);
    flux[0] = g.node_at_right ? net.diagram.eval(g.cells[0]) : node_flux[e];
    for (int j = 1; j < n; ++j) flux[j] = godunov_flux_lwr(net.diagram, g.cells[j - 1], g.cells[j]);
    flux[n] = g.node_at_right ? node_flux[e] : net.diagram.eval(g.cells[n - 1]);

    const double lam = dt / g.dx;
    for (int j = 0; j < n; ++j) g.cells[j] -= lam * (flux[j + 1] - flux[j]);
    info.node_flux[e] = g.node_at_right ? flux[n] : flux[0];
    info.outer_flux[e] = g.node_at_right ? flux[0] : flux[n];
  }

  detail::check_domain(net);
  return info;
}

/// Advance a network to time t_end with CFL-limited steps.
template <class Network>
void advance_to(Network& net, double t_end, double cfl) {
  double t = 0.0;
  while (t < t_end) {
    const double dt = std::min(cfl_dt(net, cfl), t_end - t);
    step_network(net, dt);
    t += dt;
  }
}

/// Total mass (integral of the density) over the whole network, compensated
/// summation so per-step conservation checks are meaningful.
inline double total_mass(const RelaxNetwork& net) {
  double sum = 0.0, comp = 0.0;
  for (const auto& g : net.edges)
    for (const auto& c : g.cells) {
      const double term = c.rho * g.dx - comp;
      const double next = sum + term;
      comp = (next - sum) - term;
      sum = next;
    }
  return sum;
}

inline double total_mass(const LwrNetwork& net) {
  double sum = 0.0, comp = 0.0;
  for (const auto& g : net.edges)
    for (const auto& r : g.cells) {
      const double term = r * g.dx - comp;
      const double next = sum + term;
      comp = (next - sum) - term;
      sum = next;
    }
  return sum;
}

}  // namespace relnet
