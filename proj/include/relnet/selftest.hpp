#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relnet/fv_network.hpp"
#include "relnet/layer_analysis.hpp"

namespace relnet {

struct SelftestEntry {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SelftestReport {
  std::vector<SelftestEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
};

namespace selftest_detail {

inline double char_residual_merge(const MergeInputs& in, const NodeSolution& n) {
  double r = 0.0;
  if (in.z1 > 0.0) r = std::max(r, std::abs(n.edge[0].q - in.z1 * (1.0 - n.edge[0].rho)));
  else r = std::max(r, std::abs(n.edge[0].q));
  if (in.z2 > 0.0) r = std::max(r, std::abs(n.edge[1].q - in.z2 * (1.0 - n.edge[1].rho)));
  else r = std::max(r, std::abs(n.edge[1].q));
  r = std::max(r, std::abs(n.edge[2].q - (n.edge[2].rho - in.w3)));
  return r;
}

inline double char_residual_diverge(const DivergeInputs& in, const NodeSolution& n) {
  double r = 0.0;
  if (in.z1 > 0.0) r = std::max(r, std::abs(n.edge[0].q - in.z1 * (1.0 - n.edge[0].rho)));
  else r = std::max(r, std::abs(n.edge[0].q));
  r = std::max(r, std::abs(n.edge[1].q - (n.edge[1].rho - in.w2)));
  r = std::max(r, std::abs(n.edge[2].q - (n.edge[2].rho - in.w3)));
  return r;
}

/// Single-edge Godunov run of the limit model with zero-order extrapolation
/// at both ends; used by the grid-convergence check.
inline std::vector<double> single_edge_lwr(const FundamentalDiagram& fd,
                                           const std::vector<double>& rho0, double t_end,
                                           double cfl) {
  std::vector<double> rho = rho0;
  const int n = static_cast<int>(rho.size());
  const double dx = 1.0 / n;
  const double lambda = std::max(std::abs(fd.deriv(0.0)), std::abs(fd.deriv(1.0)));
  std::vector<double> flux(n + 1);
  double t = 0.0;
  while (t < t_end) {
    const double dt = std::min(cfl * dx / lambda, t_end - t);
    flux[0] = fd.eval(rho[0]);
    for (int j = 1; j < n; ++j) flux[j] = godunov_flux_lwr(fd, rho[j - 1], rho[j]);
    flux[n] = fd.eval(rho[n - 1]);
    for (int j = 0; j < n; ++j) rho[j] -= dt / dx * (flux[j + 1] - flux[j]);
    t += dt;
  }
  return rho;
}

/// Pre-shock solution of the scalar model by tracing characteristics:
/// rho(x,t) = rho0(xi) with xi + F'(rho0(xi)) t = x, resolved by bisection.
template <class Init>
double lwr_characteristics(const FundamentalDiagram& fd, const Init& rho0, double x, double t) {
  const auto shift = [&](double xi) { return xi + fd.deriv(rho0(xi)) * t - x; };
  double lo = x - t - 1e-6;
  double hi = x + t + 1e-6;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shift(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return rho0(0.5 * (lo + hi));
}

}  // namespace selftest_detail

/// Junction solvers on randomized inputs: exact flux balance, characteristic
/// residuals and domain membership.
inline SelftestEntry selftest_junction_solvers(int n_samples = 10000) {
  std::mt19937 rng(20240517u);
  std::uniform_real_distribution<double> uz(0.0, 2.0);
  std::uniform_real_distribution<double> uw(0.0, 1.0);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  std::uniform_real_distribution<double> ua(0.05, 0.95);

  double worst_balance = 0.0, worst_residual = 0.0;
  int out_of_domain = 0;
  for (int i = 0; i < n_samples; ++i) {
    {
      MergeInputs in{uz(rng), uz(rng), uw(rng)};
      const NodeSolution sol =
          (i % 2 == 0) ? merge_flux_ratio(in) : merge_priority(in, up(rng));
      worst_balance = std::max(worst_balance,
                               std::abs(sol.edge[0].q + sol.edge[1].q - sol.edge[2].q));
      worst_residual = std::max(worst_residual, selftest_detail::char_residual_merge(in, sol));
      for (const auto& s : sol.edge)
        if (!in_domain(s)) ++out_of_domain;
    }
    {
      DivergeInputs in{uz(rng), uw(rng), uw(rng)};
      const NodeSolution sol =
          (i % 2 == 0) ? diverge_preferences(in, ua(rng)) : diverge_adaptive(in);
      worst_balance = std::max(worst_balance,
                               std::abs(sol.edge[0].q - sol.edge[1].q - sol.edge[2].q));
      worst_residual = std::max(worst_residual, selftest_detail::char_residual_diverge(in, sol));
      for (const auto& s : sol.edge)
        if (!in_domain(s)) ++out_of_domain;
    }
  }

  SelftestEntry e;
  e.name = "junction solvers: balance, characteristic residuals, domain";
  e.pass = worst_balance <= 1e-12 && worst_residual <= 1e-12 && out_of_domain == 0;
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << "max balance " << worst_balance
     << ", max residual " << worst_residual << ", out-of-domain states " << out_of_domain;
  e.detail = os.str();
  return e;
}

/// Full network runs on randomized constant-density scenarios: no cell may
/// leave the physical domain and each step must conserve mass through the
/// junction to 1e-13.
inline SelftestEntry selftest_invariant_domain(int n_scenarios = 100) {
  std::mt19937 rng(812731u);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::uniform_real_distribution<double> ue(-3.0, -1.0);

  const FundamentalDiagram fd = FundamentalDiagram::quadratic();
  int violations = 0;
  double worst_mass = 0.0;
  for (int i = 0; i < n_scenarios; ++i) {
    RelaxCoupling coupling;
    Topology topo;
    switch (i % 4) {
      case 0: coupling = {RelaxCoupling::Kind::flux_ratio, 0.0}; topo = Topology::merge_2to1; break;
      case 1: coupling = {RelaxCoupling::Kind::priority, ur(rng)}; topo = Topology::merge_2to1; break;
      case 2: coupling = {RelaxCoupling::Kind::preferences, 0.05 + 0.9 * ur(rng)}; topo = Topology::diverge_1to2; break;
      default: coupling = {RelaxCoupling::Kind::adaptive, 0.0}; topo = Topology::diverge_1to2; break;
    }
    const std::array<double, 3> rho_init{ur(rng), ur(rng), ur(rng)};
    const double eps = std::pow(10.0, ue(rng));
    RelaxNetwork net = make_relax_network(fd, topo, coupling, eps, 60, rho_init);
    const bool merge = topo == Topology::merge_2to1;
    double t = 0.0;
    try {
      while (t < 0.25) {
        const double dt = std::min(cfl_dt(net, 0.45), 0.25 - t);
        const double m0 = total_mass(net);
        const StepInfo info = step_network(net, dt);
        const double m1 = total_mass(net);
        // outer ends: ingoing edges gain at x=0, outgoing edges lose at x=1
        double outer = 0.0;
        for (int e = 0; e < 3; ++e) {
          const bool ingoing = merge ? (e < 2) : (e == 0);
          outer += (ingoing ? 1.0 : -1.0) * info.outer_flux[e];
        }
        worst_mass = std::max(worst_mass, std::abs(m1 - m0 - dt * outer));
        t += dt;
      }
    } catch (const domain_violation&) {
      ++violations;
    }
  }

  SelftestEntry e;
  e.name = "invariant domain + junction mass conservation on random scenarios";
  e.pass = violations == 0 && worst_mass <= 1e-13;
  std::ostringstream os;
  os << violations << " domain violations, max per-step mass defect " << std::scientific
     << std::setprecision(2) << worst_mass;
  e.detail = os.str();
  return e;
}

/// Bisection fixed points of the layer equation against the closed form of
/// the parabolic diagram.
inline SelftestEntry selftest_layer_fixed_points(int n_samples = 200) {
  const FundamentalDiagram fd = FundamentalDiagram::quadratic();
  double worst = 0.0;
  for (int i = 0; i <= n_samples; ++i) {
    const double C = 0.25 * i / n_samples;
    const auto fp = layer_fixed_points(fd, C);
    const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 * C));
    worst = std::max(worst, std::abs(fp.rho_minus - 0.5 * (1.0 - root)));
    worst = std::max(worst, std::abs(fp.rho_plus - 0.5 * (1.0 + root)));
  }
  SelftestEntry e;
  e.name = "layer fixed points vs closed form";
  e.pass = worst <= 1e-10;
  std::ostringstream os;
  os << "max deviation " << std::scientific << std::setprecision(2) << worst;
  e.detail = os.str();
  return e;
}

/// L1 error of the scalar Godunov solver against the characteristics
/// solution of a smooth profile must halve when the grid is refined.
inline SelftestEntry selftest_lwr_convergence() {
  const FundamentalDiagram fd = FundamentalDiagram::quadratic();
  const auto rho0 = [](double x) { return 0.3 + 0.1 * std::exp(-200.0 * (x - 0.5) * (x - 0.5)); };
  const double t_end = 0.15;

  const auto l1_error = [&](int n) {
    std::vector<double> init(n);
    for (int j = 0; j < n; ++j) init[j] = rho0((j + 0.5) / n);
    const std::vector<double> rho = selftest_detail::single_edge_lwr(fd, init, t_end, 0.45);
    double err = 0.0;
    for (int j = 0; j < n; ++j) {
      const double exact = selftest_detail::lwr_characteristics(fd, rho0, (j + 0.5) / n, t_end);
      err += std::abs(rho[j] - exact) / n;
    }
    return err;
  };

  const double e200 = l1_error(200);
  const double e400 = l1_error(400);
  const double ratio = e200 / e400;

  SelftestEntry e;
  e.name = "first-order grid convergence of the scalar solver";
  e.pass = ratio >= 1.6 && ratio <= 2.4;
  std::ostringstream os;
  os << "L1(200) = " << std::scientific << std::setprecision(3) << e200 << ", L1(400) = " << e400
     << ", ratio " << std::fixed << std::setprecision(3) << ratio;
  e.detail = os.str();
  return e;
}

/// All invariant suites; one line per entry when a log stream is given.
inline SelftestReport run_selftest(std::ostream* log = nullptr) {
  SelftestReport rep;
  rep.entries.push_back(selftest_junction_solvers());
  rep.entries.push_back(selftest_invariant_domain());
  rep.entries.push_back(selftest_layer_fixed_points());
  rep.entries.push_back(selftest_lwr_convergence());
  if (log) {
    for (const auto& e : rep.entries)
      *log << (e.pass ? "PASS" : "FAIL") << "  " << e.name << " (" << e.detail << ")\n";
  }
  return rep;
}

}  // namespace relnet
