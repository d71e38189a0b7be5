#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relnet/fv_network.hpp"
#include "relnet/layer_analysis.hpp"

namespace relnet {

class scenario_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelChoice { relaxation, lwr, both };

/// One simulation setup: topology, couplings, constant initial densities per
/// edge (the relaxation model starts in equilibrium z = Z(rho)), grid and
/// time parameters, and output selection.
struct Scenario {
  std::string name = "scenario";
  ModelChoice model = ModelChoice::both;
  Topology topology = Topology::merge_2to1;
  RelaxCoupling relax_coupling{};
  LwrCoupling lwr_coupling{};
  std::array<double, 3> rho_init{0.0, 0.0, 0.0};
  double epsilon = 1e-3;
  int n_cells = 1000;
  double cfl = 0.45;
  double t_end = 1.0;
  double layer_window = 0.05;  ///< node-end fraction excluded from the L1 comparison
  int trace_stride = 10;       ///< node trace sampled every this many steps
  std::string diagram = "quadratic";
  bool write_profiles = true;
  bool write_node_trace = true;
  bool write_comparison = true;
};

/// Density at the node-adjacent cell of each edge at one sampling time.
struct TraceSample {
  double t = 0.0;
  std::array<double, 3> rho{};
};

/// Interior agreement between the two models: L1 density gap with a window
/// near the node excluded on every edge.
struct ComparisonReport {
  double l1_interior = 0.0;
  std::array<double, 3> l1_edge{};
  double layer_window = 0.0;
  std::vector<TraceSample> node_trace;
};

struct RunResult {
  Scenario scenario;
  std::optional<RelaxNetwork> relax;
  std::optional<LwrNetwork> lwr;
  ComparisonReport comparison;
  std::array<double, 3> relax_node_rho{};  ///< terminal node-adjacent densities
  std::array<double, 3> lwr_node_rho{};
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& v, const std::string& where) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw scenario_error(where + ": not a number: '" + v + "'");
  }
}

/// "name" or "name(param)" -> pair.
inline std::pair<std::string, std::optional<double>> parse_descriptor(const std::string& v,
                                                                      const std::string& where) {
  const auto open = v.find('(');
  if (open == std::string::npos) return {v, std::nullopt};
  if (v.back() != ')') throw scenario_error(where + ": malformed descriptor '" + v + "'");
  const std::string head = trim(v.substr(0, open));
  const std::string arg = trim(v.substr(open + 1, v.size() - open - 2));
  return {head, parse_number(arg, where)};
}

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Relaxation coupling descriptor: merge_flux_ratio, merge_priority(P),
/// diverge_alpha(alpha), diverge_adaptive.
inline RelaxCoupling parse_relax_coupling(const std::string& text, const std::string& where,
                                          Topology* topo_out = nullptr) {
  auto [head, param] = detail::parse_descriptor(text, where);
  RelaxCoupling c;
  Topology topo;
  if (head == "merge_flux_ratio") {
    c.kind = RelaxCoupling::Kind::flux_ratio;
    topo = Topology::merge_2to1;
  } else if (head == "merge_priority") {
    c.kind = RelaxCoupling::Kind::priority;
    c.param = param.value_or(0.0);
    if (c.param < 0.0 || c.param > 1.0)
      throw scenario_error(where + ": priority weight outside [0,1]");
    topo = Topology::merge_2to1;
  } else if (head == "diverge_alpha") {
    c.kind = RelaxCoupling::Kind::preferences;
    c.param = param.value_or(0.5);
    if (c.param <= 0.0 || c.param >= 1.0)
      throw scenario_error(where + ": alpha outside (0,1)");
    topo = Topology::diverge_1to2;
  } else if (head == "diverge_adaptive") {
    c.kind = RelaxCoupling::Kind::adaptive;
    topo = Topology::diverge_1to2;
  } else {
    throw scenario_error(where + ": unknown coupling '" + head + "'");
  }
  if (topo_out) *topo_out = topo;
  return c;
}

/// LWR coupling descriptor: lwr_fair, lwr_priority, lwr_alpha(alpha),
/// lwr_adaptive.
inline LwrCoupling parse_lwr_coupling(const std::string& text, const std::string& where) {
  auto [head, param] = detail::parse_descriptor(text, where);
  LwrCoupling c;
  if (head == "lwr_fair") {
    c.kind = LwrCoupling::Kind::fair;
  } else if (head == "lwr_priority") {
    c.kind = LwrCoupling::Kind::priority;
  } else if (head == "lwr_alpha") {
    c.kind = LwrCoupling::Kind::preferences;
    c.param = param.value_or(0.5);
    if (c.param <= 0.0 || c.param >= 1.0) throw scenario_error(where + ": alpha outside (0,1)");
  } else if (head == "lwr_adaptive") {
    c.kind = LwrCoupling::Kind::adaptive;
  } else {
    throw scenario_error(where + ": unknown LWR coupling '" + head + "'");
  }
  return c;
}

/// LWR coupling reached in the small-epsilon limit of a relaxation coupling.
inline LwrCoupling default_lwr_coupling(const RelaxCoupling& c) {
  switch (c.kind) {
    case RelaxCoupling::Kind::flux_ratio: return {LwrCoupling::Kind::fair, 0.0};
    case RelaxCoupling::Kind::priority:
      // absolute priority pairs with the priority-lane rule, partial
      // priorities merge fairly
      return c.param == 0.0 ? LwrCoupling{LwrCoupling::Kind::priority, 0.0}
                            : LwrCoupling{LwrCoupling::Kind::fair, 0.0};
    case RelaxCoupling::Kind::preferences: return {LwrCoupling::Kind::preferences, c.param};
    case RelaxCoupling::Kind::adaptive: return {LwrCoupling::Kind::adaptive, 0.0};
  }
  return {};
}

/// Flat key = value format with one [edge i] section per edge. Unknown keys,
/// malformed lines and out-of-range values are reported with the line
/// number or the offending field.
inline Scenario parse_scenario(std::istream& is, const std::string& display_name) {
  Scenario s;
  s.name = display_name;
  int edge_section = -1;  // -1: global section
  int line_no = 0;
  bool topology_set = false;
  bool coupling_set = false;
  bool lwr_coupling_set = false;
  std::array<bool, 3> rho_set{false, false, false};

  std::string raw;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string where = display_name + ":" + std::to_string(line_no);
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw scenario_error(where + ": malformed section header");
      std::string section = detail::trim(line.substr(1, line.size() - 2));
      if (section.rfind("edge", 0) != 0)
        throw scenario_error(where + ": unknown section '" + section + "'");
      const int idx = static_cast<int>(detail::parse_number(detail::trim(section.substr(4)), where));
      if (idx < 1 || idx > 3) throw scenario_error(where + ": edge index must be 1, 2 or 3");
      edge_section = idx - 1;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw scenario_error(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw scenario_error(where + ": empty value for '" + key + "'");

    if (edge_section >= 0) {
      if (key == "rho_init") {
        s.rho_init[edge_section] = detail::parse_number(value, where);
        rho_set[edge_section] = true;
      } else {
        throw scenario_error(where + ": unknown edge key '" + key + "'");
      }
      continue;
    }

    if (key == "name") {
      s.name = value;
    } else if (key == "model") {
      if (value == "relaxation") s.model = ModelChoice::relaxation;
      else if (value == "lwr") s.model = ModelChoice::lwr;
      else if (value == "both") s.model = ModelChoice::both;
      else throw scenario_error(where + ": model must be relaxation, lwr or both");
    } else if (key == "topology") {
      if (value == "merge") s.topology = Topology::merge_2to1;
      else if (value == "diverge") s.topology = Topology::diverge_1to2;
      else throw scenario_error(where + ": topology must be merge or diverge");
      topology_set = true;
    } else if (key == "coupling") {
      Topology implied;
      s.relax_coupling = parse_relax_coupling(value, where, &implied);
      if (!topology_set) {
        s.topology = implied;
        topology_set = true;
      } else if (implied != s.topology) {
        throw scenario_error(where + ": coupling '" + value + "' does not fit the topology");
      }
      coupling_set = true;
    } else if (key == "lwr_coupling") {
      s.lwr_coupling = parse_lwr_coupling(value, where);
      lwr_coupling_set = true;
    } else if (key == "epsilon") {
      s.epsilon = detail::parse_number(value, where);
    } else if (key == "n_cells") {
      s.n_cells = static_cast<int>(detail::parse_number(value, where));
    } else if (key == "cfl") {
      s.cfl = detail::parse_number(value, where);
    } else if (key == "t_end") {
      s.t_end = detail::parse_number(value, where);
    } else if (key == "layer_window") {
      s.layer_window = detail::parse_number(value, where);
    } else if (key == "trace_stride") {
      s.trace_stride = static_cast<int>(detail::parse_number(value, where));
    } else if (key == "diagram") {
      s.diagram = value;
    } else if (key == "outputs") {
      s.write_profiles = value.find("profile") != std::string::npos;
      s.write_node_trace = value.find("node_trace") != std::string::npos;
      s.write_comparison = value.find("comparison") != std::string::npos;
    } else {
      throw scenario_error(where + ": unknown key '" + key + "'");
    }
  }

  if (!coupling_set) {
    s.relax_coupling.kind = (s.topology == Topology::merge_2to1) ? RelaxCoupling::Kind::flux_ratio
                                                                 : RelaxCoupling::Kind::adaptive;
  }
  if (!lwr_coupling_set) s.lwr_coupling = default_lwr_coupling(s.relax_coupling);

  // validation (field-named errors)
  for (int e = 0; e < 3; ++e) {
    if (s.rho_init[e] < 0.0 || s.rho_init[e] > 1.0)
      throw scenario_error(display_name + ": field rho_init (edge " + std::to_string(e + 1) +
                           ") outside [0,1]");
  }
  if (!(s.epsilon > 0.0)) throw scenario_error(display_name + ": field epsilon must be > 0");
  if (s.n_cells < 2) throw scenario_error(display_name + ": field n_cells must be >= 2");
  if (!(s.cfl > 0.0 && s.cfl <= 1.0))
    throw scenario_error(display_name + ": field cfl must be in (0,1]");
  if (!(s.t_end > 0.0)) throw scenario_error(display_name + ": field t_end must be > 0");
  if (s.layer_window < 0.0 || s.layer_window > 0.2)
    throw scenario_error(display_name + ": field layer_window must be in [0, 0.2]");
  if (s.trace_stride < 1)
    throw scenario_error(display_name + ": field trace_stride must be >= 1");
  if (s.diagram != "quadratic")
    throw scenario_error(display_name + ": field diagram: unknown diagram '" + s.diagram + "'");
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw scenario_error("cannot open scenario file '" + path + "'");
  return parse_scenario(is, std::filesystem::path(path).stem().string());
}

inline FundamentalDiagram make_diagram(const std::string& name) {
  if (name == "quadratic") return FundamentalDiagram::quadratic();
  throw scenario_error("unknown diagram '" + name + "'");
}

namespace detail {

template <class Network>
std::array<double, 3> node_densities(const Network& net) {
  std::array<double, 3> out{};
  for (int e = 0; e < 3; ++e) {
    const auto& cell = node_trace_cell(net.edges[e]);
    if constexpr (std::is_same_v<std::decay_t<decltype(cell)>, ConsState>)
      out[e] = cell.rho;
    else
      out[e] = cell;
  }
  return out;
}

/// Advance with CFL steps, sampling the node-adjacent densities.
template <class Network>
std::vector<TraceSample> advance_with_trace(Network& net, double t_end, double cfl, int stride) {
  std::vector<TraceSample> trace;
  double t = 0.0;
  long step = 0;
  trace.push_back({0.0, node_densities(net)});
  while (t < t_end) {
    const double dt = std::min(cfl_dt(net, cfl), t_end - t);
    step_network(net, dt);
    t += dt;
    ++step;
    if (step % stride == 0 || t >= t_end) trace.push_back({t, node_densities(net)});
  }
  return trace;
}

}  // namespace detail

/// Run the configured model(s) and, when both ran, compare them in the
/// interior (node-end layer windows excluded).
inline RunResult simulate(const Scenario& s) {
  RunResult res;
  res.scenario = s;
  const FundamentalDiagram fd = make_diagram(s.diagram);

  const bool want_relax = s.model != ModelChoice::lwr;
  const bool want_lwr = s.model != ModelChoice::relaxation;

  if (want_relax) {
    res.relax = make_relax_network(fd, s.topology, s.relax_coupling, s.epsilon, s.n_cells,
                                   s.rho_init);
    res.comparison.node_trace =
        detail::advance_with_trace(*res.relax, s.t_end, s.cfl, s.trace_stride);
    res.relax_node_rho = detail::node_densities(*res.relax);
  }
  if (want_lwr) {
    res.lwr = make_lwr_network(fd, s.topology, s.lwr_coupling, s.n_cells, s.rho_init);
    if (!want_relax) {
      res.comparison.node_trace =
          detail::advance_with_trace(*res.lwr, s.t_end, s.cfl, s.trace_stride);
    } else {
      advance_to(*res.lwr, s.t_end, s.cfl);
    }
    res.lwr_node_rho = detail::node_densities(*res.lwr);
  }

  res.comparison.layer_window = s.layer_window;
  if (want_relax && want_lwr) {
    double total = 0.0;
    for (int e = 0; e < 3; ++e) {
      const auto& gr = res.relax->edges[e];
      const auto& gl = res.lwr->edges[e];
      const int n = static_cast<int>(gr.cells.size());
      const int skip = static_cast<int>(std::ceil(s.layer_window * n));
      const int lo = gr.node_at_right ? 0 : skip;
      const int hi = gr.node_at_right ? n - skip : n;
      double l1 = 0.0;
      for (int j = lo; j < hi; ++j) l1 += std::abs(gr.cells[j].rho - gl.cells[j]) * gr.dx;
      res.comparison.l1_edge[e] = l1;
      total += l1;
    }
    res.comparison.l1_interior = total;
  }
  return res;
}

namespace detail {

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows,
                      const std::vector<std::string>& tail_cells = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw scenario_error("cannot write '" + path + "'");
  os << header << "\n";
  std::size_t i = 0;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) os << ",";
      os << format_g17(row[k]);
    }
    if (i < tail_cells.size() && !tail_cells[i].empty()) os << "," << tail_cells[i];
    os << "\n";
    ++i;
  }
}

}  // namespace detail

/// Profile (x, rho, q), node trace and report files for one finished run.
/// File names follow <name>_edge<i>_profile.csv, <name>_node_trace.csv,
/// <name>_report.csv; with both models active the limit profiles go to
/// <name>_edge<i>_profile_lwr.csv.
inline void write_outputs(const RunResult& res, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const Scenario& s = res.scenario;
  fs::create_directories(out_dir);
  const std::string base = (fs::path(out_dir) / s.name).string();

  if (s.write_profiles) {
    for (int e = 0; e < 3; ++e) {
      if (res.relax) {
        const auto& g = res.relax->edges[e];
        std::vector<std::vector<double>> rows;
        rows.reserve(g.cells.size());
        for (std::size_t j = 0; j < g.cells.size(); ++j) {
          const auto& c = g.cells[j];
          rows.push_back({(j + 0.5) * g.dx, c.rho, c.z * (1.0 - c.rho)});
        }
        detail::write_csv(base + "_edge" + std::to_string(e + 1) + "_profile.csv", "x,rho,q",
                          rows);
      }
      if (res.lwr) {
        const auto& g = res.lwr->edges[e];
        std::vector<std::vector<double>> rows;
        rows.reserve(g.cells.size());
        for (std::size_t j = 0; j < g.cells.size(); ++j)
          rows.push_back({(j + 0.5) * g.dx, g.cells[j],
                          res.lwr->diagram.eval(g.cells[j])});
        const std::string suffix = res.relax ? "_profile_lwr.csv" : "_profile.csv";
        detail::write_csv(base + "_edge" + std::to_string(e + 1) + suffix, "x,rho,q", rows);
      }
    }
  }

  if (s.write_node_trace) {
    std::vector<std::vector<double>> rows;
    rows.reserve(res.comparison.node_trace.size());
    for (const auto& ts : res.comparison.node_trace)
      rows.push_back({ts.t, ts.rho[0], ts.rho[1], ts.rho[2]});
    detail::write_csv(base + "_node_trace.csv", "t,rho_edge1,rho_edge2,rho_edge3", rows);
  }

  if (s.write_comparison) {
    std::ofstream os(base + "_report.csv", std::ios::binary);
    if (!os) throw scenario_error("cannot write '" + base + "_report.csv'");
    os << "metric,value\n";
    const auto put = [&](const std::string& k, double v) {
      os << k << "," << detail::format_g17(v) << "\n";
    };
    if (res.relax && res.lwr) {
      put("l1_interior", res.comparison.l1_interior);
      for (int e = 0; e < 3; ++e)
        put("l1_interior_edge" + std::to_string(e + 1), res.comparison.l1_edge[e]);
    }
    put("layer_window", res.comparison.layer_window);
    for (int e = 0; e < 3; ++e)
      if (res.relax) put("relax_node_rho_edge" + std::to_string(e + 1), res.relax_node_rho[e]);
    for (int e = 0; e < 3; ++e)
      if (res.lwr) put("lwr_node_rho_edge" + std::to_string(e + 1), res.lwr_node_rho[e]);
    if (res.relax) put("mass_relax", total_mass(*res.relax));
    if (res.lwr) put("mass_lwr", total_mass(*res.lwr));
  }
}

/// One relaxation run per epsilon, node trace sampled every step.
struct SweepEntry {
  double epsilon = 0.0;
  std::vector<TraceSample> trace;
  std::array<double, 3> terminal{};
};

inline std::vector<SweepEntry> epsilon_sweep(const Scenario& s, const std::vector<double>& eps) {
  std::vector<SweepEntry> out;
  out.reserve(eps.size());
  const FundamentalDiagram fd = make_diagram(s.diagram);
  for (double e : eps) {
    if (!(e > 0.0)) throw scenario_error("epsilon_sweep: epsilon must be > 0");
    SweepEntry entry;
    entry.epsilon = e;
    RelaxNetwork net =
        make_relax_network(fd, s.topology, s.relax_coupling, e, s.n_cells, s.rho_init);
    entry.trace = detail::advance_with_trace(net, s.t_end, s.cfl, 1);
    entry.terminal = detail::node_densities(net);
    out.push_back(std::move(entry));
  }
  return out;
}

inline void write_sweep_outputs(const Scenario& s, const std::vector<SweepEntry>& entries,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string base = (fs::path(out_dir) / s.name).string();
  std::vector<std::vector<double>> report_rows;
  for (const auto& entry : entries) {
    std::vector<std::vector<double>> rows;
    rows.reserve(entry.trace.size());
    for (const auto& ts : entry.trace) rows.push_back({ts.t, ts.rho[0], ts.rho[1], ts.rho[2]});
    detail::write_csv(base + "_eps" + detail::format_g17(entry.epsilon) + "_node_trace.csv",
                      "t,rho_edge1,rho_edge2,rho_edge3", rows);
    report_rows.push_back({entry.epsilon, entry.terminal[0], entry.terminal[1],
                           entry.terminal[2]});
  }
  detail::write_csv(base + "_sweep_report.csv",
                    "epsilon,terminal_rho_edge1,terminal_rho_edge2,terminal_rho_edge3",
                    report_rows);
}

}  // namespace relnet
