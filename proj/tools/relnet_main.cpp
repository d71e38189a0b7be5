#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relnet/layer_analysis.hpp"
#include "relnet/scenario.hpp"
#include "relnet/selftest.hpp"

namespace {

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw relnet::scenario_error("--eps: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic relaxation-network simulator and its LWR limit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::string eps_text = "1e-1,1e-2,1e-3,1e-4";
  int grid = 21;

  auto* simulate = app.add_subcommand("simulate", "run one scenario file and write CSV outputs");
  simulate->add_option("scenario", scenario_path, "scenario file")->required();
  simulate->add_option("--out-dir", out_dir, "output directory (default: .)");

  auto* sweep = app.add_subcommand("sweep", "run the relaxation model for a list of epsilons");
  sweep->add_option("scenario", scenario_path, "scenario file")->required();
  sweep->add_option("--eps", eps_text, "comma separated epsilon list");
  sweep->add_option("--out-dir", out_dir, "output directory (default: .)");

  auto* match = app.add_subcommand(
      "match", "print the fair-merge matching table (CSV on stdout) over a density grid");
  match->add_option("--grid", grid, "points per density axis (default: 21)")
      ->check(CLI::Range(2, 201));

  auto* selftest = app.add_subcommand("selftest", "run the invariant property suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const relnet::Scenario s = relnet::load_scenario(scenario_path);
      const relnet::RunResult res = relnet::simulate(s);
      relnet::write_outputs(res, out_dir);
      if (res.relax && res.lwr)
        std::printf("l1_interior = %.6g (layer window %.3g)\n", res.comparison.l1_interior,
                    res.comparison.layer_window);
      for (int e = 0; e < 3; ++e)
        if (res.relax)
          std::printf("relax node density edge %d: %.6g\n", e + 1, res.relax_node_rho[e]);
      return 0;
    }

    if (*sweep) {
      relnet::Scenario s = relnet::load_scenario(scenario_path);
      const auto entries = relnet::epsilon_sweep(s, parse_eps_list(eps_text));
      relnet::write_sweep_outputs(s, entries, out_dir);
      for (const auto& entry : entries)
        std::printf("eps = %-8g terminal node densities: %.6g %.6g %.6g\n", entry.epsilon,
                    entry.terminal[0], entry.terminal[1], entry.terminal[2]);
      return 0;
    }

    if (*match) {
      const relnet::FundamentalDiagram fd = relnet::FundamentalDiagram::quadratic();
      std::printf("rho_B1,rho_B2,rho_B3,C1,C2,C3,rho0,case_tag\n");
      for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j)
          for (int k = 0; k < grid; ++k) {
            const double r1 = static_cast<double>(i) / (grid - 1);
            const double r2 = static_cast<double>(j) / (grid - 1);
            const double r3 = static_cast<double>(k) / (grid - 1);
            const auto m = relnet::match_fair_merge(fd, r1, r2, r3);
            std::printf("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r1, r2, r3, m.C1, m.C2,
                        m.C3, m.rho0, m.tag().c_str());
          }
      return 0;
    }

    if (*selftest) {
      const relnet::SelftestReport rep = relnet::run_selftest(&std::cout);
      return rep.all_pass() ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 0;
}
