#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relnet/scenario.hpp"

using namespace relnet;

namespace {

Scenario parse_text(const std::string& text, const std::string& name = "test") {
  std::istringstream is(text);
  return parse_scenario(is, name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("minimal file gets the documented defaults") {
  const Scenario s = parse_text(
      "topology = merge\n"
      "[edge 1]\nrho_init = 0.1\n"
      "[edge 2]\nrho_init = 0.15\n"
      "[edge 3]\nrho_init = 0.2\n");
  CHECK(s.n_cells == 1000);
  CHECK(s.epsilon == doctest::Approx(1e-3));
  CHECK(s.t_end == doctest::Approx(1.0));
  CHECK(s.cfl == doctest::Approx(0.45));
  CHECK(s.model == ModelChoice::both);
  CHECK(s.relax_coupling.kind == RelaxCoupling::Kind::flux_ratio);
  CHECK(s.lwr_coupling.kind == LwrCoupling::Kind::fair);
  CHECK(s.rho_init[0] == doctest::Approx(0.1));
  CHECK(s.rho_init[2] == doctest::Approx(0.2));
}

TEST_CASE("coupling descriptors") {
  const Scenario prio = parse_text(
      "coupling = merge_priority(0.0)\n"
      "[edge 1]\nrho_init = 0.6\n[edge 2]\nrho_init = 0.7\n[edge 3]\nrho_init = 0.2\n");
  CHECK(prio.topology == Topology::merge_2to1);
  CHECK(prio.relax_coupling.kind == RelaxCoupling::Kind::priority);
  CHECK(prio.lwr_coupling.kind == LwrCoupling::Kind::priority);

  const Scenario alpha = parse_text(
      "coupling = diverge_alpha(0.5)\n"
      "[edge 1]\nrho_init = 0.8\n[edge 2]\nrho_init = 0.1\n[edge 3]\nrho_init = 0.3\n");
  CHECK(alpha.topology == Topology::diverge_1to2);
  CHECK(alpha.relax_coupling.param == doctest::Approx(0.5));
  CHECK(alpha.lwr_coupling.kind == LwrCoupling::Kind::preferences);

  const Scenario adapt = parse_text("coupling = diverge_adaptive\n");
  CHECK(adapt.lwr_coupling.kind == LwrCoupling::Kind::adaptive);

  // partial priority pairs with the fair limit rule
  const Scenario half = parse_text("coupling = merge_priority(0.5)\n");
  CHECK(half.lwr_coupling.kind == LwrCoupling::Kind::fair);
}

TEST_CASE("explicit limit-model coupling and diagram keys") {
  const Scenario s = parse_text(
      "topology = merge\nlwr_coupling = lwr_alpha(0.3)\ndiagram = quadratic\n");
  CHECK(s.lwr_coupling.kind == LwrCoupling::Kind::preferences);
  CHECK(s.lwr_coupling.param == doctest::Approx(0.3));
  CHECK_THROWS_WITH_AS(parse_text("lwr_coupling = lwr_teleport\n"),
                       doctest::Contains("lwr_teleport"), scenario_error);
  CHECK_THROWS_WITH_AS(parse_text("diagram = triangular\n"), doctest::Contains("triangular"),
                       scenario_error);
}

TEST_CASE("scenario files from the shipped catalog") {
  const Scenario s = load_scenario(std::string(RELNET_SCENARIO_DIR) + "/merge_fair_1.cfg");
  CHECK(s.name == "merge_fair_1");
  CHECK(s.topology == Topology::merge_2to1);
  CHECK(s.relax_coupling.kind == RelaxCoupling::Kind::flux_ratio);
  CHECK(s.rho_init[0] == doctest::Approx(0.1));
  CHECK(s.rho_init[1] == doctest::Approx(0.15));
  CHECK(s.rho_init[2] == doctest::Approx(0.2));
  CHECK(s.n_cells == 1000);
  CHECK(s.epsilon == doctest::Approx(1e-3));
  CHECK(s.t_end == doctest::Approx(1.0));

  CHECK_THROWS_AS(load_scenario("/nonexistent/relnet.cfg"), scenario_error);
}

TEST_CASE("blocked lane of a priority merge fills to the jam density") {
  Scenario s = parse_text(
      "model = relaxation\ncoupling = merge_priority(0.0)\nn_cells = 400\nt_end = 1.0\n"
      "[edge 1]\nrho_init = 0.6\n[edge 2]\nrho_init = 0.7\n[edge 3]\nrho_init = 0.2\n");
  const RunResult res = simulate(s);
  CHECK(std::abs(res.relax_node_rho[1] - 1.0) <= 0.01);
}

TEST_CASE("validation and parse errors name the problem") {
  CHECK_THROWS_WITH_AS(parse_text("topology = merge\n[edge 1]\nrho_init = 1.5\n"),
                       doctest::Contains("rho_init"), scenario_error);
  CHECK_THROWS_WITH_AS(parse_text("epsilon = 0\n"), doctest::Contains("epsilon"),
                       scenario_error);
  CHECK_THROWS_WITH_AS(parse_text("nonsense\n"), doctest::Contains("test:1"), scenario_error);
  CHECK_THROWS_WITH_AS(parse_text("# ok\nfoo = 1\n"), doctest::Contains("test:2"),
                       scenario_error);
  CHECK_THROWS_WITH_AS(parse_text("topology = diverge\ncoupling = merge_flux_ratio\n"),
                       doctest::Contains("does not fit"), scenario_error);
  CHECK_THROWS_WITH_AS(parse_text("coupling = teleport\n"), doctest::Contains("teleport"),
                       scenario_error);
}

TEST_CASE("uniform rest states give a vanishing interior gap") {
  Scenario s = parse_text(
      "topology = merge\nn_cells = 60\nt_end = 0.2\n"
      "[edge 1]\nrho_init = 0\n[edge 2]\nrho_init = 0\n[edge 3]\nrho_init = 0\n");
  const RunResult res = simulate(s);
  CHECK(res.comparison.l1_interior <= 1e-12);

  Scenario jam = parse_text(
      "topology = merge\nn_cells = 60\nt_end = 0.2\n"
      "[edge 1]\nrho_init = 1\n[edge 2]\nrho_init = 1\n[edge 3]\nrho_init = 1\n");
  CHECK(simulate(jam).comparison.l1_interior <= 1e-12);
}

TEST_CASE("identical scenarios produce byte-identical outputs") {
  const std::string text =
      "name = determinism\ntopology = merge\nn_cells = 120\nt_end = 0.25\n"
      "[edge 1]\nrho_init = 0.3\n[edge 2]\nrho_init = 0.45\n[edge 3]\nrho_init = 0.25\n";
  namespace fs = std::filesystem;
  const fs::path dir_a = fs::temp_directory_path() / "relnet_det_a";
  const fs::path dir_b = fs::temp_directory_path() / "relnet_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  write_outputs(simulate(parse_text(text)), dir_a.string());
  write_outputs(simulate(parse_text(text)), dir_b.string());

  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const auto other = dir_b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 8);  // 3 + 3 profiles, trace, report
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("a single-epsilon sweep matches the plain run") {
  Scenario s = parse_text(
      "model = relaxation\ntopology = merge\nn_cells = 80\nt_end = 0.2\ntrace_stride = 1\n"
      "[edge 1]\nrho_init = 0.2\n[edge 2]\nrho_init = 0.3\n[edge 3]\nrho_init = 0.6\n");
  const RunResult run = simulate(s);
  const auto sweep = epsilon_sweep(s, {s.epsilon});
  REQUIRE(sweep.size() == 1);
  REQUIRE(sweep[0].trace.size() == run.comparison.node_trace.size());
  for (std::size_t i = 0; i < sweep[0].trace.size(); ++i) {
    CHECK(sweep[0].trace[i].t == run.comparison.node_trace[i].t);
    for (int e = 0; e < 3; ++e)
      CHECK(sweep[0].trace[i].rho[e] == run.comparison.node_trace[i].rho[e]);
  }
}

TEST_CASE("interior gap shrinks with the relaxation time") {
  const std::array<std::string, 4> bodies{
      "coupling = merge_flux_ratio\n"
      "[edge 1]\nrho_init = 0.1\n[edge 2]\nrho_init = 0.15\n[edge 3]\nrho_init = 0.2\n",
      "coupling = merge_priority(0.0)\n"
      "[edge 1]\nrho_init = 0.6\n[edge 2]\nrho_init = 0.7\n[edge 3]\nrho_init = 0.2\n",
      "coupling = diverge_alpha(0.5)\n"
      "[edge 1]\nrho_init = 0.8\n[edge 2]\nrho_init = 0.1\n[edge 3]\nrho_init = 0.3\n",
      "coupling = diverge_adaptive\n"
      "[edge 1]\nrho_init = 0.7\n[edge 2]\nrho_init = 0.2\n[edge 3]\nrho_init = 0.1\n"};
  for (const auto& body : bodies) {
    double prev = -1.0;
    for (double eps : {1e-2, 1e-3}) {
      Scenario s = parse_text("n_cells = 200\nt_end = 0.5\nepsilon = " + std::to_string(eps) +
                              "\n" + body);
      const double gap = simulate(s).comparison.l1_interior;
      if (prev >= 0.0) CHECK(gap <= prev * 1.10);
      prev = gap;
    }
  }
}
