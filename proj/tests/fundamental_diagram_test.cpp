#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relnet/fundamental_diagram.hpp"

using relnet::FundamentalDiagram;

namespace {

// independent root finder for tau: scan + refine on the opposite branch
double tau_oracle(const FundamentalDiagram& fd, double rho) {
  const double target = fd.eval(rho);
  double lo, hi;
  if (rho <= fd.rho_star()) {
    lo = fd.rho_star();
    hi = 1.0;
  } else {
    lo = 0.0;
    hi = fd.rho_star();
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool left_of_peak = mid < fd.rho_star();
    const double val = fd.eval(mid);
    // F increases left of the peak, decreases right of it
    if ((left_of_peak && val < target) || (!left_of_peak && val > target)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("quadratic diagram evaluation") {
  const auto fd = FundamentalDiagram::quadratic();
  CHECK(fd.eval(0.0) == 0.0);
  CHECK(fd.eval(1.0) == 0.0);
  CHECK(fd.eval(0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(fd.eval(0.2) == doctest::Approx(0.16).epsilon(1e-15));
  CHECK(fd.rho_star() == 0.5);
  CHECK(fd.sigma() == 0.25);
  CHECK_THROWS_AS(fd.eval(1.5), std::domain_error);
  CHECK_THROWS_AS(fd.eval(-0.2), std::domain_error);
}

TEST_CASE("tau closed form and bisection agree") {
  const auto fd = FundamentalDiagram::quadratic();
  CHECK(fd.tau(0.2) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fd.tau(0.5) == 0.5);
  CHECK(fd.tau(0.9) == doctest::Approx(tau_oracle(fd, 0.9)).epsilon(1e-10));
  CHECK(fd.tau(0.9) == doctest::Approx(0.1).epsilon(1e-12));

  // general path (no closed forms supplied)
  const FundamentalDiagram gen([](double r) { return r * (1.0 - r); });
  CHECK(gen.rho_star() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(gen.sigma() == doctest::Approx(0.25).epsilon(1e-12));
  for (double r : {0.05, 0.2, 0.37, 0.62, 0.88}) {
    CHECK(gen.tau(r) == doctest::Approx(1.0 - r).epsilon(1e-10));
    CHECK(gen.tau(r) == doctest::Approx(tau_oracle(gen, r)).epsilon(1e-9));
  }
}

TEST_CASE("tau is an involution with equal flux") {
  const FundamentalDiagram gen([](double r) { return r * (1.0 - r); });
  for (int i = 0; i <= 50; ++i) {
    const double r = i / 50.0;
    const double t = gen.tau(r);
    CHECK(std::abs(gen.tau(t) - r) <= 1e-10);
    CHECK(std::abs(gen.eval(t) - gen.eval(r)) <= 1e-10);
  }
}

TEST_CASE("equilibrium momentum variable") {
  const auto fd = FundamentalDiagram::quadratic();
  CHECK(fd.equilibrium_z(0.0) == 0.0);
  CHECK(fd.equilibrium_z(0.6) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(fd.equilibrium_z(0.25) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(fd.equilibrium_z(1.0), std::domain_error);
  CHECK(fd.jam_equilibrium_z() == doctest::Approx(1.0).epsilon(1e-6));

  // nondecreasing in rho for the quadratic diagram
  double prev = 0.0;
  for (int i = 1; i <= 99; ++i) {
    const double z = fd.equilibrium_z(i / 100.0);
    CHECK(z >= prev);
    prev = z;
  }
}

TEST_CASE("strict concavity and bounded slope on samples") {
  const auto fd = FundamentalDiagram::quadratic();
  for (int i = 0; i <= 100; ++i) {
    CHECK(fd.deriv(i / 100.0) <= 1.0 + 1e-12);
    CHECK(fd.eval(i / 100.0) <= fd.sigma() + 1e-15);
  }
  for (int i = 0; i < 20; ++i)
    for (int j = i + 2; j <= 20; ++j) {
      const double a = i / 20.0, b = j / 20.0;
      CHECK(fd.eval(0.5 * (a + b)) > 0.5 * (fd.eval(a) + fd.eval(b)));
    }
}

TEST_CASE("subcharacteristic scan") {
  CHECK(FundamentalDiagram::quadratic().check_subcharacteristic().pass);

  const FundamentalDiagram gen([](double r) { return r * (1.0 - r); });
  CHECK(gen.check_subcharacteristic().pass);

  // piecewise-linear diagram with slope 2 near the origin violates F' <= 1
  const FundamentalDiagram steep([](double r) { return std::min(2.0 * r, 1.0 - r); });
  const auto rep = steep.check_subcharacteristic();
  CHECK_FALSE(rep.pass);
  CHECK(rep.f_prime > 1.0);
}
