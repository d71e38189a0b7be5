#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace relnet {

/// Absolute tolerance used for all state-domain checks. Junction solvers land
/// exactly on the boundaries q = rho and rho = 1, so checks must not reject
/// rounding-level excursions.
inline constexpr double kDomainTol = 1e-12;

/// State in primitive variables: density rho and flux q.
/// The physical domain is 0 <= rho <= 1, 0 <= q <= rho.
struct PrimState {
  double rho = 0.0;
  double q = 0.0;
};

/// State in conservative variables: density rho and z = q/(1-rho).
/// z is the quantity transported at unit speed; q = z(1-rho).
struct ConsState {
  double rho = 0.0;
  double z = 0.0;
};

/// The pair of transported invariants: z (constant across 1-waves) and
/// w = rho - q (constant across 2-waves).
struct InvariantPair {
  double z = 0.0;
  double w = 0.0;
};

inline bool in_domain(const PrimState& s, double tol = kDomainTol) {
  return s.rho >= -tol && s.rho <= 1.0 + tol && s.q >= -tol && s.q <= s.rho + tol;
}

inline bool in_domain(const ConsState& s, double tol = kDomainTol) {
  if (s.rho < -tol || s.rho > 1.0 + tol || s.z < -tol) return false;
  return s.z * (1.0 - s.rho) <= s.rho + tol;  // q <= rho
}

/// z = q/(1-rho), w = rho - q. At the jam point rho = 1 the value z := 0 is
/// used when q = 0; a jammed state with positive flux is rejected.
inline InvariantPair to_invariants(const PrimState& s) {
  if (s.rho >= 1.0 - kDomainTol) {
    if (s.q > kDomainTol)
      throw std::domain_error("to_invariants: rho = 1 with q > 0 is outside the domain");
    return {0.0, s.rho};
  }
  return {s.q / (1.0 - s.rho), s.rho - s.q};
}

/// rho = (w+z)/(1+z), q = z(1-w)/(1+z). Inverse of to_invariants for rho < 1.
inline PrimState from_invariants(const InvariantPair& p) {
  if (p.z < -kDomainTol || p.w < -kDomainTol || p.w > 1.0 + kDomainTol)
    throw std::domain_error("from_invariants: invariants outside z >= 0, 0 <= w <= 1");
  const double rho = (p.w + p.z) / (1.0 + p.z);
  return {rho, p.z * (1.0 - rho)};
}

inline ConsState cons_from_prim(const PrimState& s) {
  const InvariantPair p = to_invariants(s);
  return {s.rho, p.z};
}

inline PrimState prim_from_cons(const ConsState& s) {
  return {s.rho, s.z * (1.0 - s.rho)};
}

/// w = rho - q evaluated directly on conservative variables.
inline double w_invariant(const ConsState& s) { return s.rho - s.z * (1.0 - s.rho); }

/// Wave speeds (-z, 1); the first field never moves right, the second is a
/// unit-speed contact.
inline std::pair<double, double> eigenvalues(const PrimState& s) {
  const InvariantPair p = to_invariants(s);
  return {-p.z, 1.0};
}

}  // namespace relnet
