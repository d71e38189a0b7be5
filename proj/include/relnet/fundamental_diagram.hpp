#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace relnet {

namespace detail {

/// Bisection for a continuous function with a sign change on [a, b].
/// Shrinks the bracket to ~1e-15 absolute width.
template <class F>
double bisect(F&& f, double a, double b) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw std::runtime_error("bisect: no sign change in bracket");
  for (int it = 0; it < 200 && (b - a) > 1e-15; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if (fa * fm < 0.0) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }
  return 0.5 * (a + b);
}

/// Golden-section maximum of a unimodal function on [a, b], tolerance 1e-12.
template <class F>
double golden_section_max(F&& f, double a, double b) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-12) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Result of the pointwise scan of -F(r)/(1-r) <= F'(r) <= 1.
struct SubcharacteristicReport {
  bool pass = true;
  double rho = 0.0;         ///< first violating sample (meaningful only if !pass)
  double f_prime = 0.0;     ///< F'(rho) at the violating sample
  double lower_bound = 0.0; ///< -F(rho)/(1-rho) at the violating sample
};

/// Concave density-flux map F:[0,1] -> [0, sigma] with F(0) = F(1) = 0,
/// together with the derived quantities used throughout the library:
/// the critical density rho* (argmax), the capacity sigma = F(rho*), the
/// companion map tau (equal-flux density on the other side of rho*) and
/// the equilibrium momentum variable Z(rho) = F(rho)/(1-rho).
///
/// Immutable after construction; safe to share between concurrent runs.
class FundamentalDiagram {
 public:
  using Map = std::function<double(double)>;

  /// The classical parabolic diagram F(rho) = rho(1-rho). All derived
  /// quantities use closed forms: rho* = 1/2, sigma = 1/4, tau(rho) = 1-rho,
  /// Z(rho) = rho.
  static FundamentalDiagram quadratic() {
    FundamentalDiagram fd;
    fd.flux_ = [](double r) { return r * (1.0 - r); };
    fd.deriv_ = [](double r) { return 1.0 - 2.0 * r; };
    fd.tau_map_ = [](double r) { return 1.0 - r; };
    fd.zeq_map_ = [](double r) { return r; };
    fd.rho_star_ = 0.5;
    fd.sigma_ = 0.25;
    fd.z_jam_ = 1.0;
    return fd;
  }

  /// User-supplied concave diagram. The critical point is located by
  /// golden-section search and tau is computed by bisection, both to 1e-12.
  explicit FundamentalDiagram(Map flux, Map flux_deriv = {})
      : flux_(std::move(flux)), deriv_(std::move(flux_deriv)) {
    if (!flux_) throw std::invalid_argument("FundamentalDiagram: flux map required");
    rho_star_ = detail::golden_section_max(flux_, 0.0, 1.0);
    // the flat maximum limits golden section to ~sqrt(eps) in the argument;
    // sharpen by bisecting the slope sign around the located peak
    {
      const double h = 1e-6;
      const auto slope = [&](double x) {
        return deriv_ ? deriv_(x) : flux_(std::min(1.0, x + h)) - flux_(std::max(0.0, x - h));
      };
      double a = std::max(h, rho_star_ - 1e-3);
      double b = std::min(1.0 - h, rho_star_ + 1e-3);
      if (slope(a) > 0.0 && slope(b) < 0.0) {
        for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
          const double m = 0.5 * (a + b);
          (slope(m) > 0.0 ? a : b) = m;
        }
        rho_star_ = 0.5 * (a + b);
      }
    }
    sigma_ = flux_(rho_star_);
    // lim_{rho->1} F(rho)/(1-rho) = -F'(1) for F(1) = 0
    z_jam_ = deriv_ ? -deriv_(1.0) : flux_(1.0 - 1e-7) / 1e-7;
  }

  double eval(double rho) const { return flux_(checked(rho, "eval")); }
  double operator()(double rho) const { return eval(rho); }

  /// F'(rho); central difference when no derivative map was supplied.
  double deriv(double rho) const {
    rho = checked(rho, "deriv");
    if (deriv_) return deriv_(rho);
    const double h = 1e-7;
    const double lo = std::max(0.0, rho - h);
    const double hi = std::min(1.0, rho + h);
    return (flux_(hi) - flux_(lo)) / (hi - lo);
  }

  double rho_star() const { return rho_star_; }
  double sigma() const { return sigma_; }

  /// The density on the opposite side of rho* with the same flux;
  /// tau(rho*) = rho*.
  double tau(double rho) const {
    rho = checked(rho, "tau");
    if (tau_map_) return tau_map_(rho);
    // near the peak F is flat to rounding; reflect instead of root finding
    if (std::abs(rho - rho_star_) < 1e-6)
      return std::min(1.0, std::max(0.0, 2.0 * rho_star_ - rho));
    const double target = flux_(rho);
    const auto g = [&](double x) { return flux_(x) - target; };
    return (rho < rho_star_) ? detail::bisect(g, rho_star_, 1.0)
                             : detail::bisect(g, 0.0, rho_star_);
  }

  /// Z(rho) = F(rho)/(1-rho). The formula is singular at rho = 1; the finite
  /// limit -F'(1) is available as jam_equilibrium_z().
  double equilibrium_z(double rho) const {
    rho = checked(rho, "equilibrium_z");
    if (rho >= 1.0)
      throw std::domain_error("equilibrium_z: rho = 1 is singular, use jam_equilibrium_z()");
    if (zeq_map_) return zeq_map_(rho);
    return flux_(rho) / (1.0 - rho);
  }

  double jam_equilibrium_z() const { return z_jam_; }

  /// Samples -F(rho)/(1-rho) <= F'(rho) <= 1 on a grid of [0, 1) and reports
  /// the first violation, if any.
  SubcharacteristicReport check_subcharacteristic(int n_samples = 2001) const {
    SubcharacteristicReport rep;
    constexpr double slack = 1e-9;
    for (int i = 0; i < n_samples; ++i) {
      const double rho = (1.0 - 1e-9) * static_cast<double>(i) / (n_samples - 1);
      const double fp = deriv(rho);
      const double lower = -flux_(rho) / (1.0 - rho);
      if (fp > 1.0 + slack || fp < lower - slack) {
        rep.pass = false;
        rep.rho = rho;
        rep.f_prime = fp;
        rep.lower_bound = lower;
        return rep;
      }
    }
    return rep;
  }

 private:
  FundamentalDiagram() = default;

  double checked(double rho, const char* what) const {
    constexpr double tol = 1e-12;
    if (rho < -tol || rho > 1.0 + tol)
      throw std::domain_error(std::string("FundamentalDiagram::") + what +
                              ": density outside [0,1]: " + std::to_string(rho));
    return std::min(1.0, std::max(0.0, rho));
  }

  Map flux_;
  Map deriv_;
  Map tau_map_;  // closed form when available
  Map zeq_map_;
  double rho_star_ = 0.0;
  double sigma_ = 0.0;
  double z_jam_ = 0.0;
};

}  // namespace relnet
