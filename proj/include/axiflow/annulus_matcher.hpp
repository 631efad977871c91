#pragma once

// One-dimensional matched downstream state over the annulus J < r < L and the
// comparison stream function built from it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "axiflow/errors.hpp"
#include "axiflow/gas_model.hpp"
#include "axiflow/quadrature.hpp"
#include "axiflow/stream_solver.hpp"
#include "axiflow/upstream_profile.hpp"

namespace axiflow {

struct DensityBracket {
  double lower;  // sonic matching at max u
  double upper;  // stagnation matching at min u
};

/// rho_lower: 1/2 rho^(g-1) + h(rho) = 1/2 max u^2 + h(rho_inf);
/// rho_upper: h(rho) = 1/2 min u^2 + h(rho_inf).
inline DensityBracket bracket(const TruncatedProfile& trunc, const GasModel& gas) {
  const double rho = trunc.rho_inf();
  const double umax = trunc.max_u(), umin = trunc.min_u();
  if (!(umax < gas.sound_speed(rho)))
    throw DomainError("upstream flow is not uniformly subsonic (max u >= c(rho_inf))");
  const double hinf = enthalpy(rho, gas);
  DensityBracket b;
  b.lower = sonic_data(hinf + 0.5 * umax * umax, gas).rho_star;
  b.upper = sonic_data(hinf + 0.5 * umin * umin, gas).rho_upper;
  return b;
}

namespace detail {

// Composite 5-point Gauss over [0, L] with a panel break at L - 1.
template <class F>
double annulus_integral(F&& f, double L, int panels = 256) {
  double s = 0.0;
  const double breaks[3] = {0.0, std::max(0.0, L - 1.0), L};
  for (int part = 0; part < 2; ++part) {
    const double a = breaks[part], b = breaks[part + 1];
    if (b <= a) continue;
    const int n = std::max(8, static_cast<int>(std::ceil(panels * (b - a) / L)));
    for (int k = 0; k < n; ++k) s += quad::gauss5(f, a + (b - a) * k / n, a + (b - a) * (k + 1) / n);
  }
  return s;
}

}  // namespace detail

/// D(s; rho) = 2 (h(rho_inf) - h(rho)) + u_L(s)^2.
inline double annulus_D(double s, double rho, const TruncatedProfile& trunc, const GasModel& gas) {
  const double u = trunc.u(s);
  return 2.0 * (enthalpy(trunc.rho_inf(), gas) - enthalpy(rho, gas)) + u * u;
}

/// G(rho) = int_0^L rho_inf u(s) s / (rho sqrt(D(s; rho))) ds.
inline double mass_flux_G(double rho, const TruncatedProfile& trunc, const GasModel& gas) {
  if (!(rho > 0.0)) throw DomainError("mass_flux_G: density must be positive");
  const double rinf = trunc.rho_inf();
  const double dh = 2.0 * (enthalpy(rinf, gas) - enthalpy(rho, gas));
  if (!(dh + trunc.min_u() * trunc.min_u() > 0.0))
    throw DomainError("mass_flux_G: rho outside the bracket (D <= 0)");
  auto f = [&](double s) {
    const double u = trunc.u(s);
    const double D = dh + u * u;
    if (!(D > 0.0)) throw DomainError("mass_flux_G: rho outside the bracket (D <= 0)");
    return rinf * u * s / (rho * std::sqrt(D));
  };
  return detail::annulus_integral(f, trunc.L());
}

/// Root of G(rho) = (L^2 - J^2) / 2 in [rho_lower, rho_inf].
inline double solve_rho1(const TruncatedProfile& trunc, const GasModel& gas, double J) {
  const double L = trunc.L();
  if (!(J >= 0.0) || !(J < L)) throw DomainError("solve_rho1: need 0 <= J < L");
  if (J == 0.0) return trunc.rho_inf();
  const double target = 0.5 * (L * L - J * J);
  const DensityBracket br = bracket(trunc, gas);
  double lo = br.lower, hi = trunc.rho_inf();
  const double glo = mass_flux_G(lo, trunc, gas) - target;
  if (glo > 0.0) throw DomainError("L too small: no matched annulus state in the density bracket");
  // bisection with secant steps kept inside the bracket
  double flo = glo, fhi = mass_flux_G(hi, trunc, gas) - target;
  double rho = hi;
  for (int it = 0; it < 200; ++it) {
    double next = hi - fhi * (hi - lo) / (fhi - flo);
    if (!(next > lo && next < hi) || it % 3 == 2) next = 0.5 * (lo + hi);
    const double g = mass_flux_G(next, trunc, gas) - target;
    rho = next;
    if (std::abs(g) <= 1e-13 * L * L || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    if (g < 0.0) {
      lo = next;
      flo = g;
    } else {
      hi = next;
      fhi = g;
    }
  }
  return rho;
}

class AnnulusState {
 public:
  double rho1 = 0.0;
  double J = 0.0, L = 0.0;
  std::vector<double> s, chi2, u1;  // tables on the s-grid; u1 is u_1(chi(s))

  double chi(std::size_t k) const { return std::sqrt(chi2[k]); }

  /// Comparison stream function. Mass matching gives psi_hat(chi(s)) = psi_bar(s).
  double hat_psi(double r, const TruncatedProfile& trunc) const {
    if (r <= J) return 0.0;
    if (r >= L) return trunc.stream(L);
    return trunc.stream(chi_inverse(r));
  }

  /// s with chi(s) = r, by Hermite interpolation of chi^2 using its known slope.
  double chi_inverse(double r) const {
    const double y = r * r;
    const auto it = std::upper_bound(chi2.begin(), chi2.end(), y);
    if (it == chi2.begin()) return 0.0;
    if (it == chi2.end()) return s.back();
    const std::size_t k = static_cast<std::size_t>(it - chi2.begin()) - 1;
    const double h = s[k + 1] - s[k];
    const double y0 = chi2[k], y1 = chi2[k + 1], d0 = slope_[k] * h, d1 = slope_[k + 1] * h;
    auto H = [&](double t) {
      const double t2 = t * t, t3 = t2 * t;
      return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1;
    };
    double a = 0.0, b = 1.0;
    for (int i = 0; i < 80 && b - a > 1e-16; ++i) {
      const double m = 0.5 * (a + b);
      (H(m) < y ? a : b) = m;
    }
    return s[k] + 0.5 * (a + b) * h;
  }

  void dump(std::ostream& os) const {
    const auto prec = os.precision(17);
    os << "# rho1 " << rho1 << "\n";
    os << "s,chi,u1\n";
    for (std::size_t k = 0; k < s.size(); ++k) os << s[k] << "," << chi(k) << "," << u1[k] << "\n";
    os.precision(prec);
  }

 private:
  std::vector<double> slope_;  // d chi^2 / ds
  friend AnnulusState build_state(double, const TruncatedProfile&, const GasModel&, double, int);
};

/// Integrates 1/2 d chi^2/ds = rho_inf u(s) s / (rho1 sqrt(D(s; rho1))), chi(0)^2 = J^2,
/// by RK4 on a grid with a node at L - 1.
inline AnnulusState build_state(double rho1, const TruncatedProfile& trunc, const GasModel& gas, double J,
                                int steps = 4096) {
  if (steps < 16) throw ConfigError("build_state: too few steps");
  const double L = trunc.L();
  const double rinf = trunc.rho_inf();
  const double dh = 2.0 * (enthalpy(rinf, gas) - enthalpy(rho1, gas));
  auto rhs = [&](double s) {
    const double u = trunc.u(s);
    const double D = dh + u * u;
    if (!(D > 0.0)) throw DomainError("build_state: D <= 0, rho1 outside the bracket");
    return 2.0 * rinf * u * s / (rho1 * std::sqrt(D));
  };
  AnnulusState st;
  st.rho1 = rho1;
  st.J = J;
  st.L = L;
  const int n1 = L > 1.0 ? std::clamp(static_cast<int>(std::lround(steps * (L - 1.0) / L)), 1, steps - 1) : 0;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= n1; ++k) grid.push_back((L - 1.0) * k / std::max(n1, 1));
  if (n1 == 0) grid.assign(1, 0.0);
  const int n2 = steps - n1;
  const double a = n1 > 0 ? L - 1.0 : 0.0;
  for (int k = 1; k <= n2; ++k) grid.push_back(a + (L - a) * k / n2);
  st.s = grid;
  st.chi2.resize(grid.size());
  st.u1.resize(grid.size());
  st.slope_.resize(grid.size());
  double y = J * J;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) {
      const double s0 = grid[k - 1], h = grid[k] - s0;
      // the right-hand side does not depend on y, so RK4 stages reduce to these
      const double k1 = rhs(s0), k2 = rhs(s0 + 0.5 * h), k4 = rhs(s0 + h);
      y += h / 6.0 * (k1 + 4.0 * k2 + k4);
      if (!(y > st.chi2[k - 1])) throw NumericalError("build_state: chi not monotone, reduce the step size");
    }
    st.chi2[k] = y;
    st.slope_[k] = rhs(grid[k]);
    const double u = trunc.u(grid[k]);
    st.u1[k] = std::sqrt(dh + u * u);
  }
  return st;
}

struct AnnulusCheck {
  double chi_end_error = 0.0;     // |chi(L) - L|
  double xi_min = 0.0, xi_max = 0.0;  // range of chi^2 - s^2
  double xi_increase = 0.0;       // largest increase of xi between consecutive nodes
  double bernoulli_residual = 0.0;
  double max_u1 = 0.0, sound_speed1 = 0.0;
  bool subsonic() const { return max_u1 < sound_speed1; }
};

inline AnnulusCheck check_state(const AnnulusState& st, const TruncatedProfile& trunc, const GasModel& gas) {
  AnnulusCheck c;
  c.chi_end_error = std::abs(st.chi(st.s.size() - 1) - st.L);
  c.xi_min = std::numeric_limits<double>::infinity();
  c.xi_max = -c.xi_min;
  const double hinf = enthalpy(trunc.rho_inf(), gas), h1 = enthalpy(st.rho1, gas);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < st.s.size(); ++k) {
    const double xi = st.chi2[k] - st.s[k] * st.s[k];
    c.xi_min = std::min(c.xi_min, xi);
    c.xi_max = std::max(c.xi_max, xi);
    if (k > 0) c.xi_increase = std::max(c.xi_increase, xi - prev);
    prev = xi;
    const double u = trunc.u(st.s[k]);
    const double res = 0.5 * u * u + hinf - (0.5 * st.u1[k] * st.u1[k] + h1);
    c.bernoulli_residual = std::max(c.bernoulli_residual, std::abs(res));
    c.max_u1 = std::max(c.max_u1, st.u1[k]);
  }
  c.sound_speed1 = gas.sound_speed(st.rho1);
  return c;
}

struct ComparisonReport {
  double min_above_hat = std::numeric_limits<double>::infinity();  // min (psi - psi_hat) over r > J
  double max_above_bar = -std::numeric_limits<double>::infinity(); // max (psi - psi_bar)
  double tol = 0.0;
  bool lower_ok() const { return min_above_hat >= -tol; }
  bool upper_ok() const { return max_above_bar <= tol; }
  bool ok() const { return lower_ok() && upper_ok(); }
};

inline ComparisonReport compare_with_solution(const AnnulusState& st, const StreamField& field,
                                              const TruncatedProfile& trunc) {
  const DomainGrid& g = *field.grid;
  ComparisonReport rep;
  rep.tol = 1e-6 * field.m_L;
  for (int j = 0; j <= g.nr(); ++j) {
    const double r = g.r(j);
    const double bar = trunc.stream(r);
    const double hat = r > st.J ? st.hat_psi(r, trunc) : 0.0;
    for (int i = 0; i <= g.nx(); ++i) {
      if (g.is_masked(i, j)) continue;
      const double p = field.at(i, j);
      rep.max_above_bar = std::max(rep.max_above_bar, p - bar);
      if (r > st.J) rep.min_above_hat = std::min(rep.min_above_hat, p - hat);
    }
  }
  return rep;
}

/// Convenience: rho1 and the state for the obstacle height J.
inline AnnulusState match_annulus(const TruncatedProfile& trunc, const GasModel& gas, double J, int steps = 4096) {
  return build_state(solve_rho1(trunc, gas, J), trunc, gas, J, steps);
}

}  // namespace axiflow
