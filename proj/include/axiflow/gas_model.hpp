#pragma once

// Gamma-law thermodynamics, P(rho) = rho^gamma / gamma, and the inversion of
// the Bernoulli relation M / (2 rho^2) + h(rho) = B on the subsonic branch.
// All quantities are nondimensional.

#include <cmath>
#include <limits>
#include <string>

#include "axiflow/errors.hpp"

namespace axiflow {

class GasModel {
 public:
  explicit GasModel(double gamma) : gamma_(gamma) {
    if (!(gamma > 1.0)) {
      throw ConfigError("gamma must exceed 1 (got " + std::to_string(gamma) + ")");
    }
  }

  double gamma() const { return gamma_; }

  double pressure(double rho) const { return std::pow(rho, gamma_) / gamma_; }
  double sound_speed(double rho) const { return std::pow(rho, 0.5 * (gamma_ - 1.0)); }

 private:
  double gamma_;
};

struct SonicData {
  double rho_star;   // sonic density, lower end of the branch
  double rho_upper;  // stagnation density
  double sigma;      // rho_star^(gamma+1), largest admissible M
};

/// Relative slack on M above Sigma that is clamped to the sonic density.
inline constexpr double kSonicClampTol = 1e-9;

inline double enthalpy(double rho, const GasModel& gas) {
  if (!(rho > 0.0)) throw DomainError("enthalpy: density must be positive");
  const double g = gas.gamma();
  return std::pow(rho, g - 1.0) / (g - 1.0);
}

inline SonicData sonic_data(double B, const GasModel& gas) {
  if (!(B > 0.0)) throw DomainError("sonic_data: Bernoulli value must be positive");
  const double g = gas.gamma();
  const double e = 1.0 / (g - 1.0);
  SonicData s;
  s.rho_star = std::pow(2.0 * (g - 1.0) * B / (g + 1.0), e);
  s.rho_upper = std::pow((g - 1.0) * B, e);
  s.sigma = std::pow(s.rho_star, g + 1.0);
  return s;
}

/// Density H(M, B) on the subsonic branch [rho_star(B), rho_upper(B)].
///
/// Safeguarded Newton started from the stagnation density; any Newton step
/// leaving the current bracket is replaced by bisection. M within
/// kSonicClampTol (relative) above Sigma(B) returns the sonic density.
inline double subsonic_density(double M, double B, const GasModel& gas) {
  if (M < 0.0 || !std::isfinite(M)) throw BranchError("subsonic_density: M must be non-negative");
  const SonicData sd = sonic_data(B, gas);
  if (M > sd.sigma) {
    if (M <= sd.sigma * (1.0 + kSonicClampTol)) return sd.rho_star;
    throw BranchError("subsonic_density: M=" + std::to_string(M) + " exceeds sonic limit " +
                      std::to_string(sd.sigma));
  }
  if (M == 0.0) return sd.rho_upper;
  if (M == sd.sigma) return sd.rho_star;

  const double g = gas.gamma();
  const double inv_gm1 = 1.0 / (g - 1.0);
  // f(rho) = M/(2 rho^2) + h(rho) - B is increasing on the branch.
  double lo = sd.rho_star;
  double hi = sd.rho_upper;
  double rho = hi;
  for (int it = 0; it < 200; ++it) {
    const double rg = std::pow(rho, g - 1.0);
    const double fv = M / (2.0 * rho * rho) + rg * inv_gm1 - B;
    if (fv == 0.0) return rho;
    if (fv > 0.0) {
      hi = rho;
    } else {
      lo = rho;
    }
    const double dfv = (rg * rho * rho - M) / (rho * rho * rho);
    double next = dfv > 0.0 ? rho - fv / dfv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - rho) <= 2.0 * std::numeric_limits<double>::epsilon() * rho ||
        hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) {
      return next;
    }
    rho = next;
  }
  return 0.5 * (lo + hi);
}

struct DensityPartials {
  double dH_dM;    // H1
  double dH_dpsi;  // H2
};

/// Partial derivatives of H(M, B(psi)); dB_dpsi = Theta * Theta'.
inline DensityPartials density_partials(double M, double B, double dB_dpsi, const GasModel& gas) {
  const SonicData sd = sonic_data(B, gas);
  if (M >= sd.sigma) throw BranchError("density_partials: sonic degeneracy (M >= Sigma)");
  const double H = subsonic_density(M, B, gas);
  const double denom = std::pow(H, gas.gamma() + 1.0) - M;
  if (!(denom > 0.0)) throw BranchError("density_partials: sonic degeneracy");
  return {-H / (2.0 * denom), dB_dpsi * H * H * H / denom};
}

inline double mach(double q, double rho, const GasModel& gas) {
  if (!(rho > 0.0)) throw DomainError("mach: density must be positive");
  if (q < 0.0) throw DomainError("mach: speed must be non-negative");
  return q / gas.sound_speed(rho);
}

}  // namespace axiflow
