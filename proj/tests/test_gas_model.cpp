#include <gtest/gtest.h>

#include <cmath>

#include "axiflow/gas_model.hpp"

using namespace axiflow;

namespace {

// Independent bisection on M/(2 rho^2) + h(rho) = B over [rho_star, rho_upper].
double bisection_density(double M, double B, double gamma) {
  const double lo0 = std::pow(2.0 * (gamma - 1.0) * B / (gamma + 1.0), 1.0 / (gamma - 1.0));
  const double hi0 = std::pow((gamma - 1.0) * B, 1.0 / (gamma - 1.0));
  double lo = lo0, hi = hi0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = M / (2.0 * mid * mid) + std::pow(mid, gamma - 1.0) / (gamma - 1.0) - B;
    if (f > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(GasModel, RejectsGammaNotAboveOne) {
  EXPECT_THROW(GasModel(1.0), ConfigError);
  EXPECT_THROW(GasModel(0.9), ConfigError);
  EXPECT_NO_THROW(GasModel(1.4));
}

TEST(GasModel, Enthalpy) {
  EXPECT_DOUBLE_EQ(enthalpy(2.0, GasModel(2.0)), 2.0);
  EXPECT_NEAR(enthalpy(1.0, GasModel(1.4)), 2.5, 1e-14);
  // h at the sonic density of B = 2.5 equals 2B/(gamma+1).
  const double rho_star = std::pow(5.0 / 6.0, 2.5);
  EXPECT_NEAR(enthalpy(rho_star, GasModel(1.4)), 2.5 * 2.0 / 2.4, 1e-12);
  EXPECT_NEAR(enthalpy(0.6339, GasModel(1.4)), 2.0833, 1e-4);
  EXPECT_THROW(enthalpy(0.0, GasModel(1.4)), DomainError);
  EXPECT_THROW(enthalpy(-1.0, GasModel(1.4)), DomainError);
}

TEST(GasModel, SonicData) {
  const auto s = sonic_data(2.0, GasModel(2.0));
  EXPECT_NEAR(s.rho_star, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(s.rho_upper, 2.0, 1e-14);
  EXPECT_NEAR(s.sigma, 64.0 / 27.0, 1e-13);

  const auto t = sonic_data(2.5, GasModel(1.4));
  EXPECT_NEAR(t.rho_upper, 1.0, 1e-14);
  // Bisection on (1/2) rho^0.4 + 2.5 rho^0.4 = 2.5
  double lo = 0.1, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (3.0 * std::pow(mid, 0.4) > 2.5 ? hi : lo) = mid;
  }
  EXPECT_NEAR(t.rho_star, 0.5 * (lo + hi), 1e-13);
  EXPECT_NEAR(t.rho_star, 0.63394, 1e-5);
  EXPECT_THROW(sonic_data(0.0, GasModel(2.0)), DomainError);
}

TEST(GasModel, SubsonicDensityExamples) {
  const GasModel g(2.0);
  EXPECT_DOUBLE_EQ(subsonic_density(0.0, 2.0, g), 2.0);
  EXPECT_NEAR(subsonic_density(2.0, 2.0, g), (1.0 + std::sqrt(5.0)) / 2.0, 1e-13);
  EXPECT_NEAR(subsonic_density(2.0, 2.0, g), bisection_density(2.0, 2.0, 2.0), 1e-13);
  EXPECT_NEAR(subsonic_density(64.0 / 27.0, 2.0, g), 4.0 / 3.0, 1e-12);
}

TEST(GasModel, SubsonicDensityBranchErrors) {
  const GasModel g(2.0);
  const double sigma = 64.0 / 27.0;
  EXPECT_THROW(subsonic_density(-1e-3, 2.0, g), BranchError);
  EXPECT_THROW(subsonic_density(sigma * (1.0 + 1e-6), 2.0, g), BranchError);
  // Within the clamp window the sonic density is returned.
  EXPECT_NEAR(subsonic_density(sigma * (1.0 + 5e-10), 2.0, g), 4.0 / 3.0, 1e-14);
}

TEST(GasModel, RoundTripAndMonotone) {
  for (double gamma : {1.4, 2.0, 5.0 / 3.0}) {
    const GasModel g(gamma);
    for (double B : {0.3, 1.0, 2.5, 13.5}) {
      const double sigma = sonic_data(B, g).sigma;
      double prev = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 1000; ++i) {
        const double M = sigma * i / 1000.0;
        const double H = subsonic_density(M, B, g);
        EXPECT_NEAR(M / (2.0 * H * H) + enthalpy(H, g), B, 1e-12 * B);
        if (i < 1000) {
          EXPECT_LT(H, prev);
        }
        prev = H;
      }
    }
  }
}

TEST(GasModel, BranchCurveForGammaTwo) {
  // For gamma = 2, B = 2: M(H) = 4 H^2 - 2 H^3 on [4/3, 2].
  const GasModel g(2.0);
  for (int i = 0; i <= 200; ++i) {
    const double H = 4.0 / 3.0 + (2.0 - 4.0 / 3.0) * i / 200.0;
    const double M = 4.0 * H * H - 2.0 * H * H * H;
    EXPECT_NEAR(subsonic_density(std::max(M, 0.0), 2.0, g), H, 1e-7);
    EXPECT_NEAR(2.0 * H * H * (2.0 - enthalpy(H, g)), M, 1e-12);
  }
}

TEST(GasModel, DensityPartials) {
  const GasModel g(2.0);
  const auto p0 = density_partials(0.0, 2.0, 0.0, g);
  EXPECT_NEAR(p0.dH_dM, -0.125, 1e-14);
  EXPECT_EQ(p0.dH_dpsi, 0.0);
  EXPECT_EQ(density_partials(0.0, 7.0, 0.0, g).dH_dpsi, 0.0);

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const auto p = density_partials(2.0, 2.0, 1.0, g);
  EXPECT_NEAR(p.dH_dM, -phi / (2.0 * std::sqrt(5.0)), 1e-12);
  EXPECT_NEAR(p.dH_dM, -0.3618034, 1e-7);
  EXPECT_NEAR(p.dH_dpsi, 1.8944272, 1e-7);
  EXPECT_THROW(density_partials(64.0 / 27.0, 2.0, 0.0, g), BranchError);
}

TEST(GasModel, DensityPartialsMatchFiniteDifferences) {
  for (double gamma : {1.4, 2.0}) {
    const GasModel g(gamma);
    for (double B : {1.0, 4.5}) {
      const double sigma = sonic_data(B, g).sigma;
      for (double frac : {0.05, 0.3, 0.6, 0.85}) {
        const double M = frac * sigma;
        const double dB = 0.7;
        const auto p = density_partials(M, B, dB, g);
        const double hM = 1e-6 * sigma;
        const double fdM =
            (subsonic_density(M + hM, B, g) - subsonic_density(M - hM, B, g)) / (2.0 * hM);
        const double hB = 1e-6 * B;
        const double fdB =
            (subsonic_density(M, B + hB, g) - subsonic_density(M, B - hB, g)) / (2.0 * hB);
        EXPECT_NEAR(p.dH_dM, fdM, 1e-5 * std::abs(fdM));
        EXPECT_NEAR(p.dH_dpsi, dB * fdB, 1e-5 * std::abs(dB * fdB));
      }
    }
  }
}

TEST(GasModel, Mach) {
  const GasModel g(2.0);
  EXPECT_DOUBLE_EQ(mach(1.0, 4.0, g), 0.5);
  EXPECT_EQ(mach(0.0, 1.0, g), 0.0);
  const double rs = 4.0 / 3.0;
  EXPECT_NEAR(mach(std::sqrt(rs), rs, g), 1.0, 1e-15);
  EXPECT_THROW(mach(1.0, 0.0, g), DomainError);
}

TEST(GasModel, MachIdentityForStreamGradient) {
  // q = |grad psi| / (r H) gives Mach = |grad psi| / (r H^{(gamma+1)/2}).
  for (double gamma : {1.4, 2.0}) {
    const GasModel g(gamma);
    const double B = 3.0;
    const double sigma = sonic_data(B, g).sigma;
    for (double r : {0.1, 1.0, 3.0}) {
      for (double frac : {0.0, 0.2, 0.7, 0.99}) {
        const double grad = std::sqrt(frac * sigma) * r;
        const double H = subsonic_density(frac * sigma, B, g);
        const double lhs = mach(grad / (r * H), H, g);
        const double rhs = grad / (r * std::pow(H, 0.5 * (gamma + 1.0)));
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
      }
    }
  }
}
