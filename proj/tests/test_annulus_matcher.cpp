#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "axiflow/annulus_matcher.hpp"

using namespace axiflow;

namespace {

double bisect(double (*f)(double), double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// uniform u = 1, rho_inf = 4, gamma = 2, L = 10, J = 1: rho sqrt(9 - 2 rho) = 400/99
double uniform_root_eq(double rho) { return rho * std::sqrt(9 - 2 * rho) - 400.0 / 99.0; }

UpstreamProfile tabulated_profile(double rho) {
  std::vector<double> r, u;
  for (int i = 0; i <= 60; ++i) {
    r.push_back(0.25 * i);
    u.push_back(1.0 + 0.5 / (1.0 + r.back() * r.back()));
  }
  return UpstreamProfile::tabulated(r, u, rho);
}

}  // namespace

TEST(Bracket, ClosedFormsForGammaTwo) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 10.0, 1.0);
  const DensityBracket b = bracket(t, gas);
  EXPECT_NEAR(b.lower, 3.0, 1e-12);
  EXPECT_NEAR(b.upper, 4.5, 1e-12);
  const TruncatedProfile v(UpstreamProfile::exp_vortical(1.0, 2.0, 16.0), 20.0, 0.3);
  const DensityBracket bv = bracket(v, gas);
  EXPECT_NEAR(bv.lower, (0.5 * 9 + 16) / 1.5, 1e-9);
  // the truncated profile's minimum sits at r = L, a hair above u_bar
  double umin = 10;
  for (int k = 0; k <= 20000; ++k) umin = std::min(umin, v.u(20.0 * k / 20000));
  EXPECT_NEAR(bv.upper, 16.0 + 0.5 * umin * umin, 1e-12);
  EXPECT_NEAR(bv.upper, 16.5, 1e-6);
  EXPECT_LT(bv.lower, 16.0);
}

TEST(Bracket, SupersonicUpstreamIsRejected) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 0.8), 10.0, 1.0);
  EXPECT_THROW(bracket(t, gas), DomainError);
}

TEST(MassFlux, FullAnnulusAtUpstreamDensity) {
  for (double gamma : {1.4, 2.0}) {
    const GasModel gas(gamma);
    const TruncatedProfile a(UpstreamProfile::uniform(1.0, 4.0), 10.0);
    const TruncatedProfile b(UpstreamProfile::exp_vortical(1.0, 2.0, 16.0), 8.0);
    const TruncatedProfile c(tabulated_profile(3.0), 6.0);
    for (const TruncatedProfile* t : {&a, &b, &c})
      EXPECT_NEAR(mass_flux_G(t->rho_inf(), *t, gas), 0.5 * t->L() * t->L(), 1e-10 * t->L() * t->L());
  }
}

TEST(MassFlux, UniformClosedFormAndMonotone) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 10.0);
  double prev = 0;
  for (int k = 0; k <= 18; ++k) {
    const double rho = 3.5 + 0.05 * k;
    const double G = mass_flux_G(rho, t, gas);
    EXPECT_NEAR(G, 200.0 / (rho * std::sqrt(9 - 2 * rho)), 1e-11 * G);
    EXPECT_GT(G, prev);
    prev = G;
  }
  EXPECT_THROW(mass_flux_G(5.0, t, gas), DomainError);
}

TEST(SolveRho1, UniformMatchesBisectionOracle) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 10.0, 1.0);
  const double rho1 = solve_rho1(t, gas, 1.0);
  const double oracle = bisect(uniform_root_eq, 3.0, 4.0);
  EXPECT_NEAR(rho1, oracle, 1e-10);
  EXPECT_NEAR(rho1, 3.9864, 1e-3);
  EXPECT_LE(std::abs(mass_flux_G(rho1, t, gas) - 0.5 * 99), 1e-10 * 100);
  EXPECT_EQ(solve_rho1(t, gas, 0.0), 4.0);
}

TEST(SolveRho1, VorticalRootInsideBracket) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::exp_vortical(1.0, 2.0, 16.0), 20.0, 0.3);
  const DensityBracket b = bracket(t, gas);
  const double rho1 = solve_rho1(t, gas, 0.3);
  EXPECT_GT(rho1, b.lower);
  EXPECT_LT(rho1, 16.0);
  EXPECT_LE(std::abs(mass_flux_G(rho1, t, gas) - 0.5 * (400 - 0.09)), 1e-10 * 400);
  double prev = 0;
  for (int k = 0; k <= 20; ++k) {
    const double G = mass_flux_G(b.lower + (16.0 - b.lower) * k / 20.0, t, gas);
    EXPECT_GT(G, prev);
    prev = G;
  }
}

TEST(SolveRho1, ShortDomainIsRejected) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 2.6, 1.5);
  EXPECT_THROW(solve_rho1(t, gas, 1.5), DomainError);
}

TEST(BuildState, UniformClosedForm) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 10.0, 1.0);
  const double rho1 = solve_rho1(t, gas, 1.0);
  const AnnulusState st = build_state(rho1, t, gas, 1.0);
  const double u1 = std::sqrt(9 - 2 * rho1);
  const double c = 4.0 / (rho1 * u1);
  EXPECT_NEAR(c, 0.9900, 1e-4);
  EXPECT_NEAR(st.chi(st.s.size() - 1), 10.0, 1e-6);
  for (std::size_t k = 0; k < st.s.size(); k += 97)
    EXPECT_NEAR(st.chi(k), std::sqrt(1 + c * st.s[k] * st.s[k]), 1e-9);
  EXPECT_NEAR(std::sqrt(1 + c * 25), 5.0744, 1e-4);
  const AnnulusCheck chk = check_state(st, t, gas);
  EXPECT_GE(chk.xi_min, -1e-9);
  EXPECT_LE(chk.xi_max, 1.0 + 1e-12);
  EXPECT_LE(chk.xi_increase, 1e-12);
  EXPECT_LE(chk.bernoulli_residual, 1e-10);
  EXPECT_TRUE(chk.subsonic());
  // psi_hat(r) = rho1 u1 (r^2 - J^2) / 2
  double worst = 0;
  for (double r = 1.0; r <= 10.0; r += 0.173) {
    const double hat = st.hat_psi(r, t);
    EXPECT_NEAR(hat, 0.5 * rho1 * u1 * (r * r - 1), 1e-8 * 200);
    const double gap = t.stream(r) - hat;
    EXPECT_GE(gap, -1e-10);
    worst = std::max(worst, gap);
  }
  EXPECT_GT(worst, 0.0);
}

TEST(BuildState, VorticalInvariants) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::exp_vortical(1.0, 2.0, 16.0), 20.0, 0.3);
  const AnnulusState st = match_annulus(t, gas, 0.3);
  const AnnulusCheck chk = check_state(st, t, gas);
  EXPECT_LE(chk.chi_end_error, 1e-6);
  EXPECT_GE(chk.xi_min, -1e-6);
  EXPECT_LE(chk.xi_max, 0.09 + 1e-12);
  EXPECT_LE(chk.xi_increase, 1e-12);
  EXPECT_LE(chk.bernoulli_residual, 1e-10);
  EXPECT_TRUE(chk.subsonic());
  EXPECT_DOUBLE_EQ(st.chi(0), 0.3);
}

TEST(Compare, UpstreamFieldWithoutObstacleIsTight) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 4.0);
  auto g = std::make_shared<const DomainGrid>(Obstacle::none(), 2, 4, 32, 32);
  StreamField f;
  f.grid = g;
  f.m_L = t.m_L();
  f.psi.resize(g->num_nodes());
  for (int j = 0; j <= 32; ++j)
    for (int i = 0; i <= 32; ++i) f.psi[g->index(i, j)] = t.stream(g->r(j));
  const AnnulusState st = match_annulus(t, gas, 0.0);
  ComparisonReport rep = compare_with_solution(st, f, t);
  EXPECT_TRUE(rep.ok());
  EXPECT_LE(std::abs(rep.min_above_hat), rep.tol);
  EXPECT_LE(std::abs(rep.max_above_bar), rep.tol);
  for (auto& v : f.psi) v *= 0.5;
  rep = compare_with_solution(st, f, t);
  EXPECT_FALSE(rep.lower_ok());
  EXPECT_TRUE(rep.upper_ok());
}

TEST(Compare, ObstacleRunRespectsBothBounds) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 8.0), 6.0, 0.3);
  auto g = std::make_shared<const DomainGrid>(Obstacle::bump(0.3), 3, 6, 64, 64);
  const StreamField f = solve(g, t, gas, SolverConfig());
  const AnnulusState st = match_annulus(t, gas, 0.3);
  const ComparisonReport rep = compare_with_solution(st, f, t);
  EXPECT_TRUE(rep.lower_ok()) << rep.min_above_hat;
  EXPECT_TRUE(rep.upper_ok()) << rep.max_above_bar;
}

TEST(Dump, ThreeColumnsAndHeader) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 10.0, 1.0);
  const AnnulusState st = match_annulus(t, gas, 1.0, 64);
  std::ostringstream os;
  st.dump(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# rho1 3.98", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line, "s,chi,u1");
  int rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2);
    ++rows;
  }
  EXPECT_EQ(rows, 65);
}
