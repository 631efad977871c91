#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "axiflow/flow_verify.hpp"

using namespace axiflow;

namespace {

std::shared_ptr<const DomainGrid> make_grid(const Obstacle& ob, double X, double L, int nx, int nr) {
  return std::make_shared<const DomainGrid>(ob, X, L, nx, nr);
}

StreamField upstream_field(std::shared_ptr<const DomainGrid> g, const TruncatedProfile& t) {
  StreamField f;
  f.grid = g;
  f.psi.assign(g->num_nodes(), 0.0);
  for (int j = 0; j <= g->nr(); ++j)
    for (int i = 0; i <= g->nx(); ++i) f.psi[g->index(i, j)] = t.stream(g->r(j));
  f.m_L = t.m_L();
  return f;
}

}  // namespace

TEST(Reconstruct, UniformFlowIsExact) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 4.0);
  auto g = make_grid(Obstacle::none(), 2, 4, 32, 32);
  StreamField f = upstream_field(g, t);
  const FlowField flow = reconstruct(f, t, gas);
  for (std::size_t p = 0; p < g->num_nodes(); ++p) {
    // the last row sits in the quadratic cap of u_L, where u = 1 still holds
    EXPECT_NEAR(flow.u[p], 1.0, 1e-12);
    EXPECT_NEAR(flow.v[p], 0.0, 1e-12);
    EXPECT_NEAR(flow.rho[p], 4.0, 1e-12);
    EXPECT_NEAR(flow.mach[p], 0.5, 1e-12);
  }
  EXPECT_TRUE(flow.flagged.empty());
  const EulerResidual e = euler_residual(flow, gas);
  EXPECT_LT(e.mass, 1e-10);
  EXPECT_LT(e.x_momentum, 1e-10);
  EXPECT_LT(e.r_momentum, 1e-10);
}

TEST(Reconstruct, ShearVelocityIsSecondOrder) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::exp_vortical(1.0, 2.0, 16.0), 6.0);
  std::vector<double> err, vort;
  for (int m : {32, 64, 128}) {
    auto g = make_grid(Obstacle::none(), 2, 6, m, m);
    StreamField f = upstream_field(g, t);
    const FlowField flow = reconstruct(f, t, gas);
    double e = 0, w = 0;
    for (int j = 0; j <= g->nr(); ++j) {
      const double r = g->r(j);
      if (r > 4.5) continue;  // stay clear of the C^1 joint of the cap
      for (int i = 0; i <= g->nx(); ++i) {
        const std::size_t p = g->index(i, j);
        e = std::max(e, std::abs(flow.u[p] - t.u(r)));
        // next to the axis omega is only first order (u there comes from psi_r / r)
        if (r >= 0.5 && std::isfinite(flow.omega[p])) w = std::max(w, std::abs(flow.omega[p] + t.du(r)));
      }
    }
    err.push_back(e);
    vort.push_back(w);
  }
  for (std::size_t s = 1; s < err.size(); ++s) {
    EXPECT_GT(std::log2(err[s - 1] / err[s]), 1.7);
    EXPECT_GT(std::log2(vort[s - 1] / vort[s]), 1.7);
  }
}

TEST(Streamlines, UpstreamFieldHasSmallDrift) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::exp_vortical(1.0, 2.0, 16.0), 6.0);
  double prev_b = 0, prev_w = 0;
  for (int m : {48, 96}) {
    auto g = make_grid(Obstacle::none(), 2, 6, m, m);
    StreamField f = upstream_field(g, t);
    const FlowField flow = reconstruct(f, t, gas);
    const StreamlineDrift d = streamline_invariants(flow, f, t, gas, 16);
    EXPECT_EQ(d.lines, 16);
    EXPECT_GT(d.samples, 16 * m / 2);
    EXPECT_LT(d.bernoulli, 1e-2);
    EXPECT_LT(d.vorticity, 1e-1);
    if (prev_b > 0) {
      EXPECT_LT(d.bernoulli, prev_b);
      EXPECT_LT(d.vorticity, prev_w);
    }
    prev_b = d.bernoulli;
    prev_w = d.vorticity;
  }
}

TEST(Streamlines, CrossingTheObstacleIsAnError) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 8.0), 6.0, 0.3);
  auto g = make_grid(Obstacle::bump(0.3), 4, 6, 64, 48);
  StreamField f = upstream_field(g, t);
  for (std::size_t p = 0; p < g->num_nodes(); ++p)
    if (g->cls(p) == NodeClass::masked) f.psi[p] = 0.0;
  const FlowField flow = reconstruct(f, t, gas);
  EXPECT_THROW(detail::interpolate(flow, 0.5, 0.1), NumericalError);
  EXPECT_NO_THROW(detail::interpolate(flow, 0.5, 1.0));
}

TEST(Barrier, UniformValueIsOneHalf) {
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 4.0);
  auto g = make_grid(Obstacle::none(), 2, 4, 32, 64);
  StreamField f = upstream_field(g, t);
  EXPECT_NEAR(barrier_check(f, t, 0.0, 0.8), 0.5, 1e-12);
  // k > 0 lowers the ratio
  EXPECT_LT(barrier_check(f, t, 0.1, 0.8), 0.5);
}

TEST(Positivity, DetectsReversedColumn) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 4.0);
  auto g = make_grid(Obstacle::none(), 2, 4, 32, 32);
  StreamField f = upstream_field(g, t);
  EXPECT_TRUE(positivity_check(reconstruct(f, t, gas), f, t, gas).ok());
  // psi decreasing in r in one column: u < 0 there
  const int i = 16;
  for (int j = 3; j <= 6; ++j) f.psi[g->index(i, j)] = f.psi[g->index(i, 2)] - 0.01 * (j - 2);
  const PositivityReport rep = positivity_check(reconstruct(f, t, gas), f, t, gas);
  EXPECT_FALSE(rep.ok());
  EXPECT_LT(rep.min_u_interior, 0.0);
}

TEST(Positivity, WallSpeedMatchesInteriorNearby) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 8.0), 6.0, 0.3);
  auto g = make_grid(Obstacle::bump(0.3), 4, 6, 96, 72);
  const StreamField f = solve(g, t, gas, SolverConfig());
  const FlowField flow = reconstruct(f, t, gas);
  const PositivityReport rep = positivity_check(flow, f, t, gas);
  EXPECT_GT(rep.wall_points, 5);
  EXPECT_TRUE(rep.ok());
  // peak wall speed exceeds U and stays below the interior maximum by a modest factor
  double umax = 0;
  for (std::size_t p = 0; p < g->num_nodes(); ++p)
    if (g->cls(p) != NodeClass::masked) umax = std::max(umax, flow.u[p]);
  EXPECT_GT(umax, 1.0);
  EXPECT_LT(rep.min_u_wall, umax);

  const VerificationReport v = verify(f, t, gas);
  for (const auto& c : v.checks) EXPECT_TRUE(c.pass) << c.name << " margin=" << c.margin << " tol=" << c.tol;
  const FarfieldReport ff = farfield_check(f, flow, t, 0.9);
  EXPECT_LT(ff.psi_gap, 0.05 * t.m_L());
}

TEST(Report, SerializeRoundTrip) {
  VerificationReport r;
  r.add("a", true, 0.25, 1.0);
  r.add("b", false, -3.5e-7, 0.0);
  EXPECT_THROW(r.add("a", true, 0, 0), std::logic_error);
  const std::string s = r.serialize();
  EXPECT_NE(s.find("name=a; pass=true; margin=0.25; tol=1"), std::string::npos);
  const VerificationReport q = VerificationReport::parse(s);
  ASSERT_EQ(q.checks.size(), 2u);
  EXPECT_EQ(q.checks[1].name, "b");
  EXPECT_FALSE(q.checks[1].pass);
  EXPECT_DOUBLE_EQ(q.checks[1].margin, -3.5e-7);
  EXPECT_FALSE(q.all_pass());
}

TEST(Verify, EveryCheckAppearsOnce) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 4.0), 4.0);
  auto g = make_grid(Obstacle::none(), 2, 4, 32, 32);
  const StreamField f = solve(g, t, gas, SolverConfig());
  const VerificationReport v = verify(f, t, gas);
  std::set<std::string> names;
  for (const auto& c : v.checks) {
    EXPECT_TRUE(names.insert(c.name).second);
    EXPECT_TRUE(c.pass) << c.name << " margin=" << c.margin;
  }
  for (const char* n : {"psi_lower_bound", "psi_upper_bound", "psi_below_upstream", "radial_monotonicity",
                        "axial_velocity_positive", "wall_velocity_positive", "subsonic_certificate",
                        "mach_bound", "q_equals_max_mach", "density_on_subsonic_branch", "bernoulli_range",
                        "round_trip", "euler_mass_residual", "euler_x_momentum_residual",
                        "euler_r_momentum_residual", "streamline_bernoulli_drift",
                        "streamline_vorticity_drift", "farfield_psi_gap", "farfield_gradient_gap",
                        "farfield_weighted_l2", "axis_barrier"})
    EXPECT_TRUE(names.count(n)) << n;
  EXPECT_NEAR(v.find("axis_barrier")->margin, 0.5, 1e-6);
}

TEST(Uniqueness, SubsonicObstacleAgrees) {
  const GasModel gas(2.0);
  const TruncatedProfile t(UpstreamProfile::uniform(1.0, 8.0), 6.0, 0.3);
  auto g = make_grid(Obstacle::bump(0.3), 3, 6, 48, 48);
  SolverConfig cfg;
  cfg.picard.tol_rel = 1e-11;
  const UniquenessReport rep = uniqueness_probe(g, t, gas, cfg, 3, 1e-8);
  EXPECT_EQ(rep.status, ProbeStatus::agree) << rep.max_distance << " " << rep.note;
  EXPECT_EQ(rep.fields.size(), 3u);
  EXPECT_THROW(uniqueness_probe(g, t, gas, cfg, 1), ConfigError);
}
