#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "axiflow/continuation.hpp"

using namespace axiflow;

namespace {

Problem uniform_problem(int n = 16) {
  return Problem(UpstreamProfile::uniform(1.0, 4.0), GasModel(2.0), Obstacle::none(), 2.0, 4.0, n, n);
}

}  // namespace

TEST(Sweep, NoObstacleQEqualsUpstreamMach) {
  const Problem pb = uniform_problem();
  EXPECT_DOUBLE_EQ(pb.rho_star(), 1.0);
  const auto recs = sweep(pb, {4.0, 2.0, 1.5});
  ASSERT_EQ(recs.size(), 3u);
  const double expect[3] = {0.5, 1 / std::sqrt(2.0), 1 / std::sqrt(1.5)};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(recs[i].status, SweepStatus::certified);
    EXPECT_NEAR(recs[i].Q, expect[i], 1e-6);
    EXPECT_NEAR(recs[i].upstream_mach, expect[i], 1e-12);
  }
  EXPECT_TRUE(certification_trend_consistent(recs));
  std::ostringstream os;
  write_sweep_summary(os, recs);
  const std::string txt = os.str();
  EXPECT_EQ(std::count(txt.begin(), txt.end(), '\n'), 4);
  EXPECT_NE(txt.find(",certified,"), std::string::npos);
}

TEST(Sweep, BadListsAreRejected) {
  const Problem pb = uniform_problem();
  EXPECT_THROW(sweep(pb, {0.9, 0.5}), DomainError);
  EXPECT_THROW(sweep(pb, {4.0, 4.0}), ConfigError);
  EXPECT_THROW(sweep(pb, {}), ConfigError);
}

TEST(Sweep, SubcriticalEntryIsRecordedNotFatal) {
  const Problem pb = uniform_problem();
  const auto recs = sweep(pb, {2.0, 1.1});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].status, SweepStatus::certified);
  EXPECT_NE(recs[1].status, SweepStatus::certified);
  EXPECT_TRUE(certification_trend_consistent(recs));
}

TEST(Sweep, ObstacleQBoundedBelowByUpstreamMach) {
  SolverConfig cfg;
  const Problem pb(UpstreamProfile::uniform(1.0, 10.0), GasModel(2.0), Obstacle::bump(0.3), 3.0, 6.0, 48, 48, cfg);
  const auto recs = sweep(pb, {12.0, 10.0, 8.0});
  for (const auto& r : recs) {
    ASSERT_TRUE(r.field) << r.note;
    EXPECT_GE(r.Q, r.upstream_mach - 1e-9);
    EXPECT_EQ(r.status, SweepStatus::certified);
  }
  // warm starts skip the regularization stages
  EXPECT_EQ(recs[1].field->diag.stage_iterations.size(), 1u);
}

TEST(Bracket, AnalyticMachThreshold) {
  const Problem pb = uniform_problem();
  const RhoBracket b = bracket_rho_cr(pb, 2.0, 1.0, 0.01);
  const double exact = 1.0 / 0.81;
  EXPECT_LE(b.hi - b.lo, 0.01 * pb.rho_star());
  EXPECT_LE(b.lo, exact + 1e-9);
  EXPECT_GE(b.hi, exact - 1e-9);
  EXPECT_NEAR(0.5 * (b.lo + b.hi), exact, 0.01);
  EXPECT_LT(b.hi_record.Q, 0.9);
  EXPECT_TRUE(b.hi_report.all_pass());
}

TEST(Bracket, PreconditionsAreChecked) {
  const Problem pb = uniform_problem();
  EXPECT_THROW(bracket_rho_cr(pb, 2.0, 1.5, 0.01), DomainError);  // lo certified
  EXPECT_THROW(bracket_rho_cr(pb, 1.1, 1.0, 0.01), DomainError);  // hi not certified
  EXPECT_THROW(bracket_rho_cr(pb, 1.0, 2.0, 0.01), ConfigError);
}

TEST(LimitSequence, UniformGapsAndStackFormat) {
  const Problem pb = uniform_problem();
  const auto recs = sweep(pb, {4.0, 3.0, 2.5});
  std::ostringstream os;
  const LimitSequence seq = export_limit_sequence(pb, recs, &os);
  ASSERT_EQ(seq.gaps.size(), 2u);
  EXPECT_NEAR(seq.gaps[0], 1.0, 1e-8);
  EXPECT_NEAR(seq.gaps[1], 0.5, 1e-8);
  EXPECT_TRUE(seq.decreasing());
  const std::string s = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1 + 3 * pb.grid()->num_nodes());
  EXPECT_EQ(s.substr(0, s.find('\n')), "rho_inf,x,r,psi,rho,u,v,mach");
}

TEST(LimitSequence, InsufficientOrMismatchedRecords) {
  const Problem pb = uniform_problem();
  auto recs = sweep(pb, {4.0, 3.0});
  EXPECT_THROW(export_limit_sequence(pb, recs), DomainError);
  const Problem other = uniform_problem(20);
  recs.push_back(solve_at(other, 2.5));
  EXPECT_THROW(export_limit_sequence(pb, recs), DomainError);
}
