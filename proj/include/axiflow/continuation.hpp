#pragma once

// Continuation in the upstream density: sweeps, bracketing of the critical
// density and export of the field sequence approaching it.

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "axiflow/flow_verify.hpp"
#include "axiflow/geometry_grid.hpp"
#include "axiflow/stream_solver.hpp"
#include "axiflow/upstream_profile.hpp"

namespace axiflow {

/// Everything but the upstream density.
struct Problem {
  UpstreamProfile base;
  GasModel gas;
  Obstacle obstacle;
  double X = 4.0, L = 6.0;
  int nx = 64, nr = 64;
  SolverConfig solver;
  int threads = 1;

  Problem(UpstreamProfile b, GasModel g, Obstacle ob, double X_, double L_, int nx_, int nr_,
          SolverConfig cfg = SolverConfig())
      : base(std::move(b)), gas(g), obstacle(ob), X(X_), L(L_), nx(nx_), nr(nr_), solver(std::move(cfg)) {}

  TruncatedProfile truncated(double rho_inf) const {
    return TruncatedProfile(base.with_density(rho_inf), L, obstacle.J());
  }
  std::shared_ptr<const DomainGrid> grid() const {
    if (!grid_) grid_ = std::make_shared<const DomainGrid>(obstacle, X, L, nx, nr);
    return grid_;
  }
  /// Smallest density with a subsonic upstream state: c(rho) = max u.
  double rho_star() const {
    return std::pow(truncated(base.rho_inf()).max_u(), 2.0 / (gas.gamma() - 1.0));
  }
  double upstream_mach(double rho_inf) const {
    return truncated(rho_inf).max_u() / gas.sound_speed(rho_inf);
  }

 private:
  mutable std::shared_ptr<const DomainGrid> grid_;
};

enum class SweepStatus { certified, truncation_active, diverged };

inline const char* to_string(SweepStatus s) {
  switch (s) {
    case SweepStatus::certified: return "certified";
    case SweepStatus::truncation_active: return "truncation-active";
    case SweepStatus::diverged: return "diverged";
  }
  return "?";
}

struct SweepRecord {
  double rho_inf = 0.0;
  SweepStatus status = SweepStatus::diverged;
  double Q = std::numeric_limits<double>::quiet_NaN();
  double upstream_mach = 0.0;  // trivial lower bound for Q
  int picard_iterations = 0;
  long linear_iterations = 0;
  std::shared_ptr<const StreamField> field;  // null when diverged
  std::string note;
};

/// One solve at rho_inf; a warm start is rescaled by the m_L ratio and only runs the k = 0 stage.
inline SweepRecord solve_at(const Problem& pb, double rho_inf, const StreamField* warm = nullptr) {
  SweepRecord rec;
  rec.rho_inf = rho_inf;
  const TruncatedProfile trunc = pb.truncated(rho_inf);
  rec.upstream_mach = trunc.max_u() / pb.gas.sound_speed(rho_inf);
  SolverConfig cfg = pb.solver;
  SolveOptions opt;
  opt.threads = pb.threads;
  std::vector<double> start;
  if (warm) {
    const double scale = trunc.m_L() / warm->m_L;
    start = warm->psi;
    for (double& v : start) v *= scale;
    cfg.k_schedule = {0.0};
    opt.initial_psi = &start;
  }
  try {
    auto f = std::make_shared<StreamField>(solve(pb.grid(), trunc, pb.gas, cfg, opt));
    rec.Q = f->Q;
    rec.picard_iterations = f->diag.picard_iterations;
    rec.linear_iterations = f->diag.linear_iterations;
    const bool cert = f->Q < 1.0 - 2.0 * cfg.eps0 && !f->diag.truncation_active;
    rec.status = cert ? SweepStatus::certified : SweepStatus::truncation_active;
    rec.field = std::move(f);
  } catch (const DivergedError& e) {
    rec.status = SweepStatus::diverged;
    rec.picard_iterations = static_cast<int>(e.history().size());
    rec.note = e.what();
  } catch (const NumericalError& e) {
    rec.status = SweepStatus::diverged;
    rec.note = e.what();
  } catch (const BranchError& e) {
    rec.status = SweepStatus::diverged;
    rec.note = e.what();
  }
  return rec;
}

/// Warm-started solves along a strictly decreasing density list.
inline std::vector<SweepRecord> sweep(const Problem& pb, const std::vector<double>& rho_list, bool warm = true) {
  if (rho_list.empty()) throw ConfigError("sweep: empty density list");
  for (std::size_t i = 1; i < rho_list.size(); ++i)
    if (!(rho_list[i] < rho_list[i - 1])) throw ConfigError("sweep: densities must decrease strictly");
  if (!(rho_list.front() > pb.rho_star()))
    throw DomainError("sweep: upstream flow is not uniformly subsonic at the first density");
  std::vector<SweepRecord> out;
  std::shared_ptr<const StreamField> last;
  for (double rho : rho_list) {
    out.push_back(solve_at(pb, rho, warm && last ? last.get() : nullptr));
    if (out.back().field) last = out.back().field;
  }
  return out;
}

/// True when no record after the first failure has Q below the last certified Q.
inline bool certification_trend_consistent(const std::vector<SweepRecord>& recs, double slack = 1e-9) {
  double last_cert = -1.0;
  bool failed = false;
  for (const auto& r : recs) {
    if (!failed && r.status == SweepStatus::certified) {
      last_cert = r.Q;
      continue;
    }
    failed = true;
    if (std::isfinite(r.Q) && last_cert >= 0.0 && r.Q < last_cert - slack) return false;
  }
  return true;
}

inline void write_sweep_summary(std::ostream& os, const std::vector<SweepRecord>& recs) {
  const auto prec = os.precision(17);
  os << "rho_inf,status,Q,upstream_mach,picard_iterations,linear_iterations\n";
  for (const auto& r : recs)
    os << r.rho_inf << "," << to_string(r.status) << "," << r.Q << "," << r.upstream_mach << ","
       << r.picard_iterations << "," << r.linear_iterations << "\n";
  os.precision(prec);
}

struct RhoBracket {
  double lo = 0.0, hi = 0.0;
  SweepRecord hi_record, lo_record;
  VerificationReport hi_report;
  int solves = 0;
};

/// Bisection on certification status until hi - lo <= width_tol * rho_star.
inline RhoBracket bracket_rho_cr(const Problem& pb, double rho_hi, double rho_lo, double width_tol = 0.01) {
  if (!(rho_hi > rho_lo)) throw ConfigError("bracket: need rho_hi > rho_lo");
  if (!(width_tol > 0.0)) throw ConfigError("bracket: width_tol must be positive");
  const double rstar = pb.rho_star();
  RhoBracket b;
  b.hi_record = solve_at(pb, rho_hi);
  ++b.solves;
  if (b.hi_record.status != SweepStatus::certified)
    throw DomainError("bracket: rho_hi=" + std::to_string(rho_hi) + " is not certified");
  if (rho_lo > rstar) {
    b.lo_record = solve_at(pb, rho_lo, b.hi_record.field.get());
    ++b.solves;
    if (b.lo_record.status == SweepStatus::certified)
      throw DomainError("bracket: rho_lo=" + std::to_string(rho_lo) + " is certified");
  } else {
    b.lo_record.rho_inf = rho_lo;
    b.lo_record.status = SweepStatus::diverged;
    b.lo_record.note = "below the subsonic upstream limit";
  }
  b.hi = rho_hi;
  b.lo = rho_lo;
  while (b.hi - b.lo > width_tol * rstar) {
    const double mid = 0.5 * (b.lo + b.hi);
    SweepRecord rec;
    if (mid > rstar) {
      rec = solve_at(pb, mid, b.hi_record.field.get());
      ++b.solves;
    } else {
      rec.rho_inf = mid;
      rec.note = "below the subsonic upstream limit";
    }
    if (rec.status == SweepStatus::certified) {
      b.hi = mid;
      b.hi_record = std::move(rec);
    } else {
      b.lo = mid;
      b.lo_record = std::move(rec);
    }
  }
  const TruncatedProfile trunc = pb.truncated(b.hi);
  VerifyOptions vo;
  vo.eps0 = pb.solver.eps0;
  b.hi_report = verify(*b.hi_record.field, trunc, pb.gas, vo);
  return b;
}

struct LimitSequence {
  std::vector<double> rho;
  std::vector<double> gaps;  // max pointwise |(rho,u,v)_n - (rho,u,v)_{n+1}|
  bool decreasing() const {
    for (std::size_t i = 1; i < gaps.size(); ++i)
      if (!(gaps[i] < gaps[i - 1])) return false;
    return true;
  }
};

/// Writes the reconstructed fields of the certified records, one row per unmasked node
/// per record under the header rho_inf,x,r,psi,rho,u,v,mach, and returns consecutive gaps.
inline LimitSequence export_limit_sequence(const Problem& pb, const std::vector<SweepRecord>& records,
                                           std::ostream* os = nullptr) {
  std::vector<const SweepRecord*> sel;
  for (const auto& r : records)
    if (r.status == SweepStatus::certified && r.field) sel.push_back(&r);
  if (sel.size() < 3) throw DomainError("limit sequence needs at least 3 certified records");
  const DomainGrid& g0 = *sel.front()->field->grid;
  for (const auto* r : sel) {
    const DomainGrid& g = *r->field->grid;
    if (g.nx() != g0.nx() || g.nr() != g0.nr() || g.X() != g0.X() || g.L() != g0.L() || g.J() != g0.J())
      throw DomainError("limit sequence records live on different grids");
  }
  LimitSequence seq;
  std::vector<FlowField> flows;
  for (const auto* r : sel) {
    const TruncatedProfile trunc = pb.truncated(r->rho_inf);
    flows.push_back(reconstruct(*r->field, trunc, pb.gas));
    seq.rho.push_back(r->rho_inf);
  }
  for (std::size_t n = 1; n < flows.size(); ++n) {
    double gap = 0.0;
    for (std::size_t p = 0; p < g0.num_nodes(); ++p) {
      if (g0.cls(p) == NodeClass::masked) continue;
      gap = std::max({gap, std::abs(flows[n].rho[p] - flows[n - 1].rho[p]),
                      std::abs(flows[n].u[p] - flows[n - 1].u[p]), std::abs(flows[n].v[p] - flows[n - 1].v[p])});
    }
    seq.gaps.push_back(gap);
  }
  if (os) {
    char buf[512];
    *os << "rho_inf,x,r,psi,rho,u,v,mach\n";
    for (std::size_t n = 0; n < flows.size(); ++n) {
      const StreamField& f = *sel[n]->field;
      for (int j = 0; j <= g0.nr(); ++j) {
        for (int i = 0; i <= g0.nx(); ++i) {
          const std::size_t p = g0.index(i, j);
          if (g0.cls(p) == NodeClass::masked) continue;
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", seq.rho[n], g0.x(i),
                        g0.r(j), f.psi[p], flows[n].rho[p], flows[n].u[p], flows[n].v[p], flows[n].mach[p]);
          *os << buf;
        }
      }
    }
  }
  return seq;
}

}  // namespace axiflow
