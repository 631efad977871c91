#pragma once

// Physical flow reconstructed from psi and the property checks run on it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "axiflow/discrete_ops.hpp"
#include "axiflow/gas_model.hpp"
#include "axiflow/stream_solver.hpp"
#include "axiflow/upstream_profile.hpp"

namespace axiflow {

struct FlowField {
  std::shared_ptr<const DomainGrid> grid;
  std::vector<double> rho, u, v, mach, omega, B;
  std::vector<std::size_t> flagged;  // nodes where M exceeded the sonic limit

  double at(const std::vector<double>& f, int i, int j) const { return f[grid->index(i, j)]; }
};

namespace detail {

// Derivative of a nodal field along a grid line, using only unmasked nodes.
inline double field_derivative(const DomainGrid& g, const std::vector<double>& f, int i, int j,
                               bool along_x) {
  const double h = along_x ? g.dx() : g.dr();
  const int n = along_x ? g.nx() : g.nr();
  const int pos = along_x ? i : j;
  auto ok = [&](int s) {
    return s >= 0 && s <= n && !(along_x ? g.is_masked(s, j) : g.is_masked(i, s));
  };
  auto val = [&](int s) { return along_x ? f[g.index(s, j)] : f[g.index(i, s)]; };
  if (ok(pos - 1) && ok(pos + 1)) return (val(pos + 1) - val(pos - 1)) / (2.0 * h);
  for (int sgn : {1, -1}) {
    if (!ok(pos + sgn)) continue;
    if (ok(pos + 2 * sgn))
      return sgn * (-3.0 * val(pos) + 4.0 * val(pos + sgn) - val(pos + 2 * sgn)) / (2.0 * h);
    return sgn * (val(pos + sgn) - val(pos)) / h;
  }
  return 0.0;
}

inline bool full_stencil(const DomainGrid& g, int i, int j) {
  return i > 0 && i < g.nx() && j > 0 && j < g.nr() && !g.is_masked(i - 1, j) &&
         !g.is_masked(i + 1, j) && !g.is_masked(i, j - 1) && !g.is_masked(i, j + 1) &&
         !g.is_masked(i, j);
}

}  // namespace detail

/// rho = H(M, B(psi)), u = psi_r / (r rho), v = -psi_x / (r rho); axis nodes use the
/// quadratic-fit limit u = 2a / rho, v = 0.
inline FlowField reconstruct(const StreamField& field, const TruncatedProfile& trunc, const GasModel& gas) {
  const DomainGrid& g = *field.grid;
  const std::size_t nn = g.num_nodes();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FlowField out;
  out.grid = field.grid;
  out.rho.assign(nn, nan);
  out.u.assign(nn, nan);
  out.v.assign(nn, nan);
  out.mach.assign(nn, nan);
  out.omega.assign(nn, nan);
  out.B.assign(nn, nan);
  const auto& psi = field.psi;
  for (int j = 0; j <= g.nr(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      const std::size_t p = g.index(i, j);
      if (g.cls(p) == NodeClass::masked) continue;
      const double B = trunc.bernoulli(psi[p], gas);
      out.B[p] = B;
      const SonicData sd = sonic_data(B, gas);
      double gx = 0.0, gr = 0.0, r = g.r(j);
      double M;
      if (j == 0) {
        gr = 2.0 * axis_quadratic_coefficient(g, psi, i);  // psi_r / r on the axis
        M = gr * gr;
        r = 1.0;
      } else {
        const Gradient d = node_gradient(g, psi, i, j);
        gx = d.gx;
        gr = d.gr;
        M = (gx * gx + gr * gr) / (r * r);
      }
      double rho;
      if (M > sd.sigma * (1.0 + kSonicClampTol)) {
        out.flagged.push_back(p);
        rho = sd.rho_star;
      } else {
        rho = subsonic_density(std::min(M, sd.sigma), B, gas);
      }
      out.rho[p] = rho;
      out.u[p] = gr / (r * rho);
      out.v[p] = -gx / (r * rho);
      out.mach[p] = mach(std::hypot(out.u[p], out.v[p]), rho, gas);
    }
  }
  for (int j = 1; j <= g.nr(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      if (g.cls(i, j) != NodeClass::interior) continue;
      const std::size_t p = g.index(i, j);
      out.omega[p] = detail::field_derivative(g, out.v, i, j, true) -
                     detail::field_derivative(g, out.u, i, j, false);
    }
  }
  return out;
}

struct EulerResidual {
  double mass = 0.0;
  double x_momentum = 0.0;
  double r_momentum = 0.0;
};

/// r-weighted L2 norms of the three conservation laws, centered differences at
/// nodes whose four neighbours are unmasked and not on the outer boundary.
inline EulerResidual euler_residual(const FlowField& flow, const GasModel& gas) {
  const DomainGrid& g = *flow.grid;
  const std::size_t nn = g.num_nodes();
  std::vector<double> m1(nn, 0.0), m2(nn, 0.0), xu(nn, 0.0), xv(nn, 0.0), rv(nn, 0.0), P(nn, 0.0);
  for (std::size_t p = 0; p < nn; ++p) {
    if (g.cls(p) == NodeClass::masked) continue;
    const double r = g.r(static_cast<int>(p / static_cast<std::size_t>(g.nx() + 1)));
    const double rho = flow.rho[p], u = flow.u[p], v = flow.v[p];
    m1[p] = r * rho * u;
    m2[p] = r * rho * v;
    xu[p] = r * rho * u * u;
    xv[p] = r * rho * u * v;
    rv[p] = r * rho * v * v;
    P[p] = gas.pressure(rho);
  }
  const double dx = g.dx(), dr = g.dr();
  EulerResidual e;
  for (int j = 1; j < g.nr(); ++j) {
    const double r = g.r(j);
    for (int i = 1; i < g.nx(); ++i) {
      if (!detail::full_stencil(g, i, j)) continue;
      const std::size_t p = g.index(i, j), w = p - 1, ea = p + 1;
      const std::size_t s = p - static_cast<std::size_t>(g.nx() + 1), n = p + static_cast<std::size_t>(g.nx() + 1);
      const double c1 = (m1[ea] - m1[w]) / (2 * dx) + (m2[n] - m2[s]) / (2 * dr);
      const double c2 = (xu[ea] - xu[w]) / (2 * dx) + (xv[n] - xv[s]) / (2 * dr) + r * (P[ea] - P[w]) / (2 * dx);
      const double c3 = (xv[ea] - xv[w]) / (2 * dx) + (rv[n] - rv[s]) / (2 * dr) + r * (P[n] - P[s]) / (2 * dr);
      const double wgt = r * dx * dr;
      e.mass += c1 * c1 * wgt;
      e.x_momentum += c2 * c2 * wgt;
      e.r_momentum += c3 * c3 * wgt;
    }
  }
  e.mass = std::sqrt(e.mass);
  e.x_momentum = std::sqrt(e.x_momentum);
  e.r_momentum = std::sqrt(e.r_momentum);
  return e;
}

// ---- streamlines -----------------------------------------------------------

struct StreamlineDrift {
  double bernoulli = 0.0;  // max |B - B(psi_seed)|
  double vorticity = 0.0;  // max |omega/(r rho) + u'(kappa)/(rho_inf kappa)|
  int lines = 0;
  long samples = 0;
};

namespace detail {

struct Sample {
  double u, v, rho, omega;
  bool omega_ok;
};

// Bilinear interpolation over the unmasked corners of the containing cell.
inline Sample interpolate(const FlowField& flow, double x, double r) {
  const DomainGrid& g = *flow.grid;
  if (r < g.obstacle().f(x)) throw NumericalError("streamline crossed the obstacle boundary");
  const double fx = std::clamp((x + g.X()) / g.dx(), 0.0, static_cast<double>(g.nx()) - 1e-12);
  const double fr = std::clamp(r / g.dr(), 0.0, static_cast<double>(g.nr()) - 1e-12);
  const int i = static_cast<int>(fx), j = static_cast<int>(fr);
  const double a = fx - i, b = fr - j;
  Sample s{0, 0, 0, 0, true};
  double wsum = 0.0, osum = 0.0;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      if (g.is_masked(i + di, j + dj)) continue;
      const double w = (di ? a : 1 - a) * (dj ? b : 1 - b);
      const std::size_t p = g.index(i + di, j + dj);
      s.u += w * flow.u[p];
      s.v += w * flow.v[p];
      s.rho += w * flow.rho[p];
      wsum += w;
      if (std::isfinite(flow.omega[p])) {
        s.omega += w * flow.omega[p];
        osum += w;
      } else if (w > 0.0) {
        s.omega_ok = false;
      }
    }
  }
  if (!(wsum > 0.0)) throw NumericalError("streamline entered a fully masked cell");
  s.u /= wsum;
  s.v /= wsum;
  s.rho /= wsum;
  if (osum > 0.0) {
    s.omega /= osum;
  } else {
    s.omega_ok = false;
  }
  return s;
}

}  // namespace detail

/// Traces n_lines streamlines from the inflow column, seeded equispaced in psi, by RK4 on
/// the unit tangent with step dx/2, and records the drift of the two transported invariants.
inline StreamlineDrift streamline_invariants(const FlowField& flow, const StreamField& field,
                                             const TruncatedProfile& trunc, const GasModel& gas,
                                             int n_lines = 16) {
  if (n_lines < 1) throw ConfigError("n_lines must be positive");
  const DomainGrid& g = *flow.grid;
  const double h = 0.5 * g.dx();
  const double rho_inf = trunc.rho_inf();
  StreamlineDrift d;
  auto tangent = [&](double x, double r, double& tx, double& tr) {
    const detail::Sample s = detail::interpolate(flow, x, r);
    const double q = std::hypot(s.u, s.v);
    if (!(s.u > 0.0) || !(q > 0.0)) throw NumericalError("stagnation or reversed flow on a streamline");
    tx = s.u / q;
    tr = s.v / q;
  };
  for (int l = 0; l < n_lines; ++l) {
    const double psi_seed = (l + 0.5) / n_lines * field.m_L;
    const double k = trunc.kappa(psi_seed);
    const double B_seed = trunc.bernoulli(psi_seed, gas);
    const double vort_ref = trunc.du_over_r(k) / rho_inf;
    double x = -g.X(), r = k;
    ++d.lines;
    int steps = 0;
    const int max_steps = static_cast<int>(20.0 * g.nx());
    while (x < g.X() - 1e-12 && steps++ < max_steps) {
      const detail::Sample s = detail::interpolate(flow, x, r);
      const double B = 0.5 * (s.u * s.u + s.v * s.v) + enthalpy(s.rho, gas);
      d.bernoulli = std::max(d.bernoulli, std::abs(B - B_seed));
      if (s.omega_ok && r > 0.0) d.vorticity = std::max(d.vorticity, std::abs(s.omega / (r * s.rho) + vort_ref));
      ++d.samples;
      const double step = std::min(h, g.X() - x);
      double k1x, k1r, k2x, k2r, k3x, k3r, k4x, k4r;
      tangent(x, r, k1x, k1r);
      tangent(x + 0.5 * step * k1x, r + 0.5 * step * k1r, k2x, k2r);
      tangent(x + 0.5 * step * k2x, r + 0.5 * step * k2r, k3x, k3r);
      tangent(x + step * k3x, r + step * k3r, k4x, k4r);
      x += step / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
      r += step / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
      if (r > g.L()) r = g.L();
      if (r < 0.0) r = 0.0;
    }
  }
  return d;
}

// ---- far field, positivity, barrier ----------------------------------------

struct FarfieldReport {
  double psi_gap = 0.0;       // max |psi - psi_bar| on the probe columns
  double grad_gap = 0.0;      // max |grad(psi - psi_bar)| / sqrt(r) on the probe columns
  double weighted_l2 = 0.0;   // || r^{1/2} (rho u - rho_inf u_L, rho v) ||_L2
  double x_probe = 0.0;
};

inline FarfieldReport farfield_check(const StreamField& field, const FlowField& flow,
                                     const TruncatedProfile& trunc, double x_probe_fraction = 0.9) {
  const DomainGrid& g = *field.grid;
  FarfieldReport rep;
  rep.x_probe = x_probe_fraction * g.X();
  const int off = static_cast<int>(std::lround(x_probe_fraction * g.X() / g.dx()));
  const int ic = g.nx() / 2;
  const double rho_inf = trunc.rho_inf();
  for (int i : {ic - off, ic + off}) {
    if (i < 0 || i > g.nx()) continue;
    for (int j = 0; j <= g.nr(); ++j) {
      if (g.is_masked(i, j)) continue;
      const double r = g.r(j);
      rep.psi_gap = std::max(rep.psi_gap, std::abs(field.at(i, j) - trunc.stream(r)));
      if (j == 0) continue;
      const Gradient d = node_gradient(g, field.psi, i, j);
      const double gr = d.gr - rho_inf * r * trunc.u(r);
      rep.grad_gap = std::max(rep.grad_gap, std::hypot(d.gx, gr) / std::sqrt(r));
    }
  }
  double s = 0.0;
  for (int j = 0; j <= g.nr(); ++j) {
    const double r = g.r(j);
    for (int i = 0; i <= g.nx(); ++i) {
      if (g.is_masked(i, j)) continue;
      const std::size_t p = g.index(i, j);
      const double a = flow.rho[p] * flow.u[p] - rho_inf * trunc.u(r);
      const double b = flow.rho[p] * flow.v[p];
      s += r * (a * a + b * b) * g.dx() * g.dr();
    }
  }
  rep.weighted_l2 = std::sqrt(s);
  return rep;
}

struct PositivityReport {
  double min_u_interior = std::numeric_limits<double>::infinity();  // unmasked nodes with r > 0
  double min_u_wall = std::numeric_limits<double>::infinity();      // on Gamma with 0 < x < 1
  int wall_points = 0;
  bool ok() const { return min_u_interior > 0.0 && (wall_points == 0 || min_u_wall > 0.0); }
};

/// u > 0 at every unmasked node with r > 0, and on the obstacle from the one-sided
/// normal fit: at (x, f) psi_x = -f' psi_r, so u = psi_r / (f rho) with
/// rho = H(psi_r^2 (1 + f'^2) / f^2, B(0)).
inline PositivityReport positivity_check(const FlowField& flow, const StreamField& field,
                                         const TruncatedProfile& trunc, const GasModel& gas) {
  const DomainGrid& g = *flow.grid;
  PositivityReport rep;
  for (int j = 1; j <= g.nr(); ++j)
    for (int i = 0; i <= g.nx(); ++i)
      if (!g.is_masked(i, j)) rep.min_u_interior = std::min(rep.min_u_interior, flow.at(flow.u, i, j));
  const double B0 = trunc.bernoulli(0.0, gas);
  const SonicData sd = sonic_data(B0, gas);
  const Obstacle& ob = g.obstacle();
  for (int i = 0; i <= g.nx(); ++i) {
    const double x = g.x(i), f = ob.f(x);
    if (!(x > 0.0 && x < 1.0) || !(f > 0.0)) continue;
    // first two nodes above the wall that are not on it
    int j = 0;
    while (j <= g.nr() && (g.is_masked(i, j) || g.r(j) - f <= DomainGrid::kSnapFraction * g.dr())) ++j;
    if (j + 1 > g.nr()) continue;
    // psi = c1 s + c2 s^2 with s = r^2 - f^2, so psi_r / f = 2 c1 on the wall
    const double s1 = g.r(j) * g.r(j) - f * f, s2 = g.r(j + 1) * g.r(j + 1) - f * f;
    const double p1 = field.at(i, j), p2 = field.at(i, j + 1);
    const double c1 = (p1 * s2 * s2 - p2 * s1 * s1) / (s1 * s2 * (s2 - s1));
    const double fp = ob.df(x);
    const double M = 4.0 * c1 * c1 * (1.0 + fp * fp);
    const double rho = subsonic_density(std::min(M, sd.sigma), B0, gas);
    rep.min_u_wall = std::min(rep.min_u_wall, 2.0 * c1 / rho);
    ++rep.wall_points;
  }
  return rep;
}

/// max over nodes with 0 < r < delta0 of psi / (rho_inf (r + k)^2).
inline double barrier_check(const StreamField& field, const TruncatedProfile& trunc, double k,
                            double delta0) {
  const DomainGrid& g = *field.grid;
  double c = 0.0;
  for (int j = 1; j <= g.nr() && g.r(j) < delta0; ++j) {
    const double rk = g.r(j) + k;
    for (int i = 0; i <= g.nx(); ++i)
      if (!g.is_masked(i, j)) c = std::max(c, field.at(i, j) / (trunc.rho_inf() * rk * rk));
  }
  return c;
}

// ---- uniqueness -------------------------------------------------------------

enum class ProbeStatus { agree, disagree, inconclusive };

inline const char* to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::agree: return "agree";
    case ProbeStatus::disagree: return "disagree";
    case ProbeStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

struct UniquenessReport {
  ProbeStatus status = ProbeStatus::inconclusive;
  double max_distance = std::numeric_limits<double>::quiet_NaN();
  std::vector<StreamField> fields;
  std::string note;
};

inline double relative_linf(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    m = std::max({m, std::abs(a[i]), std::abs(b[i])});
  }
  return m > 0.0 ? d / m : d;
}

/// Solves from up to three admissible initial guesses and compares the results.
inline UniquenessReport uniqueness_probe(std::shared_ptr<const DomainGrid> grid, const TruncatedProfile& trunc,
                                         const GasModel& gas, const SolverConfig& config, int n_inits = 3,
                                         double tol = 1e-6, int threads = 1) {
  if (n_inits < 2 || n_inits > 3) throw ConfigError("uniqueness probe needs 2 or 3 initializations");
  const InitialGuess kinds[3] = {InitialGuess::boundary_extension, InitialGuess::upstream_clipped,
                                 InitialGuess::average};
  UniquenessReport rep;
  for (int s = 0; s < n_inits; ++s) {
    SolveOptions opt;
    opt.init = kinds[s];
    opt.threads = threads;
    try {
      rep.fields.push_back(solve(grid, trunc, gas, config, opt));
    } catch (const DivergedError& e) {
      rep.status = ProbeStatus::inconclusive;
      rep.note = e.what();
      return rep;
    }
  }
  rep.max_distance = 0.0;
  for (std::size_t a = 0; a < rep.fields.size(); ++a)
    for (std::size_t b = a + 1; b < rep.fields.size(); ++b)
      rep.max_distance = std::max(rep.max_distance, relative_linf(rep.fields[a].psi, rep.fields[b].psi));
  rep.status = rep.max_distance <= tol ? ProbeStatus::agree : ProbeStatus::disagree;
  return rep;
}

// ---- report -----------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // measured value
  double tol = 0.0;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  void add(const std::string& name, bool pass, double margin, double tol) {
    for (const auto& c : checks)
      if (c.name == name) throw std::logic_error("duplicate check " + name);
    checks.push_back({name, pass, margin, tol});
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  /// One record per line: name=...; pass=...; margin=...; tol=...
  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& c : checks)
      os << "name=" << c.name << "; pass=" << (c.pass ? "true" : "false") << "; margin=" << c.margin
         << "; tol=" << c.tol << "\n";
    return os.str();
  }
  static VerificationReport parse(const std::string& text) {
    VerificationReport rep;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      CheckResult c;
      std::istringstream ls(line);
      std::string part;
      while (std::getline(ls, part, ';')) {
        const auto b = part.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        part = part.substr(b);
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad report line: " + line);
        const std::string key = part.substr(0, eq), val = part.substr(eq + 1);
        if (key == "name") {
          c.name = val;
        } else if (key == "pass") {
          c.pass = val == "true";
        } else if (key == "margin") {
          c.margin = std::stod(val);
        } else if (key == "tol") {
          c.tol = std::stod(val);
        }
      }
      rep.checks.push_back(c);
    }
    return rep;
  }
};

struct VerifyOptions {
  double eps0 = 0.05;
  int n_lines = 16;
  double x_probe_fraction = 0.9;
  double delta0_fraction = 0.2;  // barrier band r < delta0_fraction * L
  double bound_tol_rel = 1e-8;   // of m_L
  // Discrete obstacle-free solution on the same grid. When given, psi is also allowed up to
  // it, which absorbs the discretization error of sheared upstream profiles.
  const std::vector<double>* discrete_upstream = nullptr;
};

/// Runs the property suite on a converged k = 0 field.
inline VerificationReport verify(const StreamField& field, const TruncatedProfile& trunc, const GasModel& gas,
                                 const VerifyOptions& o = VerifyOptions()) {
  const DomainGrid& g = *field.grid;
  const FlowField flow = reconstruct(field, trunc, gas);
  VerificationReport rep;
  const double mL = field.m_L;
  const double btol = o.bound_tol_rel * mL;
  const double inf = std::numeric_limits<double>::infinity();

  double lo = inf, hi = -inf, above_upstream = -inf, min_dr = inf, min_dr_strict = inf;
  for (int j = 0; j <= g.nr(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      if (g.is_masked(i, j)) continue;
      const double p = field.at(i, j);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      double bar = trunc.stream(g.r(j));
      if (o.discrete_upstream) bar = std::max(bar, (*o.discrete_upstream)[g.index(i, j)]);
      above_upstream = std::max(above_upstream, p - bar);
      if (j < g.nr() && !g.is_masked(i, j + 1)) {
        const double d = (field.at(i, j + 1) - p) / g.dr();
        min_dr = std::min(min_dr, d);
        if (g.r(j) >= 2.0 * g.dr() && g.cls(i, j) != NodeClass::obstacle_boundary) min_dr_strict = std::min(min_dr_strict, d);
      }
    }
  }
  rep.add("psi_lower_bound", lo >= -btol, lo, -btol);
  rep.add("psi_upper_bound", hi <= mL + btol, hi - mL, btol);
  rep.add("psi_below_upstream", above_upstream <= btol, above_upstream, btol);
  rep.add("radial_monotonicity", min_dr >= -btol / g.dr() && min_dr_strict > 0.0, min_dr_strict, 0.0);

  const PositivityReport pos = positivity_check(flow, field, trunc, gas);
  rep.add("axial_velocity_positive", pos.min_u_interior > 0.0, pos.min_u_interior, 0.0);
  rep.add("wall_velocity_positive", pos.wall_points == 0 || pos.min_u_wall > 0.0,
          pos.wall_points == 0 ? 0.0 : pos.min_u_wall, 0.0);

  double max_mach = 0.0;
  double branch_violation = 0.0, brange_violation = 0.0;
  const double hinf = enthalpy(trunc.rho_inf(), gas);
  const double Bmin = hinf + 0.5 * std::pow(trunc.min_u(), 2), Bmax = hinf + 0.5 * std::pow(trunc.max_u(), 2);
  for (std::size_t p = 0; p < g.num_nodes(); ++p) {
    if (g.cls(p) == NodeClass::masked) continue;
    max_mach = std::max(max_mach, flow.mach[p]);
    const SonicData sd = sonic_data(flow.B[p], gas);
    branch_violation = std::max({branch_violation, sd.rho_star - flow.rho[p], flow.rho[p] - sd.rho_upper});
    brange_violation = std::max({brange_violation, Bmin - flow.B[p], flow.B[p] - Bmax});
  }
  const double cert = 1.0 - 2.0 * o.eps0;
  rep.add("subsonic_certificate", field.Q < cert && flow.flagged.empty(), field.Q, cert);
  rep.add("mach_bound", max_mach < cert, max_mach, cert);
  const double qtol = 1e-10 * std::max(1.0, field.Q);
  rep.add("q_equals_max_mach", std::abs(field.Q - max_mach) <= qtol, std::abs(field.Q - max_mach), qtol);
  rep.add("density_on_subsonic_branch", branch_violation <= 1e-12 * trunc.rho_inf(), branch_violation,
          1e-12 * trunc.rho_inf());
  rep.add("bernoulli_range", brange_violation <= 1e-12 * Bmax, brange_violation, 1e-12 * Bmax);

  // psi recovered from r rho u by trapezoidal quadrature up each column
  double rt = 0.0, rt_scale = 0.0;
  for (int i = 0; i <= g.nx(); ++i) {
    int j0 = 0;
    while (j0 <= g.nr() && g.is_masked(i, j0)) ++j0;
    double acc = field.at(i, j0);
    for (int j = j0 + 1; j <= g.nr(); ++j) {
      const std::size_t a = g.index(i, j - 1), b = g.index(i, j);
      acc += 0.5 * g.dr() * (g.r(j - 1) * flow.rho[a] * flow.u[a] + g.r(j) * flow.rho[b] * flow.u[b]);
      rt = std::max(rt, std::abs(acc - field.psi[b]));
    }
    rt_scale = std::max(rt_scale, std::abs(field.at(i, g.nr())));
  }
  const double h2 = std::pow(std::max(g.dx(), g.dr()), 2);
  const double rt_tol = 0.5 * h2 * std::max(rt_scale, mL);
  rep.add("round_trip", rt <= rt_tol, rt, rt_tol);

  const EulerResidual er = euler_residual(flow, gas);
  // diagnostics below are reported, finite values pass
  const double er_tol = inf;
  rep.add("euler_mass_residual", std::isfinite(er.mass), er.mass, er_tol);
  rep.add("euler_x_momentum_residual", std::isfinite(er.x_momentum), er.x_momentum, er_tol);
  rep.add("euler_r_momentum_residual", std::isfinite(er.r_momentum), er.r_momentum, er_tol);

  try {
    const StreamlineDrift sd = streamline_invariants(flow, field, trunc, gas, o.n_lines);
    rep.add("streamline_bernoulli_drift", std::isfinite(sd.bernoulli), sd.bernoulli, er_tol);
    rep.add("streamline_vorticity_drift", std::isfinite(sd.vorticity), sd.vorticity, er_tol);
  } catch (const NumericalError&) {
    rep.add("streamline_bernoulli_drift", false, inf, er_tol);
    rep.add("streamline_vorticity_drift", false, inf, er_tol);
  }

  const FarfieldReport ff = farfield_check(field, flow, trunc, o.x_probe_fraction);
  rep.add("farfield_psi_gap", std::isfinite(ff.psi_gap), ff.psi_gap, er_tol);
  rep.add("farfield_gradient_gap", std::isfinite(ff.grad_gap), ff.grad_gap, er_tol);
  rep.add("farfield_weighted_l2", std::isfinite(ff.weighted_l2), ff.weighted_l2, er_tol);

  const double barrier = barrier_check(field, trunc, 0.0, o.delta0_fraction * g.L());
  rep.add("axis_barrier", std::isfinite(barrier), barrier, er_tol);
  return rep;
}

}  // namespace axiflow
