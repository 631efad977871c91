#pragma once

// Stream-function solver: div(grad psi / ((r+k) H)) = (r+k) F F' H on the masked grid,
// Picard iteration on the frozen coefficients, continuation in k down to 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "axiflow/discrete_ops.hpp"
#include "axiflow/errors.hpp"
#include "axiflow/gas_model.hpp"
#include "axiflow/geometry_grid.hpp"
#include "axiflow/linear_solver.hpp"
#include "axiflow/upstream_profile.hpp"

namespace axiflow {

struct PicardConfig {
  int max_iters = 200;
  double damping = 0.7;
  double tol_rel = 1e-9;
};

struct LinearConfig {
  double tol = 1e-10;
  int max_iters = 5000;
};

struct SolverConfig {
  double eps0 = 0.05;
  std::vector<double> k_schedule{0.1, 0.03, 0.01, 0.0};
  PicardConfig picard;
  LinearConfig linear;

  void validate() const {
    if (!(eps0 > 0.0 && eps0 < 0.25)) throw ConfigError("eps0 must lie in (0, 0.25)");
    if (k_schedule.empty() || k_schedule.back() != 0.0)
      throw ConfigError("k_schedule must end with 0");
    for (std::size_t s = 0; s < k_schedule.size(); ++s) {
      if (k_schedule[s] < 0.0) throw ConfigError("k_schedule entries must be non-negative");
      if (s > 0 && !(k_schedule[s] < k_schedule[s - 1]))
        throw ConfigError("k_schedule must be strictly decreasing");
    }
    if (picard.max_iters < 1) throw ConfigError("picard.max_iters must be positive");
    if (!(picard.damping > 0.0 && picard.damping <= 1.0))
      throw ConfigError("picard.damping must lie in (0, 1]");
    if (!(picard.tol_rel > 0.0)) throw ConfigError("picard.tol_rel must be positive");
    if (!(linear.tol > 0.0)) throw ConfigError("linear.tol must be positive");
    if (linear.max_iters < 1) throw ConfigError("linear.max_iters must be positive");
  }
};

/// Smooth cutoff: identity up to 1-2e, constant 1-1.5e from 1-e, C^2 in between.
inline double chi0(double s, double eps0) {
  const double a = 1.0 - 2.0 * eps0;
  if (s <= a) return s;
  if (s >= 1.0 - eps0) return 1.0 - 1.5 * eps0;
  const double t = (s - a) / eps0;
  return a + eps0 * (t - t * t * t + 0.5 * t * t * t * t);
}

inline double chi0_prime(double s, double eps0) {
  const double a = 1.0 - 2.0 * eps0;
  if (s <= a) return 1.0;
  if (s >= 1.0 - eps0) return 0.0;
  const double t = (s - a) / eps0;
  return (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t);
}

struct EffectiveDensity {
  double H = 0.0;          // truncated density
  double ratio = 0.0;      // truncated speed ratio
  double raw_ratio = 0.0;  // untruncated ratio sqrt(M)/H^{(g+1)/2}
  bool truncated = false;
};

/// Untruncated speed ratio for momentum M; sqrt(M / Sigma) past the sonic limit.
inline double speed_ratio(double M, double B, const GasModel& gas) {
  const SonicData sd = sonic_data(B, gas);
  if (M >= sd.sigma) return std::sqrt(M / sd.sigma);
  const double H = subsonic_density(M, B, gas);
  return std::sqrt(M) / std::pow(H, 0.5 * (gas.gamma() + 1.0));
}

/// Density with the cutoff applied to the speed ratio. On the subsonic branch the
/// ratio t determines the density: h(H) + t^2 H^{g-1} / 2 = B.
inline EffectiveDensity effective_density_mb(double M, double B, const GasModel& gas, double eps0) {
  EffectiveDensity out;
  const SonicData sd = sonic_data(B, gas);
  const double g = gas.gamma();
  if (M < sd.sigma) {
    out.H = subsonic_density(M, B, gas);
    out.raw_ratio = std::sqrt(M) / std::pow(out.H, 0.5 * (g + 1.0));
  } else {
    out.raw_ratio = std::sqrt(M / sd.sigma);
  }
  if (out.raw_ratio <= 1.0 - 2.0 * eps0) {
    out.ratio = out.raw_ratio;
    return out;
  }
  const double t = chi0(out.raw_ratio, eps0);
  out.ratio = t;
  out.truncated = true;
  out.H = std::pow(2.0 * B * (g - 1.0) / ((g - 1.0) * t * t + 2.0), 1.0 / (g - 1.0));
  return out;
}

inline EffectiveDensity effective_density(Gradient grad_psi, double r, double k, double psi,
                                          const TruncatedProfile& trunc, const GasModel& gas,
                                          double eps0) {
  if (!(r + k > 0.0)) throw DomainError("effective_density: r + k must be positive");
  const double rk = r + k;
  const double M = (grad_psi.gx * grad_psi.gx + grad_psi.gr * grad_psi.gr) / (rk * rk);
  return effective_density_mb(M, trunc.bernoulli(psi, gas), gas, eps0);
}

struct StreamDiagnostics {
  std::vector<double> update_history;  // relative L-inf Picard update per iteration
  std::vector<double> ratio_history;   // max truncated speed ratio per iteration
  std::vector<int> stage_iterations;
  int picard_iterations = 0;
  long linear_iterations = 0;
  double residual = 0.0;  // residual_norm at k = 0
  bool truncation_active = false;
};

struct StreamField {
  std::shared_ptr<const DomainGrid> grid;
  std::vector<double> psi;
  double k = 0.0;
  double m_L = 0.0;
  double Q = 0.0;
  StreamDiagnostics diag;

  double at(int i, int j) const { return psi[grid->index(i, j)]; }
};

struct LinearSystem {
  CsrMatrix A;
  std::vector<double> b;
  std::vector<double> volume;           // control volume per unknown
  std::vector<std::size_t> node_of;     // unknown -> node
  double max_ratio = 0.0;               // largest truncated face ratio
  double max_raw_ratio = 0.0;
  bool truncated = false;
};

/// Discrete operator for one grid, profile and gas.
class Discretization {
 public:
  Discretization(std::shared_ptr<const DomainGrid> grid, const TruncatedProfile& trunc,
                 const GasModel& gas, double eps0, Executor ex = Executor())
      : grid_(std::move(grid)), trunc_(trunc), gas_(gas), eps0_(eps0), ex_(ex) {
    const DomainGrid& g = *grid_;
    if (std::abs(g.L() - trunc.L()) > 1e-12 * trunc.L())
      throw ConfigError("grid radial extent must equal the truncation radius L");
    unknown_of_.assign(g.num_nodes(), kNone);
    for (std::size_t p = 0; p < g.num_nodes(); ++p) {
      if (g.cls(p) == NodeClass::interior) {
        unknown_of_[p] = node_of_.size();
        node_of_.push_back(p);
      }
    }
    wx_.assign(g.num_nodes(), g.dx());
    wr_.assign(g.num_nodes(), g.dr());
    set_k(0.0);
  }

  const DomainGrid& grid() const { return *grid_; }
  std::shared_ptr<const DomainGrid> grid_ptr() const { return grid_; }
  const TruncatedProfile& trunc() const { return trunc_; }
  const GasModel& gas() const { return gas_; }
  double eps0() const { return eps0_; }
  double k() const { return k_; }
  std::size_t num_unknowns() const { return node_of_.size(); }
  const std::vector<std::size_t>& unknown_nodes() const { return node_of_; }
  const Executor& executor() const { return ex_; }

  void set_k(double k) {
    k_ = k;
    side_ = side_boundary_values(trunc_, *grid_, k);
  }

  /// Dirichlet value at a non-interior, unmasked node.
  double boundary_value(int i, int j) const {
    switch (grid_->cls(i, j)) {
      case NodeClass::top: return trunc_.m_L();
      case NodeClass::inflow:
      case NodeClass::outflow: return side_[j];
      default: return 0.0;
    }
  }

  void impose_boundary(std::vector<double>& psi) const {
    const DomainGrid& g = *grid_;
    psi.resize(g.num_nodes(), 0.0);
    for (int j = 0; j <= g.nr(); ++j)
      for (int i = 0; i <= g.nx(); ++i)
        if (g.cls(i, j) != NodeClass::interior) psi[g.index(i, j)] = boundary_value(i, j);
  }

  LinearSystem assemble(const std::vector<double>& psi) const {
    const DomainGrid& g = *grid_;
    const std::size_t nn = g.num_nodes();
    const int nx = g.nx(), nr = g.nr();
    const double dx = g.dx(), dr = g.dr(), k = k_;

    // nodal gradients, Bernoulli values and F F'
    std::vector<Gradient> grad(nn);
    std::vector<double> B(nn, 0.0), ffp(nn, 0.0);
    const double h_inf = enthalpy(trunc_.rho_inf(), gas_);
    ex_.for_chunks(nn, [&](std::size_t b0, std::size_t e0, std::size_t) {
      for (std::size_t p = b0; p < e0; ++p) {
        if (g.cls(p) == NodeClass::masked) continue;
        const int i = static_cast<int>(p % (nx + 1)), j = static_cast<int>(p / (nx + 1));
        grad[p] = node_gradient(g, psi, i, j);
        const auto fp = trunc_.F_and_product(psi[p]);
        B[p] = h_inf + 0.5 * fp.F * fp.F;
        ffp[p] = fp.FFprime;
      }
    });
    const double B_wall = h_inf + 0.5 * std::pow(trunc_.F(0.0), 2);

    // face coefficients a = 1 / ((r + k) H); x-faces (i, i+1) and r-faces (j, j+1)
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> ax(nn, nan), ar(nn, nan);
    std::vector<double> ratio_part(Executor::kChunks, 0.0), raw_part(Executor::kChunks, 0.0);
    std::vector<char> trunc_part(Executor::kChunks, 0);
    auto face = [&](double gx, double gr, double r, double Bf, std::size_t chunk) {
      const double rk = r + k;
      const double M = (gx * gx + gr * gr) / (rk * rk);
      const EffectiveDensity e = effective_density_mb(M, Bf, gas_, eps0_);
      ratio_part[chunk] = std::max(ratio_part[chunk], e.ratio);
      raw_part[chunk] = std::max(raw_part[chunk], e.raw_ratio);
      if (e.truncated) trunc_part[chunk] = 1;
      return 1.0 / (rk * e.H);
    };
    auto unk = [&](std::size_t p) { return g.cls(p) == NodeClass::interior; };
    ex_.for_chunks(nn, [&](std::size_t b0, std::size_t e0, std::size_t c) {
      for (std::size_t p = b0; p < e0; ++p) {
        if (g.cls(p) == NodeClass::masked) continue;
        const int i = static_cast<int>(p % (nx + 1)), j = static_cast<int>(p / (nx + 1));
        if (i < nx) {
          const std::size_t q = p + 1;
          if (g.cls(q) != NodeClass::masked && (unk(p) || unk(q))) {
            ax[p] = face((psi[q] - psi[p]) / dx, 0.5 * (grad[p].gr + grad[q].gr), g.r(j),
                         0.5 * (B[p] + B[q]), c);
          }
        }
        if (j < nr) {
          const std::size_t q = p + static_cast<std::size_t>(nx + 1);
          if (g.cls(q) != NodeClass::masked && (unk(p) || unk(q))) {
            ar[p] = face(0.5 * (grad[p].gx + grad[q].gx), (psi[q] - psi[p]) / dr, g.r(j) + 0.5 * dr,
                         0.5 * (B[p] + B[q]), c);
          }
        }
      }
    });

    LinearSystem sys;
    const std::size_t n = node_of_.size();
    sys.b.assign(n, 0.0);
    sys.volume.assign(n, 0.0);
    sys.node_of = node_of_;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    ex_.for_chunks(n, [&](std::size_t b0, std::size_t e0, std::size_t c) {
      for (std::size_t u = b0; u < e0; ++u) {
        const std::size_t p = node_of_[u];
        const int i = static_cast<int>(p % (nx + 1)), j = static_cast<int>(p / (nx + 1));
        const double r = g.r(j);
        double diag = 0.0, rhs = 0.0;
        auto& row = rows[u];
        row.reserve(5);
        auto couple = [&](std::size_t q, double cpl) {
          if (!std::isfinite(cpl))
            throw NumericalError("non-finite coefficient at node (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
          diag += cpl;
          if (unknown_of_[q] != kNone) {
            row.push_back({unknown_of_[q], -cpl});
          } else {
            rhs += cpl * psi[q];
          }
        };
        auto cut_face = [&](double gx, double gr, double rf, double d, double width) {
          const double a = face(gx, gr, rf, 0.5 * (B[p] + B_wall), c);
          const double cpl = a * width / d;
          if (!std::isfinite(cpl))
            throw NumericalError("non-finite cut coefficient at node (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
          diag += cpl;
        };
        // left / right
        for (int s : {-1, 1}) {
          const Dir d = s < 0 ? kLeft : kRight;
          const double cd = g.cut(i, j, d);
          if (cd > 0.0) {
            cut_face(-s * psi[p] / cd, grad[p].gr, r, cd, wr_[p]);
          } else {
            const std::size_t q = s < 0 ? p - 1 : p + 1;
            const double a = s < 0 ? ax[q] : ax[p];
            const double width = unk(q) ? 0.5 * (wr_[p] + wr_[q]) : wr_[p];
            couple(q, a * width / dx);
          }
        }
        // down / up
        {
          const double cd = g.cut(i, j, kDown);
          if (cd > 0.0) {
            cut_face(grad[p].gx, psi[p] / cd, r - 0.5 * cd, cd, wx_[p]);
          } else {
            const std::size_t q = p - static_cast<std::size_t>(nx + 1);
            couple(q, ar[q] * (unk(q) ? 0.5 * (wx_[p] + wx_[q]) : wx_[p]) / dr);
          }
          const std::size_t q = p + static_cast<std::size_t>(nx + 1);
          couple(q, ar[p] * (unk(q) ? 0.5 * (wx_[p] + wx_[q]) : wx_[p]) / dr);
        }
        row.push_back({u, diag});
        // source (r + k) F F' H at the node
        const double V = wx_[p] * wr_[p];
        double S = 0.0;
        if (ffp[p] != 0.0) {
          const double rk = r + k;
          const double M = (grad[p].gx * grad[p].gx + grad[p].gr * grad[p].gr) / (rk * rk);
          S = rk * ffp[p] * effective_density_mb(M, B[p], gas_, eps0_).H;
        }
        sys.volume[u] = V;
        sys.b[u] = rhs - S * V;
      }
    });
    CsrBuilder builder(n);
    for (std::size_t u = 0; u < n; ++u)
      for (const auto& e : rows[u]) builder.add(u, e.first, e.second);
    sys.A = builder.finish();
    for (std::size_t c = 0; c < Executor::kChunks; ++c) {
      sys.max_ratio = std::max(sys.max_ratio, ratio_part[c]);
      sys.max_raw_ratio = std::max(sys.max_raw_ratio, raw_part[c]);
      sys.truncated = sys.truncated || trunc_part[c];
    }
    return sys;
  }

  /// Pointwise residual (div(a grad psi) - S) at each unknown.
  std::vector<double> residual(const std::vector<double>& psi) const {
    const LinearSystem sys = assemble(psi);
    std::vector<double> x(sys.node_of.size()), ax;
    for (std::size_t u = 0; u < x.size(); ++u) x[u] = psi[sys.node_of[u]];
    sys.A.multiply(x, ax, ex_);
    std::vector<double> res(x.size());
    for (std::size_t u = 0; u < x.size(); ++u) res[u] = (sys.b[u] - ax[u]) / sys.volume[u];
    return res;
  }

  /// L2 norm of the residual with measure r dx dr.
  double residual_norm(const std::vector<double>& psi) const {
    const std::vector<double> res = residual(psi);
    const DomainGrid& g = *grid_;
    return std::sqrt(ex_.sum(res.size(), [&](std::size_t u) {
      const std::size_t p = node_of_[u];
      const double r = g.r(static_cast<int>(p / static_cast<std::size_t>(g.nx() + 1)));
      return res[u] * res[u] * r * wx_[p] * wr_[p];
    }));
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::shared_ptr<const DomainGrid> grid_;
  const TruncatedProfile& trunc_;
  const GasModel& gas_;
  double eps0_;
  Executor ex_;
  double k_ = 0.0;
  std::vector<double> side_;
  std::vector<std::size_t> unknown_of_, node_of_;
  std::vector<double> wx_, wr_;
};

/// Q = max nodal |grad psi| / (r H^{(g+1)/2}) with the untruncated density at k = 0.
inline double q_statistic(const DomainGrid& g, const std::vector<double>& psi,
                          const TruncatedProfile& trunc, const GasModel& gas) {
  double q = 0.0;
  for (int j = 0; j <= g.nr(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      if (g.is_masked(i, j)) continue;
      const double M = node_momentum_sq(g, psi, i, j);
      q = std::max(q, speed_ratio(M, trunc.bernoulli(psi[g.index(i, j)], gas), gas));
    }
  }
  return q;
}

// ---- checkpoint ----------------------------------------------------------

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::size_t stage = 0;  // stage to resume at
  int iteration = 0;
  std::vector<double> psi;
};

inline void write_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  std::ostringstream hdr;
  hdr << "axiflow-checkpoint 1\nhash " << std::hex << c.config_hash << std::dec << "\nstage " << c.stage
      << "\niteration " << c.iteration << "\nnodes " << c.psi.size() << "\n";
  os << hdr.str();
  os.write(reinterpret_cast<const char*>(c.psi.data()),
           static_cast<std::streamsize>(c.psi.size() * sizeof(double)));
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  std::string magic, key;
  int version = 0;
  Checkpoint c;
  std::size_t n = 0;
  is >> magic >> version;
  if (magic != "axiflow-checkpoint" || version != 1) throw std::runtime_error("not a checkpoint: " + path);
  is >> key >> std::hex >> c.config_hash >> std::dec;
  if (key != "hash") throw std::runtime_error("bad checkpoint header");
  is >> key >> c.stage >> key >> c.iteration >> key >> n;
  if (key != "nodes" || !is) throw std::runtime_error("bad checkpoint header");
  is.get();
  c.psi.resize(n);
  is.read(reinterpret_cast<char*>(c.psi.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("truncated checkpoint " + path);
  return c;
}

// ---- solve ---------------------------------------------------------------

enum class InitialGuess {
  boundary_extension,  // side profile extended constantly in x
  upstream_clipped,    // psi_bar(r) clipped to [0, m_L]
  average,             // mean of the two above
};

struct SolveOptions {
  InitialGuess init = InitialGuess::boundary_extension;
  const std::vector<double>* initial_psi = nullptr;  // overrides init when set
  std::size_t start_stage = 0;
  int threads = 1;
  std::string checkpoint_path;  // empty: no checkpoints
  int checkpoint_every = 0;     // iterations between checkpoints within a stage (0: stage ends only)
  std::uint64_t config_hash = 0;
};

inline std::vector<double> initial_guess(const Discretization& disc, InitialGuess kind) {
  const DomainGrid& g = disc.grid();
  const TruncatedProfile& t = disc.trunc();
  std::vector<double> psi(g.num_nodes(), 0.0);
  disc.impose_boundary(psi);
  const std::vector<double> side = side_boundary_values(t, g, disc.k());
  for (int j = 0; j <= g.nr(); ++j) {
    const double ext = side[j];
    const double up = std::clamp(t.stream(g.r(j)), 0.0, t.m_L());
    double v = ext;
    if (kind == InitialGuess::upstream_clipped) v = up;
    if (kind == InitialGuess::average) v = 0.5 * (ext + up);
    for (int i = 0; i <= g.nx(); ++i)
      if (g.cls(i, j) == NodeClass::interior) psi[g.index(i, j)] = v;
  }
  return psi;
}

inline StreamField solve(std::shared_ptr<const DomainGrid> grid, const TruncatedProfile& trunc,
                         const GasModel& gas, const SolverConfig& config,
                         const SolveOptions& opt = SolveOptions()) {
  config.validate();
  if (opt.start_stage >= config.k_schedule.size()) throw ConfigError("start stage beyond k_schedule");
  Executor ex(opt.threads);
  Discretization disc(grid, trunc, gas, config.eps0, ex);
  const DomainGrid& g = *grid;
  StreamField field;
  field.grid = grid;
  field.m_L = trunc.m_L();

  disc.set_k(config.k_schedule[opt.start_stage]);
  std::vector<double> psi;
  if (opt.initial_psi) {
    if (opt.initial_psi->size() != g.num_nodes()) throw ConfigError("initial field size mismatch");
    psi = *opt.initial_psi;
  } else {
    psi = initial_guess(disc, opt.init);
  }
  const std::size_t n = disc.num_unknowns();
  const auto& nodes = disc.unknown_nodes();
  auto& dg = field.diag;

  for (std::size_t stage = opt.start_stage; stage < config.k_schedule.size(); ++stage) {
    const double k = config.k_schedule[stage];
    disc.set_k(k);
    disc.impose_boundary(psi);
    int it = 0;
    double best = std::numeric_limits<double>::infinity();
    bool converged = false;
    double theta = config.picard.damping, prev_rel = 0.0;
    bool force_tight = false;
    std::vector<double> x(n), xnew(n);
    while (!converged) {
      if (it >= config.picard.max_iters) {
        throw DivergedError("Picard iteration did not converge within " +
                                std::to_string(config.picard.max_iters) + " iterations at k=" +
                                std::to_string(k),
                            dg.update_history);
      }
      LinearSystem sys;
      try {
        sys = disc.assemble(psi);
      } catch (const NumericalError& e) {
        throw DivergedError(std::string("assembly failed: ") + e.what(), dg.update_history);
      }
      for (std::size_t u = 0; u < n; ++u) x[u] = psi[nodes[u]];
      xnew = x;
      // inner tolerance follows the outer progress, never looser than 1e-4
      const double lin_tol =
          prev_rel > 0.0 ? std::clamp(1e-3 * prev_rel, config.linear.tol, 1e-4) : std::min(1e-4, config.linear.tol * 1e4);
      const double used_tol = force_tight ? config.linear.tol : std::max(lin_tol, config.linear.tol);
      const CgResult cg = pcg(sys.A, sys.b, xnew, used_tol, config.linear.max_iters, ex);
      dg.linear_iterations += cg.iterations;
      double dmax = 0.0, pmax = 0.0;
      for (std::size_t u = 0; u < n; ++u) dmax = std::max(dmax, std::abs(xnew[u] - x[u]));
      for (double v : psi) pmax = std::max(pmax, std::abs(v));
      const double rel = pmax > 0.0 ? dmax / pmax : dmax;
      ++it;
      ++dg.picard_iterations;
      dg.update_history.push_back(rel);
      dg.ratio_history.push_back(sys.max_ratio);
      if (!std::isfinite(rel)) throw DivergedError("non-finite Picard update", dg.update_history);
      best = std::min(best, rel);
      if (it > 10 && rel > 1e3 * best && rel > 1e-3)
        throw DivergedError("Picard update growing", dg.update_history);
      if (rel < config.picard.tol_rel && used_tol > config.linear.tol) {
        // small update from a loose inner solve proves nothing; tighten and repeat
        force_tight = true;
        continue;
      }
      if (rel < config.picard.tol_rel) {
        converged = true;
        for (std::size_t u = 0; u < n; ++u) psi[nodes[u]] = xnew[u];
      } else {
        // relax harder whenever the update stops shrinking
        if (prev_rel > 0.0) {
          const double rate = rel / prev_rel;
          if (rate > 0.9) {
            theta = std::max(0.5 * theta, 1.0 / 64.0);
          } else if (rate < 0.75) {
            theta = std::min(config.picard.damping, 1.25 * theta);
          }
        }
        for (std::size_t u = 0; u < n; ++u) psi[nodes[u]] = (1.0 - theta) * x[u] + theta * xnew[u];
      }
      prev_rel = rel;
      if (!opt.checkpoint_path.empty() && opt.checkpoint_every > 0 && !converged &&
          it % opt.checkpoint_every == 0) {
        write_checkpoint(opt.checkpoint_path, {opt.config_hash, stage, it, psi});
      }
    }
    dg.stage_iterations.push_back(it);
    if (!opt.checkpoint_path.empty()) {
      write_checkpoint(opt.checkpoint_path, {opt.config_hash, stage + 1, 0, psi});
    }
  }
  field.k = 0.0;
  field.psi = std::move(psi);
  const LinearSystem fin = disc.assemble(field.psi);
  dg.truncation_active = fin.truncated;
  dg.residual = disc.residual_norm(field.psi);
  field.Q = q_statistic(g, field.psi, trunc, gas);
  return field;
}

inline StreamField solve(const DomainGrid& grid, const TruncatedProfile& trunc, const GasModel& gas,
                         const SolverConfig& config, const SolveOptions& opt = SolveOptions()) {
  return solve(std::make_shared<const DomainGrid>(grid), trunc, gas, config, opt);
}

inline double residual_norm(const StreamField& field, double k, const TruncatedProfile& trunc,
                            const GasModel& gas, double eps0 = 0.05) {
  Discretization disc(field.grid, trunc, gas, eps0);
  disc.set_k(k);
  return disc.residual_norm(field.psi);
}

}  // namespace axiflow
