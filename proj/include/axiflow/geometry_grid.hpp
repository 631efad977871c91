#pragma once

// Obstacle graph r = f(x) and the masked tensor grid on [-X, X] x [0, L].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "axiflow/errors.hpp"
#include "axiflow/upstream_profile.hpp"

namespace axiflow {

enum class ObstacleKind { none, smooth_bump };

/// f(x) = h exp(4 - 1/(x(1-x))) on (0, 1), zero elsewhere; peak h at x = 1/2.
inline double bump_profile(double h, double x) {
  if (h < 0.0) throw ConfigError("bump height must be non-negative");
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return h * std::exp(4.0 - 1.0 / (x * (1.0 - x)));
}

class Obstacle {
 public:
  static Obstacle none() { return Obstacle(ObstacleKind::none, 0.0); }
  static Obstacle bump(double height) {
    if (height < 0.0) throw ConfigError("bump height must be non-negative");
    return Obstacle(ObstacleKind::smooth_bump, height);
  }

  ObstacleKind kind() const { return kind_; }
  double height() const { return h_; }
  /// J = sup f.
  double J() const { return h_; }

  double f(double x) const { return kind_ == ObstacleKind::none ? 0.0 : bump_profile(h_, x); }
  double df(double x) const {
    if (kind_ == ObstacleKind::none || x <= 0.0 || x >= 1.0) return 0.0;
    const double q = x * (1.0 - x);
    return f(x) * (1.0 - 2.0 * x) / (q * q);
  }

 private:
  Obstacle(ObstacleKind k, double h) : kind_(k), h_(h) {}
  ObstacleKind kind_;
  double h_;
};

enum class NodeClass : std::uint8_t {
  interior,
  obstacle_boundary,  // on Gamma with r > 0 (exact or snapped)
  axis,               // r = 0 where f = 0
  top,                // r = L
  inflow,             // x = -X
  outflow,            // x = +X
  masked,             // r < f(x), inside the obstacle
};

inline char class_char(NodeClass c) {
  switch (c) {
    case NodeClass::interior: return '.';
    case NodeClass::obstacle_boundary: return 'o';
    case NodeClass::axis: return 'a';
    case NodeClass::top: return 't';
    case NodeClass::inflow: return 'i';
    case NodeClass::outflow: return 'e';
    case NodeClass::masked: return '#';
  }
  return '?';
}

enum Dir : int { kLeft = 0, kRight = 1, kDown = 2, kUp = 3 };

class DomainGrid {
 public:
  /// Nodes closer than this fraction of dr above the obstacle are put on Gamma.
  static constexpr double kSnapFraction = 1e-2;
  /// Floor on cut distances as a fraction of the spacing.
  static constexpr double kMinCutFraction = 1e-3;

  DomainGrid(const Obstacle& obstacle, double X, double L, int nx, int nr)
      : obstacle_(obstacle), X_(X), L_(L), nx_(nx), nr_(nr) {
    if (!(X >= 2.0)) throw ConfigError("domain half-length X must be at least 2");
    if (!(L > obstacle.J())) throw ConfigError("obstacle taller than domain (L <= J)");
    if (nx < 16 || nr < 16) throw ConfigError("nx and nr must be at least 16");
    dx_ = 2.0 * X_ / nx_;
    dr_ = L_ / nr_;
    const std::size_t n = num_nodes();
    cls_.assign(n, NodeClass::interior);
    fx_.resize(nx_ + 1);
    for (int i = 0; i <= nx_; ++i) fx_[i] = obstacle_.f(x(i));
    for (int j = 0; j <= nr_; ++j) {
      for (int i = 0; i <= nx_; ++i) {
        const double r = this->r(j);
        const double f = fx_[i];
        NodeClass c;
        if (r < f) {
          c = NodeClass::masked;
        } else if (j == 0) {
          c = NodeClass::axis;
        } else if (j == nr_) {
          c = NodeClass::top;
        } else if (i == 0) {
          c = NodeClass::inflow;
        } else if (i == nx_) {
          c = NodeClass::outflow;
        } else if (f > 0.0 && r - f <= kSnapFraction * dr_) {
          c = NodeClass::obstacle_boundary;
        } else {
          c = NodeClass::interior;
        }
        cls_[index(i, j)] = c;
      }
    }
    cut_.fill(std::vector<double>(n, 0.0));
    for (int j = 0; j <= nr_; ++j) {
      for (int i = 0; i <= nx_; ++i) {
        const std::size_t p = index(i, j);
        if (cls_[p] == NodeClass::masked) continue;
        if (i > 0 && is_masked(i - 1, j)) cut_[kLeft][p] = crossing(i, i - 1, j);
        if (i < nx_ && is_masked(i + 1, j)) cut_[kRight][p] = crossing(i, i + 1, j);
        if (j > 0 && is_masked(i, j - 1)) {
          cut_[kDown][p] = std::max(r(j) - fx_[i], kMinCutFraction * dr_);
        }
      }
    }
  }

  const Obstacle& obstacle() const { return obstacle_; }
  double X() const { return X_; }
  double L() const { return L_; }
  double J() const { return obstacle_.J(); }
  int nx() const { return nx_; }
  int nr() const { return nr_; }
  double dx() const { return dx_; }
  double dr() const { return dr_; }
  double x(int i) const { return -X_ + dx_ * i; }
  double r(int j) const { return dr_ * j; }
  double f_at(int i) const { return fx_[i]; }

  std::size_t num_nodes() const {
    return static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(nr_ + 1);
  }
  /// Row-major, x fastest.
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
           static_cast<std::size_t>(i);
  }
  NodeClass cls(int i, int j) const { return cls_[index(i, j)]; }
  NodeClass cls(std::size_t p) const { return cls_[p]; }
  bool is_masked(int i, int j) const { return cls(i, j) == NodeClass::masked; }
  bool is_unknown(int i, int j) const { return cls(i, j) == NodeClass::interior; }

  /// Distance to Gamma in direction d when that neighbour is masked, else 0.
  double cut(int i, int j, Dir d) const { return cut_[d][index(i, j)]; }

  std::size_t count(NodeClass c) const {
    return static_cast<std::size_t>(std::count(cls_.begin(), cls_.end(), c));
  }

  /// Header line plus one raster row per r level, top row first.
  void dump(std::ostream& os) const {
    os << "X " << X_ << " L " << L_ << " nx " << nx_ << " nr " << nr_ << " J " << J() << "\n";
    for (int j = nr_; j >= 0; --j) {
      for (int i = 0; i <= nx_; ++i) os << class_char(cls(i, j));
      os << "\n";
    }
  }

 private:
  // Distance from node (i, j) to the point on the line r = r_j where f = r_j,
  // between column i (outside) and column i2 (inside).
  double crossing(int i, int i2, int j) const {
    const double target = r(j);
    double a = x(i), b = x(i2);
    for (int it = 0; it < 100; ++it) {
      const double m = 0.5 * (a + b);
      if (obstacle_.f(m) > target) {
        b = m;
      } else {
        a = m;
      }
    }
    return std::max(std::abs(0.5 * (a + b) - x(i)), kMinCutFraction * dx_);
  }

  Obstacle obstacle_;
  double X_, L_;
  int nx_, nr_;
  double dx_ = 0.0, dr_ = 0.0;
  std::vector<double> fx_;
  std::vector<NodeClass> cls_;
  std::array<std::vector<double>, 4> cut_;
};

inline DomainGrid build_grid(const Obstacle& obstacle, double X, double L, int nx, int nr) {
  return DomainGrid(obstacle, X, L, nx, nr);
}

/// psi on the x = +-X columns: m_L W(r) / W(L), W(r) = int_0^r (s + k) u_L(s) ds.
/// At k = 0 this is psi_bar_L(r).
inline std::vector<double> side_boundary_values(const TruncatedProfile& trunc,
                                                const DomainGrid& grid, double k) {
  if (k < 0.0) throw ConfigError("axis regularization k must be non-negative");
  std::vector<double> out(grid.nr() + 1, 0.0);
  const double rho = trunc.rho_inf();
  if (k == 0.0) {
    for (int j = 0; j <= grid.nr(); ++j) out[j] = trunc.stream(std::min(grid.r(j), trunc.L()));
    out[grid.nr()] = trunc.m_L();
    return out;
  }
  // U(r) = int_0^r u_L, accumulated between consecutive radii with a split at L - 1.
  auto integ = [&](double a, double b) {
    auto f = [&](double s) { return trunc.u(s); };
    const double kink = trunc.L() - 1.0;
    if (a < kink && b > kink) {
      return quad::adaptive_simpson(f, a, kink, 1e-15) + quad::adaptive_simpson(f, kink, b, 1e-15);
    }
    return quad::adaptive_simpson(f, a, b, 1e-15);
  };
  std::vector<double> U(grid.nr() + 1, 0.0);
  for (int j = 1; j <= grid.nr(); ++j) U[j] = U[j - 1] + integ(grid.r(j - 1), grid.r(j));
  const double Lr = grid.r(grid.nr());
  const double WL = trunc.stream(Lr) / rho + k * U[grid.nr()];
  for (int j = 0; j <= grid.nr(); ++j) {
    const double W = trunc.stream(grid.r(j)) / rho + k * U[j];
    out[j] = trunc.m_L() * W / WL;
  }
  out[grid.nr()] = trunc.m_L();
  return out;
}

}  // namespace axiflow
