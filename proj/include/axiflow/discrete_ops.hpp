#pragma once

// Finite-difference helpers on the masked grid shared by the solver and the
// verification suite.

#include <cmath>
#include <vector>

#include "axiflow/geometry_grid.hpp"

namespace axiflow {

/// Derivative at t = 0 of the quadratic through (t[k], v[k]), k = 0..2, or of
/// the line through the first two points when n == 2.
inline double lagrange_d1(const double* t, const double* v, int n) {
  if (n == 2) return (v[1] - v[0]) / (t[1] - t[0]);
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    double num = 0.0, den = 1.0;
    for (int m = 0; m < 3; ++m) {
      if (m == k) continue;
      den *= t[k] - t[m];
      double prod = 1.0;
      for (int q = 0; q < 3; ++q)
        if (q != k && q != m) prod *= -t[q];
      num += prod;
    }
    d += v[k] * num / den;
  }
  return d;
}

struct Gradient {
  double gx = 0.0;
  double gr = 0.0;
};

namespace detail {

// One-dimensional derivative along a grid line through node (i, j).
// Masked neighbours are replaced by the crossing point on Gamma, where psi = 0.
inline double line_derivative(const DomainGrid& g, const std::vector<double>& psi, int i, int j,
                              bool along_x) {
  const double h = along_x ? g.dx() : g.dr();
  const int n_max = along_x ? g.nx() : g.nr();
  const int pos = along_x ? i : j;
  auto node = [&](int s) { return along_x ? g.index(s, j) : g.index(i, s); };
  auto masked = [&](int s) { return g.cls(node(s)) == NodeClass::masked; };
  const Dir dm = along_x ? kLeft : kDown;
  const Dir dp = along_x ? kRight : kUp;

  struct Side {
    bool ok = false;
    double t1 = 0.0, v1 = 0.0;
    bool full = false;  // first point is a grid node
  };
  auto side = [&](int sgn, Dir d) {
    Side s;
    const int q = pos + sgn;
    if (q < 0 || q > n_max) return s;
    s.ok = true;
    if (masked(q)) {
      s.t1 = sgn * g.cut(i, j, d);
      s.v1 = 0.0;
    } else {
      s.t1 = sgn * h;
      s.v1 = psi[node(q)];
      s.full = true;
    }
    return s;
  };
  const double v0 = psi[g.index(i, j)];
  const Side a = side(-1, dm), b = side(+1, dp);
  if (a.ok && b.ok) {
    const double t[3] = {0.0, a.t1, b.t1};
    const double v[3] = {v0, a.v1, b.v1};
    return lagrange_d1(t, v, 3);
  }
  const Side& s = a.ok ? a : b;
  if (!s.ok) return 0.0;
  const int sgn = a.ok ? -1 : 1;
  const int q2 = pos + 2 * sgn;
  if (s.full && q2 >= 0 && q2 <= n_max && !masked(q2)) {
    const double t[3] = {0.0, s.t1, 2.0 * sgn * h};
    const double v[3] = {v0, s.v1, psi[node(q2)]};
    return lagrange_d1(t, v, 3);
  }
  const double t[2] = {0.0, s.t1};
  const double v[2] = {v0, s.v1};
  return lagrange_d1(t, v, 2);
}

}  // namespace detail

/// Cut-aware gradient of psi at an unmasked node; zero at masked nodes.
inline Gradient node_gradient(const DomainGrid& g, const std::vector<double>& psi, int i, int j) {
  if (g.is_masked(i, j)) return {};
  return {detail::line_derivative(g, psi, i, j, true), detail::line_derivative(g, psi, i, j, false)};
}

/// Coefficient a of the fit psi = a r^2 + b r^4 through the first three nodes above the axis.
/// The axial limit of psi_r / r is 2a.
inline double axis_quadratic_coefficient(const DomainGrid& g, const std::vector<double>& psi, int i) {
  const double h = g.dr();
  const double p0 = psi[g.index(i, 0)];
  const double p1 = psi[g.index(i, 1)] - p0;
  const double p2 = psi[g.index(i, 2)] - p0;
  return (16.0 * p1 - p2) / (12.0 * h * h);
}

/// |grad psi|^2 / r^2 at a node, using the axis limit (2a)^2 at r = 0.
inline double node_momentum_sq(const DomainGrid& g, const std::vector<double>& psi, int i, int j) {
  if (j == 0) {
    const double a2 = 2.0 * axis_quadratic_coefficient(g, psi, i);
    return a2 * a2;
  }
  const Gradient gr = node_gradient(g, psi, i, j);
  const double r = g.r(j);
  return (gr.gx * gr.gx + gr.gr * gr.gr) / (r * r);
}

}  // namespace axiflow
