#pragma once

// Upstream axial-velocity profiles u_inf(r), the upstream stream function
// psi_bar(r) = rho_inf * int_0^r u_inf(s) s ds with its inverse kappa(psi),
// the transported velocity Theta(psi) = u_inf(kappa(psi)), the radial
// truncation at r = L and the extension F_L of Theta_L beyond [0, m_L].

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "axiflow/errors.hpp"
#include "axiflow/gas_model.hpp"
#include "axiflow/quadrature.hpp"

namespace axiflow {

enum class ProfileKind { uniform, exp_vortical, tabulated };

inline const char* to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::uniform: return "uniform";
    case ProfileKind::exp_vortical: return "exp_vortical";
    case ProfileKind::tabulated: return "tabulated";
  }
  return "?";
}

namespace detail {

/// Cumulative table of rho * int_0^r u(s) s ds on a fixed node set.
/// Node values come from adaptive Simpson per interval; values between nodes
/// add a Gauss-Legendre panel from the lower node.
template <class Velocity>
class StreamTable {
 public:
  StreamTable() = default;
  StreamTable(const Velocity* vel, double rho, std::vector<double> nodes)
      : vel_(vel), rho_(rho), r_(std::move(nodes)) {
    psi_.assign(r_.size(), 0.0);
    for (std::size_t i = 1; i < r_.size(); ++i) {
      const double a = r_[i - 1], b = r_[i];
      auto f = [&](double s) { return vel_->u(s) * s; };
      const double est = std::abs(quad::gauss5(f, a, b));
      psi_[i] = psi_[i - 1] + rho_ * quad::adaptive_simpson(f, a, b, 1e-15 * est + 1e-300, 20);
    }
  }

  /// Point at a relocated owner after a copy; the table values are reused.
  void rebind(const Velocity* vel) { vel_ = vel; }

  double r_max() const { return r_.back(); }
  double psi_max() const { return psi_.back(); }
  const std::vector<double>& nodes() const { return r_; }
  const std::vector<double>& values() const { return psi_; }

  double stream(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= r_.back()) {
      auto f = [&](double s) { return vel_->u(s) * s; };
      const double est = std::abs(quad::gauss5(f, r_.back(), r));
      return psi_.back() + rho_ * quad::adaptive_simpson(f, r_.back(), r, 1e-14 * est + 1e-300, 30);
    }
    const std::size_t i = lower(r_, r);
    return psi_[i] + rho_ * quad::gauss5([&](double s) { return vel_->u(s) * s; }, r_[i], r);
  }

  /// Inverse of stream(); psi >= 0.
  double inverse(double psi) const {
    if (psi <= 0.0) return 0.0;
    double lo, hi, r;
    if (psi >= psi_.back()) {
      lo = r_.back();
      hi = lo;
      // Grow the bracket; u is bounded below by a positive constant.
      while (stream(hi) < psi) hi = 2.0 * hi + 1.0;
      r = 0.5 * (lo + hi);
    } else {
      const std::size_t i = lower(psi_, psi);
      lo = r_[i];
      hi = r_[i + 1];
      const double t = (psi - psi_[i]) / (psi_[i + 1] - psi_[i]);
      if (i == 0) {
        // psi ~ c r^2 near the axis
        r = hi * std::sqrt(t);
      } else {
        r = lo + t * (hi - lo);
      }
    }
    for (int it = 0; it < 100; ++it) {
      const double f = stream(r) - psi;
      if (f > 0.0) {
        hi = r;
      } else {
        lo = r;
      }
      const double df = rho_ * vel_->u(r) * r;
      double next = df > 0.0 ? r - f / df : 0.5 * (lo + hi);
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - r) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(r, 1e-300)) {
        return next;
      }
      r = next;
    }
    return r;
  }

 private:
  static std::size_t lower(const std::vector<double>& v, double t) {
    auto it = std::upper_bound(v.begin(), v.end(), t);
    std::size_t i = static_cast<std::size_t>(it - v.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, v.size() - 2);
  }

  const Velocity* vel_ = nullptr;
  double rho_ = 0.0;
  std::vector<double> r_;
  std::vector<double> psi_;
};

}  // namespace detail

/// Admissible upstream axial velocity with density rho_inf.
class UpstreamProfile {
 public:
  static constexpr std::size_t kTableNodes = 2048;

  static UpstreamProfile uniform(double u_bar, double rho_inf) {
    UpstreamProfile p(ProfileKind::uniform, u_bar, 0.0, rho_inf);
    p.build_table(50.0);
    return p;
  }

  /// u(r) = u_bar + K (r e^{-r} + e^{-r}).
  static UpstreamProfile exp_vortical(double u_bar, double K, double rho_inf) {
    UpstreamProfile p(ProfileKind::exp_vortical, u_bar, K, rho_inf);
    p.build_table(50.0);
    return p;
  }

  /// Cubic spline through (r_i, u_i), r_0 = 0, with u'(0) = 0 imposed.
  static UpstreamProfile tabulated(std::vector<double> r, std::vector<double> u, double rho_inf) {
    if (r.size() < 3 || r.size() != u.size()) {
      throw ConfigError("tabulated profile needs at least 3 (r, u) rows");
    }
    if (r.front() != 0.0) throw ConfigError("tabulated profile must start at r = 0");
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (!(r[i] > r[i - 1])) throw ConfigError("tabulated profile radii must increase strictly");
    }
    UpstreamProfile p(ProfileKind::tabulated, u.back(), 0.0, rho_inf);
    p.spline_ = std::make_shared<quad::CubicSpline>(r, u, 0.0);
    p.build_table(std::max(50.0, 2.0 * r.back()));
    return p;
  }

  /// Two-column text file, '#' comments allowed.
  static UpstreamProfile from_file(const std::string& path, double rho_inf) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile table '" + path + "'");
    std::vector<double> r, u;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double a, b;
      if (ls >> a >> b) {
        r.push_back(a);
        u.push_back(b);
      }
    }
    return tabulated(std::move(r), std::move(u), rho_inf);
  }

  UpstreamProfile(const UpstreamProfile& o)
      : kind_(o.kind_), u_bar_(o.u_bar_), K_(o.K_), rho_inf_(o.rho_inf_), spline_(o.spline_),
        d3u0_(o.d3u0_), table_(o.table_) {
    table_.rebind(this);
  }
  UpstreamProfile& operator=(const UpstreamProfile& o) {
    if (this != &o) {
      kind_ = o.kind_;
      u_bar_ = o.u_bar_;
      K_ = o.K_;
      rho_inf_ = o.rho_inf_;
      spline_ = o.spline_;
      d3u0_ = o.d3u0_;
      table_ = o.table_;
      table_.rebind(this);
    }
    return *this;
  }

  /// Same velocity shape at a different upstream density.
  UpstreamProfile with_density(double rho_inf) const {
    UpstreamProfile p(kind_, u_bar_, K_, rho_inf);
    p.spline_ = spline_;
    p.build_table(table_.r_max());
    return p;
  }

  ProfileKind kind() const { return kind_; }
  double u_bar() const { return u_bar_; }
  double K() const { return K_; }
  double rho_inf() const { return rho_inf_; }
  const quad::CubicSpline* spline() const { return spline_.get(); }

  double u(double r) const {
    switch (kind_) {
      case ProfileKind::uniform: return u_bar_;
      case ProfileKind::exp_vortical: return u_bar_ + K_ * (r + 1.0) * std::exp(-r);
      case ProfileKind::tabulated: return spline_->eval(r, 0);
    }
    return 0.0;
  }
  double du(double r) const {
    switch (kind_) {
      case ProfileKind::uniform: return 0.0;
      case ProfileKind::exp_vortical: return -K_ * r * std::exp(-r);
      case ProfileKind::tabulated: return spline_->eval(r, 1);
    }
    return 0.0;
  }
  double d2u(double r) const {
    switch (kind_) {
      case ProfileKind::uniform: return 0.0;
      case ProfileKind::exp_vortical: return K_ * (r - 1.0) * std::exp(-r);
      case ProfileKind::tabulated: return spline_->eval(r, 2);
    }
    return 0.0;
  }
  /// u'(r) / r, continued to r = 0 by u''(0) + u'''(0) r / 2.
  double du_over_r(double r) const {
    if (kind_ == ProfileKind::uniform) return 0.0;
    if (kind_ == ProfileKind::exp_vortical) return -K_ * std::exp(-r);
    if (r >= 1e-4) return du(r) / r;
    return d2u(0.0) + 0.5 * d3u0_ * r;
  }

  /// Largest velocity over [0, r_max] on a sample grid (plus the far value).
  double sup_u(double r_max = 50.0) const {
    double m = u_bar_;
    const int n = 4096;
    for (int i = 0; i <= n; ++i) m = std::max(m, u(r_max * i / n));
    return m;
  }

  double stream(double r) const {
    if (r < 0.0) throw DomainError("upstream_stream: r must be non-negative");
    return table_.stream(r);
  }
  double kappa(double psi) const {
    if (psi < 0.0) throw DomainError("kappa: psi must be non-negative");
    return table_.inverse(psi);
  }

 private:
  UpstreamProfile(ProfileKind kind, double u_bar, double K, double rho_inf)
      : kind_(kind), u_bar_(u_bar), K_(K), rho_inf_(rho_inf) {
    if (!(rho_inf > 0.0)) throw ConfigError("rho_inf must be positive");
    if (!(u_bar > 0.0)) throw ConfigError("far-field velocity u_bar must be positive");
  }

  void build_table(double r_max) {
    if (kind_ == ProfileKind::tabulated) {
      const double h = 1e-3;
      d3u0_ = (d2u(h) - d2u(0.0)) / h;
    }
    std::vector<double> nodes(kTableNodes + 1);
    for (std::size_t i = 0; i <= kTableNodes; ++i) {
      nodes[i] = r_max * static_cast<double>(i) / static_cast<double>(kTableNodes);
    }
    table_ = detail::StreamTable<UpstreamProfile>(this, rho_inf_, std::move(nodes));
  }

  ProfileKind kind_;
  double u_bar_;
  double K_;
  double rho_inf_;
  std::shared_ptr<const quad::CubicSpline> spline_;
  double d3u0_ = 0.0;
  detail::StreamTable<UpstreamProfile> table_;
};

// Free-function surface.

inline double upstream_stream(const UpstreamProfile& p, double r) { return p.stream(r); }
inline double kappa(const UpstreamProfile& p, double psi) { return p.kappa(psi); }

struct ThetaPair {
  double theta;
  double theta_prime;
};

/// Theta = u(kappa), Theta' = u'(kappa) / (rho_inf kappa u(kappa)).
inline ThetaPair theta_and_prime(const UpstreamProfile& p, double psi) {
  const double k = p.kappa(psi);
  const double u = p.u(k);
  return {u, p.du_over_r(k) / (p.rho_inf() * u)};
}

inline double bernoulli(const UpstreamProfile& p, double psi, const GasModel& gas) {
  const double th = p.u(p.kappa(psi));
  return 0.5 * th * th + enthalpy(p.rho_inf(), gas);
}

struct HypothesisCheck {
  std::string name;
  bool pass;
  double margin;  // worst sampled margin; negative means violated
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
  const HypothesisCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

/// Sample-based check of u > 0, u'(0) = 0, u' <= 0, u -> u_bar and the
/// structural condition u'' r >= u'. Tolerance 1e-10 times the velocity scale.
inline ValidationReport validate(const UpstreamProfile& p, double r_max, int n_samples) {
  if (n_samples < 2) throw ConfigError("validate: need at least 2 samples");
  double scale = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    scale = std::max(scale, std::abs(p.u(r_max * i / (n_samples - 1))));
  }
  scale = std::max(scale, 1.0);
  const double tol = 1e-10 * scale;
  double min_u = std::numeric_limits<double>::infinity();
  double min_decr = std::numeric_limits<double>::infinity();
  double min_struct = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double r = r_max * i / (n_samples - 1);
    min_u = std::min(min_u, p.u(r));
    min_decr = std::min(min_decr, -p.du(r));
    min_struct = std::min(min_struct, p.d2u(r) * r - p.du(r));
  }
  const double axis = -std::abs(p.du(0.0));
  // The far-field check is meaningful only once the profile has relaxed.
  const double far = -std::abs(p.u(r_max) - p.u_bar());
  ValidationReport rep;
  rep.checks.push_back({"positive_velocity", min_u > 0.0, min_u});
  rep.checks.push_back({"axis_slope_zero", axis >= -tol, axis});
  rep.checks.push_back({"decreasing", min_decr >= -tol, min_decr});
  rep.checks.push_back({"far_field_limit", far >= -1e-6 * scale, far});
  rep.checks.push_back({"structural_condition", min_struct >= -tol, min_struct});
  return rep;
}

/// Profile truncated at radius L: u' is replaced by (L - r) u'(L - 1) on
/// (L - 1, L], so u'_L(L) = 0.
class TruncatedProfile {
 public:
  static constexpr std::size_t kTableNodes = 2048;

  TruncatedProfile(const UpstreamProfile& base, double L, double J = 0.0) : base_(base), L_(L) {
    if (!(L > std::max(1.0, J) + 1.0)) {
      throw ConfigError("truncation radius L must exceed max(1, J) + 1");
    }
    du_edge_ = base_.du(L_ - 1.0);
    u_edge_ = base_.u(L_ - 1.0);
    // Breakpoint at L - 1 where u''_L jumps.
    const std::size_t n_out = std::max<std::size_t>(16, kTableNodes / static_cast<std::size_t>(L_));
    const std::size_t n_in = kTableNodes - n_out;
    std::vector<double> nodes;
    nodes.reserve(kTableNodes + 1);
    for (std::size_t i = 0; i <= n_in; ++i) nodes.push_back((L_ - 1.0) * i / n_in);
    for (std::size_t i = 1; i <= n_out; ++i) nodes.push_back(L_ - 1.0 + static_cast<double>(i) / n_out);
    nodes.back() = L_;
    table_ = detail::StreamTable<TruncatedProfile>(this, base_.rho_inf(), std::move(nodes));
    m_L_ = table_.psi_max();
    theta0_ = u(0.0);
    theta_prime0_ = du_over_r(0.0) / (rho_inf() * theta0_);
    theta_mL_ = u(L_);
  }

  TruncatedProfile(const TruncatedProfile& o)
      : base_(o.base_), L_(o.L_), du_edge_(o.du_edge_), u_edge_(o.u_edge_), m_L_(o.m_L_),
        theta0_(o.theta0_), theta_prime0_(o.theta_prime0_), theta_mL_(o.theta_mL_),
        table_(o.table_) {
    table_.rebind(this);
  }
  TruncatedProfile& operator=(const TruncatedProfile&) = delete;

  const UpstreamProfile& base() const { return base_; }
  double L() const { return L_; }
  double rho_inf() const { return base_.rho_inf(); }
  double m_L() const { return m_L_; }
  const std::vector<double>& table_nodes() const { return table_.nodes(); }

  /// g_L(r), the truncated derivative.
  double g(double r) const {
    if (r <= L_ - 1.0) return base_.du(r);
    if (r <= L_) return (L_ - r) * du_edge_;
    return 0.0;
  }
  double du(double r) const { return g(r); }
  double u(double r) const {
    if (r <= L_ - 1.0) return base_.u(r);
    const double rr = std::min(r, L_);
    const double d = L_ - rr;
    return u_edge_ + 0.5 * du_edge_ * (1.0 - d * d);
  }
  double d2u(double r) const {
    if (r <= L_ - 1.0) return base_.d2u(r);
    if (r <= L_) return -du_edge_;
    return 0.0;
  }
  double du_over_r(double r) const {
    if (r <= L_ - 1.0) return base_.du_over_r(r);
    return g(r) / r;
  }

  double stream(double r) const {
    if (r < 0.0) throw DomainError("stream: r must be non-negative");
    return table_.stream(r);
  }
  double kappa(double psi) const {
    if (psi < 0.0) throw DomainError("kappa: psi must be non-negative");
    if (psi >= m_L_) return L_;
    return table_.inverse(psi);
  }

  /// m_L by a single adaptive quadrature, independent of the table.
  double mass_flux_direct() const {
    const double rho = rho_inf();
    auto f = [&](double s) { return u(s) * s; };
    return rho * (quad::adaptive_simpson(f, 0.0, L_ - 1.0, 1e-15) +
                  quad::adaptive_simpson(f, L_ - 1.0, L_, 1e-15));
  }

  double theta(double psi) const { return u(kappa(std::clamp(psi, 0.0, m_L_))); }
  double theta_prime(double psi) const {
    const double k = kappa(std::clamp(psi, 0.0, m_L_));
    return du_over_r(k) / (rho_inf() * u(k));
  }

  /// C^1 extension of theta_L to the whole real line.
  double F(double s) const {
    if (s > m_L_) return theta_mL_;
    if (s >= 0.0) return theta(s);
    if (s >= -1.0) return theta0_ + theta_prime0_ * (s + 0.5 * s * s);
    return theta0_ - 0.5 * theta_prime0_;
  }
  double F_prime(double s) const {
    if (s > m_L_) return 0.0;
    if (s >= 0.0) return theta_prime(s);
    if (s >= -1.0) return theta_prime0_ * (1.0 + s);
    return 0.0;
  }

  struct FPair {
    double F;
    double FFprime;
  };
  /// F and F F' with a single kappa inversion; F F' = u'(kappa)/(rho kappa).
  FPair F_and_product(double s) const {
    if (s > m_L_) return {theta_mL_, 0.0};
    if (s >= 0.0) {
      const double k = kappa(s);
      return {u(k), du_over_r(k) / rho_inf()};
    }
    const double f = F(s);
    return {f, f * F_prime(s)};
  }

  /// Bernoulli value of the extended profile, h(rho_inf) + F(psi)^2 / 2.
  double bernoulli(double psi, const GasModel& gas) const {
    const double f = F(psi);
    return enthalpy(rho_inf(), gas) + 0.5 * f * f;
  }

  /// Largest and smallest u_L over [0, L], sampled on the table nodes.
  double max_u() const {
    double m = 0.0;
    for (double r : table_.nodes()) m = std::max(m, u(r));
    return m;
  }
  double min_u() const {
    double m = std::numeric_limits<double>::infinity();
    for (double r : table_.nodes()) m = std::min(m, u(r));
    return m;
  }

 private:
  UpstreamProfile base_;
  double L_;
  double du_edge_ = 0.0;
  double u_edge_ = 0.0;
  double m_L_ = 0.0;
  double theta0_ = 0.0;
  double theta_prime0_ = 0.0;
  double theta_mL_ = 0.0;
  detail::StreamTable<TruncatedProfile> table_;
};

inline TruncatedProfile truncate(const UpstreamProfile& p, double L, double J = 0.0) {
  return TruncatedProfile(p, L, J);
}

inline double extend_F(const TruncatedProfile& t, double s) { return t.F(s); }

}  // namespace axiflow
