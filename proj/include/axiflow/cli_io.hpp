#pragma once

// Run configuration, output formats and task orchestration for the command line tool.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "axiflow/annulus_matcher.hpp"
#include "axiflow/continuation.hpp"
#include "axiflow/flow_verify.hpp"
#include "axiflow/stream_solver.hpp"

namespace axiflow {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RunConfig {
  double gamma = 2.0;
  std::string profile_kind = "uniform";
  double u_bar = 1.0;
  double K = 2.0;
  std::string profile_file;  // tabulated profiles, relative to the config file
  double rho_inf = 4.0;
  std::string obstacle_kind = "none";
  double height = 0.3;
  double X = 4.0, L = 4.0;
  int nx = 64, nr = 64;
  SolverConfig solver;
  InitialGuess init = InitialGuess::boundary_extension;
  VerifyOptions verify;
  int uniqueness_inits = 0;  // 0 skips the probe in the verify task
  double uniqueness_tol = 1e-6;
  int annulus_steps = 4096;
  std::vector<double> sweep_rho;
  bool sweep_warm = true;
  double bracket_hi = 0.0, bracket_lo = 0.0, bracket_width = 0.01;
  bool checkpoint = true;
  int checkpoint_every = 0;

  std::string base_dir;  // directory of the config file
  std::string echo;      // canonical key = value listing of every key
  std::uint64_t hash = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

inline int to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long d;
  try {
    d = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  if (pos != v.size() || d < -2147483647L || d > 2147483647L)
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_real(key, item));
  }
  return out;
}

inline std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v[i]);
  return s;
}

inline const char* init_name(InitialGuess g) {
  switch (g) {
    case InitialGuess::boundary_extension: return "boundary_extension";
    case InitialGuess::upstream_clipped: return "upstream_clipped";
    case InitialGuess::average: return "average";
  }
  return "?";
}

struct KeyDef {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, KeyDef>& key_table() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::map<std::string, KeyDef> t = {
      {"gas.gamma", {[](C& c, S v) { c.gamma = to_real("gas.gamma", v); }, [](const C& c) { return format_real(c.gamma); }}},
      {"profile.kind", {[](C& c, S v) { c.profile_kind = v; }, [](const C& c) { return c.profile_kind; }}},
      {"profile.u_bar", {[](C& c, S v) { c.u_bar = to_real("profile.u_bar", v); }, [](const C& c) { return format_real(c.u_bar); }}},
      {"profile.K", {[](C& c, S v) { c.K = to_real("profile.K", v); }, [](const C& c) { return format_real(c.K); }}},
      {"profile.file", {[](C& c, S v) { c.profile_file = v; }, [](const C& c) { return c.profile_file; }}},
      {"profile.rho_inf", {[](C& c, S v) { c.rho_inf = to_real("profile.rho_inf", v); }, [](const C& c) { return format_real(c.rho_inf); }}},
      {"obstacle.kind", {[](C& c, S v) { c.obstacle_kind = v; }, [](const C& c) { return c.obstacle_kind; }}},
      {"obstacle.height", {[](C& c, S v) { c.height = to_real("obstacle.height", v); }, [](const C& c) { return format_real(c.height); }}},
      {"domain.X", {[](C& c, S v) { c.X = to_real("domain.X", v); }, [](const C& c) { return format_real(c.X); }}},
      {"domain.L", {[](C& c, S v) { c.L = to_real("domain.L", v); }, [](const C& c) { return format_real(c.L); }}},
      {"domain.nx", {[](C& c, S v) { c.nx = to_int("domain.nx", v); }, [](const C& c) { return std::to_string(c.nx); }}},
      {"domain.nr", {[](C& c, S v) { c.nr = to_int("domain.nr", v); }, [](const C& c) { return std::to_string(c.nr); }}},
      {"solver.eps0", {[](C& c, S v) { c.solver.eps0 = to_real("solver.eps0", v); }, [](const C& c) { return format_real(c.solver.eps0); }}},
      {"solver.k_schedule", {[](C& c, S v) { c.solver.k_schedule = to_list("solver.k_schedule", v); }, [](const C& c) { return list_text(c.solver.k_schedule); }}},
      {"solver.picard.max_iters", {[](C& c, S v) { c.solver.picard.max_iters = to_int("solver.picard.max_iters", v); }, [](const C& c) { return std::to_string(c.solver.picard.max_iters); }}},
      {"solver.picard.damping", {[](C& c, S v) { c.solver.picard.damping = to_real("solver.picard.damping", v); }, [](const C& c) { return format_real(c.solver.picard.damping); }}},
      {"solver.picard.tol_rel", {[](C& c, S v) { c.solver.picard.tol_rel = to_real("solver.picard.tol_rel", v); }, [](const C& c) { return format_real(c.solver.picard.tol_rel); }}},
      {"solver.linear.tol", {[](C& c, S v) { c.solver.linear.tol = to_real("solver.linear.tol", v); }, [](const C& c) { return format_real(c.solver.linear.tol); }}},
      {"solver.linear.max_iters", {[](C& c, S v) { c.solver.linear.max_iters = to_int("solver.linear.max_iters", v); }, [](const C& c) { return std::to_string(c.solver.linear.max_iters); }}},
      {"solver.init", {[](C& c, S v) {
         if (v == "boundary_extension") c.init = InitialGuess::boundary_extension;
         else if (v == "upstream_clipped") c.init = InitialGuess::upstream_clipped;
         else if (v == "average") c.init = InitialGuess::average;
         else throw ConfigError("solver.init: unknown initial guess '" + v + "'");
       }, [](const C& c) { return std::string(init_name(c.init)); }}},
      {"verify.n_lines", {[](C& c, S v) { c.verify.n_lines = to_int("verify.n_lines", v); }, [](const C& c) { return std::to_string(c.verify.n_lines); }}},
      {"verify.x_probe", {[](C& c, S v) { c.verify.x_probe_fraction = to_real("verify.x_probe", v); }, [](const C& c) { return format_real(c.verify.x_probe_fraction); }}},
      {"verify.delta0", {[](C& c, S v) { c.verify.delta0_fraction = to_real("verify.delta0", v); }, [](const C& c) { return format_real(c.verify.delta0_fraction); }}},
      {"verify.uniqueness_inits", {[](C& c, S v) { c.uniqueness_inits = to_int("verify.uniqueness_inits", v); }, [](const C& c) { return std::to_string(c.uniqueness_inits); }}},
      {"verify.uniqueness_tol", {[](C& c, S v) { c.uniqueness_tol = to_real("verify.uniqueness_tol", v); }, [](const C& c) { return format_real(c.uniqueness_tol); }}},
      {"annulus.steps", {[](C& c, S v) { c.annulus_steps = to_int("annulus.steps", v); }, [](const C& c) { return std::to_string(c.annulus_steps); }}},
      {"sweep.rho_list", {[](C& c, S v) { c.sweep_rho = to_list("sweep.rho_list", v); }, [](const C& c) { return list_text(c.sweep_rho); }}},
      {"sweep.warm", {[](C& c, S v) { c.sweep_warm = to_bool("sweep.warm", v); }, [](const C& c) { return std::string(c.sweep_warm ? "true" : "false"); }}},
      {"bracket.rho_hi", {[](C& c, S v) { c.bracket_hi = to_real("bracket.rho_hi", v); }, [](const C& c) { return format_real(c.bracket_hi); }}},
      {"bracket.rho_lo", {[](C& c, S v) { c.bracket_lo = to_real("bracket.rho_lo", v); }, [](const C& c) { return format_real(c.bracket_lo); }}},
      {"bracket.width_tol", {[](C& c, S v) { c.bracket_width = to_real("bracket.width_tol", v); }, [](const C& c) { return format_real(c.bracket_width); }}},
      {"checkpoint.enabled", {[](C& c, S v) { c.checkpoint = to_bool("checkpoint.enabled", v); }, [](const C& c) { return std::string(c.checkpoint ? "true" : "false"); }}},
      {"checkpoint.every", {[](C& c, S v) { c.checkpoint_every = to_int("checkpoint.every", v); }, [](const C& c) { return std::to_string(c.checkpoint_every); }}},
  };
  return t;
}

}  // namespace detail

inline UpstreamProfile make_profile(const RunConfig& c, double rho_inf) {
  if (c.profile_kind == "uniform") return UpstreamProfile::uniform(c.u_bar, rho_inf);
  if (c.profile_kind == "exp_vortical") return UpstreamProfile::exp_vortical(c.u_bar, c.K, rho_inf);
  if (c.profile_kind == "tabulated") {
    std::filesystem::path p(c.profile_file);
    if (p.is_relative() && !c.base_dir.empty()) p = std::filesystem::path(c.base_dir) / p;
    return UpstreamProfile::from_file(p.string(), rho_inf);
  }
  throw ConfigError("profile.kind: unknown profile '" + c.profile_kind + "'");
}

inline Obstacle make_obstacle(const RunConfig& c) {
  if (c.obstacle_kind == "none") return Obstacle::none();
  if (c.obstacle_kind == "bump") return Obstacle::bump(c.height);
  throw ConfigError("obstacle.kind: unknown obstacle '" + c.obstacle_kind + "'");
}

/// Re-checks every module precondition so that no invalid configuration reaches a solver.
inline void validate_config(const RunConfig& c) {
  auto wrap = [](const std::string& key, auto&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      throw ConfigError(msg.rfind(key, 0) == 0 ? msg : key + ": " + msg);
    } catch (const DomainError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };
  wrap("gas.gamma", [&] { GasModel g(c.gamma); });
  if (!(c.rho_inf > 0.0)) throw ConfigError("profile.rho_inf: must be positive");
  if (!(c.u_bar > 0.0)) throw ConfigError("profile.u_bar: must be positive");
  if (c.profile_kind == "exp_vortical" && !(c.K >= 0.0)) throw ConfigError("profile.K: must be non-negative");
  if (c.profile_kind == "tabulated" && c.profile_file.empty())
    throw ConfigError("profile.file: required for tabulated profiles");
  const Obstacle ob = [&] {
    Obstacle o = Obstacle::none();
    wrap("obstacle.kind", [&] { o = make_obstacle(c); });
    return o;
  }();
  if (c.obstacle_kind == "bump" && !(c.height > 0.0)) throw ConfigError("obstacle.height: must be positive");
  wrap("domain", [&] { DomainGrid g(ob, c.X, c.L, c.nx, c.nr); });
  wrap("solver", [&] { c.solver.validate(); });
  const GasModel gas(c.gamma);
  double rho_star = 0.0;
  wrap("profile", [&] {
    const UpstreamProfile p = make_profile(c, c.rho_inf);
    const ValidationReport rep = validate(p, c.L, 2001);
    for (const char* n : {"positive_velocity", "axis_slope_zero", "decreasing", "structural_condition"}) {
      const HypothesisCheck* h = rep.find(n);
      if (h && !h->pass) throw ConfigError(std::string("hypothesis ") + n + " violated (margin " + format_real(h->margin) + ")");
    }
    const TruncatedProfile t(p, c.L, ob.J());
    if (!(t.max_u() < gas.sound_speed(c.rho_inf)))
      throw ConfigError("upstream flow is not uniformly subsonic at rho_inf=" + format_real(c.rho_inf));
    rho_star = std::pow(t.max_u(), 2.0 / (c.gamma - 1.0));
  });
  if (!c.sweep_rho.empty() && !(c.sweep_rho.front() > rho_star))
    throw ConfigError("sweep.rho_list: first density must exceed " + format_real(rho_star));
  if (c.verify.n_lines < 1) throw ConfigError("verify.n_lines: must be positive");
  if (!(c.verify.x_probe_fraction > 0.0 && c.verify.x_probe_fraction <= 1.0))
    throw ConfigError("verify.x_probe: must lie in (0, 1]");
  if (!(c.verify.delta0_fraction > 0.0 && c.verify.delta0_fraction < 1.0))
    throw ConfigError("verify.delta0: must lie in (0, 1)");
  if (c.uniqueness_inits != 0 && (c.uniqueness_inits < 2 || c.uniqueness_inits > 3))
    throw ConfigError("verify.uniqueness_inits: must be 0, 2 or 3");
  if (!(c.uniqueness_tol > 0.0)) throw ConfigError("verify.uniqueness_tol: must be positive");
  if (c.annulus_steps < 16) throw ConfigError("annulus.steps: must be at least 16");
  for (std::size_t i = 0; i < c.sweep_rho.size(); ++i) {
    if (!(c.sweep_rho[i] > 0.0)) throw ConfigError("sweep.rho_list: densities must be positive");
    if (i > 0 && !(c.sweep_rho[i] < c.sweep_rho[i - 1]))
      throw ConfigError("sweep.rho_list: densities must decrease strictly");
  }
  if (!(c.bracket_width > 0.0)) throw ConfigError("bracket.width_tol: must be positive");
  if (c.checkpoint_every < 0) throw ConfigError("checkpoint.every: must be non-negative");
}

inline std::string make_echo(const RunConfig& c) {
  std::string s;
  for (const auto& [k, d] : detail::key_table()) s += k + " = " + d.get(c) + "\n";
  return s;
}

/// Parses flat "section.key = value" text; '#' starts a comment. Unknown and duplicate keys are errors.
inline RunConfig parse_config_text(const std::string& text, const std::string& base_dir = "") {
  RunConfig c;
  c.base_dir = base_dir;
  const auto& table = detail::key_table();
  std::istringstream is(text);
  std::string line;
  std::map<std::string, int> seen;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key + ": unknown key (line " + std::to_string(lineno) + ")");
    if (seen.count(key)) throw ConfigError(key + ": given twice (lines " + std::to_string(seen[key]) + " and " + std::to_string(lineno) + ")");
    seen[key] = lineno;
    it->second.set(c, val);
  }
  validate_config(c);
  c.echo = make_echo(c);
  c.hash = fnv1a(c.echo);
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::filesystem::path(path).parent_path().string());
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- field files --------------------------------------------------------------

inline void write_field(const FlowField& flow, const StreamField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  const DomainGrid& g = *field.grid;
  os << "x,r,psi,rho,u,v,mach\n";
  char buf[512];
  for (int j = 0; j <= g.nr(); ++j) {
    for (int i = 0; i <= g.nx(); ++i) {
      const std::size_t p = g.index(i, j);
      if (g.cls(p) == NodeClass::masked) continue;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.x(i), g.r(j), field.psi[p],
                    flow.rho[p], flow.u[p], flow.v[p], flow.mach[p]);
      os << buf;
    }
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

struct FieldTable {
  std::vector<std::array<double, 7>> rows;
};

inline FieldTable read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "x,r,psi,rho,u,v,mach") throw std::runtime_error(path + ": bad header");
  FieldTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 7> row{};
    const char* s = line.c_str();
    for (int k = 0; k < 7; ++k) {
      char* end = nullptr;
      row[k] = std::strtod(s, &end);
      if (end == s) throw std::runtime_error(path + ": bad row '" + line + "'");
      s = *end == ',' ? end + 1 : end;
    }
    t.rows.push_back(row);
  }
  return t;
}

inline void write_summary(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
}

// ---- orchestration ------------------------------------------------------------

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitCertification = 2 };

struct RunOptions {
  std::string task;  // solve | verify | annulus | sweep | bracket
  std::string out_dir = "out";
  int threads = 1;
  std::string resume;  // checkpoint path
  std::ostream* log = &std::cerr;
};

namespace detail {

inline std::string status_of(const StreamField& f, double eps0) {
  if (f.Q < 1.0 - 2.0 * eps0 && !f.diag.truncation_active) return "certified";
  return "truncation-active";
}

inline std::vector<std::pair<std::string, std::string>> field_summary(const RunConfig& c, const StreamField& f,
                                                                      const EulerResidual& er) {
  return {{"status", status_of(f, c.solver.eps0)},
          {"m_L", format_real(f.m_L)},
          {"Q", format_real(f.Q)},
          {"picard_iterations", std::to_string(f.diag.picard_iterations)},
          {"linear_iterations", std::to_string(f.diag.linear_iterations)},
          {"residual", format_real(f.diag.residual)},
          {"euler_mass", format_real(er.mass)},
          {"euler_x_momentum", format_real(er.x_momentum)},
          {"euler_r_momentum", format_real(er.r_momentum)},
          {"config_hash", hash_hex(c.hash)}};
}

}  // namespace detail

/// Runs one task. Config errors must be caught by the caller before this point.
inline int run(const RunConfig& c, const RunOptions& o) {
  namespace fs = std::filesystem;
  const std::vector<std::string> tasks = {"solve", "verify", "annulus", "sweep", "bracket"};
  if (std::find(tasks.begin(), tasks.end(), o.task) == tasks.end()) throw ConfigError("unknown task '" + o.task + "'");
  if (o.threads < 1) throw ConfigError("--threads must be positive");
  if ((o.task == "bracket") && !(c.bracket_hi > c.bracket_lo && c.bracket_lo > 0.0))
    throw ConfigError("bracket.rho_hi, bracket.rho_lo: need rho_hi > rho_lo > 0");
  if (o.task == "sweep" && c.sweep_rho.empty()) throw ConfigError("sweep.rho_list: required for the sweep task");
  Checkpoint ck;
  if (!o.resume.empty()) {
    ck = read_checkpoint(o.resume);
    if (ck.config_hash != c.hash) throw ConfigError("--resume: checkpoint was written for a different configuration");
  }

  const GasModel gas(c.gamma);
  const Obstacle ob = make_obstacle(c);
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  {
    std::ofstream e(out / "config.echo");
    e << "# config_hash " << hash_hex(c.hash) << "\n" << c.echo;
  }
  std::ostream& log = *o.log;

  if (o.task == "sweep" || o.task == "bracket") {
    Problem pb(make_profile(c, c.rho_inf), gas, ob, c.X, c.L, c.nx, c.nr, c.solver);
    pb.threads = o.threads;
    if (o.task == "sweep") {
      const auto recs = sweep(pb, c.sweep_rho, c.sweep_warm);
      std::ofstream os(out / "sweep.csv");
      write_sweep_summary(os, recs);
      int cert = 0;
      for (const auto& r : recs) cert += r.status == SweepStatus::certified;
      if (cert >= 3) {
        std::ofstream st(out / "stack.csv", std::ios::binary);
        const LimitSequence seq = export_limit_sequence(pb, recs, &st);
        std::ofstream gs(out / "stack_gaps.csv");
        gs << "rho_from,rho_to,gap\n";
        std::size_t n = 0;
        for (double gp : seq.gaps) {
          gs << format_real(seq.rho[n]) << "," << format_real(seq.rho[n + 1]) << "," << format_real(gp) << "\n";
          ++n;
        }
      }
      log << "sweep: " << recs.size() << " records, " << cert << " certified\n";
      return kExitOk;
    }
    const RhoBracket b = bracket_rho_cr(pb, c.bracket_hi, c.bracket_lo, c.bracket_width);
    std::ofstream os(out / "bracket.txt");
    os << "lo=" << format_real(b.lo) << "\nhi=" << format_real(b.hi) << "\nrho_star=" << format_real(pb.rho_star())
       << "\nQ_hi=" << format_real(b.hi_record.Q) << "\nlo_status=" << to_string(b.lo_record.status)
       << "\nsolves=" << b.solves << "\nconfig_hash=" << hash_hex(c.hash) << "\n";
    std::ofstream rs(out / "report.txt");
    rs << b.hi_report.serialize();
    log << "bracket: [" << b.lo << ", " << b.hi << "]\n";
    return b.hi_report.all_pass() ? kExitOk : kExitCertification;
  }

  const UpstreamProfile prof = make_profile(c, c.rho_inf);
  const TruncatedProfile trunc(prof, c.L, ob.J());
  auto grid = std::make_shared<const DomainGrid>(ob, c.X, c.L, c.nx, c.nr);
  SolveOptions so;
  so.init = c.init;
  so.threads = o.threads;
  so.config_hash = c.hash;
  so.checkpoint_every = c.checkpoint_every;
  if (c.checkpoint) so.checkpoint_path = (out / "checkpoint.bin").string();
  if (!o.resume.empty()) {
    if (ck.psi.size() != grid->num_nodes()) throw ConfigError("--resume: checkpoint size does not match the grid");
    so.initial_psi = &ck.psi;
    so.start_stage = std::min(ck.stage, c.solver.k_schedule.size() - 1);
  }
  StreamField field;
  try {
    field = solve(grid, trunc, gas, c.solver, so);
  } catch (const DivergedError& e) {
    write_summary((out / "summary.txt").string(),
                  {{"status", "diverged"},
                   {"message", e.what()},
                   {"picard_iterations", std::to_string(e.history().size())},
                   {"config_hash", hash_hex(c.hash)}});
    log << "solve diverged: " << e.what() << "\n";
    return kExitCertification;
  }
  const FlowField flow = reconstruct(field, trunc, gas);
  write_field(flow, field, (out / "field.csv").string());
  write_summary((out / "summary.txt").string(), detail::field_summary(c, field, euler_residual(flow, gas)));
  const bool certified = detail::status_of(field, c.solver.eps0) == "certified";
  log << "solve: Q=" << field.Q << " picard=" << field.diag.picard_iterations << "\n";

  if (o.task == "solve") return certified ? kExitOk : kExitCertification;

  if (o.task == "verify") {
    VerifyOptions vo = c.verify;
    vo.eps0 = c.solver.eps0;
    StreamField plain;
    if (c.profile_kind != "uniform") {
      // upstream profile is reproduced only to discretization accuracy; compare against it too
      auto g0 = std::make_shared<const DomainGrid>(Obstacle::none(), c.X, c.L, c.nx, c.nr);
      const TruncatedProfile t0(prof, c.L, 0.0);
      SolveOptions s0;
      s0.threads = o.threads;
      plain = solve(g0, t0, gas, c.solver, s0);
      vo.discrete_upstream = &plain.psi;
    }
    VerificationReport rep = verify(field, trunc, gas, vo);
    if (c.uniqueness_inits > 0) {
      const UniquenessReport u = uniqueness_probe(grid, trunc, gas, c.solver, c.uniqueness_inits, c.uniqueness_tol, o.threads);
      rep.add("uniqueness_probe", u.status == ProbeStatus::agree, u.max_distance, c.uniqueness_tol);
    }
    std::ofstream os(out / "report.txt");
    os << rep.serialize();
    int failed = 0;
    for (const auto& ch : rep.checks)
      if (!ch.pass) {
        ++failed;
        log << "check failed: " << ch.name << " margin=" << ch.margin << " tol=" << ch.tol << "\n";
      }
    log << "verify: " << rep.checks.size() - failed << "/" << rep.checks.size() << " checks pass\n";
    return rep.all_pass() ? kExitOk : kExitCertification;
  }

  // annulus
  const AnnulusState st = match_annulus(trunc, gas, ob.J(), c.annulus_steps);
  {
    std::ofstream os(out / "annulus.csv");
    st.dump(os);
  }
  const AnnulusCheck chk = check_state(st, trunc, gas);
  const ComparisonReport cmp = compare_with_solution(st, field, trunc);
  VerificationReport rep;
  rep.add("chi_endpoint", chk.chi_end_error <= 1e-6, chk.chi_end_error, 1e-6);
  rep.add("xi_lower", chk.xi_min >= -1e-6, chk.xi_min, -1e-6);
  rep.add("xi_upper", chk.xi_max <= ob.J() * ob.J() + 1e-6, chk.xi_max, ob.J() * ob.J() + 1e-6);
  rep.add("xi_nonincreasing", chk.xi_increase <= 1e-10, chk.xi_increase, 1e-10);
  rep.add("bernoulli_matching", chk.bernoulli_residual <= 1e-10, chk.bernoulli_residual, 1e-10);
  rep.add("matched_state_subsonic", chk.subsonic(), chk.max_u1, chk.sound_speed1);
  rep.add("psi_above_hat", cmp.lower_ok(), cmp.min_above_hat, -cmp.tol);
  rep.add("psi_below_bar", cmp.upper_ok(), cmp.max_above_bar, cmp.tol);
  std::ofstream os(out / "annulus_report.txt");
  os << "rho1=" << format_real(st.rho1) << "\n" << rep.serialize();
  log << "annulus: rho1=" << st.rho1 << "\n";
  return rep.all_pass() && certified ? kExitOk : kExitCertification;
}

}  // namespace axiflow
