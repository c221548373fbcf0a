#pragma once

// CSV and JSON serialization of trajectories, reports and solutions.  Floats
// use the shortest representation that reads back to the same double, so
// identical runs give byte-identical files.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "khessian/common.hpp"
#include "khessian/dirichlet.hpp"
#include "khessian/estimates.hpp"
#include "khessian/hessian.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/ode_ivp.hpp"

namespace khessian::io {

using nlohmann::json;

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string &s) {
  if (s == "inf") return inf;
  if (s == "-inf") return -inf;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char *b = s.data();
  const char *e = b + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) throw domain_error("not a number: '" + s + "'");
  return v;
}

/// JSON has no infinities; they travel as the strings "inf" / "-inf".
inline json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline double number_from(const json &j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw domain_error("expected a number");
}

/// Write via a sibling temporary and rename, so readers never see partial files.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw io_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw io_error("cannot move output into place at " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---- CSV ----------------------------------------------------------------

inline std::string csv_table(const std::vector<std::string> &header, const std::vector<std::vector<std::string>> &rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto &row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += '\n';
  }
  return out;
}

inline std::string trajectory_csv(const RadialTrajectory &t) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    rows.push_back({format_double(t.r[i]), format_double(t.xi[i]), format_double(t.xip[i])});
  return csv_table({"r", "xi", "xip"}, rows);
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string &text, const std::vector<std::string> &header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw domain_error("empty CSV");
  std::vector<std::string> got;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) got.push_back(cell);
  }
  if (got != header) throw domain_error("unexpected CSV header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (row.size() != header.size()) throw domain_error("CSV row has " + std::to_string(row.size()) + " fields");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RadialTrajectory trajectory_from_csv(const std::string &text, const ProblemSpec &spec, const Nonlinearity &nl) {
  RadialTrajectory t(spec, nl);
  for (const auto &row : parse_csv(text, {"r", "xi", "xip"})) {
    t.r.push_back(parse_double(row[0]));
    t.xi.push_back(parse_double(row[1]));
    t.xip.push_back(parse_double(row[2]));
  }
  if (t.size() < 2) throw domain_error("trajectory CSV needs at least two rows");
  t.finalize();
  return t;
}

inline std::string verify_csv(const std::vector<EstimateReport> &reports) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &r : reports)
    rows.push_back({r.name, format_double(r.lhs), format_double(r.rhs), format_double(r.slack), r.pass ? "true" : "false"});
  return csv_table({"inequality", "lhs", "rhs", "slack", "pass"}, rows);
}

inline std::string profile_csv(const std::vector<double> &r, const std::vector<double> &u) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < r.size(); ++i) rows.push_back({format_double(r[i]), format_double(u[i])});
  return csv_table({"r", "u"}, rows);
}

// ---- JSON ---------------------------------------------------------------

inline json to_json(const ProblemSpec &s) {
  json j{{"N", s.N}, {"k", s.k}};
  if (s.R) j["R"] = *s.R;
  if (s.c) j["c"] = *s.c;
  return j;
}

inline json to_json(const KOReport &r) {
  json j{{"beta", r.beta},
         {"verdict", r.converges() ? "Converges" : "Diverges"},
         {"tail_cutoff", number(r.tail_cutoff)},
         {"tail_exponent", number(r.tail_exponent)},
         {"singular_substitution_used", r.singular_substitution_used}};
  if (r.converges()) {
    j["value"] = r.value;
    j["error_bound"] = r.error_bound;
    j["intervals"] = r.intervals;
  } else {
    j["reason"] = r.reason == DivergenceReason::tail ? "tail" : "none";
  }
  return j;
}

inline json to_json(const BlowupEstimate &e) {
  json j{{"beta", e.beta},
         {"verdict", e.blows_up() ? "Blowup" : "NoBlowupUpTo"},
         {"rho_low", number(e.rho_low)},
         {"rho_high", number(e.rho_high)},
         {"certificate", e.certificate},
         {"refinements", e.refinements},
         {"threshold_radius", e.threshold_radius}};
  if (!e.blows_up()) j["r_max"] = e.r_max;
  return j;
}

inline json to_json(const EstimateReport &r) {
  json j{{"name", r.name},         {"lhs", number(r.lhs)},   {"rhs", number(r.rhs)},
         {"slack", number(r.slack)}, {"pass", r.pass},         {"quadrature_error", number(r.quadrature_error)}};
  if (r.radius) j["radius"] = *r.radius;
  if (r.literal_lhs) j["literal_lhs"] = number(*r.literal_lhs);
  return j;
}

inline json to_json(const RadialTrajectory &t) {
  json j{{"spec", to_json(t.spec())},
         {"nonlinearity", t.nl().to_json()},
         {"termination", to_string(t.termination)},
         {"step_controls",
          {{"abs_tol", t.controls.abs_tol},
           {"rel_tol", t.controls.rel_tol},
           {"max_steps", t.controls.max_steps},
           {"blowup_threshold", t.controls.blowup_threshold}}},
         {"accepted_steps", t.accepted_steps},
         {"rejected_steps", t.rejected_steps},
         {"monotonicity_violations", t.monotonicity_violations}};
  j["r"] = t.r;
  j["xi"] = t.xi;
  j["xip"] = t.xip;
  return j;
}

inline RadialTrajectory trajectory_from_json(const json &j) {
  const auto &s = j.at("spec");
  ProblemSpec spec(s.at("N").get<int>(), s.at("k").get<int>());
  auto nl = Nonlinearity::from_json(j.at("nonlinearity"), spec.k);
  RadialTrajectory t(spec, nl);
  t.r = j.at("r").get<std::vector<double>>();
  t.xi = j.at("xi").get<std::vector<double>>();
  t.xip = j.at("xip").get<std::vector<double>>();
  const auto term = j.value("termination", std::string("ReachedRmax"));
  t.termination = term == "BlowupDetected"   ? Termination::blowup_detected
                  : term == "StepUnderflow" ? Termination::step_underflow
                                            : Termination::reached_rmax;
  t.finalize();
  return t;
}

inline json to_json(const DirichletSolution &s) {
  json j{{"spec", to_json(s.spec)},
         {"method", to_string(s.method)},
         {"beta_star", s.beta_star},
         {"residual", s.residual},
         {"boundary_error", s.boundary_error}};
  if (s.method == DirichletMethod::monotone_iteration) {
    j["iterations"] = s.iterations;
    j["final_update_norm"] = s.final_update_norm;
    j["grid_size"] = s.r.size() - 1;
  }
  return j;
}

inline json to_json(const IterationTrace &t) {
  return json{{"iterations", t.update_norms.size()},
              {"monotonicity_violations", t.monotonicity_violations},
              {"worst_decrease", t.worst_decrease},
              {"update_norms", t.update_norms}};
}

} // namespace khessian::io
