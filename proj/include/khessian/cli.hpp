#pragma once

// Command dispatch for the khessian command-line tool.  A RunConfig is
// built from flags and/or a JSON file, validated against the preconditions
// of the chosen command, run, and reported as JSON on the output stream;
// array data goes to CSV files in the output directory.
//
// Exit codes: 0 success, 1 domain or schema error, 2 numerical failure,
// 3 file I/O failure.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "khessian/dirichlet.hpp"
#include "khessian/estimates.hpp"
#include "khessian/hessian.hpp"
#include "khessian/io.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/ode_ivp.hpp"

namespace khessian::cli {

using nlohmann::json;

inline constexpr const char *kOutDirEnv = "KHESSIAN_OUT_DIR";

enum ExitCode { ok = 0, domain_failure = 1, numerical_failure = 2, io_failure = 3 };

/// A config field is missing, mistyped or out of range.
class schema_error : public domain_error {
public:
  schema_error(const std::string &field, const std::string &what)
      : domain_error("field '" + field + "': " + what), field_(field) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

struct RunConfig {
  std::string command;
  std::optional<json> nl;
  std::optional<int> k;
  std::optional<int> N;
  std::optional<double> R;
  std::optional<double> c;
  std::optional<double> beta;
  double rmax = 1e3;
  double tol = 1e-8;          ///< KO quadrature tolerance
  double bracket_tol = 1e-4;  ///< blow-up bracket width
  double abs_tol = 1e-10;     ///< integrator tolerances
  double rel_tol = 1e-10;
  std::vector<double> betas;  ///< scan
  std::vector<double> n_values;
  std::vector<double> eps;
  std::vector<double> sweep_p;
  std::vector<int> sweep_k;
  std::vector<int> sweep_N;
  std::string method = "shooting";
  std::size_t grid = 1024;
  bool unshifted = false;
  std::optional<std::string> trajectory;  ///< input for verify (CSV or JSON)
  std::string out_dir;
  unsigned threads = 0;
};

inline const std::vector<std::string> &commands() {
  static const std::vector<std::string> c = {"ko",    "scan",  "ivp",   "blowup",       "dirichlet",
                                             "large", "verify", "sweep", "seed-fixtures"};
  return c;
}

inline std::string default_out_dir() {
  if (const char *e = std::getenv(kOutDirEnv); e && *e) return e;
  return "khessian_out";
}

namespace detail {

template <class T>
T get_field(const json &j, const std::string &key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw schema_error(key, "has the wrong type");
  }
}

inline double get_number(const json &j, const std::string &key) {
  try {
    return io::number_from(j.at(key));
  } catch (const std::exception &) {
    throw schema_error(key, "must be a number");
  }
}

template <class T>
std::vector<T> get_list(const json &j, const std::string &key) {
  const auto &v = j.at(key);
  if (!v.is_array()) throw schema_error(key, "must be an array");
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception &) {
    throw schema_error(key, "has elements of the wrong type");
  }
}

} // namespace detail

/// Overlay the keys of a JSON config object onto `cfg`; unknown keys are rejected.
inline void apply_json(RunConfig &cfg, const json &j) {
  if (!j.is_object()) throw schema_error("<root>", "config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string &key = it.key();
    if (key == "command") cfg.command = detail::get_field<std::string>(j, key);
    else if (key == "nl") {
      if (!it->is_object()) throw schema_error(key, "must be a nonlinearity object");
      cfg.nl = *it;
    } else if (key == "k") cfg.k = detail::get_field<int>(j, key);
    else if (key == "N") cfg.N = detail::get_field<int>(j, key);
    else if (key == "R") cfg.R = detail::get_number(j, key);
    else if (key == "c") cfg.c = detail::get_number(j, key);
    else if (key == "beta") cfg.beta = detail::get_number(j, key);
    else if (key == "rmax") cfg.rmax = detail::get_number(j, key);
    else if (key == "tol") cfg.tol = detail::get_number(j, key);
    else if (key == "bracket_tol") cfg.bracket_tol = detail::get_number(j, key);
    else if (key == "abs_tol") cfg.abs_tol = detail::get_number(j, key);
    else if (key == "rel_tol") cfg.rel_tol = detail::get_number(j, key);
    else if (key == "betas") cfg.betas = detail::get_list<double>(j, key);
    else if (key == "n") cfg.n_values = detail::get_list<double>(j, key);
    else if (key == "eps") cfg.eps = detail::get_list<double>(j, key);
    else if (key == "sweep_p") cfg.sweep_p = detail::get_list<double>(j, key);
    else if (key == "sweep_k") cfg.sweep_k = detail::get_list<int>(j, key);
    else if (key == "sweep_N") cfg.sweep_N = detail::get_list<int>(j, key);
    else if (key == "method") cfg.method = detail::get_field<std::string>(j, key);
    else if (key == "grid") cfg.grid = detail::get_field<std::size_t>(j, key);
    else if (key == "unshifted") cfg.unshifted = detail::get_field<bool>(j, key);
    else if (key == "trajectory") cfg.trajectory = detail::get_field<std::string>(j, key);
    else if (key == "out") cfg.out_dir = detail::get_field<std::string>(j, key);
    else if (key == "threads") cfg.threads = detail::get_field<unsigned>(j, key);
    else throw schema_error(key, "unknown field");
  }
}

namespace detail {

inline void need(bool cond, const std::string &field, const std::string &what) {
  if (!cond) throw schema_error(field, what);
}

inline void positive(const std::optional<double> &v, const std::string &field) {
  need(v.has_value(), field, "is required");
  need(*v > 0.0 && std::isfinite(*v), field, "must be a positive finite number");
}

inline void increasing_positive(const std::vector<double> &v, const std::string &field) {
  need(!v.empty(), field, "must be a non-empty list");
  for (std::size_t i = 0; i < v.size(); ++i) {
    need(v[i] > 0.0 && std::isfinite(v[i]), field, "entries must be positive");
    if (i > 0) need(v[i] > v[i - 1], field, "entries must increase strictly");
  }
}

inline void order(const RunConfig &c, bool needs_N) {
  need(c.k.has_value(), "k", "is required");
  need(*c.k >= 1, "k", "must be >= 1");
  if (needs_N) {
    need(c.N.has_value(), "N", "is required");
    need(*c.N >= 2, "N", "must be >= 2");
    need(*c.k <= *c.N, "k", "must not exceed N");
  }
}

} // namespace detail

/// Check every field the command will use before any computation starts.
inline void validate(const RunConfig &c) {
  using namespace detail;
  need(std::find(commands().begin(), commands().end(), c.command) != commands().end(), "command",
       "must be one of ko, scan, ivp, blowup, dirichlet, large, verify, sweep, seed-fixtures");
  need(c.tol > 0.0, "tol", "must be positive");
  need(c.bracket_tol > 0.0, "bracket_tol", "must be positive");
  need(c.abs_tol > 0.0, "abs_tol", "must be positive");
  need(c.rel_tol > 0.0, "rel_tol", "must be positive");
  need(c.rmax > 0.0 && std::isfinite(c.rmax), "rmax", "must be a positive finite number");
  const auto &cmd = c.command;
  if (cmd == "sweep") {
    need(!c.sweep_p.empty(), "sweep_p", "must be a non-empty list");
    for (double p : c.sweep_p) need(p >= 1.0, "sweep_p", "exponents must be >= 1");
    need(!c.sweep_k.empty(), "sweep_k", "must be a non-empty list");
    for (int k : c.sweep_k) need(k >= 1, "sweep_k", "orders must be >= 1");
    need(!c.sweep_N.empty(), "sweep_N", "must be a non-empty list");
    for (int N : c.sweep_N) need(N >= 2, "sweep_N", "dimensions must be >= 2");
    increasing_positive(c.betas, "betas");
    return;
  }
  if (cmd == "seed-fixtures") return;
  if (!(cmd == "verify" && c.trajectory && c.trajectory->ends_with(".json"))) need(c.nl.has_value(), "nl", "is required");
  if (cmd == "ko") {
    order(c, false);
    positive(c.beta, "beta");
  } else if (cmd == "scan") {
    order(c, false);
    increasing_positive(c.betas, "betas");
  } else if (cmd == "ivp" || cmd == "blowup") {
    order(c, true);
    positive(c.beta, "beta");
  } else if (cmd == "dirichlet") {
    order(c, true);
    positive(c.R, "R");
    positive(c.c, "c");
    need(c.method == "shooting" || c.method == "monotone", "method", "must be 'shooting' or 'monotone'");
    need(c.grid >= 64, "grid", "must be at least 64");
  } else if (cmd == "large") {
    order(c, true);
    positive(c.R, "R");
    increasing_positive(c.n_values, "n");
  } else if (cmd == "verify") {
    if (!c.trajectory || !c.trajectory->ends_with(".json")) order(c, true);
    if (!c.trajectory) positive(c.beta, "beta");
    if (!c.eps.empty()) {
      need(c.eps.size() >= 1, "eps", "must be non-empty");
      for (std::size_t i = 0; i < c.eps.size(); ++i) {
        need(c.eps[i] > 0.0, "eps", "entries must be positive");
        if (i > 0) need(c.eps[i] < c.eps[i - 1], "eps", "entries must decrease strictly");
      }
    }
  }
}

namespace detail {

inline Nonlinearity make_nl(const RunConfig &c) {
  try {
    return Nonlinearity::from_json(*c.nl, c.k.value_or(0));
  } catch (const json::exception &e) {
    throw schema_error("nl", e.what());
  } catch (const domain_error &e) {
    throw schema_error("nl", e.what());
  }
}

inline StepControls controls(const RunConfig &c) {
  StepControls s;
  s.abs_tol = c.abs_tol;
  s.rel_tol = c.rel_tol;
  return s;
}

inline std::filesystem::path out_path(const RunConfig &c, const std::string &name) {
  return std::filesystem::path(c.out_dir.empty() ? default_out_dir() : c.out_dir) / name;
}

struct SweepRow {
  double beta, p;
  int k, N;
  double rho_low = 0.0, rho_high = 0.0, K = inf;
  std::string verdict;
};

inline std::vector<SweepRow> run_sweep(const RunConfig &c) {
  std::vector<SweepRow> cells;
  for (double p : c.sweep_p)
    for (int k : c.sweep_k)
      for (int N : c.sweep_N)
        if (k <= N)
          for (double b : c.betas) cells.push_back({b, p, k, N, 0.0, 0.0, inf, ""});
  std::atomic<std::size_t> next{0};
  std::vector<std::string> failures(cells.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto &cell = cells[i];
      try {
        const auto nl = Nonlinearity::power(cell.p, cell.k);
        BlowupOptions o;
        o.r_max = c.rmax;
        o.controls = controls(c);
        const auto e = blowup_radius(ProblemSpec(cell.N, cell.k), nl, cell.beta, c.bracket_tol, o);
        cell.rho_low = e.rho_low;
        cell.rho_high = e.rho_high;
        cell.verdict = e.blows_up() ? "Blowup" : "NoBlowupUpTo";
        const auto K = ko_integral(nl, cell.beta, c.tol);
        cell.K = K.value;
      } catch (const std::exception &ex) {
        failures[i] = ex.what();
        cell.verdict = "Error";
      }
    }
  };
  unsigned n = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  return cells;
}

inline json seed_fixtures(const RunConfig &c) {
  json fx;
  const double tol = 1e-9;  // ten times tighter than the library defaults
  json ko = json::array();
  for (auto [p, k, b] : {std::tuple{2.0, 1, 1.0}, std::tuple{2.0, 2, 1.0}, std::tuple{3.0, 2, 1.0},
                         std::tuple{2.0, 1, 10.0}, std::tuple{2.0, 1, 100.0}, std::tuple{1.5, 1, 1.0}}) {
    const auto r = ko_integral(Nonlinearity::power(p, k), b, tol);
    ko.push_back({{"kind", "power"}, {"p", p}, {"k", k}, {"beta", b}, {"K", r.value}, {"error_bound", r.error_bound}});
  }
  for (auto [a, k, b] : {std::tuple{1.0, 1, 1.0}, std::tuple{1.0, 1, 5.0}, std::tuple{1.0, 2, 1.0}}) {
    const auto r = ko_integral(Nonlinearity::expm1(a, k), b, tol);
    ko.push_back({{"kind", "expm1"}, {"a", a}, {"k", k}, {"beta", b}, {"K", r.value}, {"error_bound", r.error_bound}});
  }
  fx["ko"] = ko;
  json rho = json::array();
  BlowupOptions o;
  o.controls.abs_tol = o.controls.rel_tol = 1e-11;
  for (auto [p, k, N, b] : {std::tuple{2.0, 1, 3, 1.0}, std::tuple{2.0, 1, 3, 4.0}, std::tuple{2.0, 2, 4, 1.0},
                            std::tuple{2.0, 2, 4, 4.0}, std::tuple{3.0, 2, 4, 1.0}}) {
    const auto e = blowup_radius(ProblemSpec(N, k), Nonlinearity::power(p, k), b, 1e-5, o);
    rho.push_back({{"p", p}, {"k", k}, {"N", N}, {"beta", b}, {"rho_low", e.rho_low}, {"rho_high", e.rho_high}});
  }
  fx["blowup"] = rho;
  json dir = json::array();
  ShootingOptions so;
  so.controls.abs_tol = so.controls.rel_tol = 1e-11;
  for (auto [p, k, N, R, cc] : {std::tuple{1.0, 1, 3, 1.0, 2.0}, std::tuple{2.0, 2, 4, 1.0, 3.0},
                                std::tuple{3.0, 2, 4, 1.0, 3.0}}) {
    const auto s = solve_shooting(ProblemSpec(N, k, R, cc), Nonlinearity::power(p, k), so);
    dir.push_back({{"p", p}, {"k", k}, {"N", N}, {"R", R}, {"c", cc}, {"beta_star", s.beta_star}});
  }
  fx["shooting"] = dir;
  (void)c;
  return fx;
}

} // namespace detail

/// Run one command; the result (or a JSON error object) goes to `out`.
inline int run(RunConfig cfg, std::ostream &out) {
  auto fail = [&](int code, const std::string &type, const std::string &msg, json extra = json::object()) {
    json e{{"error", {{"type", type}, {"message", msg}}}};
    for (auto it = extra.begin(); it != extra.end(); ++it) e["error"][it.key()] = *it;
    out << e.dump(2) << '\n';
    return code;
  };
  try {
    validate(cfg);
    const auto &cmd = cfg.command;
    json result;
    if (cmd == "ko") {
      const auto nl = detail::make_nl(cfg);
      result = io::to_json(ko_integral(nl, *cfg.beta, cfg.tol));
      result["classification"] = to_string(ko_classify(nl));
      io::write_atomic(detail::out_path(cfg, "ko.json"), result.dump(2) + "\n");
    } else if (cmd == "scan") {
      const auto nl = detail::make_nl(cfg);
      json arr = json::array();
      for (const auto &r : sharpened_ko_scan(nl, cfg.betas, cfg.tol)) arr.push_back(io::to_json(r));
      result = {{"reports", arr}};
      io::write_atomic(detail::out_path(cfg, "scan.json"), result.dump(2) + "\n");
    } else if (cmd == "ivp") {
      const auto nl = detail::make_nl(cfg);
      const auto t = integrate_ivp(ProblemSpec(*cfg.N, *cfg.k), nl, *cfg.beta, cfg.rmax, detail::controls(cfg));
      io::write_atomic(detail::out_path(cfg, "trajectory.csv"), io::trajectory_csv(t));
      io::write_atomic(detail::out_path(cfg, "trajectory.json"), io::to_json(t).dump() + "\n");
      result = {{"termination", to_string(t.termination)},
                {"points", t.size()},
                {"last_radius", t.last_radius()},
                {"accepted_steps", t.accepted_steps},
                {"rejected_steps", t.rejected_steps},
                {"monotonicity_violations", t.monotonicity_violations}};
    } else if (cmd == "blowup") {
      const auto nl = detail::make_nl(cfg);
      BlowupOptions o;
      o.r_max = cfg.rmax;
      o.controls = detail::controls(cfg);
      try {
        result = io::to_json(blowup_radius(ProblemSpec(*cfg.N, *cfg.k), nl, *cfg.beta, cfg.bracket_tol, o));
      } catch (const bracketing_failure &e) {
        return fail(numerical_failure, "numerical", e.what(), {{"best_bracket", io::to_json(e.best())}});
      }
      io::write_atomic(detail::out_path(cfg, "blowup.json"), result.dump(2) + "\n");
    } else if (cmd == "dirichlet") {
      const auto nl = detail::make_nl(cfg);
      const ProblemSpec spec(*cfg.N, *cfg.k, *cfg.R, *cfg.c);
      if (cfg.method == "shooting") {
        const auto s = solve_shooting(spec, nl);
        result = io::to_json(s);
        io::write_atomic(detail::out_path(cfg, "dirichlet.csv"), io::profile_csv(s.r, s.u));
      } else {
        MonotoneOptions o;
        o.grid_size = cfg.grid;
        o.shifted = !cfg.unshifted;
        o.strict = !cfg.unshifted;
        o.keep_snapshots = false;
        try {
          auto [s, trace] = solve_monotone(spec, nl, o);
          result = io::to_json(s);
          result["trace"] = io::to_json(trace);
          io::write_atomic(detail::out_path(cfg, "dirichlet.csv"), io::profile_csv(s.r, s.u));
        } catch (const iteration_failure &e) {
          return fail(numerical_failure, "numerical", e.what(), {{"trace", io::to_json(e.trace())}});
        }
      }
      io::write_atomic(detail::out_path(cfg, "dirichlet.json"), result.dump(2) + "\n");
    } else if (cmd == "large") {
      const auto nl = detail::make_nl(cfg);
      const auto L = large_solution_sequence(ProblemSpec(*cfg.N, *cfg.k, *cfg.R, 1.0), nl, cfg.n_values);
      json sols = json::array();
      for (std::size_t i = 0; i < L.solutions.size(); ++i)
        sols.push_back({{"n", L.n_values[i]}, {"u0", L.solutions[i].beta_star}});
      result = {{"solutions", sols},
                {"cauchy_differences", L.cauchy_differences},
                {"monotone_in_n", L.monotone_in_n},
                {"below_barrier", L.below_barrier},
                {"barrier_beta", L.barrier_beta}};
      std::vector<std::string> header{"r"};
      for (double n : L.n_values) header.push_back("u_n" + io::format_double(n));
      header.push_back("barrier");
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < L.interior_grid.size(); ++i) {
        std::vector<std::string> row{io::format_double(L.interior_grid[i])};
        for (const auto &p : L.profiles) row.push_back(io::format_double(p[i]));
        row.push_back(io::format_double(L.barrier[i]));
        rows.push_back(std::move(row));
      }
      io::write_atomic(detail::out_path(cfg, "large.csv"), io::csv_table(header, rows));
      io::write_atomic(detail::out_path(cfg, "large.json"), result.dump(2) + "\n");
    } else if (cmd == "verify") {
      std::optional<RadialTrajectory> t;
      if (cfg.trajectory) {
        const auto text = io::read_file(*cfg.trajectory);
        if (cfg.trajectory->ends_with(".json"))
          t = io::trajectory_from_json(json::parse(text));
        else
          t = io::trajectory_from_csv(text, ProblemSpec(*cfg.N, *cfg.k), detail::make_nl(cfg));
      } else {
        t = integrate_ivp(ProblemSpec(*cfg.N, *cfg.k), detail::make_nl(cfg), *cfg.beta, cfg.rmax,
                          detail::controls(cfg));
      }
      auto reports = verify_trajectory(*t);
      if (!cfg.eps.empty()) {
        const auto nr = necessity_limit_check(t->nl(), t->spec(), cfg.eps);
        for (const auto &e : nr.entries) reports.push_back(e.report);
      }
      json arr = json::array();
      bool all = true;
      for (const auto &r : reports) {
        arr.push_back(io::to_json(r));
        all = all && r.pass;
      }
      result = {{"reports", arr}, {"all_pass", all}};
      io::write_atomic(detail::out_path(cfg, "verify.csv"), io::verify_csv(reports));
      io::write_atomic(detail::out_path(cfg, "verify.json"), result.dump(2) + "\n");
    } else if (cmd == "sweep") {
      const auto rows = detail::run_sweep(cfg);
      std::vector<std::vector<std::string>> table;
      std::size_t errors = 0;
      for (const auto &r : rows) {
        errors += r.verdict == "Error";
        table.push_back({io::format_double(r.beta), io::format_double(r.p), std::to_string(r.k), std::to_string(r.N),
                         io::format_double(r.rho_low), io::format_double(r.rho_high), io::format_double(r.K),
                         r.verdict});
      }
      io::write_atomic(detail::out_path(cfg, "sweep.csv"),
                       io::csv_table({"beta", "p", "k", "N", "rho_low", "rho_high", "K_beta", "verdict"}, table));
      result = {{"cells", rows.size()}, {"errors", errors}, {"csv", detail::out_path(cfg, "sweep.csv").string()}};
    } else if (cmd == "seed-fixtures") {
      result = detail::seed_fixtures(cfg);
      io::write_atomic(detail::out_path(cfg, "fixtures.json"), result.dump(2) + "\n");
    }
    out << result.dump(2) << '\n';
    return ok;
  } catch (const schema_error &e) {
    return fail(domain_failure, "schema", e.what(), {{"field", e.field()}});
  } catch (const domain_error &e) {
    return fail(domain_failure, "domain", e.what());
  } catch (const io_error &e) {
    return fail(io_failure, "io", e.what());
  } catch (const numerical_error &e) {
    return fail(numerical_failure, "numerical", e.what());
  } catch (const json::exception &e) {
    return fail(domain_failure, "schema", e.what());
  } catch (const std::filesystem::filesystem_error &e) {
    return fail(io_failure, "io", e.what());
  }
}

} // namespace khessian::cli
