// khessian command-line tool.  Flags override values from --config.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "khessian/cli.hpp"

namespace kc = khessian::cli;

int main(int argc, char **argv) {
  CLI::App app{"Radial k-Hessian blow-up toolkit"};
  app.require_subcommand(1);

  std::string config_path, nl_text;
  std::optional<int> k, N;
  std::optional<double> R, c, beta, rmax, tol, bracket_tol;
  std::vector<double> betas, n_values, eps, sweep_p;
  std::vector<int> sweep_k, sweep_N;
  std::optional<std::string> method, traj, out;
  std::optional<std::size_t> grid;
  std::optional<unsigned> threads;
  bool unshifted = false;

  const std::map<std::string, std::string> about = {
      {"ko", "Keller-Osserman integral K(beta) and verdict"},
      {"scan", "running minimum of K over a list of central values"},
      {"ivp", "integrate the radial initial-value problem"},
      {"blowup", "bracket the blow-up radius"},
      {"dirichlet", "solve the Dirichlet problem on a ball"},
      {"large", "boundary blow-up sequence u_n with data n"},
      {"verify", "check the trajectory estimates"},
      {"sweep", "blow-up radius over a parameter grid"},
      {"seed-fixtures", "regenerate reference values at tightened tolerances"},
  };
  for (const auto &name : kc::commands()) {
    auto *sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--nl", nl_text, "nonlinearity as JSON, e.g. {\"kind\":\"power\",\"p\":2}");
    sub->add_option("--k", k);
    sub->add_option("--N", N);
    sub->add_option("--R", R);
    sub->add_option("--c", c);
    sub->add_option("--beta", beta);
    sub->add_option("--rmax", rmax);
    sub->add_option("--tol", tol);
    sub->add_option("--bracket-tol", bracket_tol);
    sub->add_option("--betas", betas)->delimiter(',');
    sub->add_option("--n", n_values)->delimiter(',');
    sub->add_option("--eps", eps)->delimiter(',');
    sub->add_option("--p", sweep_p, "sweep exponents")->delimiter(',');
    sub->add_option("--ks", sweep_k, "sweep orders")->delimiter(',');
    sub->add_option("--Ns", sweep_N, "sweep dimensions")->delimiter(',');
    sub->add_option("--method", method);
    sub->add_option("--grid", grid);
    sub->add_flag("--unshifted", unshifted, "plain Picard iteration without the monotone shift");
    sub->add_option("--traj", traj, "trajectory file (CSV or JSON) for verify");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cout << nlohmann::json{{"error", {{"type", "schema"}, {"message", e.what()}}}}.dump(2) << '\n';
    return kc::domain_failure;
  }

  kc::RunConfig cfg;
  try {
    if (!config_path.empty()) kc::apply_json(cfg, nlohmann::json::parse(khessian::io::read_file(config_path)));
    if (!nl_text.empty()) {
      auto j = nlohmann::json::parse(nl_text);
      if (!j.is_object()) throw kc::schema_error("nl", "must be a nonlinearity object");
      cfg.nl = j;
    }
  } catch (const khessian::io_error &e) {
    std::cout << nlohmann::json{{"error", {{"type", "io"}, {"message", e.what()}}}}.dump(2) << '\n';
    return kc::io_failure;
  } catch (const std::exception &e) {
    std::cout << nlohmann::json{{"error", {{"type", "schema"}, {"message", e.what()}}}}.dump(2) << '\n';
    return kc::domain_failure;
  }

  for (auto *sub : app.get_subcommands()) cfg.command = sub->get_name();
  if (k) cfg.k = k;
  if (N) cfg.N = N;
  if (R) cfg.R = R;
  if (c) cfg.c = c;
  if (beta) cfg.beta = beta;
  if (rmax) cfg.rmax = *rmax;
  if (tol) cfg.tol = *tol;
  if (bracket_tol) cfg.bracket_tol = *bracket_tol;
  if (!betas.empty()) cfg.betas = betas;
  if (!n_values.empty()) cfg.n_values = n_values;
  if (!eps.empty()) cfg.eps = eps;
  if (!sweep_p.empty()) cfg.sweep_p = sweep_p;
  if (!sweep_k.empty()) cfg.sweep_k = sweep_k;
  if (!sweep_N.empty()) cfg.sweep_N = sweep_N;
  if (method) cfg.method = *method;
  if (grid) cfg.grid = *grid;
  if (unshifted) cfg.unshifted = true;
  if (traj) cfg.trajectory = traj;
  if (out) cfg.out_dir = *out;
  if (threads) cfg.threads = *threads;

  return kc::run(cfg, std::cout);
}
