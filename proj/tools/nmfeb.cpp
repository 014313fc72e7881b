// nmfeb: empirical-Bayes prior estimation for y = X beta + eps via
// mean-field ELBO maximization. Subcommands: fit, simulate, check, version.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmfeb/io.hpp"
#include "nmfeb/optimizer.hpp"
#include "nmfeb/posterior.hpp"
#include "nmfeb/problem.hpp"
#include "nmfeb/sim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::ordered_json;

struct RunConfig {
  double sigma2 = 1.0;
  bool sigma2_set = false;
  nmfeb::GridSpec grid;
  nmfeb::FitConfig fit;
  double alpha = 0.1;
  double eps_ci = 0.0;
  double eps_null = 0.05;
  std::uint64_t seed = 0;
  bool csv_header = false;
  double check_c1 = 1e-3;
  double check_c2 = 1e3;
  double check_mf = 0.5;
  std::optional<nmfeb::SimConfig> sim;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_keys(const nlohmann::json& obj, const char* where,
                  std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " +
                        where);
  }
}

nmfeb::PriorGrid parse_prior(const nlohmann::json& j) {
  require_keys(j, "prior", {"atoms", "weights"});
  if (!j.contains("atoms") || !j.contains("weights"))
    throw ConfigError("prior needs both atoms and weights");
  return nmfeb::PriorGrid::from(j["atoms"].get<std::vector<double>>(),
                                j["weights"].get<std::vector<double>>());
}

RunConfig parse_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  require_keys(j, "config",
               {"sigma2", "grid", "fit", "alpha", "eps_ci", "eps_null",
                "seed", "csv_header", "check", "sim"});
  if (j.contains("sigma2")) {
    cfg.sigma2 = j["sigma2"].get<double>();
    cfg.sigma2_set = true;
    if (!(cfg.sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    require_keys(g, "grid", {"lo", "hi", "k"});
    if (g.contains("lo")) cfg.grid.lo = g["lo"].get<double>();
    if (g.contains("hi")) cfg.grid.hi = g["hi"].get<double>();
    if (g.contains("k")) cfg.grid.k = g["k"].get<int>();
  }
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    require_keys(f, "fit",
                 {"tol_outer", "max_outer", "tol_grad", "max_inner_gamma",
                  "max_inner_weights", "lbfgs_memory", "armijo_c",
                  "backtrack_factor", "init_mode", "ridge_lambda"});
    if (f.contains("tol_outer")) cfg.fit.tol_outer = f["tol_outer"];
    if (f.contains("max_outer")) cfg.fit.max_outer = f["max_outer"];
    if (f.contains("tol_grad")) cfg.fit.tol_grad = f["tol_grad"];
    if (f.contains("max_inner_gamma"))
      cfg.fit.max_inner_gamma = f["max_inner_gamma"];
    if (f.contains("max_inner_weights"))
      cfg.fit.max_inner_weights = f["max_inner_weights"];
    if (f.contains("lbfgs_memory")) cfg.fit.lbfgs_memory = f["lbfgs_memory"];
    if (f.contains("armijo_c")) cfg.fit.armijo_c = f["armijo_c"];
    if (f.contains("backtrack_factor"))
      cfg.fit.backtrack_factor = f["backtrack_factor"];
    if (f.contains("ridge_lambda")) cfg.fit.ridge_lambda = f["ridge_lambda"];
    if (f.contains("init_mode")) {
      const std::string m = f["init_mode"];
      if (m == "ols")
        cfg.fit.init_mode = nmfeb::InitMode::ols;
      else if (m == "ridge")
        cfg.fit.init_mode = nmfeb::InitMode::ridge;
      else
        throw ConfigError("init_mode must be 'ols' or 'ridge'");
    }
  }
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("eps_ci")) cfg.eps_ci = j["eps_ci"].get<double>();
  if (j.contains("eps_null")) cfg.eps_null = j["eps_null"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("csv_header")) cfg.csv_header = j["csv_header"].get<bool>();
  if (j.contains("check")) {
    const auto& c = j["check"];
    require_keys(c, "check", {"c1", "c2", "mf_threshold"});
    if (c.contains("c1")) cfg.check_c1 = c["c1"];
    if (c.contains("c2")) cfg.check_c2 = c["c2"];
    if (c.contains("mf_threshold")) cfg.check_mf = c["mf_threshold"];
  }
  if (j.contains("sim")) {
    const auto& s = j["sim"];
    require_keys(s, "sim",
                 {"n", "p", "design", "rho", "sigma2", "seed",
                  "row_normalize", "prior"});
    nmfeb::SimConfig sc;
    if (s.contains("n")) sc.n = s["n"].get<int>();
    if (s.contains("p")) sc.p = s["p"].get<int>();
    if (s.contains("design")) {
      const std::string d = s["design"];
      if (d == "iid_gaussian")
        sc.design_kind = nmfeb::DesignKind::iid_gaussian;
      else if (d == "ar_gaussian")
        sc.design_kind = nmfeb::DesignKind::ar_gaussian;
      else
        throw ConfigError("design must be 'iid_gaussian' or 'ar_gaussian'");
    }
    if (s.contains("rho")) sc.rho = s["rho"].get<double>();
    if (s.contains("sigma2")) sc.sigma2 = s["sigma2"].get<double>();
    if (s.contains("seed")) sc.seed = s["seed"].get<std::uint64_t>();
    if (s.contains("row_normalize"))
      sc.row_normalize = s["row_normalize"].get<bool>();
    if (s.contains("prior")) sc.prior_truth = parse_prior(s["prior"]);
    cfg.sim = sc;
  }
  return cfg;
}

ordered_json report_json(const nmfeb::DesignReport& r) {
  ordered_json j;
  j["lambda_min"] = r.lambda_min;
  j["lambda_max"] = r.lambda_max;
  j["trace_A2_over_p"] = r.trace_A2_over_p;
  j["full_column_rank"] = r.full_column_rank;
  j["passes_assumption1"] = r.passes_assumption1;
  j["meanfield_ok"] = r.meanfield_ok;
  return j;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("NMF_EB_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return static_cast<int>(std::thread::hardware_concurrency());
}

int cmd_fit(const std::string& config_path, const std::string& x_path,
            const std::string& y_path, const std::string& out_path,
            const std::string& prior_out, std::optional<std::uint64_t> seed,
            int threads) {
  RunConfig cfg;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  try {
    cfg = parse_config(config_path);
    X = nmfeb::read_matrix_csv(x_path, cfg.csv_header);
    y = nmfeb::read_vector_csv(y_path, cfg.csv_header);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed) cfg.seed = *seed;
  (void)resolve_threads(threads);  // recorded; core is thread-count invariant

  try {
    if (X.rows() != y.size()) {
      std::cerr << "error: X has " << X.rows() << " rows but y has "
                << y.size() << " entries\n";
      return 3;
    }
    const auto t0 = std::chrono::steady_clock::now();

    const nmfeb::DesignReport report =
        nmfeb::check_design(X, cfg.sigma2, cfg.check_c1, cfg.check_c2,
                            cfg.check_mf);
    if (!report.passes_assumption1)
      std::cerr << "warning: design fails the eigenvalue condition "
                   "(lambda_min="
                << report.lambda_min << ", lambda_max=" << report.lambda_max
                << ")\n";
    if (!report.meanfield_ok)
      std::cerr << "warning: Tr(A^2)/p = " << report.trace_A2_over_p
                << " exceeds the mean-field threshold; the product-posterior "
                   "approximation may be poor\n";

    nmfeb::FitConfig fc = cfg.fit;
    if (fc.init_mode == nmfeb::InitMode::ols && !report.full_column_rank)
      fc.init_mode = nmfeb::InitMode::ridge;
    const nmfeb::FitResult fitres =
        nmfeb::fit(X, y, cfg.sigma2, cfg.grid, fc);

    const nmfeb::ProblemStats stats = nmfeb::build_stats(X, y, cfg.sigma2);
    const nmfeb::PosteriorProduct post =
        nmfeb::build_posterior(fitres.prior, fitres.gamma, stats.d);
    const Eigen::VectorXd pmean = nmfeb::posterior_mean(post);
    const auto intervals =
        nmfeb::credible_intervals(post, cfg.alpha, cfg.eps_ci);
    const double null_mass =
        nmfeb::null_proportion(fitres.prior, cfg.eps_null);

    const auto t1 = std::chrono::steady_clock::now();
    std::cerr << "fit: " << stats.n << " x " << stats.p << " in "
              << std::chrono::duration<double>(t1 - t0).count() << " s, "
              << fitres.outer_iters << " outer iterations"
              << (fitres.converged ? "" : " (not converged)") << "\n";

    ordered_json out;
    out["version"] = kVersion;
    out["n"] = stats.n;
    out["p"] = stats.p;
    out["sigma2"] = cfg.sigma2;
    out["seed"] = cfg.seed;
    out["grid"] = {{"lo", cfg.grid.lo}, {"hi", cfg.grid.hi},
                   {"k", cfg.grid.k}};
    out["prior"] = {{"atoms", fitres.prior.atoms},
                    {"weights", fitres.prior.weights}};
    out["gamma"] = to_vec(fitres.gamma);
    out["trace"] = fitres.trace;
    out["converged"] = fitres.converged;
    out["outer_iters"] = fitres.outer_iters;
    out["line_search_failed"] = fitres.line_search_failed;
    out["design_report"] = report_json(report);
    out["posterior_mean"] = to_vec(pmean);
    out["alpha"] = cfg.alpha;
    out["eps_ci"] = cfg.eps_ci;
    ordered_json ci = ordered_json::array();
    for (const auto& [lo, hi] : intervals) ci.push_back({lo, hi});
    out["credible_intervals"] = ci;
    out["eps_null"] = cfg.eps_null;
    out["null_proportion"] = null_mass;

    std::ofstream os(out_path);
    if (!os) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 2;
    }
    os << nmfeb::dump_json(out);

    if (!prior_out.empty()) {
      std::ofstream ps(prior_out);
      for (std::size_t r = 0; r < fitres.prior.size(); ++r)
        ps << nmfeb::format_double(fitres.prior.atoms[r]) << ','
           << nmfeb::format_double(fitres.prior.weights[r]) << '\n';
    }
    return 0;
  } catch (const nmfeb::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nmfeb::ZeroColumn& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  RunConfig cfg;
  try {
    cfg = parse_config(config_path);
    if (!cfg.sim) throw ConfigError("config has no 'sim' section");
    cfg.sim->validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  nmfeb::SimConfig sc = *cfg.sim;
  if (seed) sc.seed = *seed;

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  {
    std::ofstream probe(fs::path(out_dir) / ".write_probe");
    if (!probe) {
      std::cerr << "error: output directory not writable: " << out_dir
                << "\n";
      return 4;
    }
  }
  fs::remove(fs::path(out_dir) / ".write_probe", ec);

  try {
    const Eigen::MatrixXd X = nmfeb::gen_design(sc);
    const nmfeb::SimData data =
        nmfeb::gen_data(X, sc.prior_truth, sc.sigma2, sc.seed);

    nmfeb::write_matrix_csv((fs::path(out_dir) / "X.csv").string(), X);
    nmfeb::write_vector_csv((fs::path(out_dir) / "y.csv").string(), data.y);
    nmfeb::write_vector_csv((fs::path(out_dir) / "beta_true.csv").string(),
                            data.beta);

    ordered_json meta;
    meta["version"] = kVersion;
    meta["seed"] = sc.seed;
    meta["n"] = sc.n;
    meta["p"] = sc.p;
    meta["design"] = sc.design_kind == nmfeb::DesignKind::iid_gaussian
                         ? "iid_gaussian"
                         : "ar_gaussian";
    meta["rho"] = sc.rho;
    meta["sigma2"] = sc.sigma2;
    meta["row_normalize"] = sc.row_normalize;
    meta["prior"] = {{"atoms", sc.prior_truth.atoms},
                     {"weights", sc.prior_truth.weights}};
    std::ofstream ms(fs::path(out_dir) / "meta.json");
    ms << nmfeb::dump_json(meta);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_check(const std::string& x_path, double sigma2, bool header,
              double c1, double c2, double mf_threshold) {
  Eigen::MatrixXd X;
  try {
    X = nmfeb::read_matrix_csv(x_path, header);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const nmfeb::DesignReport r =
      nmfeb::check_design(X, sigma2, c1, c2, mf_threshold);
  std::cout << nmfeb::dump_json(report_json(r));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"naive-mean-field empirical Bayes for the Gaussian linear "
               "model"};
  app.require_subcommand(1);

  std::string config_path, x_path, y_path, out_path, out_dir, prior_out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  double sigma2 = 1.0;
  bool header = false;
  double c1 = 1e-3, c2 = 1e3, mf_threshold = 0.5;

  auto* fit = app.add_subcommand("fit", "estimate the prior from X, y");
  fit->add_option("--config", config_path, "JSON config file");
  fit->add_option("--x", x_path, "design matrix CSV")->required();
  fit->add_option("--y", y_path, "response CSV")->required();
  fit->add_option("--out", out_path, "output JSON path")->required();
  fit->add_option("--prior-out", prior_out,
                  "optional atom,weight CSV for plotting");
  fit->add_option("--seed", seed, "seed recorded in the output");
  fit->add_option("--threads", threads, "worker threads (NMF_EB_THREADS)");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("--config", config_path, "JSON config file")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "override the config seed");
  sim->add_option("--threads", threads, "worker threads");

  auto* check = app.add_subcommand("check", "design diagnostics");
  check->add_option("--x", x_path, "design matrix CSV")->required();
  check->add_option("--sigma2", sigma2, "noise variance");
  check->add_flag("--header", header, "CSV has a header row");
  check->add_option("--c1", c1, "eigenvalue lower threshold");
  check->add_option("--c2", c2, "eigenvalue upper threshold");
  check->add_option("--mf-threshold", mf_threshold,
                    "Tr(A^2)/p threshold");
  check->add_option("--threads", threads, "worker threads");

  auto* version = app.add_subcommand("version", "print the version");

  CLI11_PARSE(app, argc, argv);

  if (version->parsed()) {
    std::cout << "nmfeb " << kVersion << "\n";
    return 0;
  }
  if (fit->parsed())
    return cmd_fit(config_path, x_path, y_path, out_path, prior_out, seed,
                   threads);
  if (sim->parsed()) return cmd_simulate(config_path, out_dir, seed);
  if (check->parsed())
    return cmd_check(x_path, sigma2, header, c1, c2, mf_threshold);
  return 1;
}
