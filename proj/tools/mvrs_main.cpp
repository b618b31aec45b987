// mvrs: stratified subsampling estimators for logistic and Poisson regression.
//
// Subcommands:
//   estimate   fit one model on a CSV dataset and write a report
//   simulate   run a replicated subsampling experiment from a JSON config
//   partition  print the strata summary a method would use (debugging aid)

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mvrs/csv.hpp"
#include "mvrs/pipeline.hpp"
#include "mvrs/report.hpp"
#include "mvrs/simgen.hpp"

namespace {

using nlohmann::json;

struct FitArgs {
  std::string input;
  std::string family;
  std::string method = "mvrs-u";
  std::size_t n = 0;
  std::size_t n0 = 200;
  std::size_t k = 30;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "json";
  double min_prob_floor = 0.0;
  double tol = mvrs::kFitTol;
  std::size_t max_iter = mvrs::kFitMaxIter;
  bool no_timing = false;
};

void add_fit_options(CLI::App* cmd, FitArgs& a, bool methods_with_strata_only) {
  cmd->add_option("--input", a.input, "CSV file with header y,x1,...,xp")->required();
  cmd->add_option("--family", a.family, "response family")
      ->required()
      ->check(CLI::IsMember({"logistic", "poisson"}));
  std::vector<std::string> methods;
  if (methods_with_strata_only) {
    methods = {"mvrs-u", "mvrs-o", "optmvrs-u", "optmvrs-o"};
  } else {
    methods = {"full", "unif", "opt", "mvrs-u", "mvrs-o", "optmvrs-u", "optmvrs-o"};
  }
  cmd->add_option("--method", a.method, "estimator")->check(CLI::IsMember(methods));
  cmd->add_option("--n", a.n, "subsample size");
  cmd->add_option("--n0", a.n0, "pilot size");
  cmd->add_option("--k", a.k, "strata count")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--min-prob-floor", a.min_prob_floor, "mix this uniform share into the probabilities");
  cmd->add_option("--tol", a.tol, "gradient sup-norm tolerance");
  cmd->add_option("--max-iter", a.max_iter, "Newton iteration cap");
  cmd->add_flag("--no-timing", a.no_timing, "omit timing sections so reruns compare byte for byte");
}

mvrs::PipelineConfig pipeline_config(const FitArgs& a, mvrs::Method method) {
  mvrs::PipelineConfig cfg;
  cfg.method = method;
  cfg.n = a.n;
  cfg.n0 = a.n0;
  cfg.k = a.k;
  cfg.seed = a.seed;
  cfg.min_prob_floor = a.min_prob_floor;
  cfg.tol = a.tol;
  cfg.max_iter = a.max_iter;
  return cfg;
}

// The command level is stricter than the library: a subsample must sit
// strictly between the pilot and the dataset.
void check_sizes(const FitArgs& a, mvrs::Method method, std::size_t n_rows) {
  if (method == mvrs::Method::Full) return;
  if (a.n == 0) throw mvrs::ConfigError("--n is required for subsampling methods");
  if (a.n0 >= a.n) throw mvrs::ConfigError("pilot size must be smaller than the subsample (--n0 < --n)");
  if (a.n >= n_rows) {
    throw mvrs::ConfigError("subsample must be smaller than the dataset (--n < " +
                            std::to_string(n_rows) + ")");
  }
}

int cmd_estimate(const FitArgs& a) {
  const mvrs::Method method = mvrs::method_from_name(a.method);
  const mvrs::Family family = mvrs::family_from_name(a.family);
  const mvrs::Dataset data = mvrs::load_csv(a.input, family);
  check_sizes(a, method, data.n_rows);

  const mvrs::PipelineConfig cfg = pipeline_config(a, method);
  const mvrs::PipelineResult result = mvrs::run_pipeline(data, family, cfg);
  if (!result.fit.converged) {
    std::cerr << "warning: fit did not converge within " << a.max_iter << " iterations\n";
  }
  if (result.variance_degenerate) {
    std::cerr << "warning: variance estimate degenerate, every stratum has at most one draw\n";
  }

  mvrs::EstimateContext ctx{a.input, family, cfg, data.n_rows, data.n_cov};
  if (a.format == "csv") {
    mvrs::write_text_file(a.out, mvrs::estimate_report_csv(ctx, result, !a.no_timing));
  } else {
    const json rep = mvrs::estimate_report(ctx, result, !a.no_timing);
    mvrs::write_text_file(a.out, rep.dump(2) + "\n");
    std::string why;
    if (!mvrs::validate_estimate_report(rep, &why)) {
      std::cerr << "internal error: report failed validation: " << why << "\n";
      return 1;
    }
  }
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

int cmd_partition(const FitArgs& a) {
  const mvrs::Method method = mvrs::method_from_name(a.method);
  const mvrs::Family family = mvrs::family_from_name(a.family);
  const mvrs::Dataset data = mvrs::load_csv(a.input, family);
  check_sizes(a, method, data.n_rows);

  mvrs::PipelineConfig cfg = pipeline_config(a, method);
  cfg.want_variance = false;
  const mvrs::PipelineResult result = mvrs::run_pipeline(data, family, cfg);
  const json rep = mvrs::strata_report(result, !a.no_timing);
  if (a.out.empty()) {
    std::cout << rep.dump(2) << "\n";
  } else {
    mvrs::write_text_file(a.out, rep.dump(2) + "\n");
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw mvrs::ConfigError("config: bad value for '" + key + "'");
  }
}

mvrs::SimConfig parse_sim_config(const json& j) {
  if (!j.is_object()) throw mvrs::ConfigError("config: top level must be an object");
  static const std::set<std::string> known = {
      "family", "covariate_case", "rows",       "covariates", "theta_true",
      "n_values", "n0",            "k",          "replicates", "methods",
      "seed",     "min_prob_floor", "estimate_mse", "tol",     "max_iter"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw mvrs::ConfigError("config: unknown key '" + key + "'");
  }
  mvrs::SimConfig cfg;
  if (j.contains("family")) cfg.family = mvrs::family_from_name(get_as<std::string>(j, "family"));
  if (j.contains("covariate_case")) cfg.covariate_case = get_as<int>(j, "covariate_case");
  if (j.contains("rows")) cfg.n_rows = get_as<std::size_t>(j, "rows");
  if (j.contains("covariates")) cfg.n_cov = get_as<std::size_t>(j, "covariates");
  if (j.contains("theta_true")) cfg.theta_true = get_as<mvrs::Vector>(j, "theta_true");
  if (j.contains("n_values")) cfg.n_values = get_as<std::vector<std::size_t>>(j, "n_values");
  if (j.contains("n0")) cfg.n0 = get_as<std::size_t>(j, "n0");
  if (j.contains("k")) cfg.k = get_as<std::size_t>(j, "k");
  if (j.contains("replicates")) cfg.replicates = get_as<std::size_t>(j, "replicates");
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const std::string& name : get_as<std::vector<std::string>>(j, "methods")) {
      cfg.methods.push_back(mvrs::method_from_name(name));
    }
  }
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("min_prob_floor")) cfg.min_prob_floor = get_as<double>(j, "min_prob_floor");
  if (j.contains("estimate_mse")) cfg.estimate_mse = get_as<bool>(j, "estimate_mse");
  if (j.contains("tol")) cfg.tol = get_as<double>(j, "tol");
  if (j.contains("max_iter")) cfg.max_iter = get_as<std::size_t>(j, "max_iter");
  return cfg;
}

struct SimArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t replicates = 0;
  bool replicates_set = false;
  bool no_timing = false;
};

int cmd_simulate(const SimArgs& a) {
  std::ifstream in(a.config_path);
  if (!in) throw mvrs::IoError("cannot open config '" + a.config_path + "'");
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::parse_error& e) {
    throw mvrs::ConfigError(std::string("config: ") + e.what());
  }
  mvrs::SimConfig cfg = parse_sim_config(parsed);
  if (a.seed_set) cfg.seed = a.seed;
  if (a.replicates_set) cfg.replicates = a.replicates;
  mvrs::validate_config(cfg);

  std::size_t n_min = cfg.n_values.empty() ? 0 : cfg.n_values.front();
  for (std::size_t n : cfg.n_values) n_min = std::min(n_min, n);
  if (cfg.k > n_min) {
    std::cerr << "warning: k=" << cfg.k << " exceeds the smallest subsample size " << n_min
              << "; some strata will receive no draws\n";
  }

  const mvrs::SimReport report = mvrs::run_experiment(cfg);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw mvrs::IoError("cannot create directory '" + a.out_dir + "': " + ec.message());

  const bool timing = !a.no_timing;
  const fs::path dir(a.out_dir);
  mvrs::write_text_file((dir / "summary.json").string(),
                        mvrs::sim_summary(report, timing).dump(2) + "\n");
  mvrs::write_text_file((dir / "summary.csv").string(), mvrs::sim_summary_csv(report, timing));
  std::size_t files = 2;
  for (const mvrs::CellStats& cell : report.cells) {
    const std::string name =
        std::string("cell_") + mvrs::method_name(cell.method) + "_n" + std::to_string(cell.n) + ".json";
    mvrs::write_text_file((dir / name).string(),
                          mvrs::sim_cell(report, cell, timing).dump(2) + "\n");
    ++files;
  }
  if (!report.valid) {
    std::cerr << "warning: report flagged invalid (too many failed replicates or "
                 "full fit did not converge)\n";
  }
  std::cout << "wrote " << files << " files to " << a.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stratified subsampling estimators for logistic and Poisson regression"};
  app.require_subcommand(1);

  FitArgs est;
  CLI::App* estimate = app.add_subcommand("estimate", "fit a model on a CSV dataset");
  add_fit_options(estimate, est, false);
  estimate->add_option("--out", est.out, "report file")->required();
  estimate->add_option("--format", est.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}));

  SimArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "run a replicated subsampling experiment");
  simulate->add_option("--config", sim.config_path, "JSON experiment config")->required();
  simulate->add_option("--out-dir", sim.out_dir, "directory for report files")->required();
  simulate->add_option("--seed", sim.seed, "override the config seed")
      ->each([&sim](const std::string&) { sim.seed_set = true; });
  simulate->add_option("--replicates", sim.replicates, "override the replicate count")
      ->each([&sim](const std::string&) { sim.replicates_set = true; });
  simulate->add_flag("--no-timing", sim.no_timing, "omit timing sections so reruns compare byte for byte");

  FitArgs part;
  CLI::App* partition = app.add_subcommand("partition", "print the strata summary for a method");
  add_fit_options(partition, part, true);
  partition->add_option("--out", part.out, "write the summary here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed()) return cmd_estimate(est);
    if (simulate->parsed()) return cmd_simulate(sim);
    if (partition->parsed()) return cmd_partition(part);
  } catch (const mvrs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const mvrs::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
  } catch (const mvrs::OverflowError& e) {
    std::cerr << "overflow error: " << e.what() << "\n";
  } catch (const mvrs::SingularHessianError& e) {
    std::cerr << "singular hessian: " << e.what() << "\n";
  } catch (const mvrs::DivergedError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
  } catch (const mvrs::DegenerateVarianceError& e) {
    std::cerr << "variance error: " << e.what() << "\n";
  } catch (const mvrs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
