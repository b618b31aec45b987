#include "mvrs/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace mvrs {

void validate_config(const SimConfig& cfg) {
  if (cfg.replicates == 0) throw ConfigError("replicates must be positive");
  if (cfg.methods.empty()) throw ConfigError("no methods requested");
  if (cfg.n_values.empty()) throw ConfigError("no subsample sizes requested");
  for (std::size_t n : cfg.n_values) {
    if (n == 0) throw ConfigError("subsample sizes must be positive");
  }
  for (Method m : cfg.methods) {
    if (m == Method::Full) throw ConfigError("'full' is not a subsampling method");
  }
  if (cfg.covariate_case < 1 || cfg.covariate_case > 4) {
    throw ConfigError("covariate_case must be between 1 and 4");
  }
  if (cfg.n_rows < 2) throw ConfigError("dataset needs at least two rows");
  if (cfg.n_cov == 0) throw ConfigError("need at least one covariate");
  if (!cfg.theta_true.empty() && cfg.theta_true.size() != cfg.n_cov + 1) {
    throw ConfigError("theta_true must have length n_cov + 1");
  }
  if (cfg.n0 <= cfg.n_cov) throw ConfigError("pilot size must exceed the parameter dimension");
  if (cfg.n0 >= cfg.n_rows) throw ConfigError("pilot larger than dataset");
  if (cfg.k == 0) throw ConfigError("need at least one stratum");
  if (cfg.k > cfg.n_rows) throw ConfigError("more strata than rows");
  if (cfg.min_prob_floor < 0.0 || cfg.min_prob_floor >= 1.0) {
    throw ConfigError("min_prob_floor must be in [0,1)");
  }
}

void gen_covariates(int covariate_case, std::size_t rows, std::size_t n_cov, Rng& rng,
                    std::vector<double>& out) {
  out.resize(rows * n_cov);
  switch (covariate_case) {
    case 1:
      for (double& v : out) v = rng.next_normal();
      break;
    case 2:
      for (double& v : out) v = 1.0 + rng.next_normal();
      break;
    case 3: {
      // Correlation 0.5^|i-j|; rows are the Cholesky factor times iid normals.
      Matrix sigma(n_cov, n_cov);
      for (std::size_t i = 0; i < n_cov; ++i)
        for (std::size_t j = 0; j < n_cov; ++j)
          sigma(i, j) = std::pow(0.5, std::abs(static_cast<double>(i) - static_cast<double>(j)));
      const Matrix l = cholesky(sigma);
      Vector eps(n_cov);
      for (std::size_t r = 0; r < rows; ++r) {
        for (double& e : eps) e = rng.next_normal();
        double* row = out.data() + r * n_cov;
        for (std::size_t j = 0; j < n_cov; ++j) {
          double acc = 0.0;
          for (std::size_t l2 = 0; l2 <= j; ++l2) acc += l(j, l2) * eps[l2];
          row[j] = acc;
        }
      }
      break;
    }
    case 4:
      for (double& v : out) v = rng.next_exponential();
      break;
    default:
      throw ConfigError("covariate_case must be between 1 and 4");
  }
}

void gen_response(Dataset& data, Family f, std::span<const double> theta, Rng& rng) {
  if (theta.size() != data.dim()) throw DimensionError("gen_response: parameter length mismatch");
  data.y.resize(data.n_rows);
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    const double e = glm::eta(data.row(i), theta);
    if (f == Family::Logistic) {
      data.y[i] = rng.next_double() < glm::sigmoid(e) ? 1.0 : 0.0;
    } else {
      if (e > kMaxPoissonEta) {
        throw OverflowError("gen_response: poisson rate overflows at row " + std::to_string(i + 1));
      }
      data.y[i] = static_cast<double>(rng.next_poisson(std::exp(e)));
    }
  }
}

Dataset gen_dataset(const SimConfig& cfg) {
  Dataset data;
  data.n_rows = cfg.n_rows;
  data.n_cov = cfg.n_cov;
  Rng cov_rng(derive_seed(cfg.seed, stream::kCovariates));
  gen_covariates(cfg.covariate_case, cfg.n_rows, cfg.n_cov, cov_rng, data.x);
  Vector theta = cfg.theta_true.empty() ? Vector(cfg.n_cov + 1, 0.5) : cfg.theta_true;
  Rng resp_rng(derive_seed(cfg.seed, stream::kResponse));
  gen_response(data, cfg.family, theta, resp_rng);
  return data;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct CellAcc {
  double sum_sq = 0.0;
  Vector sum_dev, sum_sq_dev;
  std::size_t used = 0, failures = 0;
  double sum_mse_hat = 0.0;
  std::size_t mse_hat_count = 0;
  std::vector<double> wall_ms;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

SimReport run_experiment(const SimConfig& raw_cfg) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  SimConfig cfg = raw_cfg;
  if (cfg.theta_true.empty()) cfg.theta_true.assign(cfg.n_cov + 1, 0.5);
  validate_config(cfg);

  SimReport report;
  report.config = cfg;

  const Dataset data = gen_dataset(cfg);
  const FitResult full = full_fit(data, cfg.family, cfg.tol, cfg.max_iter);
  report.theta_full = full.theta;
  report.full_converged = full.converged;

  const std::size_t d = data.dim();
  const std::size_t n_methods = cfg.methods.size();
  const std::size_t n_sizes = cfg.n_values.size();
  std::vector<CellAcc> acc(n_methods * n_sizes);
  for (CellAcc& a : acc) {
    a.sum_dev.assign(d, 0.0);
    a.sum_sq_dev.assign(d, 0.0);
  }
  auto cell_index = [n_sizes](std::size_t mi, std::size_t ni) { return mi * n_sizes + ni; };

  bool need_opt = false, need_scores = false, need_eq = false, need_sort = false;
  for (Method m : cfg.methods) {
    need_opt = need_opt || method_uses_optimal_probs(m);
    need_scores = need_scores || method_uses_scores(m);
    need_eq = need_eq || m == Method::MvrsU || m == Method::MvrsO;
    need_sort = need_sort || method_singleton_strata(m);
  }

  const SamplingPlan plan_unif = uniform_probs(data.n_rows);
  const Partition one_stratum = single_stratum(data.n_rows);
  const Vector one_masses_unif = stratum_masses(one_stratum, plan_unif.probs);

  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t run_seed = derive_seed(cfg.seed, stream::kReplicate, r);

    // Shared per-replicate stages. A failed stage fails only the cells that
    // depend on it; timings are attributed to cells as if each ran alone.
    auto t0 = clock::now();
    std::optional<PilotStage> pilot;
    try {
      PilotStage p = run_pilot(data, cfg.family, cfg.n0, run_seed, cfg.tol, cfg.max_iter);
      if (p.fit.converged) pilot.emplace(std::move(p));
    } catch (const Error&) {
    }
    const double pilot_ms = ms_since(t0);
    if (!pilot) {
      for (CellAcc& a : acc) ++a.failures;
      continue;
    }

    std::optional<SamplingPlan> plan_opt;
    double opt_ms = 0.0;
    if (need_opt) {
      t0 = clock::now();
      try {
        plan_opt.emplace(
            optimal_probs(data, cfg.family, pilot->fit, pilot->rows, cfg.min_prob_floor));
      } catch (const Error&) {
      }
      opt_ms = ms_since(t0);
    }

    std::optional<Vector> scores;
    double scores_ms = 0.0;
    if (need_scores) {
      t0 = clock::now();
      try {
        const Direction dir = leading_direction(data, cfg.family, pilot->fit, pilot->rows);
        scores.emplace(strat_scores(data, cfg.family, dir, pilot->fit.theta));
      } catch (const Error&) {
      }
      scores_ms = ms_since(t0);
    }

    std::optional<Partition> eq_part;
    double eq_ms = 0.0;
    if (need_eq && scores) {
      t0 = clock::now();
      try {
        eq_part.emplace(partition_equal_count(*scores, cfg.k));
      } catch (const Error&) {
      }
      eq_ms = ms_since(t0);
    }

    std::optional<Vector> eq_masses_unif, eq_masses_opt;
    double eq_mass_unif_ms = 0.0, eq_mass_opt_ms = 0.0;
    if (eq_part) {
      t0 = clock::now();
      eq_masses_unif.emplace(stratum_masses(*eq_part, plan_unif.probs));
      eq_mass_unif_ms = ms_since(t0);
      if (plan_opt) {
        t0 = clock::now();
        eq_masses_opt.emplace(stratum_masses(*eq_part, plan_opt->probs));
        eq_mass_opt_ms = ms_since(t0);
      }
    }

    std::optional<Vector> opt_one_masses;
    if (plan_opt) opt_one_masses.emplace(stratum_masses(one_stratum, plan_opt->probs));

    std::optional<std::vector<std::uint32_t>> sorted;
    double sort_ms = 0.0;
    if (need_sort && scores) {
      t0 = clock::now();
      sorted.emplace(sort_by_score(*scores));
      sort_ms = ms_since(t0);
    }

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const Method m = cfg.methods[mi];
      const bool opt_probs = method_uses_optimal_probs(m);
      const SamplingPlan* plan = opt_probs ? (plan_opt ? &*plan_opt : nullptr) : &plan_unif;
      for (std::size_t ni = 0; ni < n_sizes; ++ni) {
        const std::size_t n = cfg.n_values[ni];
        CellAcc& a = acc[cell_index(mi, ni)];

        bool ok = plan != nullptr;
        double shared_ms = pilot_ms + (opt_probs ? opt_ms : 0.0);
        if (method_uses_scores(m)) {
          ok = ok && scores.has_value();
          shared_ms += scores_ms;
        }
        if (m == Method::MvrsU || m == Method::MvrsO) {
          ok = ok && eq_part.has_value();
          shared_ms += eq_ms + (opt_probs ? eq_mass_opt_ms : eq_mass_unif_ms);
          ok = ok && (opt_probs ? eq_masses_opt.has_value() : eq_masses_unif.has_value());
        }
        if (method_singleton_strata(m)) {
          ok = ok && sorted.has_value();
          shared_ms += sort_ms;
        }
        if (!ok) {
          ++a.failures;
          continue;
        }

        t0 = clock::now();
        bool fitted = false;
        Vector theta_r;
        std::optional<double> mse_hat_r;
        try {
          StratPlan sp;
          if (method_singleton_strata(m)) {
            sp = optimal_partition_sorted(*sorted, *scores, plan->probs, n);
          } else if (m == Method::MvrsU || m == Method::MvrsO) {
            sp.part = *eq_part;
            sp.alloc.masses = opt_probs ? *eq_masses_opt : *eq_masses_unif;
            sp.alloc.counts = allocate_counts(sp.alloc.masses, n);
            for (std::size_t c : sp.alloc.counts)
              if (c == 0) ++sp.alloc.empty;
          } else {
            sp.part = one_stratum;
            sp.alloc.masses = opt_probs ? *opt_one_masses : one_masses_unif;
            sp.alloc.counts = {n};
          }
          const std::vector<Draw> draws = stratified_draw(sp, plan->probs, run_seed);
          const WeightedSample ws = sample_from_draws(data, sp, draws);
          const FitResult fr = fit(ws, cfg.family, Vector(d, 0.0), cfg.tol, cfg.max_iter);
          if (fr.converged) {
            fitted = true;
            theta_r = fr.theta;
            if (cfg.estimate_mse && !method_singleton_strata(m)) {
              try {
                mse_hat_r = plug_in_estimate(data, cfg.family, sp, draws, fr.theta).mse_hat;
              } catch (const DegenerateVarianceError&) {
              }
            }
          }
        } catch (const Error&) {
        }
        const double cell_ms = shared_ms + ms_since(t0);

        if (!fitted) {
          ++a.failures;
          continue;
        }
        a.wall_ms.push_back(cell_ms);
        ++a.used;
        double sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double dev = theta_r[c] - report.theta_full[c];
          a.sum_dev[c] += dev;
          a.sum_sq_dev[c] += dev * dev;
          sq += dev * dev;
        }
        a.sum_sq += sq;
        if (mse_hat_r) {
          a.sum_mse_hat += *mse_hat_r;
          ++a.mse_hat_count;
        }
      }
    }
  }

  report.cells.reserve(acc.size());
  bool all_valid = report.full_converged;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t ni = 0; ni < n_sizes; ++ni) {
      const CellAcc& a = acc[cell_index(mi, ni)];
      CellStats cs;
      cs.method = cfg.methods[mi];
      cs.n = cfg.n_values[ni];
      cs.replicates_used = a.used;
      cs.failures = a.failures;
      const double used = static_cast<double>(a.used);
      cs.mse = a.used ? a.sum_sq / used : kNan;
      cs.se.resize(d);
      cs.bias.resize(d);
      for (std::size_t c = 0; c < d; ++c) {
        cs.se[c] = a.used ? std::sqrt(a.sum_sq_dev[c] / used) : kNan;
        cs.bias[c] = a.used ? a.sum_dev[c] / used : kNan;
      }
      cs.mse_hat_count = a.mse_hat_count;
      cs.mean_mse_hat =
          a.mse_hat_count ? a.sum_mse_hat / static_cast<double>(a.mse_hat_count) : kNan;
      cs.wall_ms_mean = 0.0;
      for (double w : a.wall_ms) cs.wall_ms_mean += w;
      if (!a.wall_ms.empty()) cs.wall_ms_mean /= static_cast<double>(a.wall_ms.size());
      cs.wall_ms_median = median_of(a.wall_ms);
      cs.valid = a.used > 0 && static_cast<double>(a.failures) <=
                                   0.05 * static_cast<double>(cfg.replicates);
      all_valid = all_valid && cs.valid;
      report.cells.push_back(std::move(cs));
    }
  }
  report.valid = all_valid;
  report.total_seconds =
      std::chrono::duration<double>(clock::now() - t_start).count();
  return report;
}

}  // namespace mvrs
