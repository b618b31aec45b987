#include "mvrs/pipeline.hpp"

#include <chrono>
#include <numeric>

namespace mvrs {

const char* method_name(Method m) {
  switch (m) {
    case Method::Full: return "full";
    case Method::Unif: return "unif";
    case Method::Opt: return "opt";
    case Method::MvrsU: return "mvrs-u";
    case Method::MvrsO: return "mvrs-o";
    case Method::OptMvrsU: return "optmvrs-u";
    case Method::OptMvrsO: return "optmvrs-o";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::Full, Method::Unif, Method::Opt, Method::MvrsU, Method::MvrsO,
                   Method::OptMvrsU, Method::OptMvrsO}) {
    if (name == method_name(m)) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

bool method_uses_optimal_probs(Method m) {
  return m == Method::Opt || m == Method::MvrsO || m == Method::OptMvrsO;
}

bool method_uses_scores(Method m) {
  return m == Method::MvrsU || m == Method::MvrsO || m == Method::OptMvrsU ||
         m == Method::OptMvrsO;
}

bool method_singleton_strata(Method m) {
  return m == Method::OptMvrsU || m == Method::OptMvrsO;
}

PilotStage run_pilot(const Dataset& data, Family f, std::size_t n0, std::uint64_t run_seed,
                     double tol, std::size_t max_iter) {
  if (n0 == 0) throw ConfigError("pilot size must be positive");
  if (n0 >= data.n_rows) throw ConfigError("pilot larger than dataset");
  PilotStage stage;
  stage.rows.data = &data;
  stage.rows.indices.resize(n0);
  stage.rows.weights.assign(n0, 1.0);
  Rng rng(derive_seed(run_seed, stream::kPilot));
  for (std::size_t t = 0; t < n0; ++t) {
    stage.rows.indices[t] = static_cast<std::uint32_t>(rng.next_below(data.n_rows));
  }
  stage.fit = fit(stage.rows, f, Vector(data.dim(), 0.0), tol, max_iter);
  return stage;
}

Partition single_stratum(std::size_t n_rows) {
  Partition part;
  part.k = 1;
  part.order.resize(n_rows);
  std::iota(part.order.begin(), part.order.end(), std::uint32_t{0});
  part.offsets = {0, n_rows};
  return part;
}

WeightedSample sample_from_draws(const Dataset& data, const StratPlan& plan,
                                 const std::vector<Draw>& draws) {
  if (draws.size() != plan.part.k) throw DimensionError("sample_from_draws: draws/plan mismatch");
  WeightedSample ws;
  ws.data = &data;
  std::size_t total = 0;
  for (const Draw& d : draws) total += d.indices.size();
  ws.indices.reserve(total);
  ws.weights.reserve(total);
  for (std::size_t j = 0; j < plan.part.k; ++j) {
    const Draw& d = draws[j];
    if (d.indices.size() != plan.alloc.counts[j]) {
      throw DimensionError("sample_from_draws: draw count disagrees with allocation");
    }
    if (d.indices.empty()) continue;
    const double scale = plan.alloc.masses[j] / static_cast<double>(d.indices.size());
    for (std::size_t t = 0; t < d.indices.size(); ++t) {
      ws.indices.push_back(d.indices[t]);
      ws.weights.push_back(scale / d.realized_probs[t]);
    }
  }
  return ws;
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

PipelineResult run_pipeline(const Dataset& data, Family f, const PipelineConfig& cfg) {
  using clock = std::chrono::steady_clock;
  PipelineResult res;
  const auto t_start = clock::now();

  if (cfg.method == Method::Full) {
    const auto t0 = clock::now();
    res.fit = full_fit(data, f, cfg.tol, cfg.max_iter);
    res.ms.fit = ms_since(t0);
    res.ms.total = ms_since(t_start);
    return res;
  }

  if (cfg.n == 0) throw ConfigError("subsample size must be positive");

  auto t0 = clock::now();
  PilotStage pilot = run_pilot(data, f, cfg.n0, cfg.seed, cfg.tol, cfg.max_iter);
  res.pilot_fit = pilot.fit;
  res.ms.pilot = ms_since(t0);

  t0 = clock::now();
  res.plan = method_uses_optimal_probs(cfg.method)
                 ? optimal_probs(data, f, pilot.fit, pilot.rows, cfg.min_prob_floor)
                 : uniform_probs(data.n_rows);
  res.ms.probs = ms_since(t0);

  Vector scores;
  if (method_uses_scores(cfg.method)) {
    t0 = clock::now();
    const Direction dir = leading_direction(data, f, pilot.fit, pilot.rows);
    res.direction_converged = dir.converged;
    scores = strat_scores(data, f, dir, pilot.fit.theta);
    res.ms.scores = ms_since(t0);
  }

  t0 = clock::now();
  if (method_singleton_strata(cfg.method)) {
    res.strat = optimal_partition(scores, res.plan.probs, cfg.n);
  } else {
    Partition part = method_uses_scores(cfg.method) ? partition_equal_count(scores, cfg.k)
                                                    : single_stratum(data.n_rows);
    Allocation alloc = res.plan.scheme == Scheme::Uniform
                           ? allocate_uniform(part, cfg.n)
                           : allocate(part, res.plan.probs, cfg.n);
    res.strat = StratPlan{std::move(part), std::move(alloc)};
  }
  res.ms.partition = ms_since(t0);

  t0 = clock::now();
  const std::vector<Draw> draws = stratified_draw(res.strat, res.plan.probs, cfg.seed);
  res.ms.draw = ms_since(t0);

  t0 = clock::now();
  const WeightedSample ws = sample_from_draws(data, res.strat, draws);
  res.fit = fit(ws, f, Vector(data.dim(), 0.0), cfg.tol, cfg.max_iter);
  res.ms.fit = ms_since(t0);

  if (cfg.want_variance) {
    t0 = clock::now();
    try {
      res.cov = plug_in_estimate(data, f, res.strat, draws, res.fit.theta);
    } catch (const DegenerateVarianceError&) {
      res.variance_degenerate = true;
    }
    res.ms.variance = ms_since(t0);
  }

  res.ms.total = ms_since(t_start);
  return res;
}

}  // namespace mvrs
