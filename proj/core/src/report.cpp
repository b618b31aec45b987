#include "mvrs/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mvrs {

namespace {

using nlohmann::json;

json vec_json(const Vector& v) { return json(v); }

json matrix_row_major(const Matrix& m) { return json(m.data()); }

json timing_json(const StepTimes& t) {
  return json{{"pilot", t.pilot},   {"probs", t.probs}, {"scores", t.scores},
              {"partition", t.partition}, {"draw", t.draw},   {"fit", t.fit},
              {"variance", t.variance},   {"total", t.total}};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json estimate_report(const EstimateContext& ctx, const PipelineResult& result,
                     bool include_timing) {
  json rep;
  rep["config"] = {{"input", ctx.input},
                   {"family", family_name(ctx.family)},
                   {"method", method_name(ctx.cfg.method)},
                   {"n", ctx.cfg.n},
                   {"n0", ctx.cfg.n0},
                   {"k", ctx.cfg.k},
                   {"seed", ctx.cfg.seed},
                   {"min_prob_floor", ctx.cfg.min_prob_floor},
                   {"rows", ctx.rows},
                   {"covariates", ctx.covariates}};
  rep["estimate"] = {{"theta", vec_json(result.fit.theta)},
                     {"converged", result.fit.converged},
                     {"iterations", result.fit.iterations},
                     {"final_grad_norm", result.fit.final_grad_norm}};
  if (result.cov) {
    rep["variance"] = {{"v_hat", matrix_row_major(result.cov->v_hat)},
                       {"mse_hat", result.cov->mse_hat}};
  } else {
    rep["variance"] = nullptr;
    if (result.variance_degenerate) {
      rep["variance_note"] = "degenerate: every stratum has at most one draw";
    } else if (ctx.cfg.method == Method::Full) {
      rep["variance_note"] = "not computed for the full-data fit";
    } else {
      rep["variance_note"] = "not requested";
    }
  }
  if (ctx.cfg.method == Method::Full) {
    rep["strata"] = nullptr;
  } else {
    rep["strata"] = {{"k", result.strat.part.k},
                     {"masses", vec_json(result.strat.alloc.masses)},
                     {"alloc", json(result.strat.alloc.counts)},
                     {"empty_count", result.strat.alloc.empty}};
  }
  if (include_timing) rep["timing_ms"] = timing_json(result.ms);
  return rep;
}

std::string estimate_report_csv(const EstimateContext& ctx, const PipelineResult& result,
                                bool include_timing) {
  std::string out = "key,value\n";
  auto add = [&out](const std::string& k, const std::string& v) { out += k + "," + v + "\n"; };
  add("family", family_name(ctx.family));
  add("method", method_name(ctx.cfg.method));
  add("n", std::to_string(ctx.cfg.n));
  add("n0", std::to_string(ctx.cfg.n0));
  add("k", std::to_string(ctx.cfg.k));
  add("seed", std::to_string(ctx.cfg.seed));
  add("rows", std::to_string(ctx.rows));
  add("covariates", std::to_string(ctx.covariates));
  for (std::size_t i = 0; i < result.fit.theta.size(); ++i) {
    add("theta_" + std::to_string(i), fmt17(result.fit.theta[i]));
  }
  add("converged", result.fit.converged ? "true" : "false");
  add("iterations", std::to_string(result.fit.iterations));
  if (result.cov) {
    add("mse_hat", fmt17(result.cov->mse_hat));
    const Matrix& v = result.cov->v_hat;
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j)
        add("v_hat_" + std::to_string(i) + "_" + std::to_string(j), fmt17(v(i, j)));
  }
  if (ctx.cfg.method != Method::Full) {
    add("strata_k", std::to_string(result.strat.part.k));
    add("strata_empty", std::to_string(result.strat.alloc.empty));
  }
  if (include_timing) add("total_ms", fmt17(result.ms.total));
  return out;
}

namespace {

bool fail(std::string* why, const std::string& msg) {
  if (why) *why = msg;
  return false;
}

bool is_uint(const json& j) { return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0); }

bool numeric_array(const json& j, std::size_t want, std::string* why, const std::string& name) {
  if (!j.is_array()) return fail(why, name + " must be an array");
  if (want != std::size_t(-1) && j.size() != want) {
    return fail(why, name + " must have " + std::to_string(want) + " entries");
  }
  for (const auto& e : j)
    if (!e.is_number()) return fail(why, name + " must contain numbers");
  return true;
}

}  // namespace

bool validate_estimate_report(const json& rep, std::string* why) {
  if (!rep.is_object()) return fail(why, "report must be an object");
  for (const char* key : {"config", "estimate", "variance", "strata"}) {
    if (!rep.contains(key)) return fail(why, std::string("missing key ") + key);
  }
  const json& cfg = rep["config"];
  if (!cfg.is_object()) return fail(why, "config must be an object");
  for (const char* key : {"input", "family", "method"}) {
    if (!cfg.contains(key) || !cfg[key].is_string()) {
      return fail(why, std::string("config.") + key + " must be a string");
    }
  }
  for (const char* key : {"n", "n0", "k", "seed", "rows", "covariates"}) {
    if (!cfg.contains(key) || !is_uint(cfg[key])) {
      return fail(why, std::string("config.") + key + " must be a nonnegative integer");
    }
  }
  if (!cfg.contains("min_prob_floor") || !cfg["min_prob_floor"].is_number()) {
    return fail(why, "config.min_prob_floor must be a number");
  }
  const std::size_t d = cfg["covariates"].get<std::size_t>() + 1;

  const json& est = rep["estimate"];
  if (!est.is_object()) return fail(why, "estimate must be an object");
  if (!est.contains("theta") || !numeric_array(est["theta"], d, why, "estimate.theta")) {
    return why && !why->empty() ? false : fail(why, "estimate.theta invalid");
  }
  if (!est.contains("converged") || !est["converged"].is_boolean()) {
    return fail(why, "estimate.converged must be a boolean");
  }
  if (!est.contains("iterations") || !is_uint(est["iterations"])) {
    return fail(why, "estimate.iterations must be a nonnegative integer");
  }
  if (!est.contains("final_grad_norm") || !est["final_grad_norm"].is_number()) {
    return fail(why, "estimate.final_grad_norm must be a number");
  }

  const json& var = rep["variance"];
  if (!var.is_null()) {
    if (!var.is_object()) return fail(why, "variance must be null or an object");
    if (!var.contains("v_hat") || !numeric_array(var["v_hat"], d * d, why, "variance.v_hat")) {
      return why && !why->empty() ? false : fail(why, "variance.v_hat invalid");
    }
    if (!var.contains("mse_hat") || !var["mse_hat"].is_number()) {
      return fail(why, "variance.mse_hat must be a number");
    }
  }

  const json& strata = rep["strata"];
  if (!strata.is_null()) {
    if (!strata.is_object()) return fail(why, "strata must be null or an object");
    if (!strata.contains("k") || !is_uint(strata["k"])) return fail(why, "strata.k must be an integer");
    const std::size_t k = strata["k"].get<std::size_t>();
    if (k < 1) return fail(why, "strata.k must be at least one");
    if (!strata.contains("masses") || !numeric_array(strata["masses"], k, why, "strata.masses")) {
      return why && !why->empty() ? false : fail(why, "strata.masses invalid");
    }
    if (!strata.contains("alloc") || !strata["alloc"].is_array() || strata["alloc"].size() != k) {
      return fail(why, "strata.alloc must be an array of k integers");
    }
    for (const auto& e : strata["alloc"])
      if (!is_uint(e)) return fail(why, "strata.alloc must contain nonnegative integers");
    if (!strata.contains("empty_count") || !is_uint(strata["empty_count"])) {
      return fail(why, "strata.empty_count must be an integer");
    }
  }

  if (rep.contains("timing_ms")) {
    const json& t = rep["timing_ms"];
    if (!t.is_object()) return fail(why, "timing_ms must be an object");
    for (const auto& [key, val] : t.items()) {
      if (!val.is_number()) return fail(why, "timing_ms." + key + " must be a number");
    }
  }
  if (why) why->clear();
  return true;
}

namespace {

json config_json(const SimConfig& cfg) {
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(method_name(m));
  return json{{"family", family_name(cfg.family)},
              {"covariate_case", cfg.covariate_case},
              {"rows", cfg.n_rows},
              {"covariates", cfg.n_cov},
              {"theta_true", cfg.theta_true},
              {"n_values", cfg.n_values},
              {"n0", cfg.n0},
              {"k", cfg.k},
              {"replicates", cfg.replicates},
              {"methods", methods},
              {"seed", cfg.seed},
              {"min_prob_floor", cfg.min_prob_floor},
              {"estimate_mse", cfg.estimate_mse}};
}

json cell_json_inner(const CellStats& c, bool include_timing) {
  json cell{{"method", method_name(c.method)},
            {"n", c.n},
            {"mse", c.mse},
            {"se", c.se},
            {"bias", c.bias},
            {"mean_mse_hat", c.mse_hat_count ? json(c.mean_mse_hat) : json(nullptr)},
            {"mse_hat_count", c.mse_hat_count},
            {"failures", c.failures},
            {"replicates_used", c.replicates_used},
            {"valid", c.valid}};
  if (include_timing) {
    cell["wall_ms_mean"] = c.wall_ms_mean;
    cell["wall_ms_median"] = c.wall_ms_median;
  }
  return cell;
}

}  // namespace

json sim_summary(const SimReport& report, bool include_timing) {
  json cells = json::array();
  for (const CellStats& c : report.cells) cells.push_back(cell_json_inner(c, include_timing));
  json rep{{"config", config_json(report.config)},
           {"theta_full", report.theta_full},
           {"full_converged", report.full_converged},
           {"valid", report.valid},
           {"cells", cells}};
  if (include_timing) rep["total_seconds"] = report.total_seconds;
  return rep;
}

std::string sim_summary_csv(const SimReport& report, bool include_timing) {
  std::string out = "method,n,mse,mean_mse_hat,failures,replicates_used,valid";
  if (include_timing) out += ",wall_ms_mean,wall_ms_median";
  out += "\n";
  for (const CellStats& c : report.cells) {
    out += method_name(c.method);
    out += "," + std::to_string(c.n);
    out += "," + fmt17(c.mse);
    out += ",";
    out += c.mse_hat_count ? fmt17(c.mean_mse_hat) : "";
    out += "," + std::to_string(c.failures);
    out += "," + std::to_string(c.replicates_used);
    out += ",";
    out += c.valid ? "true" : "false";
    if (include_timing) {
      out += "," + fmt17(c.wall_ms_mean);
      out += "," + fmt17(c.wall_ms_median);
    }
    out += "\n";
  }
  return out;
}

json sim_cell(const SimReport& report, const CellStats& cell, bool include_timing) {
  return json{{"config", config_json(report.config)},
              {"theta_full", report.theta_full},
              {"cell", cell_json_inner(cell, include_timing)}};
}

json strata_report(const PipelineResult& result, bool include_timing) {
  json rep{{"k", result.strat.part.k},
           {"boundaries", result.strat.part.boundaries},
           {"masses", result.strat.alloc.masses},
           {"alloc", result.strat.alloc.counts},
           {"empty_count", result.strat.alloc.empty},
           {"direction_converged", result.direction_converged}};
  json sizes = json::array();
  for (std::size_t j = 0; j < result.strat.part.k; ++j) {
    sizes.push_back(result.strat.part.stratum_size(j));
  }
  rep["sizes"] = sizes;
  if (include_timing) rep["timing_ms"] = timing_json(result.ms);
  return rep;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace mvrs
