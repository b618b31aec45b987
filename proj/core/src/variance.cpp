#include "mvrs/variance.hpp"

#include <cmath>
#include <string>

namespace mvrs {

namespace {

void check_probs(std::span<const double> probs, std::size_t n_rows) {
  if (probs.size() != n_rows) throw DimensionError("variance: probability length mismatch");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0) || !std::isfinite(probs[i])) {
      throw InvalidValueError("variance: probabilities must be positive, bad row " +
                              std::to_string(i + 1));
    }
  }
}

// M = [N^{-1} sum_i hess_i]^{-1} over the full dataset.
Matrix full_rescale_matrix(const Dataset& data, Family f, std::span<const double> theta) {
  const std::size_t d = data.dim();
  Matrix acc(d, d);
  Vector xt(d);
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    const auto z = data.row(i);
    xt[0] = 1.0;
    std::copy(z.begin(), z.end(), xt.begin() + 1);
    const double e = glm::eta(z, theta);
    if (f == Family::Poisson && e > kMaxPoissonEta) {
      throw OverflowError("variance: poisson linear predictor exceeds 700 at row " +
                          std::to_string(i + 1));
    }
    add_outer(acc, xt, -glm::var_weight(e, f));
  }
  acc *= 1.0 / static_cast<double>(data.n_rows);
  return inverse(acc);
}

// All phi_i = M ldot_i, one row of length d per observation.
std::vector<Vector> all_phi(const Dataset& data, Family f, std::span<const double> theta) {
  const std::size_t d = data.dim();
  const Matrix m = full_rescale_matrix(data, f, theta);
  std::vector<Vector> phi(data.n_rows, Vector(d));
  Vector xt(d);
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    const auto z = data.row(i);
    xt[0] = 1.0;
    std::copy(z.begin(), z.end(), xt.begin() + 1);
    const double resid = data.y[i] - glm::mean_value(glm::eta(z, theta), f);
    for (std::size_t r = 0; r < d; ++r) {
      double a = 0.0;
      for (std::size_t c = 0; c < d; ++c) a += m(r, c) * xt[c];
      phi[i][r] = resid * a;
    }
  }
  return phi;
}

}  // namespace

Matrix exact_v_sub(const Dataset& data, Family f, std::span<const double> probs,
                   std::span<const double> theta) {
  check_probs(probs, data.n_rows);
  const std::size_t d = data.dim();
  const std::vector<Vector> phi = all_phi(data, f, theta);
  Matrix v(d, d);
  for (std::size_t i = 0; i < data.n_rows; ++i) add_outer(v, phi[i], 1.0 / probs[i]);
  const double nn = static_cast<double>(data.n_rows);
  v *= 1.0 / (nn * nn);
  symmetrize(v);
  return v;
}

Matrix exact_v_str(const Dataset& data, Family f, std::span<const double> probs,
                   const Partition& part, std::span<const double> theta) {
  check_probs(probs, data.n_rows);
  if (part.order.size() != data.n_rows) throw DimensionError("exact_v_str: partition mismatch");
  const std::size_t d = data.dim();
  const std::vector<Vector> phi = all_phi(data, f, theta);
  Matrix v(d, d);
  Vector dev(d);
  for (std::size_t j = 0; j < part.k; ++j) {
    const auto rows = part.stratum(j);
    double mass = 0.0;
    Vector total(d, 0.0);
    for (std::uint32_t i : rows) {
      mass += probs[i];
      for (std::size_t r = 0; r < d; ++r) total[r] += phi[i][r];
    }
    if (!(mass > 0.0)) {
      throw InvalidValueError("exact_v_str: stratum " + std::to_string(j + 1) + " has zero mass");
    }
    for (std::uint32_t i : rows) {
      const double ratio = mass / probs[i];
      for (std::size_t r = 0; r < d; ++r) dev[r] = ratio * phi[i][r] - total[r];
      add_outer(v, dev, probs[i] / (mass * mass));
    }
  }
  const double nn = static_cast<double>(data.n_rows);
  v *= 1.0 / (nn * nn);
  symmetrize(v);
  return v;
}

Matrix exact_diff_rhs(const Dataset& data, Family f, std::span<const double> probs,
                      const Partition& part, std::span<const double> theta) {
  check_probs(probs, data.n_rows);
  if (part.order.size() != data.n_rows) throw DimensionError("exact_diff_rhs: partition mismatch");
  const std::size_t d = data.dim();
  const double nn = static_cast<double>(data.n_rows);
  const std::vector<Vector> phi = all_phi(data, f, theta);

  // Per stratum: mass share q_j, count share p_j, conditional mean m_j of phi.
  // The removed variance is Var under q of (p_j/q_j) m_j, scaled by 1/N.
  Matrix second(d, d);
  Vector mean_z(d, 0.0), zj(d);
  for (std::size_t j = 0; j < part.k; ++j) {
    const auto rows = part.stratum(j);
    double mass = 0.0;
    Vector cond_mean(d, 0.0);
    for (std::uint32_t i : rows) {
      mass += probs[i];
      for (std::size_t r = 0; r < d; ++r) cond_mean[r] += phi[i][r];
    }
    if (!(mass > 0.0)) {
      throw InvalidValueError("exact_diff_rhs: stratum " + std::to_string(j + 1) +
                              " has zero mass");
    }
    const double count_share = static_cast<double>(rows.size()) / nn;
    const double mass_share = mass / nn;
    for (std::size_t r = 0; r < d; ++r) cond_mean[r] /= static_cast<double>(rows.size());
    const double ratio = count_share / mass_share;
    for (std::size_t r = 0; r < d; ++r) zj[r] = ratio * cond_mean[r];
    add_outer(second, zj, mass_share);
    for (std::size_t r = 0; r < d; ++r) mean_z[r] += mass_share * zj[r];
  }
  add_outer(second, mean_z, -1.0);
  second *= 1.0 / nn;
  symmetrize(second);
  return second;
}

CovEstimate plug_in_estimate(const Dataset& data, Family f, const StratPlan& plan,
                             const std::vector<Draw>& draws, std::span<const double> theta_hat) {
  const Partition& part = plan.part;
  const std::size_t d = data.dim();
  if (theta_hat.size() != d) throw DimensionError("plug_in_estimate: parameter length mismatch");
  if (draws.size() != part.k || plan.alloc.masses.size() != part.k) {
    throw DimensionError("plug_in_estimate: plan and draws disagree");
  }

  CovEstimate out;
  std::size_t n_total = 0;
  std::size_t usable = 0;
  for (std::size_t j = 0; j < part.k; ++j) {
    n_total += draws[j].indices.size();
    if (draws[j].indices.size() == 1) ++out.singleton_strata;
    if (draws[j].indices.empty()) ++out.skipped_strata;
    if (draws[j].indices.size() >= 2) ++usable;
  }
  if (usable == 0) {
    throw DegenerateVarianceError(
        "plug_in_estimate: every stratum has at most one draw, covariance is degenerate");
  }

  // Mass shares: a no-op for a valid plan, but keeps the estimate invariant
  // under joint rescaling of realized probabilities and masses.
  double mass_total = 0.0;
  for (double m : plan.alloc.masses) mass_total += m;
  if (!(mass_total > 0.0)) throw InvalidValueError("plug_in_estimate: zero total mass");

  const double nn = static_cast<double>(data.n_rows);
  Matrix minv(d, d);
  Matrix phi(d, d);
  Vector xt(d), wscore(d), dev(d);
  std::vector<Vector> scores;
  for (std::size_t j = 0; j < part.k; ++j) {
    const Draw& dj = draws[j];
    const std::size_t mj = dj.indices.size();
    if (mj == 0) continue;
    const double mass = plan.alloc.masses[j];
    const double share = mass / mass_total;
    const double mjf = static_cast<double>(mj);

    scores.assign(mj, Vector(d));
    Vector gbar(d, 0.0);
    for (std::size_t t = 0; t < mj; ++t) {
      const std::size_t i = dj.indices[t];
      const double pstar = dj.realized_probs[t];
      if (!(pstar > 0.0)) throw InvalidValueError("plug_in_estimate: nonpositive realized prob");
      const auto z = data.row(i);
      xt[0] = 1.0;
      std::copy(z.begin(), z.end(), xt.begin() + 1);
      const double e = glm::eta(z, theta_hat);
      if (f == Family::Poisson && e > kMaxPoissonEta) {
        throw OverflowError("plug_in_estimate: poisson linear predictor exceeds 700");
      }
      const double ratio = mass / pstar;
      add_outer(minv, xt, -glm::var_weight(e, f) * ratio / mjf);
      const double resid = data.y[i] - glm::mean_value(e, f);
      for (std::size_t r = 0; r < d; ++r) {
        wscore[r] = ratio * resid * xt[r];
        gbar[r] += wscore[r] / mjf;
        scores[t][r] = wscore[r];
      }
    }
    const double prefactor = 1.0 / (mjf * share);
    for (std::size_t t = 0; t < mj; ++t) {
      for (std::size_t r = 0; r < d; ++r) dev[r] = scores[t][r] - gbar[r];
      add_outer(phi, dev, prefactor);
    }
  }
  minv *= 1.0 / nn;
  phi *= 1.0 / (nn * nn);
  symmetrize(phi);

  out.m_hat = inverse(minv);
  out.phi_hat = phi;
  out.v_hat = matmul(matmul(out.m_hat, phi), transpose(out.m_hat));
  symmetrize(out.v_hat);
  out.mse_hat = trace(out.v_hat) / static_cast<double>(n_total);
  return out;
}

}  // namespace mvrs
