#include "rtfa/rank_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "projection.hpp"
#include "rtfa/errors.hpp"

namespace rtfa {

namespace {

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

// Eigenvalues at rounding level relative to the largest carry no signal; zero
// them so tail ratios of pure rounding noise cannot win the argmax.
std::vector<double> numerically_nonzero(const std::vector<double>& values) {
  std::vector<double> out = values;
  const double floor = values.empty() ? 0.0 : 1e-12 * std::max(values.front(), 0.0);
  for (double& v : out)
    if (v <= floor) v = 0.0;
  return out;
}

}  // namespace

RateConstants rate_constants(std::span<const std::size_t> dims, std::size_t T) {
  if (dims.empty() || T == 0) throw DimensionError("rate_constants: empty dims or T = 0");
  std::uint64_t p = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError("rate_constants: dimensions must be positive");
    p = sat_mul(p, d);
  }
  const std::uint64_t t = T;
  RateConstants rc;
  rc.L = p;
  rc.L_star = p;
  rc.L_star_star = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t d : dims) {
    const std::uint64_t p_minus = p / d;
    rc.L = std::min(rc.L, sat_mul(t, p_minus));
    rc.L_star = std::min({rc.L_star, sat_mul(p_minus, p_minus), sat_mul(t, p_minus)});
    rc.L_star_star = std::min(rc.L_star_star, p_minus);
  }
  for (std::size_t d : dims) {
    const std::uint64_t p_minus = p / d;
    rc.omega.push_back(std::min({sat_mul(d, t), sat_mul(p_minus, p_minus), rc.L}));
  }
  return rc;
}

std::size_t eigenvalue_ratio_pick(std::span<const double> values, double penalty,
                                  std::size_t r_max) {
  if (r_max == 0) throw DimensionError("eigenvalue_ratio_pick: r_max must be positive");
  if (values.size() < r_max + 1)
    throw DimensionError("eigenvalue_ratio_pick: need at least r_max + 1 eigenvalues");
  if (!(penalty >= 0.0)) throw DimensionError("eigenvalue_ratio_pick: negative penalty");
  std::size_t best = 1;
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= r_max; ++j) {
    const double den = values[j] + penalty;
    double ratio;
    if (den > 0.0) {
      ratio = values[j - 1] / den;
    } else {
      // 0/0 carries no information; a positive numerator over zero dominates.
      ratio = values[j - 1] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = j;
    }
  }
  return best;
}

RankResult estimate_ranks(const TensorSeries& x, const RankConfig& config) {
  detail::require_finite(x);
  if (config.r_max == 0) throw DimensionError("r_max must be positive");
  if (!(config.c >= 0.0)) throw DimensionError("penalty constant c must be nonnegative");
  if (config.max_iter < 1) throw DimensionError("max_iter must be at least 1");

  const Dims& dims = x.dims();
  const std::size_t order = dims.size();
  RankResult result;

  for (std::size_t k = 0; k < order; ++k) {
    if (dims[k] < config.r_max + 1)
      throw DimensionError("mode " + std::to_string(k) + " has dimension " +
                           std::to_string(dims[k]) + ", too small for r_max = " +
                           std::to_string(config.r_max));
    if (dims[k] < config.r_max + 2)
      result.warnings.push_back("mode " + std::to_string(k) +
                                ": inflated rank clamped to dimension " + std::to_string(dims[k]));
  }

  const RateConstants rc = rate_constants(dims, x.length());
  result.penalties.resize(order);
  for (std::size_t k = 0; k < order; ++k) {
    double rate;
    if (config.method == Method::least_squares) {
      rate = static_cast<double>(rc.omega[k]);
    } else {
      rate = static_cast<double>(config.epsilon_regime == EpsilonRegime::ge2 ? rc.L_star
                                                                             : rc.L_star_star);
    }
    result.penalties[k] = config.c / std::sqrt(rate);
  }

  std::vector<std::size_t> ranks(order, config.r_max);
  LoadingSet current = initial_estimator(x, ranks);

  std::optional<double> tau;
  if (config.method == Method::huber) {
    if (const auto* fixed = std::get_if<FixedTau>(&config.tau)) {
      if (!(fixed->value > 0.0)) throw DimensionError("fixed tau must be positive");
      tau = fixed->value;
    } else {
      const TauChoice choice = default_tau(x, current);
      tau = choice.value;
      if (choice.floored) result.warnings.push_back("median residual scale is zero; tau floored");
    }
    result.tau_used = tau;
  }

  result.eigenvalues.resize(order);
  for (int s = 1; s <= config.max_iter; ++s) {
    std::vector<std::size_t> next(order);
    for (std::size_t k = 0; k < order; ++k) {
      const detail::ModeProjection proj = detail::mode_projection(x, current, k, tau);
      const std::size_t inflated_max = std::min(config.r_max + 2, dims[k]);
      detail::RenewedLoading renewed = detail::renew_loading(proj.cov, inflated_max);
      next[k] = eigenvalue_ratio_pick(numerically_nonzero(renewed.eigenvalues),
                                      result.penalties[k], config.r_max);
      const std::size_t keep = std::min(next[k] + 2, dims[k]);
      current.mats[k] = renewed.loading.leading_cols(keep);
      result.eigenvalues[k] = std::move(renewed.eigenvalues);
    }
    result.eigenvalue_history.push_back(result.eigenvalues);
    result.iterations_run = s;
    result.history.push_back(next);
    const bool repeated = next == ranks;
    ranks = std::move(next);
    if (repeated) {
      result.converged = true;
      break;
    }
  }
  result.ranks = std::move(ranks);
  return result;
}

}  // namespace rtfa
