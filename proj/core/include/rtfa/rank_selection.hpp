#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtfa/estimators.hpp"
#include "rtfa/tensor.hpp"

namespace rtfa {

/// Moment regime of the idiosyncratic component; picks L* (ge2) or L** (lt2)
/// for the Huber-path penalty.
enum class EpsilonRegime { ge2, lt2 };

struct RankConfig {
  std::size_t r_max = 8;
  double c = 0.0;
  Method method = Method::least_squares;
  EpsilonRegime epsilon_regime = EpsilonRegime::ge2;
  int max_iter = 20;
  TauRule tau = MedianTau{};
};

struct RateConstants {
  std::uint64_t L = 0;
  std::uint64_t L_star = 0;
  std::uint64_t L_star_star = 0;
  std::vector<std::uint64_t> omega;  // per mode
};

/// L = min{p, T p_{-k}}, L* = min{p, p_{-k}², T p_{-k}}, L** = min{p_{-k}},
/// ω_k = min{p_k T, p_{-k}², L}, all in exact integer arithmetic.
RateConstants rate_constants(std::span<const std::size_t> dims, std::size_t T);

/// 1-based j ≤ r_max maximizing values[j-1] / (values[j] + penalty). Ties go
/// to the smallest j.
std::size_t eigenvalue_ratio_pick(std::span<const double> values, double penalty,
                                  std::size_t r_max);

struct RankResult {
  std::vector<std::size_t> ranks;
  bool converged = false;
  int iterations_run = 0;
  /// Rank vector after every iteration.
  std::vector<std::vector<std::size_t>> history;
  /// Spectrum of every mode's projected covariance at the final iteration.
  std::vector<std::vector<double>> eigenvalues;
  /// eigenvalue_history[s][k]: spectrum of mode k at iteration s + 1.
  std::vector<std::vector<std::vector<double>>> eigenvalue_history;
  /// Penalty added to each mode's denominator.
  std::vector<double> penalties;
  std::optional<double> tau_used;
  std::vector<std::string> warnings;
};

/// Iterative eigenvalue-ratio estimation of the factor numbers. Loadings are
/// re-estimated at each step with the current rank estimate inflated by two.
RankResult estimate_ranks(const TensorSeries& x, const RankConfig& config);

}  // namespace rtfa
