#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rtfa/matrix.hpp"
#include "rtfa/tensor.hpp"

namespace rtfa {

/// Loading matrices A_1..A_K, A_k of shape p_k x r_k. Estimated loadings
/// satisfy A_kᵀA_k / p_k = I; simulated ground truth need not.
struct LoadingSet {
  std::vector<Matrix> mats;

  std::size_t order() const noexcept { return mats.size(); }
  std::vector<std::size_t> ranks() const;
  /// max_k ‖A_kᵀA_k/p_k − I‖_F
  double normalization_error() const;
};

/// Core factor tensors F_1..F_T, each r_1 x ... x r_K.
using FactorSeries = TensorSeries;

enum class Method { least_squares, huber };

/// Threshold choice for the Huber loss: the median residual rule, or a fixed
/// positive value (infinity is allowed and reduces Huber to least squares).
struct MedianTau {};
struct FixedTau {
  double value;
};
using TauRule = std::variant<MedianTau, FixedTau>;

struct EstimationConfig {
  std::vector<std::size_t> ranks;
  Method method = Method::least_squares;
  TauRule tau = MedianTau{};
  int max_iter = 100;
  double tol = 1e-6;
  bool record_diagnostics = true;
};

struct EstimationResult {
  LoadingSet loadings;
  FactorSeries factors;
  int iterations_run = 0;
  /// max_k D(A_k^(s), A_k^(s-1)) for every iteration s.
  std::vector<double> per_iteration_subspace_change;
  bool converged = false;
  std::optional<double> tau_used;
  /// Median residual scale was zero, so tau fell back to the positive floor.
  bool tau_floored = false;
  /// Some projected covariance had fewer than r_k positive eigenvalues.
  bool rank_deficient = false;
  /// Full spectrum of each mode's projected covariance at the last
  /// iteration; filled only when record_diagnostics is set.
  std::vector<std::vector<double>> mode_eigenvalues;
};

/// Positive floor used when every residual scale vanishes.
inline constexpr double kTauFloor = 1e-12;

/// Leading-r_k eigenvectors (times sqrt(p_k)) of sum_t X_{k,t} X_{k,t}ᵀ / (T p).
LoadingSet initial_estimator(const TensorSeries& x, std::span<const std::size_t> ranks);

/// sum_t w_t X_{k,t} b bᵀ X_{k,t}ᵀ / (T p p_{-k}) with an explicit p_{-k} x r_{-k}
/// projection b. Absent weights count as 1.
Matrix projection_cov(const TensorSeries& x, std::size_t k, const Matrix& b,
                      std::optional<std::span<const double>> weights = std::nullopt);

/// Same quantity with b = kron_except(loadings, k), computed by mode-wise
/// contraction instead of materializing the Kronecker product.
Matrix projection_cov(const TensorSeries& x, std::size_t k, const LoadingSet& loadings,
                      std::optional<std::span<const double>> weights = std::nullopt);

/// H_tau(x) = x²/2 for x ≤ tau, tau·x − tau²/2 otherwise.
double huber_loss(double x, double tau);

/// Per-slice residual scale ‖X_t − P X_t‖_F / sqrt(p), where P projects onto
/// the span of the loadings, evaluated through the trace identity.
std::vector<double> residual_scales(const TensorSeries& x, const LoadingSet& loadings);

/// Huber weights: 1/2 where the residual scale is within tau, (tau/2)/s_t otherwise.
std::vector<double> huber_weights(const TensorSeries& x, const LoadingSet& loadings, double tau);

struct TauChoice {
  double value;
  bool floored;
};

/// Median residual scale under the given loadings, floored at kTauFloor.
TauChoice default_tau(const TensorSeries& x, const LoadingSet& loadings);

/// Iterative projection estimation (least squares) or its Huber-weighted
/// robust variant, initialized at initial_estimator.
EstimationResult fit(const TensorSeries& x, const EstimationConfig& config);

/// F_t = X_t ×_k A_kᵀ / p for every slice.
FactorSeries extract_factors(const TensorSeries& x, const LoadingSet& loadings);

/// S_t = F_t ×_k A_k for every slice.
TensorSeries common_components(const LoadingSet& loadings, const FactorSeries& factors);

}  // namespace rtfa
