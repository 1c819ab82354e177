#pragma once

// Shared inner step of the iterative estimators: the (optionally Huber
// weighted) projected mode-k covariance under the current loadings.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rtfa/estimators.hpp"

namespace rtfa::detail {

struct ModeProjection {
  Matrix cov;
  std::vector<double> weights;  // empty when unweighted
};

void require_finite(const TensorSeries& x);
void require_ranks(const Dims& dims, std::span<const std::size_t> ranks);

/// Projected covariance for mode k. When `tau` is set, Huber weights are
/// computed from the same contractions using the current A_k.
ModeProjection mode_projection(const TensorSeries& x, const LoadingSet& current, std::size_t k,
                               std::optional<double> tau);

/// sqrt(p_k) times the leading `r` eigenvectors; also returns all eigenvalues.
struct RenewedLoading {
  Matrix loading;
  std::vector<double> eigenvalues;
  bool rank_deficient = false;
};
RenewedLoading renew_loading(const Matrix& cov, std::size_t r);

double huber_weight(double scale, double tau);

}  // namespace rtfa::detail
