#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rtfa/estimators.hpp"
#include "rtfa/matrix.hpp"
#include "rtfa/tensor.hpp"

namespace rtfa {

/// Orthonormal basis of the column space of a full-column-rank matrix,
/// obtained as A V Λ^{-1/2} from the eigendecomposition of AᵀA.
Matrix orthonormal_basis(const Matrix& a);

/// Distance between column spaces, sqrt(1 − tr(Q̂Q̂ᵀQQᵀ)/r), in [0, 1].
/// Evaluated as ‖Q̂ − Q QᵀQ̂‖_F / sqrt(r), which equals the trace form for
/// orthonormal bases and stays accurate when the spans nearly coincide.
double subspace_distance(const Matrix& a_hat, const Matrix& a_true);

/// Diagonal ±1 matrix with entries sign(diag(a_trueᵀ a_hat)); zero maps to +1.
Matrix sign_align(const Matrix& a_hat, const Matrix& a_true);

/// (1/(T p)) Σ_t ‖est_t − truth_t‖_F²
double mse_common(const TensorSeries& est, const TensorSeries& truth);

/// Σ_t ‖x_t − ŝ_t‖_F² / Σ_t ‖x_t‖_F²
double relative_mse(const TensorSeries& x, const TensorSeries& s_hat);

struct RollingBlock {
  std::size_t first;  // index of the first evaluated slice
  std::size_t length;
  double mse;
};

/// Rolling validation over consecutive blocks of `period_length` slices.
/// Loadings are fitted on the `window_periods * period_length` slices that
/// precede each block, held fixed, and the block is scored by relative MSE.
/// Every complete block after the first window is evaluated.
std::vector<RollingBlock> rolling_validation(const TensorSeries& x, std::size_t window_periods,
                                             std::size_t period_length,
                                             const EstimationConfig& est);

struct DistanceMatrix {
  Matrix distances;
  /// Coordinates dropped because their variance across entities is zero.
  std::vector<std::size_t> dropped_coordinates;
};

/// Variance-standardized Euclidean distances between the rows of `a`
/// (entities), each coordinate scaled by its sample variance across rows.
DistanceMatrix loading_distance_matrix(const Matrix& a);

struct Merge {
  std::size_t a;  // cluster ids: leaves are 0..n-1, merge i creates n+i
  std::size_t b;
  double height;
  std::size_t size;
};

struct ClusterTree {
  std::vector<Merge> merges;
  std::vector<std::string> labels;
};

/// Agglomerative clustering with complete linkage (cluster distance is the
/// maximum pairwise distance). Ties merge the lowest-index pair first.
ClusterTree complete_linkage(const Matrix& d, std::vector<std::string> labels = {});

}  // namespace rtfa
