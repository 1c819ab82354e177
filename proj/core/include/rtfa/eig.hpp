#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rtfa/matrix.hpp"

namespace rtfa {

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
/// Each eigenvector is signed so its largest-magnitude entry is nonnegative.
struct EigPair {
  std::vector<double> values;
  Matrix vectors;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as (M + Mᵀ)/2 first; it must be square, finite
/// and symmetric to 1e-8 relative to its Frobenius norm. `count` limits the
/// result to the leading pairs and may not exceed the dimension. Repeated
/// eigenvalues yield an arbitrary orthonormal basis of their eigenspace.
EigPair sym_eig(const Matrix& m, std::optional<std::size_t> count = std::nullopt);

/// Raw varimax criterion: sum over columns of the variance of squared loadings.
double varimax_criterion(const Matrix& a);

struct VarimaxResult {
  Matrix rotated;
  Matrix rotation;
  /// Criterion before the first sweep and after every sweep.
  std::vector<double> criterion_trace;
  int sweeps = 0;
};

/// Orthogonal varimax rotation of raw (not Kaiser-normalized) loadings using
/// pairwise planar rotations. Stops once a sweep gains less than `tol`.
VarimaxResult varimax(const Matrix& a, double tol = 1e-10, int max_sweeps = 200);

}  // namespace rtfa
