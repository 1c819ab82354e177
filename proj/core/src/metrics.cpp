#include "rtfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rtfa/eig.hpp"
#include "rtfa/errors.hpp"

namespace rtfa {

Matrix orthonormal_basis(const Matrix& a) {
  if (a.cols() == 0 || a.rows() < a.cols())
    throw DimensionError("orthonormal_basis: need a tall matrix with at least one column");
  const EigPair eig = sym_eig(matmul_tn(a, a));
  const double top = eig.values.front();
  if (!(top > 0.0) || eig.values.back() <= 1e-14 * top)
    throw DimensionError("orthonormal_basis: matrix is rank deficient");
  Matrix scaled = eig.vectors;
  for (std::size_t j = 0; j < scaled.cols(); ++j) {
    const double inv = 1.0 / std::sqrt(eig.values[j]);
    for (double& v : scaled.col(j)) v *= inv;
  }
  return matmul(a, scaled);
}

double subspace_distance(const Matrix& a_hat, const Matrix& a_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols())
    throw DimensionError("subspace_distance: shapes differ");
  const Matrix q_hat = orthonormal_basis(a_hat);
  const Matrix q = orthonormal_basis(a_true);
  const Matrix resid = q_hat - matmul(q, matmul_tn(q, q_hat));
  const double r = static_cast<double>(a_hat.cols());
  return std::clamp(frobenius_norm(resid) / std::sqrt(r), 0.0, 1.0);
}

Matrix sign_align(const Matrix& a_hat, const Matrix& a_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols())
    throw DimensionError("sign_align: shapes differ");
  Matrix s(a_hat.cols(), a_hat.cols());
  for (std::size_t j = 0; j < a_hat.cols(); ++j) {
    double dot = 0.0;
    auto x = a_hat.col(j);
    auto y = a_true.col(j);
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    s(j, j) = dot < 0.0 ? -1.0 : 1.0;
  }
  return s;
}

namespace {

void require_same_shape(const TensorSeries& a, const TensorSeries& b, const char* what) {
  if (a.empty() || b.empty()) throw DimensionError(std::string(what) + ": empty series");
  if (a.dims() != b.dims() || a.length() != b.length())
    throw DimensionError(std::string(what) + ": series shapes differ");
}

double sum_sq_diff(const DenseTensor& a, const DenseTensor& b) {
  auto x = a.data();
  auto y = b.data();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double mse_common(const TensorSeries& est, const TensorSeries& truth) {
  require_same_shape(est, truth, "mse_common");
  double s = 0.0;
  for (std::size_t t = 0; t < est.length(); ++t) s += sum_sq_diff(est[t], truth[t]);
  return s / (static_cast<double>(est.length()) * static_cast<double>(est.slice_size()));
}

double relative_mse(const TensorSeries& x, const TensorSeries& s_hat) {
  require_same_shape(x, s_hat, "relative_mse");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < x.length(); ++t) {
    num += sum_sq_diff(x[t], s_hat[t]);
    den += squared_norm(x[t]);
  }
  if (!(den > 0.0)) throw DimensionError("relative_mse: data are identically zero");
  return num / den;
}

std::vector<RollingBlock> rolling_validation(const TensorSeries& x, std::size_t window_periods,
                                             std::size_t period_length,
                                             const EstimationConfig& est) {
  if (window_periods == 0 || period_length == 0)
    throw DimensionError("rolling_validation: window and period must be positive");
  const std::size_t window = window_periods * period_length;
  if (window + period_length > x.length())
    throw DimensionError("rolling_validation: window longer than available history");

  std::vector<RollingBlock> out;
  for (std::size_t start = window; start + period_length <= x.length(); start += period_length) {
    const EstimationResult fitted = fit(x.range(start - window, window), est);
    const TensorSeries block = x.range(start, period_length);
    const TensorSeries s_hat =
        common_components(fitted.loadings, extract_factors(block, fitted.loadings));
    out.push_back({start, period_length, relative_mse(block, s_hat)});
  }
  return out;
}

DistanceMatrix loading_distance_matrix(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n < 2) throw DimensionError("loading_distance_matrix: need at least two entities");
  DistanceMatrix out;
  std::vector<double> inv_var(a.cols(), 0.0);
  bool any = false;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    auto col = a.col(c);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(n - 1);
    if (var > 0.0) {
      inv_var[c] = 1.0 / var;
      any = true;
    } else {
      out.dropped_coordinates.push_back(c);
    }
  }
  if (!any) throw DimensionError("loading_distance_matrix: every coordinate has zero variance");

  out.distances = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - a(j, c);
        s += d * d * inv_var[c];
      }
      out.distances(i, j) = out.distances(j, i) = std::sqrt(s);
    }
  return out;
}

ClusterTree complete_linkage(const Matrix& d, std::vector<std::string> labels) {
  const std::size_t n = d.rows();
  if (d.cols() != n) throw DimensionError("complete_linkage: distance matrix is not square");
  if (n == 0) throw DimensionError("complete_linkage: no points");
  const double scale = std::max(1.0, frobenius_norm(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < 0.0)
        throw DimensionError("complete_linkage: distances must be finite and nonnegative");
      if (std::abs(d(i, j) - d(j, i)) > 1e-12 * scale)
        throw DimensionError("complete_linkage: distance matrix is not symmetric");
    }
  if (!labels.empty() && labels.size() != n)
    throw DimensionError("complete_linkage: one label per point required");

  ClusterTree tree;
  tree.labels = std::move(labels);
  Matrix dist = d;
  std::vector<bool> active(n, true);
  std::vector<std::size_t> id(n);
  std::vector<std::size_t> size(n, 1);
  for (std::size_t i = 0; i < n; ++i) id[i] = i;

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    tree.merges.push_back({std::min(id[bi], id[bj]), std::max(id[bi], id[bj]), best,
                           size[bi] + size[bj]});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double m = std::max(dist(k, bi), dist(k, bj));
      dist(k, bi) = dist(bi, k) = m;
    }
    active[bj] = false;
    size[bi] += size[bj];
    id[bi] = n + step;
  }
  return tree;
}

}  // namespace rtfa
