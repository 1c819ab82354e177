#include "rtfa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "projection.hpp"
#include "rtfa/eig.hpp"
#include "rtfa/errors.hpp"
#include "rtfa/metrics.hpp"

namespace rtfa {

std::vector<std::size_t> LoadingSet::ranks() const {
  std::vector<std::size_t> r;
  r.reserve(mats.size());
  for (const auto& m : mats) r.push_back(m.cols());
  return r;
}

double LoadingSet::normalization_error() const {
  double worst = 0.0;
  for (const auto& a : mats) {
    Matrix g = (1.0 / static_cast<double>(a.rows())) * matmul_tn(a, a);
    worst = std::max(worst, frobenius_norm(g - Matrix::identity(a.cols())));
  }
  return worst;
}

namespace detail {

void require_finite(const TensorSeries& x) {
  if (x.empty()) throw DimensionError("empty tensor series");
  for (const auto& slice : x.slices())
    for (double v : slice.data())
      if (!std::isfinite(v)) throw NumericalError("tensor series contains non-finite values");
}

void require_ranks(const Dims& dims, std::span<const std::size_t> ranks) {
  if (ranks.size() != dims.size())
    throw DimensionError("expected " + std::to_string(dims.size()) + " ranks, got " +
                         std::to_string(ranks.size()));
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (ranks[k] == 0) throw DimensionError("ranks must be positive");
    if (ranks[k] > dims[k])
      throw DimensionError("rank " + std::to_string(ranks[k]) + " exceeds dimension " +
                           std::to_string(dims[k]) + " of mode " + std::to_string(k));
  }
}

double huber_weight(double scale, double tau) {
  if (!std::isfinite(scale)) throw NumericalError("non-finite residual scale");
  return scale <= tau ? 0.5 : 0.5 * tau / scale;
}

namespace {

// ‖X_t − P X_t‖_F / sqrt(p) from ‖X_t‖² and the fully contracted core.
double scale_from_core(double x_sq, double core_sq, double p) {
  const double resid = std::max(0.0, x_sq - core_sq / p);
  return std::sqrt(resid / p);
}

void add_weighted_gram(Matrix& acc, const Matrix& y, double w) {
  const std::size_t n = y.rows();
  for (std::size_t c = 0; c < y.cols(); ++c) {
    auto col = y.col(c);
    for (std::size_t j = 0; j < n; ++j) {
      const double s = w * col[j];
      if (s == 0.0) continue;
      auto out = acc.col(j);
      for (std::size_t i = 0; i < n; ++i) out[i] += col[i] * s;
    }
  }
}

}  // namespace

ModeProjection mode_projection(const TensorSeries& x, const LoadingSet& current, std::size_t k,
                               std::optional<double> tau) {
  const Dims& dims = x.dims();
  const double p = static_cast<double>(x.slice_size());
  const double p_minus = p / static_cast<double>(dims[k]);
  const double big_t = static_cast<double>(x.length());

  ModeProjection out;
  out.cov = Matrix(dims[k], dims[k]);
  if (tau) out.weights.reserve(x.length());

  for (const auto& slice : x.slices()) {
    DenseTensor y = multi_mode_product_except(slice, current.mats, k, true);
    double w = 1.0;
    if (tau) {
      const DenseTensor core = mode_product_transposed(y, k, current.mats[k]);
      w = huber_weight(scale_from_core(squared_norm(slice), squared_norm(core), p), *tau);
      out.weights.push_back(w);
    }
    add_weighted_gram(out.cov, unfold(y, k), w);
  }
  out.cov = (1.0 / (big_t * p * p_minus)) * out.cov;
  return out;
}

RenewedLoading renew_loading(const Matrix& cov, std::size_t r) {
  EigPair eig = sym_eig(cov);
  RenewedLoading out;
  out.loading = std::sqrt(static_cast<double>(cov.rows())) * eig.vectors.leading_cols(r);
  const double top = eig.values.empty() ? 0.0 : eig.values.front();
  out.rank_deficient = top <= 0.0 || eig.values[r - 1] <= 1e-12 * top;
  out.eigenvalues = std::move(eig.values);
  return out;
}

}  // namespace detail

LoadingSet initial_estimator(const TensorSeries& x, std::span<const std::size_t> ranks) {
  detail::require_finite(x);
  detail::require_ranks(x.dims(), ranks);
  const double scale = 1.0 / (static_cast<double>(x.length()) * static_cast<double>(x.slice_size()));
  LoadingSet out;
  for (std::size_t k = 0; k < x.dims().size(); ++k) {
    Matrix cov(x.dims()[k], x.dims()[k]);
    for (const auto& slice : x.slices()) {
      const Matrix xk = unfold(slice, k);
      cov = cov + matmul_nt(xk, xk);
    }
    out.mats.push_back(detail::renew_loading(scale * cov, ranks[k]).loading);
  }
  return out;
}

Matrix projection_cov(const TensorSeries& x, std::size_t k, const Matrix& b,
                      std::optional<std::span<const double>> weights) {
  if (x.empty()) throw DimensionError("empty tensor series");
  if (k >= x.dims().size()) throw DimensionError("mode index out of range");
  const std::size_t p = x.slice_size();
  const std::size_t pk = x.dims()[k];
  if (b.rows() != p / pk) throw DimensionError("projection_cov: b has the wrong row count");
  if (b.cols() == 0) throw DimensionError("projection_cov: b needs at least one column");
  if (weights && weights->size() != x.length())
    throw DimensionError("projection_cov: one weight per slice required");

  Matrix acc(pk, pk);
  for (std::size_t t = 0; t < x.length(); ++t) {
    const Matrix xb = matmul(unfold(x[t], k), b);
    const double w = weights ? (*weights)[t] : 1.0;
    acc = acc + w * matmul_nt(xb, xb);
  }
  const double denom = static_cast<double>(x.length()) * static_cast<double>(p) *
                       static_cast<double>(p / pk);
  return (1.0 / denom) * acc;
}

Matrix projection_cov(const TensorSeries& x, std::size_t k, const LoadingSet& loadings,
                      std::optional<std::span<const double>> weights) {
  if (x.empty()) throw DimensionError("empty tensor series");
  if (k >= x.dims().size()) throw DimensionError("mode index out of range");
  if (loadings.order() != x.dims().size())
    throw DimensionError("projection_cov: loadings order differs from data order");
  if (weights && weights->size() != x.length())
    throw DimensionError("projection_cov: one weight per slice required");

  const Dims& dims = x.dims();
  const double p = static_cast<double>(x.slice_size());
  Matrix acc(dims[k], dims[k]);
  for (std::size_t t = 0; t < x.length(); ++t) {
    const Matrix y = unfold(multi_mode_product_except(x[t], loadings.mats, k, true), k);
    const double w = weights ? (*weights)[t] : 1.0;
    acc = acc + w * matmul_nt(y, y);
  }
  const double denom = static_cast<double>(x.length()) * p * (p / static_cast<double>(dims[k]));
  return (1.0 / denom) * acc;
}

double huber_loss(double x, double tau) {
  if (!(tau > 0.0)) throw DimensionError("huber_loss: tau must be positive");
  const double ax = std::abs(x);
  if (ax <= tau) return 0.5 * ax * ax;
  return tau * ax - 0.5 * tau * tau;
}

std::vector<double> residual_scales(const TensorSeries& x, const LoadingSet& loadings) {
  if (x.empty()) throw DimensionError("empty tensor series");
  if (loadings.order() != x.dims().size())
    throw DimensionError("residual_scales: loadings order differs from data order");
  const double p = static_cast<double>(x.slice_size());
  std::vector<double> out;
  out.reserve(x.length());
  for (const auto& slice : x.slices()) {
    const DenseTensor core = multi_mode_product(slice, loadings.mats, true);
    const double resid = std::max(0.0, squared_norm(slice) - squared_norm(core) / p);
    const double s = std::sqrt(resid / p);
    if (!std::isfinite(s)) throw NumericalError("non-finite residual scale");
    out.push_back(s);
  }
  return out;
}

std::vector<double> huber_weights(const TensorSeries& x, const LoadingSet& loadings, double tau) {
  if (!(tau > 0.0)) throw DimensionError("huber_weights: tau must be positive");
  std::vector<double> w = residual_scales(x, loadings);
  for (double& v : w) v = detail::huber_weight(v, tau);
  return w;
}

TauChoice default_tau(const TensorSeries& x, const LoadingSet& loadings) {
  std::vector<double> s = residual_scales(x, loadings);
  const std::size_t n = s.size();
  std::sort(s.begin(), s.end());
  const double med = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  if (med <= kTauFloor) return {kTauFloor, true};
  return {med, false};
}

FactorSeries extract_factors(const TensorSeries& x, const LoadingSet& loadings) {
  if (loadings.order() != x.dims().size())
    throw DimensionError("extract_factors: loadings order differs from data order");
  const double inv_p = 1.0 / static_cast<double>(x.slice_size());
  std::vector<DenseTensor> cores;
  cores.reserve(x.length());
  for (const auto& slice : x.slices()) {
    DenseTensor f = multi_mode_product(slice, loadings.mats, true);
    f *= inv_p;
    cores.push_back(std::move(f));
  }
  return FactorSeries(std::move(cores));
}

TensorSeries common_components(const LoadingSet& loadings, const FactorSeries& factors) {
  if (factors.empty()) throw DimensionError("empty factor series");
  if (loadings.order() != factors.dims().size())
    throw DimensionError("common_components: loadings order differs from factor order");
  std::vector<DenseTensor> out;
  out.reserve(factors.length());
  for (const auto& f : factors.slices()) out.push_back(multi_mode_product(f, loadings.mats));
  return TensorSeries(std::move(out));
}

EstimationResult fit(const TensorSeries& x, const EstimationConfig& config) {
  detail::require_finite(x);
  detail::require_ranks(x.dims(), config.ranks);
  if (config.max_iter < 1) throw DimensionError("max_iter must be at least 1");
  if (!(config.tol >= 0.0)) throw DimensionError("tol must be nonnegative");

  EstimationResult result;
  LoadingSet current = initial_estimator(x, config.ranks);

  std::optional<double> tau;
  if (config.method == Method::huber) {
    if (const auto* fixed = std::get_if<FixedTau>(&config.tau)) {
      if (!(fixed->value > 0.0)) throw DimensionError("fixed tau must be positive");
      tau = fixed->value;
    } else {
      const TauChoice choice = default_tau(x, current);
      tau = choice.value;
      result.tau_floored = choice.floored;
    }
    result.tau_used = tau;
  }

  const std::size_t order = x.dims().size();
  if (config.record_diagnostics) result.mode_eigenvalues.resize(order);
  for (int s = 1; s <= config.max_iter; ++s) {
    double change = 0.0;
    for (std::size_t k = 0; k < order; ++k) {
      const detail::ModeProjection proj = detail::mode_projection(x, current, k, tau);
      detail::RenewedLoading renewed = detail::renew_loading(proj.cov, config.ranks[k]);
      result.rank_deficient = result.rank_deficient || renewed.rank_deficient;
      change = std::max(change, subspace_distance(renewed.loading, current.mats[k]));
      current.mats[k] = std::move(renewed.loading);
      if (config.record_diagnostics) result.mode_eigenvalues[k] = std::move(renewed.eigenvalues);
    }
    result.iterations_run = s;
    result.per_iteration_subspace_change.push_back(change);
    if (change < config.tol) {
      result.converged = true;
      break;
    }
  }

  result.factors = extract_factors(x, current);
  result.loadings = std::move(current);
  return result;
}

}  // namespace rtfa
