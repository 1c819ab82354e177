#include "rtfa/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rtfa/errors.hpp"

namespace rtfa {

namespace {

constexpr int kMaxJacobiSweeps = 100;

void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data())
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": non-finite entry");
}

// A <- Jᵀ A J for the plane rotation J acting on (p, q); V <- V J.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q, double c, double s) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigPair sym_eig(const Matrix& m, std::optional<std::size_t> count) {
  if (m.rows() != m.cols()) throw DimensionError("sym_eig: matrix is not square");
  require_finite(m, "sym_eig");
  const std::size_t n = m.rows();
  if (count && *count > n) throw DimensionError("sym_eig: more eigenpairs requested than the matrix has");

  const double norm = frobenius_norm(m);
  Matrix a(n, n);
  double asym = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      a(i, j) = 0.5 * (m(i, j) + m(j, i));
      asym = std::max(asym, std::abs(m(i, j) - m(j, i)));
    }
  if (asym > 1e-8 * std::max(norm, 1.0))
    throw DimensionError("sym_eig: matrix is not symmetric");

  Matrix v = Matrix::identity(n);
  const double skip = 1e-18 * norm;
  for (int sweep = 0; sweep < kMaxJacobiSweeps && norm > 0.0; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= skip) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        rotate(a, v, p, q, c, s);
        a(p, q) = a(q, p) = 0.0;
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  const std::size_t keep = count.value_or(n);
  EigPair out;
  out.values.resize(keep);
  out.vectors = Matrix(n, keep);
  for (std::size_t j = 0; j < keep; ++j) {
    out.values[j] = a(order[j], order[j]);
    auto src = v.col(order[j]);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(src[i]) > std::abs(src[arg])) arg = i;
    const double sign = src[arg] < 0.0 ? -1.0 : 1.0;
    auto dst = out.vectors.col(j);
    for (std::size_t i = 0; i < n; ++i) dst[i] = sign * src[i];
  }
  return out;
}

double varimax_criterion(const Matrix& a) {
  const double p = static_cast<double>(a.rows());
  double total = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s2 = 0.0;
    double s4 = 0.0;
    for (double x : a.col(j)) {
      s2 += x * x;
      s4 += x * x * x * x;
    }
    total += s4 / p - (s2 / p) * (s2 / p);
  }
  return total;
}

namespace {

double pair_criterion(std::span<const double> x, std::span<const double> y) {
  const double p = static_cast<double>(x.size());
  double x2 = 0.0, x4 = 0.0, y2 = 0.0, y4 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x2 += x[i] * x[i];
    x4 += x[i] * x[i] * x[i] * x[i];
    y2 += y[i] * y[i];
    y4 += y[i] * y[i] * y[i] * y[i];
  }
  return (x4 + y4) / p - (x2 * x2 + y2 * y2) / (p * p);
}

}  // namespace

VarimaxResult varimax(const Matrix& a, double tol, int max_sweeps) {
  require_finite(a, "varimax");
  VarimaxResult out;
  out.rotated = a;
  out.rotation = Matrix::identity(a.cols());
  out.criterion_trace.push_back(varimax_criterion(a));
  if (a.cols() < 2 || a.rows() == 0) return out;

  const std::size_t p = a.rows();
  const std::size_t r = a.cols();
  const double n = static_cast<double>(p);
  Matrix& l = out.rotated;
  Matrix& rot = out.rotation;
  std::vector<double> nx(p), ny(p);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t j1 = 0; j1 + 1 < r; ++j1) {
      for (std::size_t j2 = j1 + 1; j2 < r; ++j2) {
        auto x = l.col(j1);
        auto y = l.col(j2);
        double sa = 0.0, sb = 0.0, sc = 0.0, sd = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
          const double u = x[i] * x[i] - y[i] * y[i];
          const double v = 2.0 * x[i] * y[i];
          sa += u;
          sb += v;
          sc += u * u - v * v;
          sd += 2.0 * u * v;
        }
        const double num = sd - 2.0 * sa * sb / n;
        const double den = sc - (sa * sa - sb * sb) / n;
        const double phi = 0.25 * std::atan2(num, den);
        if (std::abs(phi) < 1e-15) continue;
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        for (std::size_t i = 0; i < p; ++i) {
          nx[i] = c * x[i] + s * y[i];
          ny[i] = -s * x[i] + c * y[i];
        }
        if (pair_criterion(nx, ny) < pair_criterion(x, y)) continue;
        std::copy(nx.begin(), nx.end(), x.begin());
        std::copy(ny.begin(), ny.end(), y.begin());
        for (std::size_t i = 0; i < r; ++i) {
          const double r1 = rot(i, j1);
          const double r2 = rot(i, j2);
          rot(i, j1) = c * r1 + s * r2;
          rot(i, j2) = -s * r1 + c * r2;
        }
      }
    }
    ++out.sweeps;
    const double crit = varimax_criterion(l);
    const double gain = crit - out.criterion_trace.back();
    out.criterion_trace.push_back(crit);
    if (gain < tol) break;
  }
  return out;
}

}  // namespace rtfa
