#include "rtfa/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "rtfa/errors.hpp"

namespace rtfa {

std::size_t dims_product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void validate_dims(const Dims& dims) {
  if (dims.empty()) throw DimensionError("tensor order must be at least 1");
  for (std::size_t p : dims)
    if (p == 0) throw DimensionError("tensor dimensions must be positive");
}

void check_mode(const DenseTensor& x, std::size_t k) {
  if (k >= x.order())
    throw DimensionError("mode index " + std::to_string(k) + " out of range for order " +
                         std::to_string(x.order()));
}

// Splits the storage around mode k as [left, p_k, right].
struct ModeSplit {
  std::size_t left = 1;
  std::size_t mid = 1;
  std::size_t right = 1;
};

ModeSplit split_at(const Dims& dims, std::size_t k) {
  ModeSplit s;
  for (std::size_t l = 0; l < k; ++l) s.left *= dims[l];
  s.mid = dims[k];
  for (std::size_t l = k + 1; l < dims.size(); ++l) s.right *= dims[l];
  return s;
}

}  // namespace

DenseTensor::DenseTensor(Dims dims, double fill) : dims_(std::move(dims)) {
  validate_dims(dims_);
  data_.assign(dims_product(dims_), fill);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate_dims(dims_);
  if (data_.size() != dims_product(dims_))
    throw DimensionError("tensor data length does not match the product of dims");
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != dims_.size()) throw DimensionError("index order mismatch");
  std::size_t off = 0;
  std::size_t stride = 1;
  for (std::size_t m = 0; m < dims_.size(); ++m) {
    if (index[m] >= dims_[m]) throw DimensionError("tensor index out of range");
    off += index[m] * stride;
    stride *= dims_[m];
  }
  return off;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.dims_ != dims_) throw DimensionError("tensor addition: dims differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (other.dims_ != dims_) throw DimensionError("tensor subtraction: dims differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }

TensorSeries::TensorSeries(std::vector<DenseTensor> slices) : slices_(std::move(slices)) {
  if (slices_.empty()) throw DimensionError("tensor series must contain at least one slice");
  dims_ = slices_.front().dims();
  for (const auto& s : slices_)
    if (s.dims() != dims_) throw DimensionError("tensor series slices have differing dims");
}

TensorSeries::TensorSeries(const Dims& dims, std::size_t length) : dims_(dims) {
  if (length == 0) throw DimensionError("tensor series must contain at least one slice");
  slices_.assign(length, DenseTensor(dims));
}

TensorSeries TensorSeries::range(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > slices_.size())
    throw DimensionError("series range out of bounds");
  return TensorSeries(std::vector<DenseTensor>(slices_.begin() + static_cast<std::ptrdiff_t>(first),
                                               slices_.begin() +
                                                   static_cast<std::ptrdiff_t>(first + count)));
}

Matrix unfold(const DenseTensor& x, std::size_t k) {
  check_mode(x, k);
  const ModeSplit s = split_at(x.dims(), k);
  Matrix m(s.mid, s.left * s.right);
  auto src = x.data();
  for (std::size_t b = 0; b < s.right; ++b)
    for (std::size_t i = 0; i < s.mid; ++i) {
      const double* in = src.data() + s.left * (i + s.mid * b);
      for (std::size_t a = 0; a < s.left; ++a) m(i, a + s.left * b) = in[a];
    }
  return m;
}

DenseTensor fold(const Matrix& m, std::size_t k, const Dims& dims) {
  DenseTensor x(dims);
  check_mode(x, k);
  const ModeSplit s = split_at(dims, k);
  if (m.rows() != s.mid || m.cols() != s.left * s.right)
    throw DimensionError("fold: matrix shape inconsistent with dims");
  auto dst = x.data();
  for (std::size_t b = 0; b < s.right; ++b)
    for (std::size_t i = 0; i < s.mid; ++i) {
      double* out = dst.data() + s.left * (i + s.mid * b);
      for (std::size_t a = 0; a < s.left; ++a) out[a] = m(i, a + s.left * b);
    }
  return x;
}

namespace {

// out[a, j, b] = sum_i x[a, i, b] * coef(j, i)
template <typename Coef>
DenseTensor contract_mode(const DenseTensor& x, std::size_t k, std::size_t out_dim, Coef coef) {
  const ModeSplit s = split_at(x.dims(), k);
  Dims out_dims = x.dims();
  out_dims[k] = out_dim;
  DenseTensor y(out_dims);
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t b = 0; b < s.right; ++b) {
    for (std::size_t i = 0; i < s.mid; ++i) {
      const double* in = src.data() + s.left * (i + s.mid * b);
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double c = coef(j, i);
        if (c == 0.0) continue;
        double* out = dst.data() + s.left * (j + out_dim * b);
        for (std::size_t a = 0; a < s.left; ++a) out[a] += c * in[a];
      }
    }
  }
  return y;
}

}  // namespace

DenseTensor mode_product(const DenseTensor& x, std::size_t k, const Matrix& a) {
  check_mode(x, k);
  if (a.cols() != x.dim(k))
    throw DimensionError("mode_product: matrix has " + std::to_string(a.cols()) +
                         " columns, mode " + std::to_string(k) + " has size " +
                         std::to_string(x.dim(k)));
  return contract_mode(x, k, a.rows(), [&](std::size_t j, std::size_t i) { return a(j, i); });
}

DenseTensor mode_product_transposed(const DenseTensor& x, std::size_t k, const Matrix& a) {
  check_mode(x, k);
  if (a.rows() != x.dim(k))
    throw DimensionError("mode_product_transposed: matrix has " + std::to_string(a.rows()) +
                         " rows, mode " + std::to_string(k) + " has size " +
                         std::to_string(x.dim(k)));
  return contract_mode(x, k, a.cols(), [&](std::size_t j, std::size_t i) { return a(i, j); });
}

DenseTensor multi_mode_product(const DenseTensor& x, std::span<const Matrix> mats,
                               bool transpose) {
  if (mats.size() != x.order())
    throw DimensionError("multi_mode_product: need one matrix per mode");
  DenseTensor y = x;
  for (std::size_t k = 0; k < mats.size(); ++k)
    y = transpose ? mode_product_transposed(y, k, mats[k]) : mode_product(y, k, mats[k]);
  return y;
}

DenseTensor multi_mode_product_except(const DenseTensor& x, std::span<const Matrix> mats,
                                      std::size_t skip, bool transpose) {
  if (mats.size() != x.order())
    throw DimensionError("multi_mode_product_except: need one matrix per mode");
  check_mode(x, skip);
  DenseTensor y = x;
  for (std::size_t k = 0; k < mats.size(); ++k) {
    if (k == skip) continue;
    y = transpose ? mode_product_transposed(y, k, mats[k]) : mode_product(y, k, mats[k]);
  }
  return y;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ja = 0; ja < a.cols(); ++ja)
    for (std::size_t jb = 0; jb < b.cols(); ++jb)
      for (std::size_t ia = 0; ia < a.rows(); ++ia) {
        const double s = a(ia, ja);
        for (std::size_t ib = 0; ib < b.rows(); ++ib)
          c(ia * b.rows() + ib, ja * b.cols() + jb) = s * b(ib, jb);
      }
  return c;
}

Matrix kron_except(std::span<const Matrix> mats, std::size_t k) {
  if (k >= mats.size()) throw DimensionError("kron_except: mode out of range");
  Matrix acc = Matrix::identity(1);
  for (std::size_t j = mats.size(); j-- > 0;) {
    if (j == k) continue;
    acc = kron(acc, mats[j]);
  }
  return acc;
}

std::vector<double> vec(const DenseTensor& x) {
  return {x.data().begin(), x.data().end()};
}

double squared_norm(const DenseTensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

double frobenius_norm(const DenseTensor& x) { return std::sqrt(squared_norm(x)); }

}  // namespace rtfa
