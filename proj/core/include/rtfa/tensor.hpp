#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rtfa/matrix.hpp"

namespace rtfa {

using Dims = std::vector<std::size_t>;

/// Product of all entries of `dims` (1 for an empty list).
std::size_t dims_product(std::span<const std::size_t> dims);

/// K-way dense real array. Index i_1 varies fastest, so the flat storage is
/// exactly vec(x) and unfold(x, 0) is a reinterpretation of the buffer.
///
/// Modes are 0-based throughout the library.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Dims dims, double fill = 0.0);
  DenseTensor(Dims dims, std::vector<double> data);

  std::size_t order() const noexcept { return dims_.size(); }
  const Dims& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t k) const { return dims_.at(k); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Flat offset of a multi-index.
  std::size_t offset(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index) { return data_[offset(index)]; }
  double at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);
  DenseTensor& operator*=(double s);

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator+(DenseTensor a, const DenseTensor& b);

/// Ordered, non-empty sequence of tensors that share one shape.
class TensorSeries {
 public:
  TensorSeries() = default;
  explicit TensorSeries(std::vector<DenseTensor> slices);
  TensorSeries(const Dims& dims, std::size_t length);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t length() const noexcept { return slices_.size(); }
  std::size_t slice_size() const noexcept { return dims_product(dims_); }
  bool empty() const noexcept { return slices_.empty(); }

  const DenseTensor& operator[](std::size_t t) const { return slices_[t]; }
  DenseTensor& operator[](std::size_t t) { return slices_[t]; }
  const std::vector<DenseTensor>& slices() const noexcept { return slices_; }

  /// Contiguous sub-range [first, first + count).
  TensorSeries range(std::size_t first, std::size_t count) const;

  friend bool operator==(const TensorSeries&, const TensorSeries&) = default;

 private:
  Dims dims_;
  std::vector<DenseTensor> slices_;
};

/// Mode-k matricization (p_k x p/p_k). Column index of element (i_1..i_K) is
/// sum_{m != k} i_m * prod_{l < m, l != k} p_l, which makes
/// unfold(F x_1 A_1 ... x_K A_K, k) = A_k unfold(F, k) (A_K ⊗ .. ⊗ A_1 without A_k)ᵀ.
Matrix unfold(const DenseTensor& x, std::size_t k);

/// Inverse of unfold.
DenseTensor fold(const Matrix& m, std::size_t k, const Dims& dims);

/// x ×_k a, with a of shape d x p_k.
DenseTensor mode_product(const DenseTensor& x, std::size_t k, const Matrix& a);

/// Same as mode_product with aᵀ, without forming the transpose.
DenseTensor mode_product_transposed(const DenseTensor& x, std::size_t k, const Matrix& a);

/// Applies mats[k] along every mode k in order 0..K-1 (or mats[k]ᵀ when
/// `transpose` is set).
DenseTensor multi_mode_product(const DenseTensor& x, std::span<const Matrix> mats,
                               bool transpose = false);

/// Like multi_mode_product but leaves mode `skip` untouched.
DenseTensor multi_mode_product_except(const DenseTensor& x, std::span<const Matrix> mats,
                                      std::size_t skip, bool transpose);

Matrix kron(const Matrix& a, const Matrix& b);

/// A_K ⊗ ... ⊗ A_{k+1} ⊗ A_{k-1} ⊗ ... ⊗ A_1 (0-based: every index except k,
/// highest first).
Matrix kron_except(std::span<const Matrix> mats, std::size_t k);

std::vector<double> vec(const DenseTensor& x);
double frobenius_norm(const DenseTensor& x);
double squared_norm(const DenseTensor& x);

}  // namespace rtfa
