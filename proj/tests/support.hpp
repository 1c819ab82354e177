#pragma once

// Test-side generators. These use <random> rather than the library's Rng so
// that oracles do not share code with the implementation under test.

#include <random>
#include <vector>

#include "rtfa/estimators.hpp"
#include "rtfa/matrix.hpp"
#include "rtfa/tensor.hpp"

namespace testing_support {

inline rtfa::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  rtfa::Matrix m(r, c);
  for (double& v : m.data()) v = u(g);
  return m;
}

inline rtfa::Matrix random_symmetric(std::size_t n, std::mt19937_64& g) {
  rtfa::Matrix a = random_matrix(n, n, g);
  return 0.5 * (a + rtfa::transpose(a));
}

inline rtfa::DenseTensor random_tensor(const rtfa::Dims& dims, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  rtfa::DenseTensor x(dims);
  for (double& v : x.data()) v = n(g);
  return x;
}

inline rtfa::TensorSeries random_series(const rtfa::Dims& dims, std::size_t T, std::mt19937_64& g) {
  std::vector<rtfa::DenseTensor> s;
  for (std::size_t t = 0; t < T; ++t) s.push_back(random_tensor(dims, g));
  return rtfa::TensorSeries(std::move(s));
}

// Exact low-rank series F_t x_1 A_1 ... x_K A_K with iid normal cores.
struct LowRank {
  rtfa::LoadingSet loadings;
  rtfa::TensorSeries x;
};

inline LowRank low_rank_series(const rtfa::Dims& dims, const std::vector<std::size_t>& ranks,
                               std::size_t T, std::mt19937_64& g) {
  LowRank out;
  for (std::size_t k = 0; k < dims.size(); ++k) out.loadings.mats.push_back(random_matrix(dims[k], ranks[k], g));
  std::vector<rtfa::DenseTensor> s;
  for (std::size_t t = 0; t < T; ++t)
    s.push_back(rtfa::multi_mode_product(random_tensor(rtfa::Dims(ranks.begin(), ranks.end()), g),
                                         out.loadings.mats));
  out.x = rtfa::TensorSeries(std::move(s));
  return out;
}

inline rtfa::TensorSeries scaled(const rtfa::TensorSeries& x, double c) {
  std::vector<rtfa::DenseTensor> s(x.slices());
  for (auto& t : s) t *= c;
  return rtfa::TensorSeries(std::move(s));
}

}  // namespace testing_support
