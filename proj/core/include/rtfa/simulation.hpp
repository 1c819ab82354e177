#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "rtfa/estimators.hpp"
#include "rtfa/random.hpp"
#include "rtfa/rank_selection.hpp"
#include "rtfa/tensor.hpp"

namespace rtfa {

struct NoiseLaw {
  enum class Kind { tensor_normal, tensor_t };
  Kind kind = Kind::tensor_normal;
  double dof = 3.0;  // used by tensor_t only

  static NoiseLaw normal() { return {}; }
  static NoiseLaw student_t(double dof) { return {Kind::tensor_t, dof}; }
};

/// Tensor factor DGP: VAR(1) factors with coefficient phi, VAR(1) noise with
/// coefficient psi driven by tensor-normal or tensor-t innovations with
/// mode covariances Σ_k = (1 − 1/p_k) I + (1/p_k) 11ᵀ, and U(−1, 1) loadings.
struct DgpConfig {
  Dims dims;
  std::size_t T = 0;
  std::vector<std::size_t> ranks;
  double phi = 0.1;
  double psi = 0.1;
  NoiseLaw noise;
  std::uint64_t seed = 0;
  std::size_t burn_in = 100;
  /// Test hook: drop the idiosyncratic component entirely.
  bool zero_noise = false;

  void validate() const;
};

struct SimulatedDataset {
  TensorSeries observations;
  /// Raw U(−1, 1) draws; compare against these through subspace metrics.
  LoadingSet true_loadings;
  FactorSeries true_factors;
  TensorSeries true_common;
  /// observations[t] == true_common[t] + noise[t] as computed.
  TensorSeries noise;
};

struct GeneratedLoadings {
  LoadingSet raw;
  /// Same column spaces, rescaled so A_kᵀA_k / p_k = I.
  LoadingSet normalized;
};

GeneratedLoadings gen_loadings(const Dims& dims, std::span<const std::size_t> ranks, Rng& rng);

FactorSeries gen_factors(std::span<const std::size_t> ranks, std::size_t T, double phi, Rng& rng,
                         std::size_t burn_in);

/// Mode covariance with unit diagonal and 1/p off the diagonal.
Matrix equicorrelated_cov(std::size_t p);

/// Lower Cholesky factor of a symmetric positive definite matrix.
Matrix cholesky(const Matrix& spd);

TensorSeries gen_noise(const Dims& dims, std::size_t T, double psi, const NoiseLaw& law, Rng& rng,
                       std::size_t burn_in);

SimulatedDataset gen_dataset(const DgpConfig& config);

/// Fixed simulation settings: A = 10x10x10, B = 100x10x10, C = 20x20x20,
/// D = 30x30x30, each with ranks 3,3,3 and phi = psi = 0.1.
DgpConfig preset_setting(char setting, std::size_t T, NoiseLaw noise, std::uint64_t seed);

struct ReplicationRecord {
  std::size_t rep = 0;
  std::size_t mode = 0;  // 1-based mode, 0 for whole-model metrics
  std::string metric;
  double value = 0.0;
};

struct AggregateRow {
  std::string metric;  // metric name with a _mode<k> suffix for per-mode values
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single replication
  std::size_t count = 0;
};

struct ReplicationTable {
  std::vector<ReplicationRecord> records;
  std::vector<AggregateRow> aggregate;
};

using ReplicationTask =
    std::function<std::vector<ReplicationRecord>(const SimulatedDataset&, std::size_t rep)>;

/// Runs `reps` replications of `dgp`; replication i draws its data from
/// stream_seed(dgp.seed, i). Records are reduced in replication order, so
/// the table does not depend on `workers`.
ReplicationTable run_monte_carlo(const DgpConfig& dgp, const ReplicationTask& task,
                                 std::size_t reps, std::size_t workers = 1);

/// Loading-space distances per mode and common-component MSE for a fit, or
/// the exact-recovery indicator and per-mode ranks for rank selection.
ReplicationTable run_monte_carlo(const DgpConfig& dgp,
                                 const std::variant<EstimationConfig, RankConfig>& est,
                                 std::size_t reps, std::size_t workers = 1);

/// Records produced by the standard estimation task, with metric names
/// prefixed by `label` when it is not empty.
std::vector<ReplicationRecord> estimation_records(const SimulatedDataset& data,
                                                  const EstimationConfig& est, std::size_t rep,
                                                  const std::string& label = "");
std::vector<ReplicationRecord> rank_records(const SimulatedDataset& data, const RankConfig& cfg,
                                            std::size_t rep, const std::string& label = "");

/// Mean and sample sd per (metric, mode), in first-appearance order.
std::vector<AggregateRow> aggregate_records(const std::vector<ReplicationRecord>& records);

std::string records_csv(const std::vector<ReplicationRecord>& records);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

}  // namespace rtfa
