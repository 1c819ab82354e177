#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "rtfa/errors.hpp"
#include "rtfa/metrics.hpp"
#include "rtfa/simulation.hpp"

using namespace rtfa;

namespace {

DgpConfig small_config(std::uint64_t seed) {
  DgpConfig cfg;
  cfg.dims = {5, 4, 3};
  cfg.ranks = {2, 2, 1};
  cfg.T = 12;
  cfg.seed = seed;
  return cfg;
}

double kurtosis(const TensorSeries& x) {
  double m2 = 0.0, m4 = 0.0, n = 0.0;
  for (const auto& s : x.slices())
    for (double v : s.data()) {
      m2 += v * v;
      m4 += v * v * v * v;
      n += 1.0;
    }
  m2 /= n;
  return m4 / n / (m2 * m2);
}

}  // namespace

TEST(Simulation, EquicorrelatedCovAndCholesky) {
  const Matrix s = equicorrelated_cov(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(s(i, j), i == j ? 1.0 : 0.25);
  const Matrix l = cholesky(s);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_EQ(l(i, j), 0.0);
  EXPECT_LE(max_abs_diff(matmul_nt(l, l), s), 1e-15);
  EXPECT_THROW(cholesky(Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}})), NumericalError);
}

TEST(Simulation, DatasetComposition) {
  const DgpConfig cfg = small_config(3);
  const SimulatedDataset d = gen_dataset(cfg);
  ASSERT_EQ(d.observations.length(), 12u);
  EXPECT_EQ(d.observations.dims(), cfg.dims);
  EXPECT_EQ(d.true_factors.dims(), (Dims{2, 2, 1}));
  EXPECT_EQ(d.true_loadings.ranks(), cfg.ranks);
  for (const auto& a : d.true_loadings.mats)
    for (double v : a.data()) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_EQ(d.observations[t], d.true_common[t] + d.noise[t]);
    EXPECT_EQ(d.true_common[t], multi_mode_product(d.true_factors[t], d.true_loadings.mats));
  }
}

TEST(Simulation, SeedDeterminesData) {
  EXPECT_EQ(gen_dataset(small_config(5)).observations, gen_dataset(small_config(5)).observations);
  EXPECT_NE(gen_dataset(small_config(5)).observations, gen_dataset(small_config(6)).observations);
}

TEST(Simulation, ZeroNoiseHook) {
  DgpConfig cfg = small_config(4);
  cfg.zero_noise = true;
  const SimulatedDataset d = gen_dataset(cfg);
  EXPECT_EQ(d.observations, d.true_common);
}

TEST(Simulation, NormalizedLoadingsSpanTheRawOnes) {
  Rng rng(8);
  const std::vector<std::size_t> ranks{3, 2};
  const GeneratedLoadings g = gen_loadings({10, 7}, ranks, rng);
  for (std::size_t k = 0; k < 2; ++k) {
    const Matrix& a = g.normalized.mats[k];
    const double p = static_cast<double>(a.rows());
    EXPECT_LE(max_abs_diff((1.0 / p) * matmul_tn(a, a), Matrix::identity(ranks[k])), 1e-12);
    EXPECT_LE(subspace_distance(a, g.raw.mats[k]), 1e-12);
  }
}

TEST(Simulation, NoiseHasKroneckerCovariance) {
  Rng rng(11);
  const Dims dims{4, 3, 3};
  const std::size_t T = 4000;
  const TensorSeries e = gen_noise(dims, T, 0.1, NoiseLaw::normal(), rng, 100);
  // E[E_(1) E_(1)^T] = Σ_1 tr(Σ_3 ⊗ Σ_2) = 9 Σ_1.
  Matrix acc(4, 4);
  for (const auto& s : e.slices()) acc = acc + matmul_nt(unfold(s, 0), unfold(s, 0));
  acc = (1.0 / (9.0 * T)) * acc;
  EXPECT_LE(max_abs_diff(acc, equicorrelated_cov(4)), 0.06);
}

TEST(Simulation, FactorsFollowStationaryAr1) {
  Rng rng(12);
  const std::vector<std::size_t> ranks{2, 2};
  const std::size_t T = 20000;
  const FactorSeries f = gen_factors(ranks, T, 0.5, rng, 100);
  double var = 0.0, lag = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    var += f[t].data()[0] * f[t].data()[0];
    if (t) lag += f[t].data()[0] * f[t - 1].data()[0];
  }
  var /= T;
  lag /= (T - 1);
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_NEAR(lag / var, 0.5, 0.03);
}

TEST(Simulation, TensorTHasHeavierTails) {
  Rng a(13), b(13);
  const Dims dims{5, 5};
  const double k_normal = kurtosis(gen_noise(dims, 4000, 0.0, NoiseLaw::normal(), a, 0));
  const double k_t = kurtosis(gen_noise(dims, 4000, 0.0, NoiseLaw::student_t(5.0), b, 0));
  EXPECT_NEAR(k_normal, 3.0, 0.15);
  EXPECT_GT(k_t, 4.5);  // population value 9
}

TEST(Simulation, ConfigValidation) {
  DgpConfig cfg = small_config(1);
  cfg.ranks = {6, 2, 1};
  EXPECT_THROW(gen_dataset(cfg), DimensionError);
  cfg = small_config(1);
  cfg.phi = 1.0;
  EXPECT_THROW(gen_dataset(cfg), DimensionError);
  cfg = small_config(1);
  cfg.noise = NoiseLaw::student_t(2.0);
  EXPECT_THROW(gen_dataset(cfg), DimensionError);
  cfg = small_config(1);
  cfg.T = 0;
  EXPECT_THROW(gen_dataset(cfg), DimensionError);
  EXPECT_THROW(preset_setting('E', 20, NoiseLaw::normal(), 1), DimensionError);
}

TEST(Simulation, Presets) {
  EXPECT_EQ(preset_setting('A', 20, NoiseLaw::normal(), 1).dims, (Dims{10, 10, 10}));
  EXPECT_EQ(preset_setting('B', 20, NoiseLaw::normal(), 1).dims, (Dims{100, 10, 10}));
  EXPECT_EQ(preset_setting('C', 20, NoiseLaw::normal(), 1).dims, (Dims{20, 20, 20}));
  const DgpConfig d = preset_setting('D', 50, NoiseLaw::student_t(3), 1);
  EXPECT_EQ(d.dims, (Dims{30, 30, 30}));
  EXPECT_EQ(d.ranks, (std::vector<std::size_t>{3, 3, 3}));
  EXPECT_EQ(d.phi, 0.1);
  EXPECT_EQ(d.psi, 0.1);
  EXPECT_EQ(d.T, 50u);
}

TEST(MonteCarlo, ReplicationUsesItsOwnStream) {
  const DgpConfig cfg = small_config(21);
  std::vector<TensorSeries> seen(3);
  ReplicationTask task = [&](const SimulatedDataset& d, std::size_t rep) {
    seen[rep] = d.observations;
    return std::vector<ReplicationRecord>{{rep, 0, "x", 1.0}};
  };
  run_monte_carlo(cfg, task, 3, 1);
  for (std::size_t rep = 0; rep < 3; ++rep) {
    DgpConfig c = cfg;
    c.seed = stream_seed(21, rep);
    EXPECT_EQ(seen[rep], gen_dataset(c).observations);
  }
}

TEST(MonteCarlo, WorkerCountDoesNotChangeResults) {
  const DgpConfig cfg = preset_setting('A', 20, NoiseLaw::student_t(3), 77);
  EstimationConfig est;
  est.ranks = {3, 3, 3};
  est.method = Method::huber;
  const ReplicationTable one = run_monte_carlo(cfg, est, 10, 1);
  const ReplicationTable eight = run_monte_carlo(cfg, est, 10, 8);
  EXPECT_EQ(records_csv(one.records), records_csv(eight.records));
  EXPECT_EQ(aggregate_csv(one.aggregate), aggregate_csv(eight.aggregate));
  ASSERT_EQ(one.records.size(), 40u);
  EXPECT_EQ(one.records.front().rep, 0u);
  EXPECT_EQ(one.records.back().rep, 9u);
}

TEST(MonteCarlo, TaskErrorsPropagate) {
  ReplicationTask task = [](const SimulatedDataset&, std::size_t rep) -> std::vector<ReplicationRecord> {
    if (rep == 3) throw std::runtime_error("boom");
    return {};
  };
  EXPECT_THROW(run_monte_carlo(small_config(1), task, 6, 4), std::runtime_error);
  EXPECT_THROW(run_monte_carlo(small_config(1), task, 0, 1), DimensionError);
}

TEST(MonteCarlo, RankTaskRecords) {
  const DgpConfig cfg = preset_setting('C', 50, NoiseLaw::normal(), 3);
  const ReplicationTable tab = run_monte_carlo(cfg, RankConfig{}, 2, 1);
  ASSERT_EQ(tab.aggregate.size(), 4u);
  EXPECT_EQ(tab.aggregate[0].metric, "rank_mode1");
  EXPECT_EQ(tab.aggregate[3].metric, "exact");
  EXPECT_EQ(tab.aggregate[3].mean, 1.0);
}

TEST(Aggregate, MeanAndSampleSd) {
  std::vector<ReplicationRecord> recs{{0, 1, "d", 1.0}, {0, 0, "m", 5.0}, {1, 1, "d", 2.0},
                                      {1, 0, "m", 5.0}, {2, 1, "d", 6.0}, {2, 0, "m", 5.0}};
  const auto rows = aggregate_records(recs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].metric, "d_mode1");
  EXPECT_DOUBLE_EQ(rows[0].mean, 3.0);
  EXPECT_DOUBLE_EQ(rows[0].sd, std::sqrt(7.0));  // (4 + 1 + 9) / 2
  EXPECT_EQ(rows[0].count, 3u);
  EXPECT_EQ(rows[1].metric, "m");
  EXPECT_EQ(rows[1].sd, 0.0);

  const auto single = aggregate_records({{0, 0, "z", 2.5}});
  EXPECT_EQ(single[0].sd, 0.0);
}

TEST(Aggregate, CsvIsLocaleFreeAndRoundTrips) {
  const double v = 0.1 + 0.2;
  const std::string csv = records_csv({{4, 2, "distance", v}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rep,mode,metric,value");
  const std::string line = csv.substr(csv.find('\n') + 1);
  EXPECT_EQ(line.substr(0, 13), "4,2,distance,");
  EXPECT_EQ(std::strtod(line.substr(13).c_str(), nullptr), v);
  EXPECT_EQ(aggregate_csv({{"m", 1.5, 0.25, 2}}), "metric,mean,sd\nm,1.5,0.25\n");
}
