#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "rtfa/errors.hpp"
#include "rtfa/rank_selection.hpp"
#include "rtfa/simulation.hpp"
#include "support.hpp"

using namespace rtfa;

namespace {

std::size_t brute_pick(const std::vector<double>& v, double penalty, std::size_t r_max) {
  std::vector<double> ratios;
  for (std::size_t j = 0; j < r_max; ++j) {
    const double den = v[j + 1] + penalty;
    if (den == 0.0) {
      ratios.push_back(v[j] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    } else {
      ratios.push_back(v[j] / den);
    }
  }
  return static_cast<std::size_t>(std::max_element(ratios.begin(), ratios.end()) - ratios.begin()) + 1;
}

}  // namespace

TEST(RateConstants, WorkedExamples) {
  const std::vector<std::size_t> a{10, 10, 10};
  const RateConstants ra = rate_constants(a, 20);
  EXPECT_EQ(ra.L, 1000u);
  EXPECT_EQ(ra.L_star, 1000u);   // min(1000, 100², 20·100)
  EXPECT_EQ(ra.L_star_star, 100u);
  EXPECT_EQ(ra.omega, (std::vector<std::uint64_t>{200, 200, 200}));  // min(10·20, 100², 1000)

  const std::vector<std::size_t> two{2, 2};
  EXPECT_EQ(rate_constants(two, 1).L_star_star, 2u);

  const std::vector<std::size_t> b{100, 10, 10};
  const RateConstants rb = rate_constants(b, 20);
  EXPECT_EQ(rb.L, 2000u);
  EXPECT_EQ(rb.omega[0], 2000u);
  EXPECT_EQ(rb.L_star, 2000u);  // min(10000, 100², 1000², 20·100, 20·1000)
  EXPECT_EQ(rb.L_star_star, 100u);
  EXPECT_EQ(rb.omega[1], 200u);  // min(10·20, 1000², 2000)
}

TEST(RateConstants, MatchDefinitionsOnRandomShapes) {
  std::mt19937_64 g(41);
  std::uniform_int_distribution<std::size_t> d(1, 40), len(1, 300), order(1, 4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> dims(order(g));
    for (auto& v : dims) v = d(g);
    const std::uint64_t T = len(g);
    std::uint64_t p = 1;
    for (auto v : dims) p *= v;
    std::uint64_t L = p, Ls = p, Lss = std::numeric_limits<std::uint64_t>::max();
    for (auto v : dims) {
      const std::uint64_t pm = p / v;
      L = std::min(L, T * pm);
      Ls = std::min({Ls, pm * pm, T * pm});
      Lss = std::min(Lss, pm);
    }
    const RateConstants rc = rate_constants(dims, T);
    ASSERT_EQ(rc.L, L);
    ASSERT_EQ(rc.L_star, Ls);
    ASSERT_EQ(rc.L_star_star, Lss);
    for (std::size_t k = 0; k < dims.size(); ++k)
      ASSERT_EQ(rc.omega[k], std::min({dims[k] * T, (p / dims[k]) * (p / dims[k]), L}));
  }
}

TEST(RatioPick, WorkedExamples) {
  EXPECT_EQ(eigenvalue_ratio_pick(std::vector<double>{10, 9, 0.1, 0.09, 0.08}, 0.0, 4), 2u);
  EXPECT_EQ(eigenvalue_ratio_pick(std::vector<double>{5, 1e-12, 1e-13, 1e-14, 1e-15}, 0.01, 4), 1u);
  EXPECT_EQ(eigenvalue_ratio_pick(std::vector<double>{2, 2, 2, 2}, 0.0, 3), 1u);
  EXPECT_EQ(eigenvalue_ratio_pick(std::vector<double>{4, 3, 2, 0, 0}, 0.0, 4), 3u);
}

TEST(RatioPick, AgreesWithBruteForce) {
  std::mt19937_64 g(42);
  std::uniform_int_distribution<std::size_t> rmax(1, 10), extra(0, 3), zeros(0, 3);
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution tie(0.15), use_pen(0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t r = rmax(g);
    std::vector<double> v(r + 1 + extra(g));
    for (auto& x : v) x = e(g);
    std::sort(v.rbegin(), v.rend());
    for (std::size_t i = 1; i < v.size(); ++i)
      if (tie(g)) v[i] = v[i - 1];
    const std::size_t nz = std::min(zeros(g), v.size() - 1);
    for (std::size_t i = v.size() - nz; i < v.size(); ++i) v[i] = 0.0;
    const double pen = use_pen(g) ? e(g) * 0.1 : 0.0;
    ASSERT_EQ(eigenvalue_ratio_pick(v, pen, r), brute_pick(v, pen, r)) << "trial " << trial;
  }
}

TEST(RatioPick, RejectsBadInput) {
  EXPECT_THROW(eigenvalue_ratio_pick(std::vector<double>{3, 2, 1}, 0.0, 3), DimensionError);
  EXPECT_THROW(eigenvalue_ratio_pick(std::vector<double>{3, 2, 1}, -1.0, 2), DimensionError);
  EXPECT_THROW(eigenvalue_ratio_pick(std::vector<double>{3, 2, 1}, 0.0, 0), DimensionError);
}

TEST(EstimateRanks, NoiselessDataGivesTrueRanks) {
  std::mt19937_64 g(43);
  for (Method m : {Method::least_squares, Method::huber}) {
    auto lr = testing_support::low_rank_series({9, 8, 10}, {2, 2, 2}, 40, g);
    RankConfig cfg;
    cfg.r_max = 5;
    cfg.method = m;
    const RankResult res = estimate_ranks(lr.x, cfg);
    EXPECT_EQ(res.ranks, (std::vector<std::size_t>{2, 2, 2}));
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.history.size(), static_cast<std::size_t>(res.iterations_run));
    EXPECT_EQ(res.eigenvalue_history.size(), res.history.size());
  }

  auto mixed = testing_support::low_rank_series({9, 8, 10}, {1, 3, 2}, 40, g);
  RankConfig cfg;
  cfg.r_max = 6;
  EXPECT_EQ(estimate_ranks(mixed.x, cfg).ranks, (std::vector<std::size_t>{1, 3, 2}));
}

TEST(EstimateRanks, SimulatedSettingCWithDefaults) {
  const SimulatedDataset d = gen_dataset(preset_setting('C', 100, NoiseLaw::normal(), 5));
  for (Method m : {Method::least_squares, Method::huber}) {
    RankConfig cfg;
    cfg.method = m;
    const RankResult res = estimate_ranks(d.observations, cfg);
    EXPECT_EQ(res.ranks, (std::vector<std::size_t>{3, 3, 3}));
    for (std::size_t r : res.ranks) {
      EXPECT_GE(r, 1u);
      EXPECT_LE(r, cfg.r_max);
    }
    EXPECT_EQ(res.tau_used.has_value(), m == Method::huber);
  }
}

TEST(EstimateRanks, PenaltyUsesRegimeRate) {
  std::mt19937_64 g(44);
  auto lr = testing_support::low_rank_series({10, 11, 12}, {2, 2, 2}, 30, g);
  const std::vector<std::size_t> dims{10, 11, 12};
  const RateConstants rc = rate_constants(dims, 30);
  RankConfig cfg;
  cfg.c = 2.0;
  cfg.r_max = 4;
  const RankResult ls = estimate_ranks(lr.x, cfg);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_DOUBLE_EQ(ls.penalties[k], 2.0 / std::sqrt(static_cast<double>(rc.omega[k])));
  cfg.method = Method::huber;
  EXPECT_DOUBLE_EQ(estimate_ranks(lr.x, cfg).penalties[0], 2.0 / std::sqrt(static_cast<double>(rc.L_star)));
  cfg.epsilon_regime = EpsilonRegime::lt2;
  EXPECT_DOUBLE_EQ(estimate_ranks(lr.x, cfg).penalties[0],
                   2.0 / std::sqrt(static_cast<double>(rc.L_star_star)));
}

TEST(EstimateRanks, ThinModesClampWithWarningOrFail) {
  std::mt19937_64 g(45);
  auto lr = testing_support::low_rank_series({9, 12, 12}, {2, 2, 2}, 30, g);
  RankConfig cfg;  // r_max = 8: 9 = r_max + 1 leaves no room for r_hat + 2 when r_hat = 8
  const RankResult res = estimate_ranks(lr.x, cfg);
  EXPECT_FALSE(res.warnings.empty());
  EXPECT_EQ(res.ranks, (std::vector<std::size_t>{2, 2, 2}));

  auto thin = testing_support::low_rank_series({8, 12, 12}, {2, 2, 2}, 30, g);
  EXPECT_THROW(estimate_ranks(thin.x, cfg), DimensionError);
}

TEST(EstimateRanks, IsDeterministic) {
  const SimulatedDataset d = gen_dataset(preset_setting('A', 50, NoiseLaw::student_t(3), 9));
  RankConfig cfg;
  cfg.method = Method::huber;
  const RankResult a = estimate_ranks(d.observations, cfg), b = estimate_ranks(d.observations, cfg);
  EXPECT_EQ(a.ranks, b.ranks);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
}
