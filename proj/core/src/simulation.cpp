#include "rtfa/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include "rtfa/errors.hpp"
#include "rtfa/metrics.hpp"

namespace rtfa {

void DgpConfig::validate() const {
  if (dims.empty()) throw DimensionError("dgp: dims must not be empty");
  if (T == 0) throw DimensionError("dgp: T must be positive");
  if (ranks.size() != dims.size()) throw DimensionError("dgp: one rank per mode required");
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (ranks[k] == 0 || ranks[k] > dims[k] || dims[k] == 0)
      throw DimensionError("dgp: ranks must satisfy 1 <= r_k <= p_k");
  if (!(std::abs(phi) < 1.0)) throw DimensionError("dgp: |phi| must be below 1");
  if (!(std::abs(psi) < 1.0)) throw DimensionError("dgp: |psi| must be below 1");
  if (noise.kind == NoiseLaw::Kind::tensor_t && !(noise.dof > 2.0))
    throw DimensionError("dgp: tensor-t noise needs dof > 2");
}

GeneratedLoadings gen_loadings(const Dims& dims, std::span<const std::size_t> ranks, Rng& rng) {
  if (ranks.size() != dims.size()) throw DimensionError("gen_loadings: one rank per mode");
  GeneratedLoadings out;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (ranks[k] == 0 || ranks[k] > dims[k])
      throw DimensionError("gen_loadings: ranks must satisfy 1 <= r_k <= p_k");
    Matrix a(dims[k], ranks[k]);
    for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
    out.normalized.mats.push_back(std::sqrt(static_cast<double>(dims[k])) * orthonormal_basis(a));
    out.raw.mats.push_back(std::move(a));
  }
  return out;
}

namespace {

// x <- coef * x + sqrt(1 - coef²) * innovation, elementwise.
void ar_step(std::span<double> x, std::span<const double> innovation, double coef) {
  const double scale = std::sqrt(1.0 - coef * coef);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = coef * x[i] + scale * innovation[i];
}

}  // namespace

FactorSeries gen_factors(std::span<const std::size_t> ranks, std::size_t T, double phi, Rng& rng,
                         std::size_t burn_in) {
  if (T == 0) throw DimensionError("gen_factors: T must be positive");
  if (!(std::abs(phi) < 1.0)) throw DimensionError("gen_factors: |phi| must be below 1");
  const Dims dims(ranks.begin(), ranks.end());
  DenseTensor state(dims);
  for (double& v : state.data()) v = rng.normal();
  std::vector<double> eps(state.size());
  auto draw = [&] {
    for (double& v : eps) v = rng.normal();
    ar_step(state.data(), eps, phi);
  };
  for (std::size_t b = 0; b < burn_in; ++b) draw();
  std::vector<DenseTensor> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    draw();
    out.push_back(state);
  }
  return FactorSeries(std::move(out));
}

Matrix equicorrelated_cov(std::size_t p) {
  Matrix s(p, p, 1.0 / static_cast<double>(p));
  for (std::size_t i = 0; i < p; ++i) s(i, i) = 1.0;
  return s;
}

Matrix cholesky(const Matrix& spd) {
  const std::size_t n = spd.rows();
  if (spd.cols() != n) throw DimensionError("cholesky: matrix is not square");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t m = 0; m < j; ++m) d -= l(j, m) * l(j, m);
    if (!(d > 0.0)) throw NumericalError("cholesky: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t m = 0; m < j; ++m) s -= l(i, m) * l(j, m);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

TensorSeries gen_noise(const Dims& dims, std::size_t T, double psi, const NoiseLaw& law, Rng& rng,
                       std::size_t burn_in) {
  if (T == 0) throw DimensionError("gen_noise: T must be positive");
  if (!(std::abs(psi) < 1.0)) throw DimensionError("gen_noise: |psi| must be below 1");
  if (law.kind == NoiseLaw::Kind::tensor_t && !(law.dof > 2.0))
    throw DimensionError("gen_noise: tensor-t noise needs dof > 2");

  std::vector<Matrix> factors;
  for (std::size_t p : dims) factors.push_back(cholesky(equicorrelated_cov(p)));

  // vec(Z ×_1 L_1 ⋯ ×_K L_K) = (L_K ⊗ ⋯ ⊗ L_1) vec(Z) has covariance Σ_K ⊗ ⋯ ⊗ Σ_1.
  auto innovation = [&] {
    DenseTensor z(dims);
    for (double& v : z.data()) v = rng.normal();
    DenseTensor u = multi_mode_product(z, factors);
    if (law.kind == NoiseLaw::Kind::tensor_t) u *= 1.0 / std::sqrt(rng.chi_square(law.dof) / law.dof);
    return u;
  };

  DenseTensor state = innovation();
  for (std::size_t b = 0; b < burn_in; ++b) ar_step(state.data(), innovation().data(), psi);
  std::vector<DenseTensor> out;
  out.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    ar_step(state.data(), innovation().data(), psi);
    out.push_back(state);
  }
  return TensorSeries(std::move(out));
}

SimulatedDataset gen_dataset(const DgpConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SimulatedDataset ds;
  ds.true_loadings = gen_loadings(config.dims, config.ranks, rng).raw;
  ds.true_factors = gen_factors(config.ranks, config.T, config.phi, rng, config.burn_in);
  ds.true_common = common_components(ds.true_loadings, ds.true_factors);
  if (config.zero_noise) {
    ds.noise = TensorSeries(config.dims, config.T);
  } else {
    ds.noise = gen_noise(config.dims, config.T, config.psi, config.noise, rng, config.burn_in);
  }
  std::vector<DenseTensor> obs;
  obs.reserve(config.T);
  for (std::size_t t = 0; t < config.T; ++t) obs.push_back(ds.true_common[t] + ds.noise[t]);
  ds.observations = TensorSeries(std::move(obs));
  return ds;
}

DgpConfig preset_setting(char setting, std::size_t T, NoiseLaw noise, std::uint64_t seed) {
  DgpConfig cfg;
  switch (setting) {
    case 'A': cfg.dims = {10, 10, 10}; break;
    case 'B': cfg.dims = {100, 10, 10}; break;
    case 'C': cfg.dims = {20, 20, 20}; break;
    case 'D': cfg.dims = {30, 30, 30}; break;
    default: throw DimensionError(std::string("unknown setting '") + setting + "'");
  }
  cfg.T = T;
  cfg.ranks = {3, 3, 3};
  cfg.phi = 0.1;
  cfg.psi = 0.1;
  cfg.noise = noise;
  cfg.seed = seed;
  return cfg;
}

std::vector<ReplicationRecord> estimation_records(const SimulatedDataset& data,
                                                  const EstimationConfig& est, std::size_t rep,
                                                  const std::string& label) {
  const EstimationResult fitted = fit(data.observations, est);
  const std::string prefix = label.empty() ? "" : label + "_";
  std::vector<ReplicationRecord> out;
  for (std::size_t k = 0; k < fitted.loadings.order(); ++k)
    out.push_back({rep, k + 1, prefix + "distance",
                   subspace_distance(fitted.loadings.mats[k], data.true_loadings.mats[k])});
  const TensorSeries s_hat = common_components(fitted.loadings, fitted.factors);
  out.push_back({rep, 0, prefix + "mse", mse_common(s_hat, data.true_common)});
  return out;
}

std::vector<ReplicationRecord> rank_records(const SimulatedDataset& data, const RankConfig& cfg,
                                            std::size_t rep, const std::string& label) {
  const RankResult res = estimate_ranks(data.observations, cfg);
  const std::string prefix = label.empty() ? "" : label + "_";
  const std::vector<std::size_t> truth = data.true_loadings.ranks();
  std::vector<ReplicationRecord> out;
  for (std::size_t k = 0; k < res.ranks.size(); ++k)
    out.push_back({rep, k + 1, prefix + "rank", static_cast<double>(res.ranks[k])});
  out.push_back({rep, 0, prefix + "exact", res.ranks == truth ? 1.0 : 0.0});
  return out;
}

ReplicationTable run_monte_carlo(const DgpConfig& dgp, const ReplicationTask& task,
                                 std::size_t reps, std::size_t workers) {
  if (reps == 0) throw DimensionError("run_monte_carlo: reps must be positive");
  dgp.validate();
  workers = std::clamp<std::size_t>(workers, 1, reps);

  std::vector<std::vector<ReplicationRecord>> per_rep(reps);
  std::vector<std::exception_ptr> errors(reps);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < reps; i = next.fetch_add(1)) {
      try {
        DgpConfig cfg = dgp;
        cfg.seed = stream_seed(dgp.seed, i);
        per_rep[i] = task(gen_dataset(cfg), i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ReplicationTable table;
  for (auto& recs : per_rep)
    for (auto& r : recs) table.records.push_back(std::move(r));
  table.aggregate = aggregate_records(table.records);
  return table;
}

ReplicationTable run_monte_carlo(const DgpConfig& dgp,
                                 const std::variant<EstimationConfig, RankConfig>& est,
                                 std::size_t reps, std::size_t workers) {
  ReplicationTask task = std::visit(
      [](const auto& cfg) -> ReplicationTask {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, EstimationConfig>) {
          return [cfg](const SimulatedDataset& d, std::size_t rep) {
            return estimation_records(d, cfg, rep);
          };
        } else {
          return [cfg](const SimulatedDataset& d, std::size_t rep) {
            return rank_records(d, cfg, rep);
          };
        }
      },
      est);
  return run_monte_carlo(dgp, task, reps, workers);
}

std::vector<AggregateRow> aggregate_records(const std::vector<ReplicationRecord>& records) {
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    const std::string key = r.mode == 0 ? r.metric : r.metric + "_mode" + std::to_string(r.mode);
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.push_back({key, {}});
    groups[it->second].second.push_back(r.value);
  }
  std::vector<AggregateRow> out;
  for (const auto& [name, values] : groups) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out.push_back({name, mean, sd, values.size()});
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string records_csv(const std::vector<ReplicationRecord>& records) {
  std::string out = "rep,mode,metric,value\n";
  for (const auto& r : records)
    out += std::to_string(r.rep) + "," + std::to_string(r.mode) + "," + r.metric + "," +
           format_double(r.value) + "\n";
  return out;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "metric,mean,sd\n";
  for (const auto& r : rows)
    out += r.metric + "," + format_double(r.mean) + "," + format_double(r.sd) + "\n";
  return out;
}

}  // namespace rtfa
