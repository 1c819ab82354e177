#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "io.hpp"
#include "rtfa/eig.hpp"
#include "rtfa/errors.hpp"
#include "rtfa/estimators.hpp"
#include "rtfa/metrics.hpp"
#include "rtfa/rank_selection.hpp"
#include "rtfa/simulation.hpp"

namespace rtfa::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string loading_path(const std::string& prefix, std::size_t k) {
  return prefix + "_A" + std::to_string(k + 1) + ".mtx";
}

std::vector<Matrix> read_loadings(const std::string& prefix) {
  std::vector<Matrix> mats;
  for (std::size_t k = 0; fs::exists(loading_path(prefix, k)); ++k)
    mats.push_back(read_matrix(loading_path(prefix, k)));
  if (mats.empty()) throw IoError("no loading files found for prefix '" + prefix + "'");
  return mats;
}

Method parse_method(const std::string& s) {
  if (s == "ls") return Method::least_squares;
  if (s == "huber") return Method::huber;
  throw UsageError("method must be ls or huber, got '" + s + "'");
}

double parse_number(const std::string& s, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

TauRule parse_tau(const std::string& s) {
  if (s == "median") return MedianTau{};
  if (s == "inf") return FixedTau{std::numeric_limits<double>::infinity()};
  const double v = parse_number(s, "tau");
  if (!(v > 0.0)) throw UsageError("tau must be positive");
  return FixedTau{v};
}

NoiseLaw parse_noise(const std::string& s) {
  if (s == "normal") return NoiseLaw::normal();
  if (s.size() > 1 && s[0] == 't') return NoiseLaw::student_t(parse_number(s.substr(1), "noise dof"));
  throw UsageError("noise must be normal or t<dof>, got '" + s + "'");
}

std::string noise_name(const NoiseLaw& law) {
  if (law.kind == NoiseLaw::Kind::tensor_normal) return "normal";
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%g", law.dof);
  return buf;
}

std::size_t resolve_workers(std::size_t flag) {
  const char* env = std::getenv("RTFA_WORKERS");
  if (env == nullptr || *env == '\0') return flag;
  std::size_t v = 0;
  const std::string s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0)
    throw UsageError("RTFA_WORKERS must be a positive integer, got '" + s + "'");
  return v;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::vector<std::size_t> dims;
  std::size_t T = 0;
  std::vector<std::size_t> ranks;
  double phi = 0.1;
  double psi = 0.1;
  std::string noise = "normal";
  std::uint64_t seed = 0;
  std::size_t burn_in = 100;
  bool noiseless = false;
  std::string out;
  std::string truth_out;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  DgpConfig cfg;
  cfg.dims = a.dims;
  cfg.T = a.T;
  cfg.ranks = a.ranks;
  cfg.phi = a.phi;
  cfg.psi = a.psi;
  cfg.noise = parse_noise(a.noise);
  cfg.seed = a.seed;
  cfg.burn_in = a.burn_in;
  cfg.zero_noise = a.noiseless;
  const SimulatedDataset ds = gen_dataset(cfg);
  write_series(ds.observations, a.out);
  if (!a.truth_out.empty()) {
    for (std::size_t k = 0; k < ds.true_loadings.order(); ++k)
      write_matrix(ds.true_loadings.mats[k], loading_path(a.truth_out, k));
    write_series(ds.true_factors, a.truth_out + "_factors.tsrb");
    write_series(ds.true_common, a.truth_out + "_common.tsrb");
  }
  out << "wrote " << a.out << " (" << ds.observations.length() << " slices)\n";
  return kOk;
}

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string in;
  std::vector<std::size_t> ranks;
  std::string method = "huber";
  std::string tau = "median";
  int max_iter = 100;
  double tol = 1e-6;
  std::string out;
};

int do_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const TensorSeries x = read_series(a.in);
  EstimationConfig cfg;
  cfg.ranks = a.ranks;
  cfg.method = parse_method(a.method);
  cfg.tau = parse_tau(a.tau);
  cfg.max_iter = a.max_iter;
  cfg.tol = a.tol;
  if (cfg.method == Method::least_squares && a.tau != "median")
    err << "warning: --tau has no effect with --method ls\n";
  const EstimationResult res = fit(x, cfg);

  for (std::size_t k = 0; k < res.loadings.order(); ++k)
    write_matrix(res.loadings.mats[k], loading_path(a.out, k));
  write_series(res.factors, a.out + "_factors.tsrb");

  std::string diag = "iteration,max_subspace_change\n";
  for (std::size_t s = 0; s < res.per_iteration_subspace_change.size(); ++s)
    diag += std::to_string(s + 1) + "," + format_double(res.per_iteration_subspace_change[s]) + "\n";
  write_text_file(a.out + "_diagnostics.csv", diag);

  if (!res.converged) err << "warning: no convergence after " << res.iterations_run << " iterations\n";
  if (res.tau_floored) err << "warning: median residual scale is zero; tau floored\n";
  if (res.rank_deficient) err << "warning: projected covariance is rank deficient\n";

  out << "key,value\n";
  out << "method," << a.method << "\n";
  out << "iterations," << res.iterations_run << "\n";
  out << "converged," << (res.converged ? "true" : "false") << "\n";
  if (res.tau_used) out << "tau," << format_double(*res.tau_used) << "\n";
  return kOk;
}

// --- rank -------------------------------------------------------------------

struct RankArgs {
  std::string in;
  std::size_t r_max = 8;
  std::string method = "ls";
  double c = 0.0;
  std::string regime = "ge2";
  int max_iter = 20;
  std::string out;
};

int do_rank(const RankArgs& a, std::ostream& out, std::ostream& err) {
  const TensorSeries x = read_series(a.in);
  RankConfig cfg;
  cfg.r_max = a.r_max;
  cfg.method = parse_method(a.method);
  cfg.c = a.c;
  if (a.regime == "ge2") {
    cfg.epsilon_regime = EpsilonRegime::ge2;
  } else if (a.regime == "lt2") {
    cfg.epsilon_regime = EpsilonRegime::lt2;
  } else {
    throw UsageError("regime must be ge2 or lt2");
  }
  cfg.max_iter = a.max_iter;
  const RankResult res = estimate_ranks(x, cfg);
  for (const auto& w : res.warnings) err << "warning: " << w << "\n";
  if (!res.converged) err << "warning: rank vector did not settle after " << res.iterations_run << " iterations\n";

  std::string csv = "iteration,mode,index,eigenvalue\n";
  for (std::size_t s = 0; s < res.eigenvalue_history.size(); ++s)
    for (std::size_t k = 0; k < res.eigenvalue_history[s].size(); ++k)
      for (std::size_t j = 0; j < res.eigenvalue_history[s][k].size(); ++j)
        csv += std::to_string(s + 1) + "," + std::to_string(k + 1) + "," + std::to_string(j + 1) + "," +
               format_double(res.eigenvalue_history[s][k][j]) + "\n";
  fs::path target = a.out;
  if (target.empty()) target = fs::path(a.in).replace_extension().string() + "_eigenvalues.csv";
  write_text_file(target, csv);

  for (std::size_t k = 0; k < res.ranks.size(); ++k) out << (k ? " " : "") << res.ranks[k];
  out << "\n";
  return kOk;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string est;
  std::string truth;
  std::string metric;
  std::string data;
};

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.metric == "distance") {
    if (a.truth.empty()) throw UsageError("--truth is required for the distance metric");
    const auto est = read_loadings(a.est);
    const auto truth = read_loadings(a.truth);
    if (est.size() != truth.size()) throw UsageError("estimated and true loadings differ in order");
    out << "mode,distance\n";
    for (std::size_t k = 0; k < est.size(); ++k)
      out << k + 1 << "," << format_double(subspace_distance(est[k], truth[k])) << "\n";
    return kOk;
  }
  if (a.metric != "mse" && a.metric != "relmse")
    throw UsageError("metric must be distance, mse or relmse");

  LoadingSet loadings{read_loadings(a.est)};
  const TensorSeries factors = read_series(a.est + "_factors.tsrb");
  const TensorSeries s_hat = common_components(loadings, factors);
  double value;
  if (a.metric == "mse") {
    if (a.truth.empty()) throw UsageError("--truth is required for the mse metric");
    value = mse_common(s_hat, read_series(a.truth + "_common.tsrb"));
  } else {
    if (a.data.empty()) throw UsageError("--data is required for the relmse metric");
    value = relative_mse(read_series(a.data), s_hat);
  }
  out << "metric,value\n" << a.metric << "," << format_double(value) << "\n";
  return kOk;
}

// --- replicate --------------------------------------------------------------

struct ReplicateArgs {
  int table = 1;
  std::string setting = "A";
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::vector<std::size_t> T = {20, 50, 100, 200};
  std::size_t workers = 1;
  std::string out;
};

struct MethodSpec {
  std::string label;
  Method method;
};

const AggregateRow& find_row(const std::vector<AggregateRow>& rows, const std::string& name) {
  for (const auto& r : rows)
    if (r.metric == name) return r;
  throw std::logic_error("missing aggregate row " + name);
}

std::string cell(double mean, double sd, bool frequency) {
  char buf[64];
  if (frequency) {
    std::snprintf(buf, sizeof buf, "%.3f", mean);
  } else {
    std::snprintf(buf, sizeof buf, "%.4f(%.5f)", mean, sd);
  }
  return buf;
}

int do_replicate(const ReplicateArgs& a, std::ostream& out) {
  if (a.setting.size() != 1) throw UsageError("setting must be one of A, B, C, D");
  if (a.reps == 0) throw UsageError("--reps must be positive");
  const std::size_t workers = resolve_workers(a.workers);
  const char setting = a.setting[0];

  std::vector<NoiseLaw> laws;
  switch (a.table) {
    case 1: laws = {NoiseLaw::normal()}; break;
    case 2: laws = {NoiseLaw::student_t(3)}; break;
    case 3:
    case 4: laws = {NoiseLaw::normal(), NoiseLaw::student_t(3)}; break;
    default: throw UsageError("table must be 1, 2, 3 or 4");
  }
  const bool ranks = a.table == 4;
  const std::vector<MethodSpec> methods =
      ranks ? std::vector<MethodSpec>{{"RTFA-ER", Method::huber}, {"iPE-ER", Method::least_squares}}
            : std::vector<MethodSpec>{{"RTFA", Method::huber}, {"IPmoPCA", Method::least_squares}};

  std::string csv = "table,setting,distribution,T,method,metric,mode,mean,sd,cell\n";
  for (const NoiseLaw& law : laws) {
    for (std::size_t T : a.T) {
      const DgpConfig dgp = preset_setting(setting, T, law, a.seed);
      ReplicationTask task = [&](const SimulatedDataset& d, std::size_t rep) {
        std::vector<ReplicationRecord> recs;
        for (const auto& m : methods) {
          std::vector<ReplicationRecord> part;
          if (ranks) {
            RankConfig cfg;
            cfg.method = m.method;
            part = rank_records(d, cfg, rep, m.label);
          } else {
            EstimationConfig cfg;
            cfg.ranks = dgp.ranks;
            cfg.method = m.method;
            cfg.record_diagnostics = false;
            part = estimation_records(d, cfg, rep, m.label);
          }
          recs.insert(recs.end(), part.begin(), part.end());
        }
        return recs;
      };
      const ReplicationTable tab = run_monte_carlo(dgp, task, a.reps, workers);

      auto emit = [&](const std::string& method, const std::string& metric, std::size_t mode,
                      const AggregateRow& row) {
        csv += std::to_string(a.table) + "," + a.setting + "," + noise_name(law) + "," + std::to_string(T) +
               "," + method + "," + metric + "," + std::to_string(mode) + "," + format_double(row.mean) + "," +
               format_double(row.sd) + "," + cell(row.mean, row.sd, ranks) + "\n";
      };
      for (const auto& m : methods) {
        if (ranks) {
          emit(m.label, "exact", 0, find_row(tab.aggregate, m.label + "_exact"));
        } else if (a.table == 3) {
          emit(m.label, "mse", 0, find_row(tab.aggregate, m.label + "_mse"));
        } else {
          for (std::size_t k = 1; k <= dgp.dims.size(); ++k)
            emit(m.label, "distance", k,
                 find_row(tab.aggregate, m.label + "_distance_mode" + std::to_string(k)));
        }
      }
    }
  }
  if (a.out.empty()) {
    out << csv;
  } else {
    write_text_file(a.out, csv);
  }
  return kOk;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string loadings;
  bool varimax = false;
  bool cluster = false;
  std::vector<std::string> labels;
  std::string out;
};

int do_analyze(const AnalyzeArgs& a, std::ostream& out) {
  if (!a.varimax && !a.cluster) throw UsageError("nothing to do: pass --varimax and/or --cluster");
  Matrix loadings = read_matrix(a.loadings);
  const std::string prefix = a.out.empty() ? fs::path(a.loadings).replace_extension().string() : a.out;

  if (a.varimax) {
    const VarimaxResult vr = varimax(loadings);
    loadings = vr.rotated;
    std::string csv = "row,factor,loading,display\n";
    for (std::size_t i = 0; i < loadings.rows(); ++i)
      for (std::size_t j = 0; j < loadings.cols(); ++j)
        csv += std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + format_double(loadings(i, j)) + "," +
               std::to_string(static_cast<long long>(std::trunc(30.0 * loadings(i, j)))) + "\n";
    write_text_file(prefix + "_varimax.csv", csv);
    out << "wrote " << prefix << "_varimax.csv\n";
  }

  if (a.cluster) {
    std::vector<std::string> labels = a.labels;
    if (labels.empty())
      for (std::size_t i = 0; i < loadings.rows(); ++i) labels.push_back(std::to_string(i + 1));
    if (labels.size() != loadings.rows()) throw UsageError("--labels needs one label per loading row");
    const DistanceMatrix dm = loading_distance_matrix(loadings);
    const ClusterTree tree = complete_linkage(dm.distances, labels);
    const std::size_t n = labels.size();
    auto name = [&](std::size_t id) { return id < n ? labels[id] : std::string(); };
    std::string csv = "step,cluster_a,cluster_b,height,size,label_a,label_b\n";
    for (std::size_t s = 0; s < tree.merges.size(); ++s) {
      const Merge& m = tree.merges[s];
      csv += std::to_string(s + 1) + "," + std::to_string(m.a) + "," + std::to_string(m.b) + "," +
             format_double(m.height) + "," + std::to_string(m.size) + "," + name(m.a) + "," + name(m.b) + "\n";
    }
    write_text_file(prefix + "_linkage.csv", csv);
    out << "wrote " << prefix << "_linkage.csv\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust tensor factor analysis"};
  app.name(args.empty() ? "rtfa" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a tensor factor dataset");
  c_sim->add_option("--dims", sim.dims, "Tensor dimensions, e.g. 10,10,10")->required()->delimiter(',');
  c_sim->add_option("--T", sim.T, "Number of time points")->required();
  c_sim->add_option("--ranks", sim.ranks, "Factor ranks per mode")->required()->delimiter(',');
  c_sim->add_option("--phi", sim.phi, "Factor AR coefficient")->capture_default_str();
  c_sim->add_option("--psi", sim.psi, "Noise AR coefficient")->capture_default_str();
  c_sim->add_option("--noise", sim.noise, "normal or t<dof>, e.g. t3")->capture_default_str();
  c_sim->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  c_sim->add_option("--burn-in", sim.burn_in, "Discarded VAR steps")->capture_default_str();
  c_sim->add_flag("--noiseless", sim.noiseless, "Drop the idiosyncratic component");
  c_sim->add_option("--out", sim.out, "Output series file (.tsr for text)")->required();
  c_sim->add_option("--truth-out", sim.truth_out, "Prefix for true loadings, factors and common components");

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Estimate loadings and factors");
  c_est->add_option("--in", est.in, "Input series file")->required();
  c_est->add_option("--ranks", est.ranks, "Factor ranks per mode")->required()->delimiter(',');
  c_est->add_option("--method", est.method, "ls or huber")->capture_default_str();
  c_est->add_option("--tau", est.tau, "median or a positive threshold")->capture_default_str();
  c_est->add_option("--max-iter", est.max_iter, "Iteration cap")->capture_default_str();
  c_est->add_option("--tol", est.tol, "Subspace-change tolerance")->capture_default_str();
  c_est->add_option("--out", est.out, "Output prefix")->required();

  RankArgs rk;
  auto* c_rank = app.add_subcommand("rank", "Estimate the number of factors per mode");
  c_rank->add_option("--in", rk.in, "Input series file")->required();
  c_rank->add_option("--rmax", rk.r_max, "Largest rank considered")->capture_default_str();
  c_rank->add_option("--method", rk.method, "ls or huber")->capture_default_str();
  c_rank->add_option("--c", rk.c, "Penalty constant")->capture_default_str();
  c_rank->add_option("--regime", rk.regime, "ge2 or lt2 noise moment regime")->capture_default_str();
  c_rank->add_option("--max-iter", rk.max_iter, "Iteration cap")->capture_default_str();
  c_rank->add_option("--out", rk.out, "Eigenvalue trace CSV (default: <in>_eigenvalues.csv)");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Compare estimates with the truth");
  c_eval->add_option("--est", ev.est, "Estimate prefix")->required();
  c_eval->add_option("--truth", ev.truth, "Truth prefix");
  c_eval->add_option("--metric", ev.metric, "distance, mse or relmse")->required();
  c_eval->add_option("--data", ev.data, "Observed series (relmse)");

  ReplicateArgs rep;
  auto* c_rep = app.add_subcommand("replicate", "Run a simulation-study table");
  c_rep->add_option("--table", rep.table, "1, 2, 3 or 4")->required();
  c_rep->add_option("--setting", rep.setting, "A, B, C or D")->required();
  c_rep->add_option("--reps", rep.reps, "Replications per cell")->capture_default_str();
  c_rep->add_option("--seed", rep.seed, "Master seed")->capture_default_str();
  c_rep->add_option("--T", rep.T, "Series lengths")->delimiter(',')->capture_default_str();
  c_rep->add_option("--workers", rep.workers, "Worker threads (RTFA_WORKERS overrides)")->capture_default_str();
  c_rep->add_option("--out", rep.out, "Output CSV (default: stdout)");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "Varimax rotation and clustering of a loading matrix");
  c_an->add_option("--loadings", an.loadings, "Loading matrix file")->required();
  c_an->add_flag("--varimax", an.varimax, "Rotate with varimax");
  c_an->add_flag("--cluster", an.cluster, "Complete-linkage clustering of the rows");
  c_an->add_option("--labels", an.labels, "Row labels")->delimiter(',');
  c_an->add_option("--out", an.out, "Output prefix (default: loadings path)");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (c_sim->parsed()) return do_simulate(sim, out);
    if (c_est->parsed()) return do_estimate(est, out, err);
    if (c_rank->parsed()) return do_rank(rk, out, err);
    if (c_eval->parsed()) return do_evaluate(ev, out);
    if (c_rep->parsed()) return do_replicate(rep, out);
    if (c_an->parsed()) return do_analyze(an, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace rtfa::cli
