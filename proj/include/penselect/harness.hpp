// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_HARNESS_HPP
#define PENSELECT_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "penselect/bounds.hpp"
#include "penselect/models.hpp"
#include "penselect/noise.hpp"
#include "penselect/select.hpp"

namespace penselect {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Deterministic parallel machinery
// ---------------------------------------------------------------------------

inline int worker_count(int override_threads = 0) {
  if (override_threads > 0) return std::min(override_threads, 64);
  if (const char* env = std::getenv("PENSELECT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return std::min(v, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp(static_cast<int>(hw), 1, 8);
}

// Runs fn(lo, hi, thread_index) over a fixed contiguous chunking of [0, count).
// Results must be written to per-trial or per-thread storage; reductions
// happen afterwards in a fixed order, so thread count never changes output.
template <class Fn>
inline void parallel_for(long long count, int threads, const Fn& fn) {
  if (threads <= 1 || count < 2) {
    fn(0LL, count, 0);
    return;
  }
  const long long chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const long long lo = t * chunk;
    const long long hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, &errors, lo, hi, t] {
      try {
        fn(lo, hi, t);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Fixed-order pairwise reduction over trial index.
inline double pairwise_sum(const double* x, long long n) {
  if (n <= 8) {
    double s = 0.0;
    for (long long i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const long long h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), static_cast<long long>(x.size()));
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mc_mean_stderr(const std::vector<double>& values) {
  const long long n = static_cast<long long>(values.size());
  MeanStderr out;
  out.mean = pairwise_sum(values) / static_cast<double>(n);
  if (n < 2) return out;
  std::vector<double> sq(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(n));
  return out;
}

inline double bernoulli_stderr(double freq, long long n) {
  return std::sqrt(std::max(freq * (1.0 - freq), 0.0) / static_cast<double>(n));
}

// Stream namespaces so distinct sub-experiments of one run never share draws.
enum : std::uint64_t {
  kMainStream = 0,
  kMgfStream = 1,
  kBernsteinStream = 2,
};

inline std::uint64_t stream_id(std::uint64_t tag, std::uint64_t trial) {
  return (tag << 40) | trial;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SignalConfig {
  std::string type = "step";  // step | sine | custom
  double height = 1.0;
  int jump = -1;  // last index of the low segment; -1 means n/2
  double amplitude = 1.0;
  double frequency = 1.0;
  std::vector<double> values;

  VectorN build(int n) const {
    VectorN f = VectorN::Zero(n);
    if (type == "step") {
      const int j = jump >= 0 ? jump : n / 2;
      if (j < 0 || j > n) throw std::invalid_argument("step jump must lie in [0, n]");
      for (int i = j + 1; i <= n; ++i) f[i - 1] = height;
      return f;
    }
    if (type == "sine") {
      const double two_pi = 6.28318530717958647692528676655900577;
      for (int i = 1; i <= n; ++i) {
        f[i - 1] = amplitude * std::sin(two_pi * frequency * static_cast<double>(i) / n);
      }
      return f;
    }
    if (type == "custom") {
      if (static_cast<int>(values.size()) != n) {
        throw std::invalid_argument("custom signal must provide exactly n values");
      }
      for (int i = 0; i < n; ++i) f[i] = values[static_cast<size_t>(i)];
      return f;
    }
    throw std::invalid_argument("unknown signal type: " + type);
  }

  static SignalConfig from_json(const nlohmann::json& j) {
    SignalConfig s;
    s.type = j.value("type", std::string("step"));
    s.height = j.value("height", 1.0);
    s.jump = j.value("jump", -1);
    s.amplitude = j.value("amplitude", 1.0);
    s.frequency = j.value("frequency", 1.0);
    if (j.contains("values")) s.values = j.at("values").get<std::vector<double>>();
    return s;
  }
};

struct CollectionConfig {
  nlohmann::json doc;  // either an explicit collection document or a generator form

  ModelCollection build(int n) const {
    if (doc.contains("models")) {
      ModelCollection coll = ModelCollection::from_json(doc);
      if (coll.n() != n) throw std::invalid_argument("collection n does not match config n");
      return coll;
    }
    const std::string family = doc.value("family", std::string("histogram"));
    if (family == "histogram" || family == "piecewise_poly") {
      const std::string gen = doc.value("generator", std::string("dyadic"));
      if (gen != "dyadic") throw std::invalid_argument("unknown partition generator: " + gen);
      auto parts = dyadic_partitions(n, doc.value("min_block", 1));
      if (family == "histogram") return ModelCollection::histograms(n, std::move(parts));
      return ModelCollection::piecewise(n, doc.value("d", 1), std::move(parts));
    }
    if (family == "trig") {
      const int dbar = doc.value("Dbar", 3);
      const std::string mode = doc.value("subsets", std::string("nested"));
      std::vector<std::vector<int>> subsets;
      if (mode == "nested") {
        subsets.emplace_back();  // the empty model, S = {0}
        std::vector<int> prefix;
        for (int k = 0; k <= 2 * dbar; ++k) {
          prefix.push_back(k);
          subsets.push_back(prefix);
        }
      } else if (mode == "all") {
        const int count = 2 * dbar + 1;
        if (count > 12) throw std::invalid_argument("subsets=all needs 2*Dbar+1 <= 12");
        for (std::uint32_t mask = 0; mask < (1u << count); ++mask) {
          std::vector<int> s;
          for (int k = 0; k < count; ++k) {
            if (mask & (1u << k)) s.push_back(k);
          }
          subsets.push_back(std::move(s));
        }
      } else {
        throw std::invalid_argument("unknown trig subset mode: " + mode);
      }
      return ModelCollection::trig(n, dbar, std::move(subsets));
    }
    throw std::invalid_argument("unknown collection family: " + family);
  }
};

struct ExperimentConfig {
  enum class Kind { verify_noise, deviation_chi, deviation_sup, oracle, select_once };

  Kind kind = Kind::verify_noise;
  int n = 256;
  long long trials = 100000;
  std::uint64_t seed = 1;
  std::optional<NoiseSpec> noise;
  CollectionConfig collection;
  nlohmann::json penalty_doc;
  SignalConfig signal;
  std::vector<double> x_grid{0.5, 1.0, 2.0, 4.0};
  std::vector<double> u_grid;     // empty: derived q (sigma+c) L2(S) log n, q in {2,4,8}
  std::string sup_mode;           // "", "ball" or "interval"
  int threads = 0;                // 0: PENSELECT_THREADS or hardware default
  nlohmann::json echo;

  static Kind kind_from_string(const std::string& s) {
    if (s == "verify_noise") return Kind::verify_noise;
    if (s == "deviation_chi") return Kind::deviation_chi;
    if (s == "deviation_sup") return Kind::deviation_sup;
    if (s == "oracle") return Kind::oracle;
    if (s == "select_once") return Kind::select_once;
    throw std::invalid_argument("unknown experiment kind: " + s);
  }

  static std::string kind_to_string(Kind k) {
    switch (k) {
      case Kind::verify_noise: return "verify_noise";
      case Kind::deviation_chi: return "deviation_chi";
      case Kind::deviation_sup: return "deviation_sup";
      case Kind::oracle: return "oracle";
      case Kind::select_once: return "select_once";
    }
    return "?";
  }

  static ExperimentConfig from_json(const nlohmann::json& j,
                                    std::optional<Kind> expected_kind = std::nullopt) {
    ExperimentConfig cfg;
    cfg.echo = j;
    if (j.contains("kind")) {
      cfg.kind = kind_from_string(j.at("kind").get<std::string>());
      if (expected_kind && cfg.kind != *expected_kind) {
        throw std::invalid_argument("config kind does not match the requested subcommand");
      }
    } else if (expected_kind) {
      cfg.kind = *expected_kind;
    } else {
      throw std::invalid_argument("config is missing \"kind\"");
    }
    cfg.n = j.value("n", 256);
    cfg.trials = j.value("trials", 100000LL);
    cfg.seed = j.value("seed", 1ULL);
    if (!j.contains("noise")) throw std::invalid_argument("config is missing \"noise\"");
    cfg.noise = NoiseSpec::from_json(j.at("noise"));
    if (j.contains("collection")) cfg.collection.doc = j.at("collection");
    if (j.contains("penalty")) cfg.penalty_doc = j.at("penalty");
    if (j.contains("signal")) cfg.signal = SignalConfig::from_json(j.at("signal"));
    if (j.contains("x_grid")) cfg.x_grid = j.at("x_grid").get<std::vector<double>>();
    if (j.contains("u_grid")) cfg.u_grid = j.at("u_grid").get<std::vector<double>>();
    cfg.sup_mode = j.value("sup_mode", std::string());
    cfg.threads = j.value("threads", 0);
    return cfg;
  }

  PenaltySpec build_penalty() const {
    if (!noise) throw std::invalid_argument("penalty requires a noise spec");
    const nlohmann::json& j = penalty_doc;
    const std::string mode = j.is_null() ? "general" : j.value("mode", std::string("general"));
    PenaltySpec spec;
    if (mode == "general") {
      spec = PenaltySpec::general_mode(*noise, j.is_null() ? 2.0 : j.value("K", 2.0),
                                       j.is_null() ? -1.0 : j.value("z", -1.0));
    } else {
      PenaltyMode pm;
      if (mode == "histogram") pm = PenaltyMode::histogram;
      else if (mode == "piecewise") pm = PenaltyMode::piecewise;
      else if (mode == "trig") pm = PenaltyMode::trig;
      else throw std::invalid_argument("unknown penalty mode: " + mode);
      spec = PenaltySpec::proposition_mode(pm, *noise, j.value("K", 2.0), j.at("a").get<double>(),
                                           j.at("b").get<double>(), j.value("d", 0));
    }
    if (!j.is_null()) spec.pen_multiplier = j.value("multiplier", 1.0);
    return spec;
  }

  std::vector<double> derived_u_grid(double lambda2) const {
    if (!u_grid.empty()) return u_grid;
    std::vector<double> out;
    for (const double q : {2.0, 4.0, 8.0}) {
      out.push_back(q * (noise->sigma() + noise->c()) * lambda2 *
                    std::log(static_cast<double>(n)));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string experiment;
  double x = 0.0;
  double u = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double stderr_ = 0.0;
  bool pass = true;
};

struct Report {
  std::string kind;
  std::vector<ReportRow> rows;
  bool all_pass = true;
  double runtime_seconds = 0.0;
  std::string timestamp;
  nlohmann::json config_echo;
  nlohmann::json extras;

  void finalize() {
    all_pass = true;
    for (const ReportRow& r : rows) all_pass = all_pass && r.pass;
  }

  nlohmann::json to_json() const {
    nlohmann::json jrows = nlohmann::json::array();
    for (const ReportRow& r : rows) {
      jrows.push_back({{"experiment", r.experiment},
                       {"x", r.x},
                       {"u", r.u},
                       {"empirical", r.empirical},
                       {"bound", r.bound},
                       {"stderr", r.stderr_},
                       {"pass", r.pass}});
    }
    return nlohmann::json{{"kind", kind},
                          {"version", kVersion},
                          {"timestamp", timestamp},
                          {"runtime_seconds", runtime_seconds},
                          {"config", config_echo},
                          {"rows", std::move(jrows)},
                          {"all_pass", all_pass},
                          {"extras", extras}};
  }

  // Flat CSV, one row per grid point.  Deliberately free of timestamps so
  // reruns with the same seed are byte-identical.
  void write_csv(std::ostream& os) const {
    os << "experiment,x,u,empirical,bound,stderr,pass\n";
    char buf[256];
    for (const ReportRow& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                    r.experiment.c_str(), r.x, r.u, r.empirical, r.bound, r.stderr_,
                    r.pass ? 1 : 0);
      os << buf;
    }
  }
};

namespace detail {

inline std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline const ModelSpec& single_model(const ModelCollection& coll) {
  if (coll.size() != 1) {
    throw std::invalid_argument("deviation experiments need a single-model collection");
  }
  return coll.models().front();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

// Certifies the (sigma, c) envelope on a grid, checks the empirical MGF at an
// interior point against the closed form, and checks the one-sided tail of a
// coordinate sum against its threshold bound.
inline Report run_verify_noise(const ExperimentConfig& cfg) {
  detail::Stopwatch watch;
  if (cfg.kind != ExperimentConfig::Kind::verify_noise) {
    throw std::invalid_argument("config kind must be verify_noise");
  }
  const NoiseSpec& noise = *cfg.noise;
  const long long N = cfg.trials;
  if (N < 1000) throw std::invalid_argument("verify_noise needs at least 1e3 trials");
  const int threads = worker_count(cfg.threads);

  Report rep;
  rep.kind = "verify_noise";
  rep.config_echo = cfg.echo;
  rep.timestamp = detail::iso_timestamp();

  const SubgammaReport sg = noise.verify_subgamma();
  rep.rows.push_back(
      {"subgamma", 0.0, 0.0, sg.worst_margin, 1e-12, 0.0, sg.ok});

  // Empirical MGF at an interior point of the analytic domain.
  const double lambda = noise.mgf_check_point();
  std::vector<double> mgf(static_cast<size_t>(N));
  parallel_for(N, threads, [&](long long lo, long long hi, int) {
    for (long long t = lo; t < hi; ++t) {
      rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kMgfStream, t));
      mgf[static_cast<size_t>(t)] = std::exp(lambda * noise.sample_one(eng));
    }
  });
  const MeanStderr m = mc_mean_stderr(mgf);
  const double log_mgf = std::log(m.mean);
  const double se_log = m.stderr_ / m.mean;  // delta method
  const double closed = noise.log_laplace(lambda);
  rep.rows.push_back({"mgf", lambda, 0.0, log_mgf, closed, se_log,
                      std::abs(log_mgf - closed) <= 3.0 * se_log});

  // One-sided tail of X = sum of n_sum coordinates at u in {1, 2}.
  const int n_sum = 100;
  const double v2 = n_sum * noise.sigma() * noise.sigma();
  std::vector<long long> exceed(2, 0);
  std::vector<std::vector<long long>> partial(static_cast<size_t>(threads),
                                              std::vector<long long>(2, 0));
  const double thr1 = bernstein_threshold(v2, noise.c(), 1.0);
  const double thr2 = bernstein_threshold(v2, noise.c(), 2.0);
  parallel_for(N, threads, [&](long long lo, long long hi, int tid) {
    auto& mine = partial[static_cast<size_t>(tid)];
    for (long long t = lo; t < hi; ++t) {
      rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kBernsteinStream, t));
      double x = 0.0;
      for (int i = 0; i < n_sum; ++i) x += noise.sample_one(eng);
      if (x >= thr1) ++mine[0];
      if (x >= thr2) ++mine[1];
    }
  });
  for (const auto& p : partial) {
    exceed[0] += p[0];
    exceed[1] += p[1];
  }
  const double thrs[2] = {thr1, thr2};
  for (int k = 0; k < 2; ++k) {
    const double u = k + 1.0;
    const double freq = static_cast<double>(exceed[static_cast<size_t>(k)]) / N;
    const double bound = std::exp(-u);
    const double se = std::sqrt(bound / static_cast<double>(N));
    rep.rows.push_back({"bernstein", u, thrs[k], freq, bound, se, freq <= bound + 3.0 * se});
  }

  rep.extras = {{"sigma", noise.sigma()}, {"c", noise.c()}, {"family", to_string(noise.family())}};
  rep.finalize();
  rep.runtime_seconds = watch.seconds();
  return rep;
}

// Joint chi-square-type deviation event against e^{-x}, and the sup-norm
// exceedance against the coordinatewise tail bound.
inline Report run_deviation_chi(const ExperimentConfig& cfg) {
  detail::Stopwatch watch;
  if (cfg.kind != ExperimentConfig::Kind::deviation_chi) {
    throw std::invalid_argument("config kind must be deviation_chi");
  }
  const NoiseSpec& noise = *cfg.noise;
  const long long N = cfg.trials;
  if (N < 1000) throw std::invalid_argument("deviation experiments need at least 1e3 trials");
  const int threads = worker_count(cfg.threads);

  const ModelCollection coll = cfg.collection.build(cfg.n);
  const Subspace S = coll.space_for(detail::single_model(coll));
  const Matrix& B = S.basis.columns;
  const int D = S.dim();
  const double sigma = noise.sigma();
  const double c = noise.c();
  const std::vector<double> us = cfg.derived_u_grid(S.lambda2);
  const std::vector<double>& xs = cfg.x_grid;

  const size_t nx = xs.size();
  const size_t nu = us.size();
  std::vector<double> thresholds(nx * nu);
  for (size_t ix = 0; ix < nx; ++ix) {
    for (size_t iu = 0; iu < nu; ++iu) {
      thresholds[ix * nu + iu] = chi2_threshold(sigma, c, us[iu], D, xs[ix]);
    }
  }

  std::vector<std::vector<long long>> joint(static_cast<size_t>(threads),
                                            std::vector<long long>(nx * nu, 0));
  std::vector<std::vector<long long>> sup(static_cast<size_t>(threads),
                                          std::vector<long long>(nu, 0));
  std::vector<double> proj_sq(static_cast<size_t>(N));

  parallel_for(N, threads, [&](long long lo, long long hi, int tid) {
    auto& my_joint = joint[static_cast<size_t>(tid)];
    auto& my_sup = sup[static_cast<size_t>(tid)];
    VectorN xi(cfg.n);
    for (long long t = lo; t < hi; ++t) {
      rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kMainStream, t));
      noise.sample_into(eng, xi);
      const VectorN p = B * (B.transpose() * xi);
      const double q2 = p.squaredNorm();
      const double qinf = p.cwiseAbs().maxCoeff();
      proj_sq[static_cast<size_t>(t)] = q2;
      for (size_t iu = 0; iu < nu; ++iu) {
        if (qinf >= us[iu]) ++my_sup[iu];
        if (qinf <= us[iu]) {
          for (size_t ix = 0; ix < nx; ++ix) {
            if (q2 >= thresholds[ix * nu + iu]) ++my_joint[ix * nu + iu];
          }
        }
      }
    }
  });

  Report rep;
  rep.kind = "deviation_chi";
  rep.config_echo = cfg.echo;
  rep.timestamp = detail::iso_timestamp();
  for (size_t ix = 0; ix < nx; ++ix) {
    for (size_t iu = 0; iu < nu; ++iu) {
      long long count = 0;
      for (const auto& part : joint) count += part[ix * nu + iu];
      const double freq = static_cast<double>(count) / N;
      const double bound = std::exp(-xs[ix]);
      const double se = bernoulli_stderr(freq, N);
      rep.rows.push_back({"c1", xs[ix], us[iu], freq, bound, se, freq <= bound + 3.0 * se});
    }
  }
  for (size_t iu = 0; iu < nu; ++iu) {
    long long count = 0;
    for (const auto& part : sup) count += part[iu];
    const double freq = static_cast<double>(count) / N;
    const double bound = chi_inf_tail(sigma, c, S.lambda2, us[iu], cfg.n);
    const double se = bernoulli_stderr(freq, N);
    rep.rows.push_back({"c2", us[iu], us[iu], freq, bound, se, freq <= bound + 3.0 * se});
  }

  const MeanStderr proj = mc_mean_stderr(proj_sq);
  rep.extras = {{"D", D},
                {"lambda2", S.lambda2},
                {"mean_proj_sq", proj.mean},
                {"stderr_proj_sq", proj.stderr_},
                {"u_grid", us}};
  rep.finalize();
  rep.runtime_seconds = watch.seconds();
  return rep;
}

// Exceedance of the chaining threshold by the exact supremum.  Two setups:
//   ball:     Z = |P_S xi|_2 over the Euclidean unit ball of S (sub-Gaussian,
//             c = 0), threshold kappa sigma sqrt(D+x);
//   interval: Z = |sum_i xi_i| over T = {lambda * ones, |lambda| <= 1},
//             threshold kappa (sqrt(n sigma^2 (1+x)) + c (1+x)).
inline Report run_deviation_sup(const ExperimentConfig& cfg) {
  detail::Stopwatch watch;
  if (cfg.kind != ExperimentConfig::Kind::deviation_sup) {
    throw std::invalid_argument("config kind must be deviation_sup");
  }
  const NoiseSpec& noise = *cfg.noise;
  const long long N = cfg.trials;
  if (N < 1000) throw std::invalid_argument("deviation experiments need at least 1e3 trials");
  const int threads = worker_count(cfg.threads);
  const std::string mode =
      !cfg.sup_mode.empty() ? cfg.sup_mode : (noise.c() == 0.0 ? "ball" : "interval");

  ChainingParams params;
  std::optional<Subspace> S;
  Matrix B;
  if (mode == "ball") {
    if (noise.c() != 0.0) {
      throw std::invalid_argument(
          "ball mode needs sub-Gaussian noise (c = 0); use interval mode or deviation_chi");
    }
    const ModelCollection coll = cfg.collection.build(cfg.n);
    S = coll.space_for(detail::single_model(coll));
    B = S->basis.columns;
    params = ChainingParams{noise.sigma(), 0.0, S->dim()};
  } else if (mode == "interval") {
    params = ChainingParams{noise.sigma() * std::sqrt(static_cast<double>(cfg.n)), noise.c(), 1};
  } else {
    throw std::invalid_argument("sup_mode must be \"ball\" or \"interval\"");
  }

  const std::vector<double>& xs = cfg.x_grid;
  std::vector<double> thr(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) thr[i] = sup_threshold(params, xs[i]);

  std::vector<std::vector<long long>> exceed(static_cast<size_t>(threads),
                                             std::vector<long long>(xs.size(), 0));
  parallel_for(N, threads, [&](long long lo, long long hi, int tid) {
    auto& mine = exceed[static_cast<size_t>(tid)];
    VectorN xi(cfg.n);
    for (long long t = lo; t < hi; ++t) {
      rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kMainStream, t));
      noise.sample_into(eng, xi);
      double z;
      if (mode == "ball") {
        z = (B * (B.transpose() * xi)).norm();
      } else {
        z = std::abs(xi.sum());
      }
      for (size_t i = 0; i < xs.size(); ++i) {
        if (z >= thr[i]) ++mine[i];
      }
    }
  });

  Report rep;
  rep.kind = "deviation_sup";
  rep.config_echo = cfg.echo;
  rep.timestamp = detail::iso_timestamp();
  for (size_t i = 0; i < xs.size(); ++i) {
    long long count = 0;
    for (const auto& part : exceed) count += part[i];
    const double freq = static_cast<double>(count) / N;
    const double se = bernoulli_stderr(freq, N);
    const double one_sided = std::exp(-xs[i]);
    const double two_sided = std::min(1.0, 2.0 * one_sided);
    rep.rows.push_back(
        {"svanorm", xs[i], thr[i], freq, one_sided, se, freq <= one_sided + 3.0 * se});
    rep.rows.push_back(
        {"vanorm", xs[i], thr[i], freq, two_sided, se, freq <= two_sided + 3.0 * se});
  }
  rep.extras = {{"mode", mode}, {"D", params.D}, {"v", params.v}, {"b", params.b}};
  rep.finalize();
  rep.runtime_seconds = watch.seconds();
  return rep;
}

// Monte Carlo estimate of the selected estimator's risk against the oracle
// right-hand side.
inline Report run_oracle(const ExperimentConfig& cfg) {
  detail::Stopwatch watch;
  if (cfg.kind != ExperimentConfig::Kind::oracle) {
    throw std::invalid_argument("config kind must be oracle");
  }
  const NoiseSpec& noise = *cfg.noise;
  const long long N = cfg.trials;
  if (N < 1) throw std::invalid_argument("oracle experiments need at least one trial");
  const int threads = worker_count(cfg.threads);

  const ModelCollection coll = cfg.collection.build(cfg.n);
  const PenaltySpec pen_spec = cfg.build_penalty();
  const double rate = penalty_rate(pen_spec, coll);
  const VectorN f = cfg.signal.build(cfg.n);

  const size_t count = coll.size();
  std::vector<double> pens(count);
  std::vector<int> dims(count);
  for (size_t i = 0; i < count; ++i) {
    const ModelSpec& m = coll.models()[i];
    pens[i] = rate * (m.dim + m.delta);
    dims[i] = m.dim;
  }

  const OracleRhs rhs = oracle_rhs(coll, pen_spec, f, noise);

  std::vector<double> loss(static_cast<size_t>(N));
  std::vector<int> chosen(static_cast<size_t>(N));
  parallel_for(N, threads, [&](long long lo, long long hi, int) {
    VectorN y(cfg.n);
    for (long long t = lo; t < hi; ++t) {
      rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kMainStream, t));
      for (int i = 0; i < cfg.n; ++i) y[i] = f[i] + noise.sample_one(eng);
      const ResidualEvaluator ev(coll, y);
      int best = 0;
      double best_crit = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < count; ++i) {
        const double c = ev.residual_sq(coll.models()[i]) + pens[i];
        if (c < best_crit || (c == best_crit && dims[i] < dims[static_cast<size_t>(best)])) {
          best = static_cast<int>(i);
          best_crit = c;
        }
      }
      chosen[static_cast<size_t>(t)] = best;
      loss[static_cast<size_t>(t)] = (f - ev.fitted(coll.models()[static_cast<size_t>(best)]))
                                         .squaredNorm();
    }
  });

  const MeanStderr risk = mc_mean_stderr(loss);

  // How often the chosen partition separates the step's jump.
  double jump_refined = -1.0;
  if (coll.family() != ModelFamily::trig && cfg.signal.type == "step") {
    const int jump = cfg.signal.jump >= 0 ? cfg.signal.jump : cfg.n / 2;
    long long refined = 0;
    for (long long t = 0; t < N; ++t) {
      const ModelSpec& m = coll.models()[static_cast<size_t>(chosen[static_cast<size_t>(t)])];
      bool has_cut = (jump == 0 || jump == cfg.n);
      for (const Block& b : m.blocks->blocks()) {
        if (b.hi == jump) {
          has_cut = true;
          break;
        }
      }
      if (has_cut) ++refined;
    }
    jump_refined = static_cast<double>(refined) / N;
  }

  std::map<int, long long> chosen_counts;
  for (long long t = 0; t < N; ++t) ++chosen_counts[chosen[static_cast<size_t>(t)]];
  nlohmann::json top = nlohmann::json::array();
  {
    std::vector<std::pair<long long, int>> ranked;
    for (const auto& [idx, cnt] : chosen_counts) ranked.emplace_back(cnt, idx);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (size_t k = 0; k < std::min<size_t>(5, ranked.size()); ++k) {
      top.push_back({{"id", coll.models()[static_cast<size_t>(ranked[k].second)].id},
                     {"count", ranked[k].first}});
    }
  }

  Report rep;
  rep.kind = "oracle";
  rep.config_echo = cfg.echo;
  rep.timestamp = detail::iso_timestamp();
  rep.rows.push_back({"oracle", 0.0, 0.0, risk.mean, rhs.value, risk.stderr_,
                      risk.mean <= rhs.value + 3.0 * risk.stderr_});
  rep.extras = {{"rhs", rhs.value},
                {"rhs_alt", rhs.alt_value},
                {"inf_risk_plus_pen", rhs.inf_term},
                {"remainder", rhs.remainder},
                {"oracle_model", rhs.best_id},
                {"C_K", oracle_constant(pen_spec.K)},
                {"models", static_cast<long long>(count)},
                {"mean_loss", risk.mean},
                {"top_chosen", top}};
  if (jump_refined >= 0.0) rep.extras["jump_refined_fraction"] = jump_refined;
  rep.finalize();
  rep.runtime_seconds = watch.seconds();
  return rep;
}

// One seeded realization; the interesting output is the SelectionResult.
inline Report run_select_once(const ExperimentConfig& cfg) {
  detail::Stopwatch watch;
  if (cfg.kind != ExperimentConfig::Kind::select_once) {
    throw std::invalid_argument("config kind must be select_once");
  }
  const NoiseSpec& noise = *cfg.noise;
  const ModelCollection coll = cfg.collection.build(cfg.n);
  const PenaltySpec pen_spec = cfg.build_penalty();
  const VectorN f = cfg.signal.build(cfg.n);

  rng::Engine eng = rng::Engine::for_stream(cfg.seed, stream_id(kMainStream, 0));
  VectorN y(cfg.n);
  for (int i = 0; i < cfg.n; ++i) y[i] = f[i] + noise.sample_one(eng);

  const SelectionResult result = select_model(y, coll, pen_spec);

  Report rep;
  rep.kind = "select_once";
  rep.config_echo = cfg.echo;
  rep.timestamp = detail::iso_timestamp();
  rep.rows.push_back({"select", 0.0, 0.0, result.chosen_crit, result.chosen_crit, 0.0, true});
  rep.extras = {{"selection", result.to_json()}};
  rep.finalize();
  rep.runtime_seconds = watch.seconds();
  return rep;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentConfig::Kind::verify_noise: return run_verify_noise(cfg);
    case ExperimentConfig::Kind::deviation_chi: return run_deviation_chi(cfg);
    case ExperimentConfig::Kind::deviation_sup: return run_deviation_sup(cfg);
    case ExperimentConfig::Kind::oracle: return run_oracle(cfg);
    case ExperimentConfig::Kind::select_once: return run_select_once(cfg);
  }
  throw std::logic_error("unknown experiment kind");
}

}  // namespace penselect

#endif  // PENSELECT_HARNESS_HPP
