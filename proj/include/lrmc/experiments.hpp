// Copyright 2026 The lrmc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lrmc/core/error.hpp"
#include "lrmc/core/format.hpp"
#include "lrmc/core/random.hpp"
#include "lrmc/core/types.hpp"
#include "lrmc/ground_truth.hpp"
#include "lrmc/init.hpp"
#include "lrmc/metrics.hpp"
#include "lrmc/parallel.hpp"
#include "lrmc/sampling.hpp"
#include "lrmc/solvers.hpp"

namespace lrmc {

/// Relative error below which a phase or timing trial counts as a success.
inline constexpr double success_threshold = 1e-8;

enum class Algorithm { vgd, rgd, bgd };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::vgd: return "VGD";
    case Algorithm::rgd: return "RGD";
    case Algorithm::bgd: return "BGD";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (name == "VGD") return Algorithm::vgd;
  if (name == "RGD") return Algorithm::rgd;
  if (name == "BGD") return Algorithm::bgd;
  throw parameter_error("unknown algorithm '" + name + "' (expected VGD, RGD or BGD)");
}

/// One solver configuration in an experiment: an algorithm and, for RGD,
/// its lambda (0 otherwise).
struct AlgorithmRun {
  Algorithm algorithm = Algorithm::vgd;
  double lambda = 0.0;

  SolverVariant variant() const {
    switch (algorithm) {
      case Algorithm::vgd: return SolverVariant::vanilla();
      case Algorithm::rgd: return SolverVariant::regularized(lambda);
      case Algorithm::bgd: return SolverVariant::balancing();
    }
    return SolverVariant::vanilla();
  }
  std::string label() const { return to_string(algorithm); }
};

struct ExperimentSpec {
  std::size_t d1 = 160;
  std::size_t d2 = 100;
  std::vector<std::size_t> ranks{5};  // a single rank except in phase runs
  double kappa = 1.0;
  std::vector<double> rates{0.2};     // a single p except in phase runs
  double step = 0.5;
  std::vector<double> lambdas{1e-10};
  std::size_t trials = 50;
  std::uint64_t master_seed = 0;
  std::vector<Algorithm> algorithms{Algorithm::vgd, Algorithm::rgd, Algorithm::bgd};
  double tol = 1e-14;
  std::size_t max_iters = 5000;
  std::size_t record_every = 1;
  std::size_t jobs = 1;

  std::size_t rank() const { return ranks.front(); }
  double p() const { return rates.front(); }

  void validate() const {
    auto increasing = [](const auto& v) {
      return std::adjacent_find(v.begin(), v.end(),
                                [](auto a, auto b) { return !(a < b); }) == v.end();
    };
    if (d1 == 0 || d2 == 0) throw parameter_error("d1 and d2 must be positive");
    if (ranks.empty() || !increasing(ranks)) {
      throw parameter_error("r grid must be nonempty and strictly increasing");
    }
    for (std::size_t r : ranks) Dims{d1, d2, r}.validate();
    if (rates.empty() || !increasing(rates)) {
      throw parameter_error("p grid must be nonempty and strictly increasing");
    }
    for (double p : rates) {
      if (!(p > 0.0 && p <= 1.0)) throw parameter_error("p must lie in (0, 1]");
    }
    if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw parameter_error("kappa must be >= 1");
    if (!(step > 0.0)) throw parameter_error("step s must be > 0");
    if (trials == 0) throw parameter_error("trials must be >= 1");
    if (algorithms.empty()) throw parameter_error("at least one algorithm is required");
    if (std::find(algorithms.begin(), algorithms.end(), Algorithm::rgd) != algorithms.end()) {
      if (lambdas.empty()) throw parameter_error("RGD needs at least one lambda");
      for (double l : lambdas) {
        if (!(l > 0.0)) throw parameter_error("lambda must be > 0");
      }
    }
    if (!(tol > 0.0)) throw parameter_error("tol must be > 0");
    if (max_iters == 0) throw parameter_error("max_iters must be positive");
    if (record_every == 0) throw parameter_error("record_every must be positive");
  }

  /// Algorithms in order, RGD expanded once per lambda.
  std::vector<AlgorithmRun> runs() const {
    std::vector<AlgorithmRun> out;
    for (Algorithm a : algorithms) {
      if (a == Algorithm::rgd) {
        for (double l : lambdas) out.push_back({a, l});
      } else {
        out.push_back({a, 0.0});
      }
    }
    return out;
  }

  nlohmann::json to_json() const {
    std::vector<std::string> algs;
    for (Algorithm a : algorithms) algs.emplace_back(to_string(a));
    return {{"d1", d1},           {"d2", d2},
            {"r", ranks},         {"kappa", kappa},
            {"p", rates},         {"s", step},
            {"lambda", lambdas},  {"trials", trials},
            {"seed", master_seed}, {"algorithms", algs},
            {"tol", tol},         {"max_iters", max_iters},
            {"record_every", record_every}};
  }
};

// ---------------------------------------------------------------------------
// Seeds

enum class Stream : std::uint64_t { ground_truth = 0, mask = 1, sketch = 2 };

/// Seed for (cell, stream, trial). The tuple is packed into 64 bits
/// (cell < 2^24, stream < 2^8, trial < 2^32) and pushed through two rounds
/// of a bijective mixer around the master seed, so distinct tuples always
/// get distinct seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                 std::uint64_t stream, std::uint64_t trial) {
  if (cell >= (1ULL << 24) || stream >= (1ULL << 8) || trial >= (1ULL << 32)) {
    throw parameter_error("derive_seed: index out of range");
  }
  const std::uint64_t packed = (cell << 40) | (stream << 32) | trial;
  return mix64(mix64(packed) ^ master);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                 Stream stream, std::uint64_t trial) {
  return derive_seed(master, cell, static_cast<std::uint64_t>(stream), trial);
}

/// The planted instance of one trial: ground truth and mask.
struct Instance {
  GroundTruth gt;
  ObservationMask mask;
  std::uint64_t gt_seed = 0;
  std::uint64_t mask_seed = 0;
};

inline Instance make_instance(std::size_t d1, std::size_t d2, std::size_t r, double kappa,
                              double p, std::uint64_t master, std::uint64_t cell,
                              std::uint64_t trial) {
  Instance in;
  in.gt_seed = derive_seed(master, cell, Stream::ground_truth, trial);
  in.mask_seed = derive_seed(master, cell, Stream::mask, trial);
  in.gt = gen_ground_truth({d1, d2, r}, kappa, in.gt_seed);
  in.mask = sample_mask(d1, d2, p, in.mask_seed);
  return in;
}

/// Swaps in a counting warning sink for the lifetime of the object.
class WarningCounter {
 public:
  WarningCounter() : saved_(warning_handler()) {
    warning_handler() = [this](std::string_view) { ++count_; };
  }
  ~WarningCounter() { warning_handler() = saved_; }
  WarningCounter(const WarningCounter&) = delete;
  WarningCounter& operator=(const WarningCounter&) = delete;
  std::size_t count() const noexcept { return count_.load(); }

 private:
  warning_sink saved_;
  std::atomic<std::size_t> count_{0};
};

// ---------------------------------------------------------------------------
// Convergence

struct ConvergenceRow {
  std::string algorithm;
  double lambda = 0.0;
  std::size_t k = 0;
  double rel_err = 0.0;
  std::optional<double> dist;
  double balancing = 0.0;
  double seconds = 0.0;
};

struct ConvergenceSummary {
  AlgorithmRun run;
  RunStatus status = RunStatus::max_iters;
  std::size_t iterations = 0;
  double final_relative_error = 0.0;
  std::optional<std::size_t> iters_to_success;  // first recorded k below 1e-8
  double seconds = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceSummary> summaries;
  double mu = 0.0;
  double kappa = 0.0;
  std::size_t observed = 0;
  bool any_diverged() const {
    return std::any_of(summaries.begin(), summaries.end(), [](const ConvergenceSummary& s) {
      return s.status == RunStatus::diverged;
    });
  }
};

/// One instance (cell 0, trial 0); every algorithm starts from the same
/// spectral initialization on the same mask. `track_dist` adds a GL
/// alignment per recorded step.
inline ConvergenceResult run_convergence(const ExperimentSpec& spec, bool track_dist = true) {
  spec.validate();
  const Instance in = make_instance(spec.d1, spec.d2, spec.rank(), spec.kappa, spec.p(),
                                    spec.master_seed, 0, 0);
  TruncatedSvdOptions svd;
  svd.seed = derive_seed(spec.master_seed, 0, Stream::sketch, 0);
  const FactorPair init = spectral_init(in.gt, in.mask, spec.rank(), svd);

  const std::vector<AlgorithmRun> runs = spec.runs();
  std::vector<RunResult> results(runs.size());
  parallel_for(runs.size(), spec.jobs, [&](std::size_t a) {
    SolverConfig cfg;
    cfg.variant = runs[a].variant();
    cfg.step = spec.step;
    cfg.max_iters = spec.max_iters;
    cfg.tol = spec.tol;
    cfg.record_every = spec.record_every;
    cfg.track_dist = track_dist;
    results[a] = run(in.gt, in.mask, cfg, init);
  });

  ConvergenceResult out;
  out.mu = in.gt.mu;
  out.kappa = in.gt.kappa;
  out.observed = in.mask.size();
  for (std::size_t a = 0; a < runs.size(); ++a) {
    ConvergenceSummary sum;
    sum.run = runs[a];
    sum.status = results[a].status;
    sum.iterations = results[a].iterations;
    sum.final_relative_error = results[a].final_relative_error;
    for (const TraceRow& t : results[a].trace.rows) {
      out.rows.push_back({runs[a].label(), runs[a].lambda, t.k, t.relative_error, t.dist,
                          t.balancing_norm, t.seconds});
      if (!sum.iters_to_success && t.relative_error < success_threshold) {
        sum.iters_to_success = t.k;
      }
    }
    if (!results[a].trace.rows.empty()) sum.seconds = results[a].trace.rows.back().seconds;
    out.summaries.push_back(sum);
  }
  return out;
}

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows,
                                  bool include_seconds = true) {
  os << "algorithm,lambda,k,rel_err,dist,balancing,seconds\n";
  for (const ConvergenceRow& r : rows) {
    os << r.algorithm << ',' << format_double(r.lambda) << ',' << r.k << ','
       << format_double(r.rel_err) << ',' << format_optional(r.dist) << ','
       << format_double(r.balancing) << ',';
    if (include_seconds) os << format_double(r.seconds);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Phase transition

struct ContourPoint {
  std::size_t r = 0;
  std::optional<double> p_cross;
  bool clipped = false;  // crossing pinned to the smallest p on the grid
};

struct PhaseGrid {
  std::string algorithm;
  double lambda = 0.0;
  std::vector<double> rates;
  std::vector<std::size_t> ranks;
  std::size_t trials = 0;
  std::vector<std::vector<std::size_t>> successes;  // [r index][p index]

  double rate(std::size_t ri, std::size_t pi) const {
    return static_cast<double>(successes[ri][pi]) / static_cast<double>(trials);
  }
};

/// Per r: first p, scanning upward, where the success rate reaches 0.5,
/// linearly interpolated from the bracketing grid point below. A row that
/// starts at or above 0.5 is clipped to the smallest p; a row that never
/// reaches 0.5 has no crossing.
inline std::vector<ContourPoint> extract_contour(const PhaseGrid& grid) {
  std::vector<ContourPoint> out;
  for (std::size_t ri = 0; ri < grid.ranks.size(); ++ri) {
    ContourPoint cp;
    cp.r = grid.ranks[ri];
    for (std::size_t pi = 0; pi < grid.rates.size(); ++pi) {
      const double v = grid.rate(ri, pi);
      if (v < 0.5) continue;
      if (pi == 0) {
        cp.p_cross = grid.rates[0];
        cp.clipped = true;
      } else {
        const double v0 = grid.rate(ri, pi - 1);
        const double p0 = grid.rates[pi - 1], p1 = grid.rates[pi];
        cp.p_cross = p0 + (0.5 - v0) / (v - v0) * (p1 - p0);
      }
      break;
    }
    out.push_back(cp);
  }
  return out;
}

struct PhaseResult {
  std::vector<PhaseGrid> grids;  // one per algorithm run
  std::size_t underdetermined_warnings = 0;
};

/// Every (p, r) cell runs `trials` trials on fresh instances, shared by all
/// algorithms of the spec. A trial succeeds when the relative error drops
/// below 1e-8 within max_iters; runs stop at that threshold.
inline PhaseResult run_phase(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<AlgorithmRun> runs = spec.runs();
  const std::size_t np = spec.rates.size(), nr = spec.ranks.size();
  const std::size_t tasks = np * nr * spec.trials;
  std::vector<std::vector<char>> ok(tasks, std::vector<char>(runs.size(), 0));

  WarningCounter warnings;
  parallel_for(tasks, spec.jobs, [&](std::size_t task) {
    const std::size_t trial = task % spec.trials;
    const std::size_t cell = task / spec.trials;  // ri * np + pi
    const std::size_t ri = cell / np, pi = cell % np;
    const std::size_t r = spec.ranks[ri];
    const Instance in = make_instance(spec.d1, spec.d2, r, spec.kappa, spec.rates[pi],
                                      spec.master_seed, cell, trial);
    TruncatedSvdOptions svd;
    svd.seed = derive_seed(spec.master_seed, cell, Stream::sketch, trial);
    const FactorPair init = spectral_init(in.gt, in.mask, r, svd);
    for (std::size_t a = 0; a < runs.size(); ++a) {
      SolverConfig cfg;
      cfg.variant = runs[a].variant();
      cfg.step = spec.step;
      cfg.max_iters = spec.max_iters;
      cfg.tol = std::max(spec.tol, success_threshold);
      cfg.record_every = spec.max_iters;
      const RunResult res = run(in.gt, in.mask, cfg, init);
      ok[task][a] = res.final_relative_error < success_threshold;
    }
  });

  PhaseResult out;
  out.underdetermined_warnings = warnings.count();
  for (std::size_t a = 0; a < runs.size(); ++a) {
    PhaseGrid g;
    g.algorithm = runs[a].label();
    g.lambda = runs[a].lambda;
    g.rates = spec.rates;
    g.ranks = spec.ranks;
    g.trials = spec.trials;
    g.successes.assign(nr, std::vector<std::size_t>(np, 0));
    for (std::size_t task = 0; task < tasks; ++task) {
      const std::size_t cell = task / spec.trials;
      g.successes[cell / np][cell % np] += ok[task][a] ? 1 : 0;
    }
    out.grids.push_back(std::move(g));
  }
  return out;
}

inline void write_phase_csv(std::ostream& os, const PhaseGrid& g) {
  os << "p,r,trials,successes,rate\n";
  for (std::size_t ri = 0; ri < g.ranks.size(); ++ri)
    for (std::size_t pi = 0; pi < g.rates.size(); ++pi)
      os << format_double(g.rates[pi]) << ',' << g.ranks[ri] << ',' << g.trials << ','
         << g.successes[ri][pi] << ',' << format_double(g.rate(ri, pi)) << '\n';
}

inline void write_contour_csv(std::ostream& os, const std::vector<ContourPoint>& c) {
  os << "r,p_cross,clipped\n";
  for (const ContourPoint& cp : c)
    os << cp.r << ',' << format_optional(cp.p_cross) << ',' << (cp.clipped ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------
// Timing

struct TrialResult {
  AlgorithmRun run;
  std::size_t trial = 0;
  std::uint64_t seed = 0;  // derive_seed(master, cell, algorithm stream, trial)
  RunStatus status = RunStatus::max_iters;
  std::size_t iterations = 0;
  double final_relative_error = 0.0;
  std::optional<double> seconds;  // init plus iterations, when 1e-8 was reached
};

struct TimingRow {
  std::size_t d1 = 0, d2 = 0, r = 0;
  double p = 0.0, kappa = 0.0;
  std::string algorithm;
  double lambda = 0.0;
  std::size_t n_ok = 0, n_fail = 0;
  std::optional<double> mean_s, median_s;
};

struct TimingResult {
  std::vector<TimingRow> rows;
  std::vector<TrialResult> trials;
};

namespace detail {
inline std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Wall-clock seconds from spectral initialization to the first iterate
/// below 1e-8, per algorithm, over `trials` fresh instances of the single
/// (r, p) configuration. Algorithms share each trial's instance; their order
/// rotates with the trial index. Failed trials are excluded from the means
/// and counted in n_fail.
inline TimingResult run_timing(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<AlgorithmRun> runs = spec.runs();
  const std::size_t na = runs.size();
  std::vector<TrialResult> trials(spec.trials * na);

  WarningCounter warnings;
  parallel_for(spec.trials, spec.jobs, [&](std::size_t t) {
    const Instance in = make_instance(spec.d1, spec.d2, spec.rank(), spec.kappa, spec.p(),
                                      spec.master_seed, 0, t);
    for (std::size_t q = 0; q < na; ++q) {
      const std::size_t a = (q + t) % na;
      TrialResult tr;
      tr.run = runs[a];
      tr.trial = t;
      tr.seed = derive_seed(spec.master_seed, 0, 16 + a, t);
      TruncatedSvdOptions svd;
      svd.seed = tr.seed;
      SolverConfig cfg;
      cfg.variant = runs[a].variant();
      cfg.step = spec.step;
      cfg.max_iters = spec.max_iters;
      cfg.tol = success_threshold;
      cfg.record_every = spec.max_iters;
      const auto t0 = std::chrono::steady_clock::now();
      const RunResult res = run(in.gt, in.mask, cfg, spectral_init(in.gt, in.mask, spec.rank(), svd));
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      tr.status = res.status;
      tr.iterations = res.iterations;
      tr.final_relative_error = res.final_relative_error;
      if (res.status == RunStatus::converged) tr.seconds = secs;
      trials[t * na + a] = tr;
    }
  });

  TimingResult out;
  out.trials = trials;
  for (std::size_t a = 0; a < na; ++a) {
    TimingRow row{spec.d1, spec.d2, spec.rank(), spec.p(), spec.kappa, runs[a].label(),
                  runs[a].lambda, 0, 0, std::nullopt, std::nullopt};
    std::vector<double> secs;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const TrialResult& tr = trials[t * na + a];
      if (tr.seconds) {
        secs.push_back(*tr.seconds);
      } else {
        ++row.n_fail;
      }
    }
    row.n_ok = secs.size();
    if (!secs.empty()) {
      double sum = 0.0;
      for (double s : secs) sum += s;
      row.mean_s = sum / static_cast<double>(secs.size());
      row.median_s = detail::median(secs);
    }
    out.rows.push_back(row);
  }
  return out;
}

inline void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
  os << "d1,d2,r,p,kappa,algorithm,n_ok,n_fail,mean_s,median_s\n";
  for (const TimingRow& r : rows) {
    os << r.d1 << ',' << r.d2 << ',' << r.r << ',' << format_double(r.p) << ','
       << format_double(r.kappa) << ',' << r.algorithm << ',' << r.n_ok << ',' << r.n_fail
       << ',' << format_optional(r.mean_s) << ',' << format_optional(r.median_s) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Summary

/// Git blob hash ("blob <size>\0" + content) in lowercase hex.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("git_blob_sha1: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

/// {"kind", "spec", "stats", "input_hash"}; the hash covers the spec echo.
inline nlohmann::json make_summary(const std::string& kind, const nlohmann::json& spec,
                                   const nlohmann::json& stats) {
  return {{"kind", kind},
          {"spec", spec},
          {"stats", stats},
          {"input_hash", git_blob_sha1(spec.dump())}};
}

}  // namespace lrmc
