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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/format.hpp"
#include "lrmc/core/linalg.hpp"
#include "lrmc/core/random.hpp"
#include "lrmc/core/types.hpp"
#include "lrmc/init.hpp"
#include "lrmc/metrics.hpp"
#include "lrmc/parallel.hpp"
#include "lrmc/sampling.hpp"
#include "lrmc/solvers.hpp"

namespace lrmc {

// ---------------------------------------------------------------------------
// Contraction

struct ContractionReport {
  double bound_factor = 1.0;  // 1 - s sigma_min / 100
  double worst_ratio = 0.0;   // max over steps of the per-step ratio
  std::size_t worst_k = 0;
  std::size_t violations = 0;
  std::size_t steps_checked = 0;
  bool satisfied() const noexcept { return violations == 0; }
};

/// Checks dist_{k+1} <= (1 - s sigma_min / 100) dist_k along a trace.
///
/// `steps` gives the iteration index of each entry of `dists`; a gap of m
/// steps is compared against the m-th power of the factor and the reported
/// ratio is the per-step geometric mean. 0 -> 0 counts as ratio 0.
inline ContractionReport contraction_check(const std::vector<std::size_t>& steps,
                                           const std::vector<double>& dists,
                                           double s, double sigma_min) {
  if (steps.size() != dists.size()) {
    throw parameter_error("contraction_check: steps and dists differ in length");
  }
  ContractionReport rep;
  rep.bound_factor = 1.0 - s * sigma_min / 100.0;
  for (std::size_t i = 0; i + 1 < dists.size(); ++i) {
    const std::size_t gap = steps[i + 1] - steps[i];
    if (gap == 0) continue;
    ++rep.steps_checked;
    const double a = dists[i];
    const double b = dists[i + 1];
    double ratio;
    if (a == 0.0) {
      ratio = b == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      ratio = std::pow(b / a, 1.0 / static_cast<double>(gap));
    }
    const bool ok = a == 0.0 ? b == 0.0
                             : b <= std::pow(rep.bound_factor, static_cast<double>(gap)) * a;
    if (!ok) ++rep.violations;
    if (ratio > rep.worst_ratio || rep.steps_checked == 1) {
      rep.worst_ratio = ratio;
      rep.worst_k = steps[i];
    }
  }
  return rep;
}

/// Trace overload: uses the rows that carry a dist value.
inline ContractionReport contraction_check(const IterateTrace& trace, double s,
                                           double sigma_min) {
  std::vector<std::size_t> steps;
  std::vector<double> dists;
  for (const TraceRow& row : trace.rows) {
    if (!row.dist) continue;
    steps.push_back(row.k);
    dists.push_back(*row.dist);
  }
  return contraction_check(steps, dists, s, sigma_min);
}

// ---------------------------------------------------------------------------
// Balancing drift

struct DriftReport {
  double b0 = 0.0;
  double b0_limit = 0.0;  // 1e-10 sigma_max
  double max_b = 0.0;
  std::size_t max_k = 0;
  double bound = 0.0;     // 7400 kappa s sigma_max dist0^2
  bool b0_ok() const noexcept { return b0 <= b0_limit; }
  bool bound_ok() const noexcept { return max_b <= bound; }
  bool satisfied() const noexcept { return b0_ok() && bound_ok(); }
};

inline DriftReport balancing_drift_check(const IterateTrace& trace, double kappa,
                                         double s, double sigma_max, double dist0) {
  if (trace.rows.empty()) throw parameter_error("balancing_drift_check: empty trace");
  DriftReport rep;
  rep.b0 = trace.rows.front().balancing_norm;
  rep.b0_limit = 1e-10 * sigma_max;
  rep.bound = 7400.0 * kappa * s * sigma_max * dist0 * dist0;
  rep.max_b = rep.b0;
  rep.max_k = trace.rows.front().k;
  for (const TraceRow& row : trace.rows) {
    if (row.balancing_norm > rep.max_b) {
      rep.max_b = row.balancing_norm;
      rep.max_k = row.k;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sampling concentration

/// |<(p^{-1} P_Omega - I)(X_A Y_A^T), X_B Y_B^T>| divided by
///   sqrt(max(d1, d2) / p)
///   * min(||X_A||_F ||X_B||_{2,inf}, ||X_A||_{2,inf} ||X_B||_F)
///   * min(||Y_A||_F ||Y_B||_{2,inf}, ||Y_A||_{2,inf} ||Y_B||_F).
/// Returns 0 when the numerator vanishes.
inline double concentration_ratio(const ObservationMask& mask, double p,
                                  const Matrix& xa, const Matrix& ya,
                                  const Matrix& xb, const Matrix& yb) {
  if (!(p > 0.0 && p <= 1.0)) throw parameter_error("concentration_ratio: p must lie in (0, 1]");
  if (xa.rows() != mask.d1() || xb.rows() != mask.d1() || ya.rows() != mask.d2() ||
      yb.rows() != mask.d2() || xa.cols() != ya.cols() || xb.cols() != yb.cols()) {
    throw parameter_error("concentration_ratio: factor shapes do not match the mask");
  }
  // <p^{-1} P_Omega(A), B> - <A, B>
  double sampled = 0.0;
  for (const Cell& c : mask.cells()) {
    sampled += dot(xa.row(c.i), ya.row(c.j)) * dot(xb.row(c.i), yb.row(c.j));
  }
  sampled /= p;
  // <X_A Y_A^T, X_B Y_B^T> = tr((X_A^T X_B)(Y_B^T Y_A))
  const double full = inner(matmul_tn(xa, xb), matmul_tn(ya, yb));
  const double num = std::abs(sampled - full);
  if (num == 0.0) return 0.0;
  const double d = static_cast<double>(std::max(mask.d1(), mask.d2()));
  const double fx = std::min(frobenius_norm(xa) * two_inf_norm(xb),
                             two_inf_norm(xa) * frobenius_norm(xb));
  const double fy = std::min(frobenius_norm(ya) * two_inf_norm(yb),
                             two_inf_norm(ya) * frobenius_norm(yb));
  const double rhs = std::sqrt(d / p) * fx * fy;
  return rhs > 0.0 ? num / rhs : std::numeric_limits<double>::infinity();
}

struct ConcentrationReport {
  double worst_ratio = 0.0;
  double mean_ratio = 0.0;
  std::size_t trials = 0;
};

/// Gaussian factor quadruples of the given rank; max and mean ratio.
inline ConcentrationReport concentration_check(const ObservationMask& mask, double p,
                                               std::size_t trials, std::uint64_t seed,
                                               std::size_t rank = 2) {
  if (trials == 0) throw parameter_error("concentration_check: trials must be >= 1");
  if (rank == 0) throw parameter_error("concentration_check: rank must be >= 1");
  SplitMix64 rng(seed);
  auto draw = [&](std::size_t rows) {
    Matrix m(rows, rank);
    for (double& v : m.values()) v = rng.normal();
    return m;
  };
  ConcentrationReport rep;
  rep.trials = trials;
  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix xa = draw(mask.d1()), ya = draw(mask.d2());
    const Matrix xb = draw(mask.d1()), yb = draw(mask.d2());
    const double r = concentration_ratio(mask, p, xa, ya, xb, yb);
    rep.worst_ratio = std::max(rep.worst_ratio, r);
    sum += r;
  }
  rep.mean_ratio = sum / static_cast<double>(trials);
  return rep;
}

// ---------------------------------------------------------------------------
// Recorded runs and the leave-one-out family

/// A run together with the iterates at its recorded steps.
struct RecordedRun {
  RunResult result;
  std::vector<std::size_t> steps;
  std::vector<FactorPair> iterates;
};

inline RecordedRun run_recorded(const GroundTruth& gt, const ObservationMask& mask,
                                const SolverConfig& config, FactorPair init) {
  RecordedRun out;
  out.result = run(gt, mask, config, std::move(init),
                   [&](std::size_t k, const FactorPair& f) {
                     out.steps.push_back(k);
                     out.iterates.push_back(f);
                   });
  return out;
}

struct LooSequence {
  LooSelector selector;
  RecordedRun run;
  std::vector<Matrix> o_align;  // O_k^{(l)}: F_k^{(l)} onto F*
};

struct LooFamily {
  std::vector<LooSequence> sequences;
  bool empty() const noexcept { return sequences.empty(); }
};

/// Runs the leave-one-out solver from loo_init for each selector. Every
/// sequence takes exactly config.max_iters steps (no early stop on tol) and
/// records with config.record_every, so its steps line up with a main run
/// of the same horizon. `jobs` bounds the number of concurrent sequences.
inline LooFamily run_loo_family(const GroundTruth& gt, const ObservationMask& mask,
                                const SolverConfig& config,
                                const std::vector<std::size_t>& selectors,
                                std::size_t jobs = 1,
                                const TruncatedSvdOptions& svd = {}) {
  std::vector<LooSelector> sels;
  sels.reserve(selectors.size());
  for (std::size_t l : selectors) sels.emplace_back(l, gt.d1(), gt.d2());
  std::vector<std::optional<LooSequence>> slots(sels.size());
  const FactorPair star = gt.factors();
  parallel_for(sels.size(), jobs, [&](std::size_t q) {
    SolverConfig cfg = config;
    cfg.variant = SolverVariant::leave_one_out(sels[q]);
    cfg.tol = std::numeric_limits<double>::denorm_min();
    cfg.track_dist = false;
    LooSequence seq{sels[q], run_recorded(gt, mask, cfg,
                                          loo_init(gt, mask, gt.rank(), sels[q], svd)),
                    {}};
    seq.o_align.reserve(seq.run.iterates.size());
    for (const FactorPair& f : seq.run.iterates) {
      seq.o_align.push_back(procrustes_align(f, star).matrix);
    }
    slots[q] = std::move(seq);
  });
  LooFamily fam;
  fam.sequences.reserve(slots.size());
  for (auto& seq : slots) fam.sequences.push_back(std::move(*seq));
  return fam;
}

/// n rows and n columns, evenly spaced, as 1-based selectors.
inline std::vector<std::size_t> default_selectors(std::size_t d1, std::size_t d2,
                                                  std::size_t n = 4) {
  std::vector<std::size_t> out;
  auto spread = [&](std::size_t d, std::size_t offset) {
    const std::size_t m = std::min(n, d);
    for (std::size_t q = 0; q < m; ++q) {
      const double pos = (static_cast<double>(q) + 0.5) * static_cast<double>(d) /
                         static_cast<double>(m);
      out.push_back(offset + static_cast<std::size_t>(pos) + 1);
    }
  };
  spread(d1, 0);
  spread(d2, d1);
  return out;
}

// ---------------------------------------------------------------------------
// Hypothesis clauses

struct ClauseRow {
  std::size_t k = 0;
  std::string clause;  // "a", "b[l]", "c[l]", "d", "e"
  double lhs = 0.0;
  double rhs = 0.0;
  bool evaluable = true;
  bool vacuous = false;  // rhs exceeds ||F*||, so the clause says nothing
  double slack() const noexcept { return rhs - lhs; }
  bool satisfied() const noexcept { return evaluable && lhs <= rhs; }
};

struct HypothesisReport {
  std::vector<ClauseRow> rows;

  std::size_t evaluable() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const ClauseRow& r) { return r.evaluable; }));
  }
  std::size_t satisfied() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const ClauseRow& r) { return r.satisfied(); }));
  }
  std::size_t vacuous() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const ClauseRow& r) { return r.vacuous; }));
  }
  /// Satisfied over evaluable (k, clause) pairs; 1 when nothing is evaluable.
  double fraction_satisfied() const noexcept {
    const std::size_t n = evaluable();
    return n == 0 ? 1.0 : static_cast<double>(satisfied()) / static_cast<double>(n);
  }
  /// Per clause family ("a", "b", ...): (satisfied, evaluable).
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_clause() const {
    std::map<std::string, std::pair<std::size_t, std::size_t>> out;
    for (const ClauseRow& r : rows) {
      auto& e = out[r.clause.substr(0, 1)];
      if (r.evaluable) ++e.second;
      if (r.satisfied()) ++e.first;
    }
    return out;
  }
};

/// The right-hand sides, with log taken as the natural logarithm.
struct HypothesisBounds {
  double s, p, kappa, mu, r, d1, d2, sigma_max, sigma_min;

  double log_d1() const { return std::log(d1); }
  double a() const {
    return (s * sigma_min +
            std::sqrt(mu * r * std::pow(kappa, 6) * log_d1() / (p * d2))) *
           std::sqrt(sigma_max);
  }
  double b() const {
    return (1e3 * s * kappa * kappa * sigma_min +
            1e2 * std::sqrt(mu * mu * r * r * std::pow(kappa, 14) * log_d1() / (p * d2))) *
           std::sqrt(mu * r * sigma_max / d2);
  }
  double c() const {
    return (s * sigma_min / kappa +
            std::sqrt(mu * mu * r * r * std::pow(kappa, 10) * log_d1() / (p * d2 * d2))) *
           std::sqrt(sigma_max);
  }
  double d(std::size_t t, double dist0) const {
    return std::pow(1.0 - s * sigma_min / 100.0, static_cast<double>(t)) * dist0;
  }
  double e() const { return 1.0 / (400.0 * kappa); }
};

/// Evaluates clauses (a)-(e) at every recorded step of the main run (and,
/// for (b) and (c), at every step a leave-one-out sequence shares with it).
/// A failed GL alignment marks that (k, e) row unevaluable. Rows are ordered
/// by k, then a, b[l]..., c[l]..., d, e with selectors ascending.
inline HypothesisReport hypothesis_check(const RecordedRun& main, const LooFamily& loo,
                                         const GroundTruth& gt, double s, double p) {
  if (main.iterates.empty()) throw parameter_error("hypothesis_check: main run has no iterates");
  const FactorPair star = gt.factors();
  const Matrix star_stacked = star.stacked();
  const double star_norm = spectral_norm(star_stacked);
  const HypothesisBounds hb{s, p, gt.kappa, gt.mu,
                            static_cast<double>(gt.rank()),
                            static_cast<double>(gt.d1()),
                            static_cast<double>(gt.d2()),
                            gt.sigma_max(), gt.sigma_min()};
  const double rhs_a = hb.a(), rhs_b = hb.b(), rhs_c = hb.c(), rhs_e = hb.e();

  std::vector<LooSequence> seqs = loo.sequences;
  std::sort(seqs.begin(), seqs.end(), [](const LooSequence& a, const LooSequence& b) {
    return a.selector.l() < b.selector.l();
  });

  const double dist0 = dist(main.iterates.front(), star);
  HypothesisReport rep;
  for (std::size_t t = 0; t < main.iterates.size(); ++t) {
    const std::size_t k = main.steps[t];
    const FactorPair& f = main.iterates[t];
    const Matrix fs = f.stacked();
    const Matrix o = procrustes_align(f, star).matrix;
    const Matrix fo = matmul(fs, o);

    auto push = [&](std::string clause, double lhs, double rhs, bool evaluable,
                    bool check_vacuous) {
      ClauseRow row;
      row.k = k;
      row.clause = std::move(clause);
      row.lhs = lhs;
      row.rhs = rhs;
      row.evaluable = evaluable && std::isfinite(lhs);
      row.vacuous = check_vacuous && rhs > star_norm;
      rep.rows.push_back(std::move(row));
    };

    push("a", spectral_norm(fo - star_stacked), rhs_a, true, true);

    // Leave-one-out clauses at the steps each sequence shares with main.
    std::vector<std::pair<std::string, double>> b_rows, c_rows;
    for (const LooSequence& seq : seqs) {
      auto it = std::lower_bound(seq.run.steps.begin(), seq.run.steps.end(), k);
      if (it == seq.run.steps.end() || *it != k) continue;
      const std::size_t idx = static_cast<std::size_t>(it - seq.run.steps.begin());
      const Matrix fl = seq.run.iterates[idx].stacked();
      const std::size_t row = seq.selector.l() - 1;
      const Matrix flo = matmul(fl, seq.o_align[idx]);
      double b2 = 0.0;
      for (std::size_t j = 0; j < flo.cols(); ++j) {
        const double e = flo(row, j) - star_stacked(row, j);
        b2 += e * e;
      }
      const std::string tag = "[" + std::to_string(seq.selector.l()) + "]";
      b_rows.emplace_back("b" + tag, std::sqrt(b2));
      const AlignmentResult r_l = procrustes_align(fl, fo);
      c_rows.emplace_back("c" + tag, r_l.residual);
    }
    for (auto& [name, v] : b_rows) push(name, v, rhs_b, true, true);
    for (auto& [name, v] : c_rows) push(name, v, rhs_c, true, true);

    push("d", dist(f, star), hb.d(k, dist0), true, true);

    try {
      const AlignmentResult q = gl_align(f, star);
      push("e", spectral_norm(q.matrix - o), rhs_e, true, false);
    } catch (const alignment_error&) {
      push("e", std::numeric_limits<double>::quiet_NaN(), rhs_e, false, false);
    }
  }
  return rep;
}

/// CSV with header k,clause,lhs,rhs,slack,satisfied (satisfied as 0/1).
inline void write_hypothesis_csv(std::ostream& os, const HypothesisReport& rep) {
  os << "k,clause,lhs,rhs,slack,satisfied\n";
  for (const ClauseRow& r : rep.rows) {
    os << r.k << ',' << r.clause << ',' << format_double(r.lhs) << ','
       << format_double(r.rhs) << ',' << format_double(r.slack()) << ','
       << (r.satisfied() ? 1 : 0) << '\n';
  }
}

}  // namespace lrmc
