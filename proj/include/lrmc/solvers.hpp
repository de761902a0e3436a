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

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/matrix.hpp"
#include "lrmc/core/types.hpp"
#include "lrmc/metrics.hpp"
#include "lrmc/sampling.hpp"

namespace lrmc {

/// Which objective gradient descent runs on.
///   vanilla        (1/2p)||P_Omega(XY^T - M*)||_F^2
///   regularized    + (lambda/2)(||X||_F^2 + ||Y||_F^2)
///   balancing      + (1/8)||X^T X - Y^T Y||_F^2
///   leave_one_out  balancing term plus the data term with the selected
///                  row/column fully observed at unit weight
class SolverVariant {
 public:
  enum class Kind { vanilla, regularized, balancing, leave_one_out };

  static SolverVariant vanilla() { return SolverVariant(Kind::vanilla); }
  static SolverVariant balancing() { return SolverVariant(Kind::balancing); }
  static SolverVariant regularized(double lambda) {
    if (!(lambda > 0.0)) throw parameter_error("regularized: lambda must be > 0");
    SolverVariant v(Kind::regularized);
    v.lambda_ = lambda;
    return v;
  }
  static SolverVariant leave_one_out(LooSelector sel) {
    SolverVariant v(Kind::leave_one_out);
    v.selector_ = sel;
    return v;
  }

  Kind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  const std::optional<LooSelector>& selector() const noexcept { return selector_; }
  bool has_balancing() const noexcept {
    return kind_ == Kind::balancing || kind_ == Kind::leave_one_out;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::vanilla: return "VGD";
      case Kind::regularized: return "RGD";
      case Kind::balancing: return "BGD";
      case Kind::leave_one_out: return "LOO";
    }
    return "?";
  }

 private:
  explicit SolverVariant(Kind k) : kind_(k) {}
  Kind kind_;
  double lambda_ = 0.0;
  std::optional<LooSelector> selector_;
};

/// The weighted data-term operator a variant uses on a given mask.
inline WeightedCells data_operator(const ObservationMask& mask,
                                   const SolverVariant& variant) {
  if (variant.kind() == SolverVariant::Kind::leave_one_out) {
    return loo_operator(mask, *variant.selector());
  }
  return sampling_operator(mask);
}

namespace detail {

inline void require_consistent(const FactorPair& f, const Matrix& m_star,
                               const WeightedCells& op) {
  if (f.d1() != m_star.rows() || f.d2() != m_star.cols() ||
      op.d1 != m_star.rows() || op.d2 != m_star.cols()) {
    throw parameter_error("solver: dimensions of factors, M* and mask differ");
  }
}

inline double data_term(const FactorPair& f, const Matrix& m_star,
                        const WeightedCells& op) {
  double s = 0.0;
  for (std::size_t k = 0; k < op.cells.size(); ++k) {
    const Cell c = op.cells[k];
    const double e = dot(f.x.row(c.i), f.y.row(c.j)) - m_star(c.i, c.j);
    s += op.weights[k] * e * e;
  }
  return 0.5 * s;
}

// Adds A(XY^T - M*) Y to gx and A(XY^T - M*)^T X to gy.
inline void add_data_gradient(const FactorPair& f, const Matrix& m_star,
                              const WeightedCells& op, Matrix& gx, Matrix& gy) {
  const std::size_t r = f.rank();
  for (std::size_t k = 0; k < op.cells.size(); ++k) {
    const Cell c = op.cells[k];
    const double* xi = f.x.row(c.i).data();
    const double* yj = f.y.row(c.j).data();
    double s = 0.0;
    for (std::size_t t = 0; t < r; ++t) s += xi[t] * yj[t];
    const double res = op.weights[k] * (s - m_star(c.i, c.j));
    double* gxi = gx.row(c.i).data();
    double* gyj = gy.row(c.j).data();
    for (std::size_t t = 0; t < r; ++t) {
      gxi[t] += res * yj[t];
      gyj[t] += res * xi[t];
    }
  }
}

inline double objective_with(const FactorPair& f, const Matrix& m_star,
                             const WeightedCells& op, const SolverVariant& v) {
  double val = data_term(f, m_star, op);
  if (v.kind() == SolverVariant::Kind::regularized) {
    val += 0.5 * v.lambda() * (inner(f.x, f.x) + inner(f.y, f.y));
  }
  if (v.has_balancing()) {
    const double b = balancing_norm(f);
    val += 0.125 * b * b;
  }
  return val;
}

inline FactorPair gradient_with(const FactorPair& f, const Matrix& m_star,
                                const WeightedCells& op, const SolverVariant& v) {
  Matrix gx(f.d1(), f.rank());
  Matrix gy(f.d2(), f.rank());
  add_data_gradient(f, m_star, op, gx, gy);
  if (v.kind() == SolverVariant::Kind::regularized) {
    gx.add_scaled(v.lambda(), f.x);
    gy.add_scaled(v.lambda(), f.y);
  }
  if (v.has_balancing()) {
    const Matrix b = gram(f.x) - gram(f.y);  // X^T X - Y^T Y
    gx.add_scaled(0.5, matmul(f.x, b));
    gy.add_scaled(-0.5, matmul(f.y, b));
  }
  return {std::move(gx), std::move(gy)};
}

}  // namespace detail

/// Objective value of `variant` at f.
inline double objective(const FactorPair& f, const Matrix& m_star,
                        const ObservationMask& mask, const SolverVariant& variant) {
  const WeightedCells op = data_operator(mask, variant);
  detail::require_consistent(f, m_star, op);
  return detail::objective_with(f, m_star, op, variant);
}

inline double objective(const FactorPair& f, const GroundTruth& gt,
                        const ObservationMask& mask, const SolverVariant& variant) {
  return objective(f, gt.m_star, mask, variant);
}

/// (grad_X, grad_Y) of `variant` at f.
inline FactorPair gradient(const FactorPair& f, const Matrix& m_star,
                           const ObservationMask& mask, const SolverVariant& variant) {
  const WeightedCells op = data_operator(mask, variant);
  detail::require_consistent(f, m_star, op);
  return detail::gradient_with(f, m_star, op, variant);
}

inline FactorPair gradient(const FactorPair& f, const GroundTruth& gt,
                           const ObservationMask& mask, const SolverVariant& variant) {
  return gradient(f, gt.m_star, mask, variant);
}

/// (X - s grad_X, Y - s grad_Y)
inline FactorPair step(const FactorPair& f, const FactorPair& g, double s) {
  if (!f.same_shape(g)) throw parameter_error("step: shape mismatch");
  FactorPair out = f;
  out.x.add_scaled(-s, g.x);
  out.y.add_scaled(-s, g.y);
  return out;
}

struct SolverConfig {
  SolverVariant variant = SolverVariant::vanilla();
  double step = 0.5;
  std::size_t max_iters = 5000;
  double tol = 1e-14;
  std::size_t record_every = 1;
  /// Also record dist(F_k, F*) (a GL alignment per recorded step).
  bool track_dist = false;

  void validate() const {
    if (!(step > 0.0)) throw parameter_error("SolverConfig: step must be > 0");
    if (!(tol > 0.0)) throw parameter_error("SolverConfig: tol must be > 0");
    if (max_iters == 0) throw parameter_error("SolverConfig: max_iters must be positive");
    if (record_every == 0) throw parameter_error("SolverConfig: record_every must be positive");
  }
};

struct TraceRow {
  std::size_t k = 0;
  double relative_error = 0.0;
  std::optional<double> dist;
  double balancing_norm = 0.0;
  double objective = 0.0;
  double seconds = 0.0;
};

struct IterateTrace {
  std::vector<TraceRow> rows;
  bool diverged = false;
};

enum class RunStatus { converged, max_iters, diverged };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

struct RunResult {
  FactorPair factors;
  IterateTrace trace;
  RunStatus status = RunStatus::max_iters;
  std::size_t iterations = 0;  // gradient steps taken
  double final_relative_error = 0.0;
};

/// Called with (k, F_k) at every recorded step.
using IterateObserver = std::function<void(std::size_t, const FactorPair&)>;

/// Relative error above which a run is declared diverged.
inline constexpr double divergence_threshold = 1e6;

/// Gradient descent from `init` until relative error < tol (converged),
/// k = max_iters, or divergence. Step k of the trace describes F_k before the
/// k-th update; the terminal iterate is always recorded.
inline RunResult run(const GroundTruth& gt, const ObservationMask& mask,
                     const SolverConfig& config, FactorPair init,
                     const IterateObserver& observer = {}) {
  config.validate();
  if (!all_finite(init)) throw parameter_error("run: initial factors are not finite");
  const WeightedCells op = data_operator(mask, config.variant);
  detail::require_consistent(init, gt.m_star, op);
  const FactorPair reference = config.track_dist ? gt.factors() : FactorPair{};

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  RunResult out;
  FactorPair f = std::move(init);
  std::size_t k = 0;
  for (;;) {
    const double rel = relative_error(f, gt.m_star);
    RunStatus status{};
    bool stop = true;
    if (!std::isfinite(rel) || rel > divergence_threshold) {
      status = RunStatus::diverged;
    } else if (rel < config.tol) {
      status = RunStatus::converged;
    } else if (k >= config.max_iters) {
      status = RunStatus::max_iters;
    } else {
      stop = false;
    }

    if (stop || k % config.record_every == 0) {
      TraceRow row;
      row.k = k;
      row.relative_error = rel;
      row.balancing_norm = balancing_norm(f);
      row.objective = detail::objective_with(f, gt.m_star, op, config.variant);
      if (config.track_dist && status != RunStatus::diverged) {
        row.dist = dist(f, reference);
      }
      row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      out.trace.rows.push_back(row);
      if (observer) observer(k, f);
    }
    if (stop) {
      out.status = status;
      out.trace.diverged = status == RunStatus::diverged;
      out.final_relative_error = rel;
      break;
    }
    const FactorPair g = detail::gradient_with(f, gt.m_star, op, config.variant);
    f.x.add_scaled(-config.step, g.x);
    f.y.add_scaled(-config.step, g.y);
    ++k;
  }
  out.iterations = k;
  out.factors = std::move(f);
  return out;
}

}  // namespace lrmc
