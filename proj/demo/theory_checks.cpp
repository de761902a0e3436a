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


// Runs vanilla gradient descent on a small instance with a few leave-one-out
// sequences alongside, then reports the contraction, balancing and
// hypothesis checks.

#include <cstdio>

#include "lrmc/lrmc.hpp"

int main() {
  using namespace lrmc;
  const GroundTruth gt = gen_ground_truth({80, 60, 3}, 2.0, 7);
  const ObservationMask mask = sample_mask(80, 60, 0.4, 8);

  SolverConfig cfg;
  cfg.max_iters = 600;
  cfg.record_every = 20;
  cfg.track_dist = true;
  const RecordedRun main = run_recorded(gt, mask, cfg, spectral_init(gt, mask, 3));
  const LooFamily loo = run_loo_family(gt, mask, cfg, default_selectors(80, 60, 2));

  const ContractionReport con = contraction_check(main.result.trace, cfg.step, gt.sigma_min());
  std::printf("contraction: worst per-step ratio %.4f, factor %.4f, %s\n", con.worst_ratio,
              con.bound_factor, con.satisfied() ? "holds" : "violated");

  const double dist0 = *main.result.trace.rows.front().dist;
  const DriftReport drift =
      balancing_drift_check(main.result.trace, gt.kappa, cfg.step, gt.sigma_max(), dist0);
  std::printf("balancing: B0 %.2e, max %.2e, bound %.2e\n", drift.b0, drift.max_b, drift.bound);

  const HypothesisReport rep = hypothesis_check(main, loo, gt, cfg.step, mask.p());
  for (const auto& [clause, counts] : rep.by_clause())
    std::printf("clause %-6s %zu/%zu rows hold\n", clause.c_str(), counts.first, counts.second);
}
