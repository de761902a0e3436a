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


// Completes a planted rank-5 matrix from 20% of its entries with each of the
// three gradient methods and prints the error every 500 iterations.

#include <cstdio>

#include "lrmc/lrmc.hpp"

int main() {
  using namespace lrmc;
  const GroundTruth gt = gen_ground_truth({160, 100, 5}, 1.0, /*seed=*/1);
  const ObservationMask mask = sample_mask(160, 100, 0.2, /*seed=*/2);
  const FactorPair init = spectral_init(gt, mask, 5);
  std::printf("observed %zu of %d entries, mu = %.3f\n", mask.size(), 160 * 100, gt.mu);

  for (const SolverVariant& v : {SolverVariant::vanilla(), SolverVariant::regularized(1e-10),
                                 SolverVariant::balancing()}) {
    SolverConfig cfg;
    cfg.variant = v;
    cfg.record_every = 500;
    const RunResult res = run(gt, mask, cfg, init);
    std::printf("%s:", v.name().c_str());
    for (const TraceRow& row : res.trace.rows) std::printf(" %.1e", row.relative_error);
    std::printf("\n  %s after %zu iterations\n", to_string(res.status), res.iterations);
  }
}
