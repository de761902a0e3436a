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

#include "lrmc/core/error.hpp"
#include "lrmc/core/format.hpp"
#include "lrmc/core/linalg.hpp"
#include "lrmc/core/matrix.hpp"
#include "lrmc/core/random.hpp"
#include "lrmc/core/types.hpp"
#include "lrmc/experiments.hpp"
#include "lrmc/ground_truth.hpp"
#include "lrmc/init.hpp"
#include "lrmc/metrics.hpp"
#include "lrmc/parallel.hpp"
#include "lrmc/sampling.hpp"
#include "lrmc/solvers.hpp"
#include "lrmc/theory.hpp"
