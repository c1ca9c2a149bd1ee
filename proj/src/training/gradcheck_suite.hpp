// Copyright 2026 The pdan Authors
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

#include <cstdint>
#include <string>
#include <vector>

#include "tensor/gradcheck.hpp"

namespace pdan::training {

struct SuiteOptions {
  std::uint64_t seed = 0;
  double primitive_tol = 1e-5;
  double end_to_end_tol = 1e-4;
  double eps = 1e-6;
  /// Name of a registered check whose analytic gradient is negated, to
  /// exercise failure reporting. Empty for a normal run.
  std::string inject_fault;
  /// Restrict the run to these checks (all when empty).
  std::vector<std::string> only;
};

struct SuiteEntry {
  tensor::GradcheckReport report;
  double tol = 0.0;
  bool end_to_end = false;
};

/// Names of every differentiable op, layer and loss with a check, plus
/// "end_to_end" (the Step-2 objective of a toy model w.r.t. all weights).
std::vector<std::string> registered_checks();

/// Runs the checks in double precision. Throws a usage error for unknown
/// names in `only` or `inject_fault`.
std::vector<SuiteEntry> run_gradcheck_suite(const SuiteOptions& options);

}  // namespace pdan::training
