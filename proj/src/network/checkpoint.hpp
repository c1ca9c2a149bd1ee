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

#include "network/params.hpp"

namespace pdan::network {

inline constexpr char kCheckpointMagic[4] = {'P', 'D', 'A', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Settings that are not recoverable from parameter shapes.
struct CheckpointMeta {
  bool adaptive_nodes = true;
  /// False when only classifier 1 was trained (no global alignment).
  bool dual_head = true;
};

/// Layout (all little-endian):
///   "PDAN" | u32 version | u32 record count |
///   per record: u32 name length | name | u32 rank | u64 dims[rank] | f64 payload
/// Records are the model parameters in canonical order followed by
/// "meta.*" scalars (k_neighbors, adaptive_nodes, dual_head).
template <class Real>
void save_checkpoint(const std::string& path, const ModelParams<Real>& params, const CheckpointMeta& meta);

template <class Real>
ModelParams<Real> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace pdan::network
