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

#include "network/match.hpp"

#include <algorithm>
#include <string>

#include "tensor/ops.hpp"

namespace pdan::network {

template <class Real>
std::vector<NodeMatch> match_nodes(const tensor::Tensor<Real>& h_source,
                                   const tensor::Tensor<Real>& h_target, std::size_t top_m) {
  require(h_source.rank() == 2 && h_target.rank() == 2 && h_source.shape() == h_target.shape(),
          ErrorKind::kDimension,
          "match_nodes: shape mismatch " + tensor::shape_str(h_source.shape()) + " vs " +
              tensor::shape_str(h_target.shape()));
  const std::size_t n = h_source.rows(), c = h_source.cols();
  require(top_m <= n * n, ErrorKind::kInvalidArgument,
          "match_nodes: top_m=" + std::to_string(top_m) + " exceeds " + std::to_string(n * n) + " pairs");

  // M = h_s * h_t^T
  std::vector<Real> ht(c * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) ht[j * n + i] = h_target.at(i, j);
  std::vector<Real> m(n * n);
  tensor::kernels::gemm(h_source.data().data(), ht.data(), m.data(), n, c, n);

  std::vector<NodeMatch> all;
  all.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) all.push_back({i, j, static_cast<double>(m[i * n + j])});
  auto better = [](const NodeMatch& a, const NodeMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source != b.source) return a.source < b.source;
    return a.target < b.target;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top_m), all.end(), better);
  all.resize(top_m);
  return all;
}

template std::vector<NodeMatch> match_nodes<float>(const tensor::Tensor<float>&, const tensor::Tensor<float>&,
                                                   std::size_t);
template std::vector<NodeMatch> match_nodes<double>(const tensor::Tensor<double>&,
                                                    const tensor::Tensor<double>&, std::size_t);

}  // namespace pdan::network
