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

#include "network/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "common/binary_io.hpp"

namespace pdan::network {
namespace {

struct Record {
  tensor::Shape shape;
  std::vector<double> values;
};

void write_record(std::ostream& os, const std::string& name, const tensor::Shape& shape,
                  std::span<const double> values) {
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) write_le<std::uint64_t>(os, d);
  for (double v : values) write_le<double>(os, v);
}

std::size_t dim_of(const std::map<std::string, Record>& recs, const std::string& name, std::size_t axis) {
  auto it = recs.find(name);
  require(it != recs.end(), ErrorKind::kFormat, "checkpoint: missing record '" + name + "'");
  require(axis < it->second.shape.size(), ErrorKind::kFormat, "checkpoint: bad shape for '" + name + "'");
  return it->second.shape[axis];
}

double meta_of(const std::map<std::string, Record>& recs, const std::string& name) {
  auto it = recs.find(name);
  require(it != recs.end() && it->second.values.size() == 1, ErrorKind::kFormat,
          "checkpoint: missing meta record '" + name + "'");
  return it->second.values[0];
}

}  // namespace

template <class Real>
void save_checkpoint(const std::string& path, const ModelParams<Real>& params, const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, 4);
  write_le<std::uint32_t>(os, kCheckpointVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.all().size() + 3));
  for (const auto& p : params.all()) {
    std::vector<double> v(p.value.data().begin(), p.value.data().end());
    write_record(os, p.name, p.value.shape(), v);
  }
  const double k = static_cast<double>(params.config().k_neighbors);
  const double adaptive = meta.adaptive_nodes ? 1.0 : 0.0;
  const double dual = meta.dual_head ? 1.0 : 0.0;
  write_record(os, "meta.k_neighbors", {1}, std::span<const double>(&k, 1));
  write_record(os, "meta.adaptive_nodes", {1}, std::span<const double>(&adaptive, 1));
  write_record(os, "meta.dual_head", {1}, std::span<const double>(&dual, 1));
  os.flush();
  require(static_cast<bool>(os), ErrorKind::kIo, "failed writing checkpoint: " + path);
}

template <class Real>
ModelParams<Real> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::kIo, "cannot open checkpoint: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  require(is.gcount() == 4 && std::memcmp(magic, kCheckpointMagic, 4) == 0, ErrorKind::kFormat,
          "not a checkpoint file (bad magic): " + path);
  const auto version = read_le<std::uint32_t>(is, "checkpoint version");
  require(version == kCheckpointVersion, ErrorKind::kVersion,
          "unsupported checkpoint version " + std::to_string(version) + " in " + path);
  const auto count = read_le<std::uint32_t>(is, "checkpoint record count");

  std::map<std::string, Record> recs;
  std::vector<std::string> order;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = read_le<std::uint32_t>(is, "record name length");
    require(len < 4096, ErrorKind::kFormat, "checkpoint: implausible name length");
    std::string name(len, '\0');
    is.read(name.data(), len);
    require(is.gcount() == static_cast<std::streamsize>(len), ErrorKind::kTruncated,
            "truncated checkpoint record name");
    const auto rank = read_le<std::uint32_t>(is, name + " rank");
    require(rank <= 8, ErrorKind::kFormat, "checkpoint: implausible rank for " + name);
    Record rec;
    for (std::uint32_t d = 0; d < rank; ++d) rec.shape.push_back(read_le<std::uint64_t>(is, name + " shape"));
    const std::size_t n = tensor::numel(rec.shape);
    require(n < (std::size_t{1} << 32), ErrorKind::kFormat, "checkpoint: implausible size for " + name);
    rec.values.resize(n);
    for (auto& v : rec.values) v = read_le<double>(is, name + " payload");
    order.push_back(name);
    recs.emplace(name, std::move(rec));
  }

  ModelConfig cfg;
  cfg.encoder_widths.clear();
  for (std::size_t i = 0; recs.count("encoder." + std::to_string(i) + ".weight"); ++i)
    cfg.encoder_widths.push_back(dim_of(recs, "encoder." + std::to_string(i) + ".weight", 1));
  cfg.generator_widths.clear();
  for (std::size_t i = 0; recs.count("generator." + std::to_string(i) + ".weight"); ++i)
    cfg.generator_widths.push_back(dim_of(recs, "generator." + std::to_string(i) + ".weight", 1));
  cfg.n_nodes = dim_of(recs, "attention.down.weight", 0);
  const std::size_t nr = dim_of(recs, "attention.down.weight", 1);
  require(nr > 0 && cfg.n_nodes % nr == 0, ErrorKind::kFormat, "checkpoint: inconsistent attention shapes");
  cfg.reduction = cfg.n_nodes / nr;
  cfg.classifier_hidden = dim_of(recs, "classifier1.0.weight", 1);
  cfg.num_classes = dim_of(recs, "classifier1.1.weight", 1);
  cfg.k_neighbors = static_cast<std::size_t>(meta_of(recs, "meta.k_neighbors"));

  ModelParams<Real> params = ModelParams<Real>::init(cfg, 0);
  for (auto& p : params.all()) {
    auto it = recs.find(p.name);
    require(it != recs.end(), ErrorKind::kFormat, "checkpoint: missing parameter '" + p.name + "'");
    require(it->second.shape == p.value.shape(), ErrorKind::kFormat,
            "checkpoint: parameter '" + p.name + "' has shape " + tensor::shape_str(it->second.shape) +
                ", expected " + tensor::shape_str(p.value.shape()));
    for (std::size_t i = 0; i < p.value.numel(); ++i) p.value[i] = static_cast<Real>(it->second.values[i]);
  }
  if (meta) {
    meta->adaptive_nodes = meta_of(recs, "meta.adaptive_nodes") != 0.0;
    meta->dual_head = meta_of(recs, "meta.dual_head") != 0.0;
  }
  return params;
}

template void save_checkpoint<float>(const std::string&, const ModelParams<float>&, const CheckpointMeta&);
template void save_checkpoint<double>(const std::string&, const ModelParams<double>&, const CheckpointMeta&);
template ModelParams<float> load_checkpoint<float>(const std::string&, CheckpointMeta*);
template ModelParams<double> load_checkpoint<double>(const std::string&, CheckpointMeta*);

}  // namespace pdan::network
