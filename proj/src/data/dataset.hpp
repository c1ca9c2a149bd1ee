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

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "geometry/point_cloud.hpp"

namespace pdan::data {

inline constexpr char kPayloadMagic[4] = {'P', 'D', 'P', 'C'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kPayloadHeaderBytes = 16;

/// Labeled clouds (source training data or any evaluation split).
struct LabeledSet {
  std::vector<geometry::PointCloud> clouds;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return clouds.size(); }
};

/// Clouds without labels. The only way in is strip(), which discards any
/// label, so code holding an UnlabeledSet cannot read one.
class UnlabeledSet {
 public:
  UnlabeledSet() = default;
  static UnlabeledSet strip(std::vector<geometry::PointCloud> clouds);

  std::size_t size() const noexcept { return clouds_.size(); }
  const geometry::PointCloud& operator[](std::size_t i) const { return clouds_.at(i); }
  std::span<const geometry::PointCloud> clouds() const noexcept { return clouds_; }

 private:
  std::vector<geometry::PointCloud> clouds_;
};

struct ManifestRecord {
  std::string split;
  std::size_t index = 0;
  std::uint64_t offset = 0;
  int label = 0;
  std::string domain;
  std::uint32_t crc = 0;
};

struct ManifestSplit {
  std::string name;
  std::string file;
  std::size_t count = 0;
};

/// Text manifest, one key=value per line, '#' comments:
///   format_version=1
///   domain=<name>
///   seed=<u64>
///   points=<T>
///   class=<id> <name>                       (one per class, ids 0..K-1)
///   profile=<free text>
///   split=<name> <payload file> <count>     (file relative to the manifest)
///   record=<split> <index> <byte offset> <label> <domain> <crc32 hex>
/// Payload files: "PDPC" | u32 version | u32 T | u32 count | per record
/// T*3 little-endian float32 xyz, interleaved. The CRC32 covers the
/// record's T*12 bytes.
struct DatasetManifest {
  std::uint32_t format_version = kFormatVersion;
  std::string domain;
  std::uint64_t seed = 0;
  std::size_t points = 0;
  std::vector<std::string> class_names;
  std::string profile;
  std::vector<ManifestSplit> splits;
  std::vector<ManifestRecord> records;

  static DatasetManifest read(const std::string& path);
  void write(const std::string& path) const;
  const ManifestSplit& split(const std::string& name) const;
  std::size_t count(const std::string& split) const;
};

/// Streams the clouds of one split in manifest order, verifying each
/// record's checksum and the normalization invariants.
class DatasetReader {
 public:
  DatasetReader(const std::string& manifest_path, const std::string& split);

  const DatasetManifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return records_.size(); }
  /// Reads record i; labels are attached only if `with_label`.
  geometry::PointCloud read(std::size_t i, bool with_label = true);

 private:
  DatasetManifest manifest_;
  std::vector<ManifestRecord> records_;
  std::string payload_path_;
  std::ifstream payload_;
  std::uint64_t payload_size_ = 0;
};

LabeledSet load_labeled(const std::string& manifest_path, const std::string& split,
                        geometry::DomainTag tag = geometry::DomainTag::kSource);
UnlabeledSet load_unlabeled(const std::string& manifest_path, const std::string& split);

/// Writes one payload file and returns its records (offsets and CRCs).
std::vector<ManifestRecord> write_payload(const std::string& path, const std::string& split,
                                          const std::string& domain,
                                          std::span<const geometry::PointCloud> clouds);

/// Normalization tolerance applied on load.
inline constexpr double kLoadNormTolerance = 1e-3;

}  // namespace pdan::data
