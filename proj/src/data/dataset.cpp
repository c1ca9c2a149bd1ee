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

#include "data/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "common/hash.hpp"

namespace pdan::data {
namespace {

namespace fs = std::filesystem;

std::string record_name(const ManifestRecord& r) {
  return r.split + "[" + std::to_string(r.index) + "]";
}

template <class T>
T parse_number(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  T v{};
  is >> v;
  require(!is.fail() && is.eof(), ErrorKind::kFormat, "manifest: bad " + what + " '" + text + "'");
  return v;
}

}  // namespace

UnlabeledSet UnlabeledSet::strip(std::vector<geometry::PointCloud> clouds) {
  UnlabeledSet s;
  for (auto& c : clouds) {
    c.label.reset();
    c.domain = geometry::DomainTag::kTarget;
  }
  s.clouds_ = std::move(clouds);
  return s;
}

DatasetManifest DatasetManifest::read(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open manifest: " + path);
  DatasetManifest m;
  m.format_version = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kFormat,
            path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    std::istringstream vs(value);
    if (key == "format_version") {
      m.format_version = parse_number<std::uint32_t>(value, "format_version");
      require(m.format_version == kFormatVersion, ErrorKind::kVersion,
              "unsupported dataset format version " + value + " in " + path);
    } else if (key == "domain") {
      m.domain = value;
    } else if (key == "seed") {
      m.seed = parse_number<std::uint64_t>(value, "seed");
    } else if (key == "points") {
      m.points = parse_number<std::size_t>(value, "points");
    } else if (key == "class") {
      std::size_t id = 0;
      std::string name;
      vs >> id >> name;
      require(!vs.fail() && id == m.class_names.size(), ErrorKind::kFormat,
              path + ":" + std::to_string(lineno) + ": class ids must be consecutive from 0");
      m.class_names.push_back(name);
    } else if (key == "profile") {
      m.profile = value;
    } else if (key == "split") {
      ManifestSplit s;
      vs >> s.name >> s.file >> s.count;
      require(!vs.fail(), ErrorKind::kFormat, path + ":" + std::to_string(lineno) + ": bad split line");
      m.splits.push_back(s);
    } else if (key == "record") {
      ManifestRecord r;
      std::string crc;
      vs >> r.split >> r.index >> r.offset >> r.label >> r.domain >> crc;
      require(!vs.fail() && crc.size() == 8, ErrorKind::kFormat,
              path + ":" + std::to_string(lineno) + ": bad record line");
      r.crc = static_cast<std::uint32_t>(std::stoul(crc, nullptr, 16));
      m.records.push_back(r);
    } else {
      fail(ErrorKind::kFormat, path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  require(m.format_version == kFormatVersion, ErrorKind::kVersion, "manifest without format_version: " + path);
  require(m.points >= 1, ErrorKind::kFormat, "manifest: missing points in " + path);
  require(!m.class_names.empty(), ErrorKind::kFormat, "manifest: no classes in " + path);
  for (const auto& s : m.splits) {
    require(m.count(s.name) == s.count, ErrorKind::kFormat,
            "manifest: split '" + s.name + "' declares " + std::to_string(s.count) + " records but lists " +
                std::to_string(m.count(s.name)));
  }
  for (const auto& r : m.records) {
    require(r.label >= 0 && static_cast<std::size_t>(r.label) < m.class_names.size(), ErrorKind::kFormat,
            "manifest: label out of range in record " + record_name(r));
  }
  return m;
}

void DatasetManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write manifest: " + path);
  out << "# pdan point-cloud dataset\n";
  out << "format_version=" << format_version << "\n";
  out << "domain=" << domain << "\n";
  out << "seed=" << seed << "\n";
  out << "points=" << points << "\n";
  for (std::size_t i = 0; i < class_names.size(); ++i) out << "class=" << i << " " << class_names[i] << "\n";
  out << "profile=" << profile << "\n";
  for (const auto& s : splits) out << "split=" << s.name << " " << s.file << " " << s.count << "\n";
  for (const auto& r : records) {
    out << "record=" << r.split << " " << r.index << " " << r.offset << " " << r.label << " " << r.domain << " "
        << hex32(r.crc) << "\n";
  }
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing manifest: " + path);
}

const ManifestSplit& DatasetManifest::split(const std::string& name) const {
  for (const auto& s : splits)
    if (s.name == name) return s;
  fail(ErrorKind::kInvalidArgument, "dataset has no split '" + name + "'");
}

std::size_t DatasetManifest::count(const std::string& split) const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.split == split ? 1 : 0;
  return n;
}

DatasetReader::DatasetReader(const std::string& manifest_path, const std::string& split)
    : manifest_(DatasetManifest::read(manifest_path)) {
  const auto& s = manifest_.split(split);
  for (const auto& r : manifest_.records)
    if (r.split == split) records_.push_back(r);
  payload_path_ = (fs::path(manifest_path).parent_path() / s.file).string();
  payload_.open(payload_path_, std::ios::binary);
  require(static_cast<bool>(payload_), ErrorKind::kIo, "cannot open payload: " + payload_path_);
  payload_.seekg(0, std::ios::end);
  payload_size_ = static_cast<std::uint64_t>(payload_.tellg());
  payload_.seekg(0);

  char magic[4] = {};
  payload_.read(magic, 4);
  require(payload_.gcount() == 4, ErrorKind::kTruncated, "truncated payload header: " + payload_path_);
  require(std::memcmp(magic, kPayloadMagic, 4) == 0, ErrorKind::kFormat, "bad payload magic: " + payload_path_);
  const auto version = read_le<std::uint32_t>(payload_, "payload version");
  require(version == kFormatVersion, ErrorKind::kVersion,
          "unsupported payload version " + std::to_string(version) + " in " + payload_path_);
  const auto points = read_le<std::uint32_t>(payload_, "payload point count");
  const auto count = read_le<std::uint32_t>(payload_, "payload record count");
  require(points == manifest_.points, ErrorKind::kFormat,
          "payload " + payload_path_ + " holds " + std::to_string(points) + " points per cloud, manifest says " +
              std::to_string(manifest_.points));
  require(count == records_.size(), ErrorKind::kFormat,
          "payload " + payload_path_ + " holds " + std::to_string(count) + " records, manifest lists " +
              std::to_string(records_.size()));
}

geometry::PointCloud DatasetReader::read(std::size_t i, bool with_label) {
  require(i < records_.size(), ErrorKind::kInvalidArgument, "dataset record index out of range");
  const ManifestRecord& r = records_[i];
  const std::size_t bytes = manifest_.points * 12;
  require(r.offset + bytes <= payload_size_, ErrorKind::kTruncated,
          "payload truncated at record " + record_name(r) + " in " + payload_path_);
  std::vector<char> buf(bytes);
  payload_.clear();
  payload_.seekg(static_cast<std::streamoff>(r.offset));
  payload_.read(buf.data(), static_cast<std::streamsize>(bytes));
  require(payload_.gcount() == static_cast<std::streamsize>(bytes), ErrorKind::kTruncated,
          "payload truncated at record " + record_name(r) + " in " + payload_path_);
  const auto crc = crc32(std::as_bytes(std::span<const char>(buf)));
  require(crc == r.crc, ErrorKind::kChecksum,
          "checksum mismatch in record " + record_name(r) + " of " + payload_path_ + " (expected " + hex32(r.crc) +
              ", got " + hex32(crc) + ")");

  geometry::PointCloud cloud;
  cloud.xyz.resize(manifest_.points * 3);
  for (std::size_t k = 0; k < cloud.xyz.size(); ++k) {
    cloud.xyz[k] = static_cast<double>(from_le_bytes<float>(buf.data() + 4 * k));
  }
  if (with_label) cloud.label = r.label;
  require(geometry::max_norm(cloud) <= 1.0 + kLoadNormTolerance &&
              geometry::centroid_norm(cloud) <= kLoadNormTolerance,
          ErrorKind::kFormat, "record " + record_name(r) + " is not normalized (centered, max norm 1)");
  return cloud;
}

LabeledSet load_labeled(const std::string& manifest_path, const std::string& split, geometry::DomainTag tag) {
  DatasetReader reader(manifest_path, split);
  LabeledSet set;
  set.num_classes = reader.manifest().class_names.size();
  set.clouds.reserve(reader.size());
  for (std::size_t i = 0; i < reader.size(); ++i) {
    set.clouds.push_back(reader.read(i, true));
    set.clouds.back().domain = tag;
  }
  return set;
}

UnlabeledSet load_unlabeled(const std::string& manifest_path, const std::string& split) {
  DatasetReader reader(manifest_path, split);
  std::vector<geometry::PointCloud> clouds;
  clouds.reserve(reader.size());
  for (std::size_t i = 0; i < reader.size(); ++i) clouds.push_back(reader.read(i, false));
  return UnlabeledSet::strip(std::move(clouds));
}

std::vector<ManifestRecord> write_payload(const std::string& path, const std::string& split,
                                          const std::string& domain,
                                          std::span<const geometry::PointCloud> clouds) {
  const std::size_t points = clouds.empty() ? 0 : clouds[0].size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write payload: " + path);
  out.write(kPayloadMagic, 4);
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(points));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(clouds.size()));

  std::vector<ManifestRecord> records;
  std::uint64_t offset = kPayloadHeaderBytes;
  std::vector<char> buf(points * 12);
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const auto& c = clouds[i];
    require(c.size() == points, ErrorKind::kInvalidArgument, "write_payload: clouds must share a point count");
    require(c.label.has_value(), ErrorKind::kInvalidArgument, "write_payload: cloud without a label");
    for (std::size_t k = 0; k < c.xyz.size(); ++k) {
      const float v = static_cast<float>(c.xyz[k]);
      char le[4];
      std::memcpy(le, &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(le, le + 4);
      std::memcpy(buf.data() + 4 * k, le, 4);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    records.push_back({split, i, offset, *c.label, domain, crc32(std::as_bytes(std::span<const char>(buf)))});
    offset += buf.size();
  }
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing payload: " + path);
  return records;
}

}  // namespace pdan::data
