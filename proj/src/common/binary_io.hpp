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

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "common/error.hpp"

namespace pdan {

/// Little-endian scalar I/O independent of host byte order.
template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  os.write(buf.data(), sizeof(T));
}

template <class T>
T from_le_bytes(const char* bytes) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

/// Reads one little-endian scalar; throws kTruncated naming `what` on EOF.
template <class T>
T read_le(std::istream& is, const std::string& what) {
  std::array<char, sizeof(T)> buf;
  is.read(buf.data(), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    fail(ErrorKind::kTruncated, "truncated input while reading " + what);
  }
  return from_le_bytes<T>(buf.data());
}

}  // namespace pdan
