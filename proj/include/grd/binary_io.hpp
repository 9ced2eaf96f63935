// Copyright 2026 The grd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRD_BINARY_IO_HPP_
#define GRD_BINARY_IO_HPP_

// Little-endian primitives shared by the WAV reader and the model/feature
// file formats. Byte order is composed explicitly so files are identical on
// any host.

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "grd/error.hpp"

namespace grd::bin {

class Writer {
 public:
  void Bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  void U8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void U16(std::uint16_t v) { PutLe(v, 2); }
  void U32(std::uint32_t v) { PutLe(v, 4); }
  void U64(std::uint64_t v) { PutLe(v, 8); }
  void I16(std::int16_t v) { U16(static_cast<std::uint16_t>(v)); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<char>& buffer() const { return buf_; }

 private:
  void PutLe(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const char> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  bool Has(std::size_t n) const { return remaining() >= n; }

  std::string_view Bytes(std::size_t n) {
    Need(n);
    std::string_view out(data_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  void Skip(std::size_t n) {
    Need(n);
    pos_ += n;
  }

  std::uint8_t U8() { return static_cast<std::uint8_t>(GetLe(1)); }
  std::uint16_t U16() { return static_cast<std::uint16_t>(GetLe(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(GetLe(4)); }
  std::uint64_t U64() { return GetLe(8); }
  std::int16_t I16() { return static_cast<std::int16_t>(U16()); }
  float F32() { return std::bit_cast<float>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }

 private:
  void Need(std::size_t n) const {
    if (!Has(n)) Fail(ErrorKind::kLength, "unexpected end of data");
  }

  std::uint64_t GetLe(int n) {
    Need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const char> data_;
  std::size_t pos_ = 0;
};

inline std::vector<char> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes through a sibling temp file and renames, so readers never observe
/// a partially written file.
inline void WriteFileAtomic(const std::filesystem::path& path, std::span<const char> bytes) {
  static std::atomic<std::uint64_t> counter{0};
  static const unsigned process_nonce = std::random_device{}();
  auto tmp = path;
  tmp += ".tmp." + std::to_string(process_nonce) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorKind::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorKind::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) Fail(ErrorKind::kIo, "rename to " + path.string() + " failed: " + ec.message());
}

inline void WriteTextAtomic(const std::filesystem::path& path, std::string_view text) {
  WriteFileAtomic(path, std::span<const char>(text.data(), text.size()));
}

}  // namespace grd::bin

#endif  // GRD_BINARY_IO_HPP_
