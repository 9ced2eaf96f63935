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

#ifndef GRD_SIGNAL_IO_HPP_
#define GRD_SIGNAL_IO_HPP_

// Audio ingestion, framing, trial protocols and the GFAT feature file.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "grd/binary_io.hpp"
#include "grd/error.hpp"
#include "grd/feature_matrix.hpp"

namespace grd {

struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 16000;
};

enum class WavEncoding { kPcm16, kFloat32 };

namespace detail {

inline constexpr std::uint16_t kWavPcm = 1;
inline constexpr std::uint16_t kWavFloat = 3;
inline constexpr std::uint16_t kWavExtensible = 0xFFFE;

}  // namespace detail

/// Decodes an in-memory RIFF/WAVE image. Only channel 0 is kept.
inline AudioSignal ParseWav(std::span<const char> bytes) {
  bin::Reader r(bytes);
  auto need = [&](std::size_t n) {
    if (!r.Has(n)) Fail(ErrorKind::kFormat, "truncated WAV header");
  };
  need(12);
  if (r.Bytes(4) != "RIFF") Fail(ErrorKind::kFormat, "missing RIFF tag");
  r.U32();
  if (r.Bytes(4) != "WAVE") Fail(ErrorKind::kFormat, "missing WAVE tag");

  std::optional<std::uint16_t> format;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;

  while (r.remaining() >= 8) {
    std::string_view id = r.Bytes(4);
    std::uint32_t size = r.U32();
    if (!r.Has(size)) Fail(ErrorKind::kFormat, "chunk '" + std::string(id) + "' overruns file");
    if (id == "fmt ") {
      if (size < 16) Fail(ErrorKind::kFormat, "fmt chunk too small");
      bin::Reader f(std::span<const char>(bytes.data() + r.position(), size));
      format = f.U16();
      channels = f.U16();
      rate = f.U32();
      f.U32();  // byte rate
      block_align = f.U16();
      bits = f.U16();
      if (*format == detail::kWavExtensible) {
        if (size < 40) Fail(ErrorKind::kFormat, "extensible fmt chunk too small");
        f.Skip(2 + 2 + 4);  // cbSize, valid bits, channel mask
        format = f.U16();   // leading two bytes of the subformat GUID
      }
      r.Skip(size);
    } else if (id == "data") {
      if (!format) Fail(ErrorKind::kFormat, "data chunk before fmt chunk");
      if (channels == 0) Fail(ErrorKind::kFormat, "zero channels");
      if (rate == 0) Fail(ErrorKind::kFormat, "zero sample rate");
      const bool pcm16 = *format == detail::kWavPcm && bits == 16;
      const bool f32 = *format == detail::kWavFloat && bits == 32;
      if (!pcm16 && !f32) {
        Fail(ErrorKind::kUnsupported, "WAV format " + std::to_string(*format) + " with " +
                                          std::to_string(bits) + " bits per sample");
      }
      const std::size_t width = bits / 8;
      if (block_align != width * channels) Fail(ErrorKind::kFormat, "inconsistent block alignment");
      if (size % block_align != 0) Fail(ErrorKind::kFormat, "data chunk is not a whole number of frames");

      AudioSignal sig;
      sig.sample_rate = static_cast<int>(rate);
      const std::size_t n = size / block_align;
      sig.samples.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        double v = pcm16 ? r.I16() / 32768.0 : static_cast<double>(r.F32());
        if (!std::isfinite(v)) Fail(ErrorKind::kFormat, "non-finite sample");
        sig.samples.push_back(v);
        r.Skip(width * (channels - 1));
      }
      return sig;
    } else {
      r.Skip(size);
    }
    if (size % 2 == 1 && r.remaining() > 0) r.Skip(1);
  }
  Fail(ErrorKind::kFormat, format ? "missing data chunk" : "missing fmt chunk");
}

inline AudioSignal ReadWav(const std::filesystem::path& path) {
  auto bytes = bin::ReadFile(path);
  return ParseWav(bytes);
}

inline std::vector<char> EncodeWav(const AudioSignal& sig, WavEncoding enc) {
  Require(sig.sample_rate > 0, ErrorKind::kInvalidArgument, "sample rate must be positive");
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(sig.samples.size() * (bits / 8));
  bin::Writer w;
  w.Bytes("RIFF");
  w.U32(36 + data_bytes);
  w.Bytes("WAVE");
  w.Bytes("fmt ");
  w.U32(16);
  w.U16(enc == WavEncoding::kPcm16 ? detail::kWavPcm : detail::kWavFloat);
  w.U16(1);
  w.U32(static_cast<std::uint32_t>(sig.sample_rate));
  w.U32(static_cast<std::uint32_t>(sig.sample_rate) * (bits / 8));
  w.U16(bits / 8);
  w.U16(bits);
  w.Bytes("data");
  w.U32(data_bytes);
  for (double x : sig.samples) {
    if (enc == WavEncoding::kPcm16) {
      double q = std::clamp(std::nearbyint(x * 32768.0), -32768.0, 32767.0);
      w.I16(static_cast<std::int16_t>(q));
    } else {
      w.F32(static_cast<float>(x));
    }
  }
  return w.buffer();
}

inline void WriteWav(const AudioSignal& sig, const std::filesystem::path& path,
                     WavEncoding enc = WavEncoding::kPcm16) {
  bin::WriteFileAtomic(path, EncodeWav(sig, enc));
}

// ---------------------------------------------------------------------------
// Framing

enum class WindowType { kRectangular, kHamming };

struct FrameConfig {
  int frame_len = 512;
  int hop = 256;
  WindowType window = WindowType::kHamming;

  void Validate() const {
    Require(frame_len > 0, ErrorKind::kInvalidArgument, "frame_len must be positive");
    Require(hop > 0 && hop <= frame_len, ErrorKind::kInvalidArgument, "hop must satisfy 0 < hop <= frame_len");
  }
};

/// Symmetric window of length n.
inline Vector MakeWindow(WindowType type, int n) {
  Vector w = Vector::Ones(n);
  if (type == WindowType::kHamming && n > 1) {
    for (int i = 0; i < n; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    }
  }
  return w;
}

/// Frame t covers samples [t*hop, t*hop + frame_len); a trailing partial frame
/// is dropped. Rows of the result are windowed frames.
inline RowMatrix FrameSignal(const AudioSignal& sig, const FrameConfig& cfg) {
  cfg.Validate();
  const auto len = static_cast<long long>(sig.samples.size());
  if (len < cfg.frame_len) {
    Fail(ErrorKind::kTooShort, "signal has " + std::to_string(len) + " samples, frame needs " +
                                   std::to_string(cfg.frame_len));
  }
  const auto count = static_cast<Eigen::Index>((len - cfg.frame_len) / cfg.hop + 1);
  const Vector window = MakeWindow(cfg.window, cfg.frame_len);
  RowMatrix frames(count, cfg.frame_len);
  for (Eigen::Index t = 0; t < count; ++t) {
    const double* start = sig.samples.data() + t * cfg.hop;
    for (int i = 0; i < cfg.frame_len; ++i) frames(t, i) = start[i] * window[i];
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Trial protocols: `utterance_id label [pair_id]`, `#` starts a comment line.

enum class Label { kGenuine, kSpoof };

constexpr std::string_view LabelName(Label l) { return l == Label::kGenuine ? "genuine" : "spoof"; }

struct ProtocolEntry {
  std::string utterance_id;
  Label label = Label::kGenuine;
  std::optional<std::string> pair_id;

  friend bool operator==(const ProtocolEntry&, const ProtocolEntry&) = default;
};

inline std::vector<ProtocolEntry> ParseProtocolText(std::string_view text) {
  std::vector<ProtocolEntry> entries;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(std::move(t));
    if (tok.empty() || tok[0].starts_with('#')) continue;
    if (tok.size() < 2) throw ParseError(lineno, "expected `utterance_id label [pair_id]`");
    if (tok.size() > 3) throw ParseError(lineno, "unexpected trailing field '" + tok[3] + "'");
    ProtocolEntry e;
    e.utterance_id = tok[0];
    if (tok[1] == "genuine") {
      e.label = Label::kGenuine;
    } else if (tok[1] == "spoof") {
      e.label = Label::kSpoof;
    } else {
      throw ParseError(lineno, "unknown label '" + tok[1] + "'");
    }
    if (tok.size() == 3) e.pair_id = tok[2];
    if (!seen.insert(e.utterance_id).second) {
      Fail(ErrorKind::kDuplicate, "utterance id '" + e.utterance_id + "' (line " + std::to_string(lineno) + ")");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<ProtocolEntry> ParseProtocol(const std::filesystem::path& path) {
  auto bytes = bin::ReadFile(path);
  return ParseProtocolText(std::string_view(bytes.data(), bytes.size()));
}

inline std::string RenderProtocol(std::span<const ProtocolEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.utterance_id;
    out += ' ';
    out += LabelName(e.label);
    if (e.pair_id) {
      out += ' ';
      out += *e.pair_id;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// GFAT feature files: magic, u32 version, u8 kind, u32 T, u32 D, then T*D
// little-endian float32 values in row-major order.

inline constexpr std::string_view kFeatureMagic = "GFAT";
inline constexpr std::uint32_t kFeatureVersion = 1;

inline std::vector<char> EncodeFeatures(const FeatureMatrix& m) {
  bin::Writer w;
  w.Bytes(kFeatureMagic);
  w.U32(kFeatureVersion);
  w.U8(static_cast<std::uint8_t>(m.kind));
  w.U32(static_cast<std::uint32_t>(m.frames()));
  w.U32(static_cast<std::uint32_t>(m.dim()));
  for (Eigen::Index t = 0; t < m.frames(); ++t) {
    for (Eigen::Index d = 0; d < m.dim(); ++d) {
      float v = static_cast<float>(m.rows(t, d));
      if (!std::isfinite(v)) Fail(ErrorKind::kInvalidArgument, "feature value not representable as finite float32");
      w.F32(v);
    }
  }
  return w.buffer();
}

inline FeatureMatrix DecodeFeatures(std::span<const char> bytes) {
  bin::Reader r(bytes);
  if (!r.Has(17)) Fail(ErrorKind::kFormat, "feature header truncated");
  if (r.Bytes(4) != kFeatureMagic) Fail(ErrorKind::kFormat, "bad feature file magic");
  if (auto v = r.U32(); v != kFeatureVersion) Fail(ErrorKind::kFormat, "unsupported feature file version " + std::to_string(v));
  auto kind = r.U8();
  if (kind > 3) Fail(ErrorKind::kFormat, "unknown feature kind " + std::to_string(kind));
  const std::uint64_t frames = r.U32();
  const std::uint64_t dim = r.U32();
  const std::uint64_t payload = frames * dim * 4;
  if (r.remaining() < payload) Fail(ErrorKind::kLength, "payload truncated");
  if (r.remaining() > payload) Fail(ErrorKind::kFormat, "trailing bytes after payload");
  FeatureMatrix m;
  m.kind = static_cast<FeatureKind>(kind);
  m.rows.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
  for (Eigen::Index t = 0; t < m.frames(); ++t) {
    for (Eigen::Index d = 0; d < m.dim(); ++d) {
      float v = r.F32();
      if (!std::isfinite(v)) Fail(ErrorKind::kFormat, "non-finite feature value");
      m.rows(t, d) = v;
    }
  }
  return m;
}

inline void WriteFeatures(const FeatureMatrix& m, const std::filesystem::path& path) {
  bin::WriteFileAtomic(path, EncodeFeatures(m));
}

inline FeatureMatrix ReadFeatures(const std::filesystem::path& path) {
  auto bytes = bin::ReadFile(path);
  return DecodeFeatures(bytes);
}

}  // namespace grd

#endif  // GRD_SIGNAL_IO_HPP_
