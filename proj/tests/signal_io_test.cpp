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

#include "grd/signal_io.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace grd {
namespace {

std::vector<char> Pcm16Wav(const std::vector<std::int16_t>& samples, int channels = 1, int rate = 16000) {
  bin::Writer w;
  const auto data = static_cast<std::uint32_t>(samples.size() * 2);
  w.Bytes("RIFF");
  w.U32(36 + data);
  w.Bytes("WAVE");
  w.Bytes("fmt ");
  w.U32(16);
  w.U16(1);
  w.U16(static_cast<std::uint16_t>(channels));
  w.U32(static_cast<std::uint32_t>(rate));
  w.U32(static_cast<std::uint32_t>(rate * 2 * channels));
  w.U16(static_cast<std::uint16_t>(2 * channels));
  w.U16(16);
  w.Bytes("data");
  w.U32(data);
  for (auto s : samples) w.I16(s);
  return w.buffer();
}

TEST(ReadWav, ScalesPcm16) {
  const auto sig = ParseWav(Pcm16Wav({0, 16384, -32768}));
  ASSERT_EQ(sig.samples.size(), 3u);
  EXPECT_EQ(sig.samples[0], 0.0);
  EXPECT_EQ(sig.samples[1], 0.5);
  EXPECT_EQ(sig.samples[2], -1.0);
  EXPECT_EQ(sig.sample_rate, 16000);
}

TEST(ReadWav, KeepsFirstChannel) {
  const auto sig = ParseWav(Pcm16Wav({100, -1, 200, -2, 300, -3}, 2, 8000));
  ASSERT_EQ(sig.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(sig.samples[2], 300 / 32768.0);
  EXPECT_EQ(sig.sample_rate, 8000);
}

TEST(ReadWav, DeterministicFromFile) {
  testing::TempDir dir;
  AudioSignal sig{{0.1, -0.2, 0.3}, 22050};
  WriteWav(sig, dir / "a.wav");
  const auto a = ReadWav(dir / "a.wav");
  const auto b = ReadWav(dir / "a.wav");
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.sample_rate, 22050);
}

TEST(ReadWav, SineRoundTripWithinHalfLsb) {
  testing::TempDir dir;
  AudioSignal sig;
  for (int t = 0; t < 16000; ++t) sig.samples.push_back(0.8 * std::sin(2 * std::numbers::pi * 1000 * t / 16000.0));
  WriteWav(sig, dir / "sine.wav");
  const auto back = ReadWav(dir / "sine.wav");
  ASSERT_EQ(back.samples.size(), sig.samples.size());
  double worst = 0;
  for (std::size_t i = 0; i < sig.samples.size(); ++i) worst = std::max(worst, std::abs(back.samples[i] - sig.samples[i]));
  EXPECT_LT(worst, std::ldexp(1.0, -15));
}

TEST(ReadWav, Float32RoundTrip) {
  AudioSignal sig{{0.25, -0.75, 0.125}, 16000};
  const auto back = ParseWav(EncodeWav(sig, WavEncoding::kFloat32));
  EXPECT_EQ(back.samples, sig.samples);
}

TEST(ReadWav, SkipsUnknownChunks) {
  auto bytes = Pcm16Wav({1, 2});
  // Insert a LIST chunk with odd size (padded) between fmt and data.
  std::vector<char> list = {'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, list.begin(), list.end());
  const auto sig = ParseWav(bytes);
  ASSERT_EQ(sig.samples.size(), 2u);
  EXPECT_DOUBLE_EQ(sig.samples[1], 2 / 32768.0);
}

TEST(ReadWav, MalformedHeaderIsFormatError) {
  auto bytes = Pcm16Wav({1, 2, 3});
  bytes[0] = 'X';
  testing::ExpectErrorKind([&] { ParseWav(bytes); }, ErrorKind::kFormat);
  testing::ExpectErrorKind([&] { ParseWav(std::vector<char>(bytes.begin(), bytes.begin() + 8)); }, ErrorKind::kFormat);
}

TEST(ReadWav, TruncatedDataIsFormatError) {
  auto bytes = Pcm16Wav({1, 2, 3});
  bytes.resize(bytes.size() - 2);
  testing::ExpectErrorKind([&] { ParseWav(bytes); }, ErrorKind::kFormat);
}

TEST(ReadWav, Pcm24IsUnsupported) {
  auto bytes = Pcm16Wav({1, 2, 3});
  bytes[34] = 24;  // bits per sample
  testing::ExpectErrorKind([&] { ParseWav(bytes); }, ErrorKind::kUnsupported);
}

TEST(FrameSignal, StartsAtMultiplesOfHop) {
  AudioSignal sig;
  for (int i = 0; i < 1000; ++i) sig.samples.push_back(i / 1000.0);
  const auto frames = FrameSignal(sig, {400, 200, WindowType::kRectangular});
  ASSERT_EQ(frames.rows(), 4);
  ASSERT_EQ(frames.cols(), 400);
  for (int t = 0; t < 4; ++t) EXPECT_DOUBLE_EQ(frames(t, 0), t * 200 / 1000.0);
}

TEST(FrameSignal, WholeSignalIsOneFrame) {
  AudioSignal sig{{0.1, 0.2, 0.3, 0.4}, 16000};
  const auto frames = FrameSignal(sig, {4, 4, WindowType::kRectangular});
  ASSERT_EQ(frames.rows(), 1);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(frames(0, i), sig.samples[i]);
}

TEST(FrameSignal, HammingOnOnesMatchesClosedFormSum) {
  const int n = 512;
  AudioSignal sig{std::vector<double>(n, 1.0), 16000};
  const auto frames = FrameSignal(sig, {n, n, WindowType::kHamming});
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(frames(0, i), 0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / (n - 1)), 1e-15);
  }
  // sum_{i<n} cos(2 pi i / (n-1)) = 1: a full period plus the i = n-1 term.
  EXPECT_NEAR(frames.row(0).sum(), 0.54 * n - 0.46, 1e-9);
}

TEST(FrameSignal, PropertyFrameCountAndStarts) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 64)(rng);
    const int hop = std::uniform_int_distribution<int>(1, n)(rng);
    const int len = std::uniform_int_distribution<int>(n, 400)(rng);
    AudioSignal sig;
    for (int i = 0; i < len; ++i) sig.samples.push_back(i);
    const auto frames = FrameSignal(sig, {n, hop, WindowType::kRectangular});
    EXPECT_EQ(frames.rows(), (len - n) / hop + 1);
    EXPECT_EQ(frames.cols(), n);
    for (Eigen::Index t = 0; t < frames.rows(); ++t) EXPECT_EQ(frames(t, 0), static_cast<double>(t * hop));
    EXPECT_LE((frames.rows() - 1) * hop + n, len);
  }
}

TEST(FrameSignal, Errors) {
  AudioSignal sig{std::vector<double>(10, 0.0), 16000};
  testing::ExpectErrorKind([&] { FrameSignal(sig, {11, 5, WindowType::kHamming}); }, ErrorKind::kTooShort);
  testing::ExpectErrorKind([&] { FrameSignal(sig, {4, 5, WindowType::kHamming}); }, ErrorKind::kInvalidArgument);
  testing::ExpectErrorKind([&] { FrameSignal(sig, {4, 0, WindowType::kHamming}); }, ErrorKind::kInvalidArgument);
}

TEST(ParseProtocol, ParsesEntries) {
  const auto entries = ParseProtocolText("# header\nu1 genuine p1\n\nu2 spoof\n");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0], (ProtocolEntry{"u1", Label::kGenuine, "p1"}));
  EXPECT_EQ(entries[1], (ProtocolEntry{"u2", Label::kSpoof, std::nullopt}));
}

TEST(ParseProtocol, UnknownLabelReportsLine) {
  try {
    ParseProtocolText("u2 bonafide\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("bonafide"), std::string::npos);
  }
}

TEST(ParseProtocol, DuplicateIdNamed) {
  try {
    ParseProtocolText("a genuine\nb spoof\na spoof\n");
    FAIL() << "expected a duplicate error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDuplicate);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(ParseProtocol, RenderParseIdentity) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProtocolEntry> entries;
    const int n = std::uniform_int_distribution<int>(0, 20)(rng);
    for (int i = 0; i < n; ++i) {
      ProtocolEntry e{"utt" + std::to_string(trial) + "_" + std::to_string(i),
                      rng() % 2 ? Label::kGenuine : Label::kSpoof, std::nullopt};
      if (rng() % 2) e.pair_id = "p" + std::to_string(rng() % 5);
      entries.push_back(e);
    }
    EXPECT_EQ(ParseProtocolText(RenderProtocol(entries)), entries);
  }
}

TEST(FeatureFile, EmptyMatrixRoundTrips) {
  FeatureMatrix m{FeatureKind::kGflc, RowMatrix(0, 7)};
  const auto back = DecodeFeatures(EncodeFeatures(m));
  EXPECT_EQ(back.kind, FeatureKind::kGflc);
  EXPECT_EQ(back.frames(), 0);
  EXPECT_EQ(back.dim(), 7);
}

TEST(FeatureFile, KnownConstantsRoundTrip) {
  FeatureMatrix m{FeatureKind::kGfdcc, RowMatrix(2, 3)};
  m.rows << 1.0, -2.5, 0.125, 1e-3f, 3.0e20f, -0.0;
  testing::TempDir dir;
  WriteFeatures(m, dir / "m.feat");
  EXPECT_EQ(ReadFeatures(dir / "m.feat"), m);
}

TEST(FeatureFile, LayoutIsLittleEndianFloat32) {
  FeatureMatrix m{FeatureKind::kGflc, RowMatrix(1, 1)};
  m.rows(0, 0) = 1.0;
  const auto bytes = EncodeFeatures(m);
  const std::vector<unsigned char> expect = {'G', 'F', 'A', 'T', 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0x00, 0x00, 0x80, 0x3f};
  ASSERT_EQ(bytes.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[i]), expect[i]) << i;
}

TEST(FeatureFile, RandomRoundTripIsBitExact) {
  std::mt19937 rng(11);
  std::normal_distribution<float> normal(0.0f, 10.0f);
  FeatureMatrix m{FeatureKind::kGfcc, RowMatrix(100, 20)};
  for (Eigen::Index i = 0; i < m.rows.size(); ++i) m.rows.data()[i] = normal(rng);
  const auto back = DecodeFeatures(EncodeFeatures(m));
  EXPECT_EQ((back.rows - m.rows).cwiseAbs().maxCoeff(), 0.0);
  // Re-encoding is byte-identical as well.
  EXPECT_EQ(EncodeFeatures(back), EncodeFeatures(m));
}

TEST(FeatureFile, Errors) {
  FeatureMatrix m{FeatureKind::kGfcc, RowMatrix::Ones(2, 2)};
  auto bytes = EncodeFeatures(m);
  auto bad = bytes;
  bad[0] = 'X';
  testing::ExpectErrorKind([&] { DecodeFeatures(bad); }, ErrorKind::kFormat);
  bad = bytes;
  bad[4] = 2;
  testing::ExpectErrorKind([&] { DecodeFeatures(bad); }, ErrorKind::kFormat);
  bad = bytes;
  bad.pop_back();
  testing::ExpectErrorKind([&] { DecodeFeatures(bad); }, ErrorKind::kLength);
  m.rows(0, 0) = std::numeric_limits<double>::infinity();
  testing::ExpectErrorKind([&] { EncodeFeatures(m); }, ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace grd
