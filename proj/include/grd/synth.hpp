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

#ifndef GRD_SYNTH_HPP_
#define GRD_SYNTH_HPP_

// Synthetic genuine/replay corpus. Genuine utterances are voiced harmonic
// sources shaped by random formants plus a breath-noise component. A replay
// is the genuine utterance after a random playback delay, passed through a
// random FIR device/room response and mixed with white noise at a set SNR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "grd/error.hpp"
#include "grd/rng.hpp"
#include "grd/signal_io.hpp"

namespace grd {

struct SyntheticReplaySpec {
  int ir_length = 64;
  /// Infinity disables the additive noise.
  double snr_db = 20.0;
  int n_pairs = 200;
  /// Evaluation utterances, half genuine and half replay.
  int n_eval = 100;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  double min_seconds = 0.5;
  double max_seconds = 0.8;
  /// Longest silent lead-in before the replayed copy, in samples.
  int max_delay = 800;

  void Validate() const {
    Require(ir_length >= 1, ErrorKind::kInvalidArgument, "ir_length must be at least 1");
    Require(n_pairs >= 1, ErrorKind::kInvalidArgument, "n_pairs must be at least 1");
    Require(n_eval >= 2 && n_eval % 2 == 0, ErrorKind::kInvalidArgument, "n_eval must be a positive even count");
    Require(!std::isnan(snr_db), ErrorKind::kInvalidArgument, "snr_db is NaN");
    Require(sample_rate > 0, ErrorKind::kInvalidArgument, "sample_rate must be positive");
    Require(min_seconds > 0 && max_seconds >= min_seconds, ErrorKind::kInvalidArgument, "bad duration range");
    Require(max_delay >= 0, ErrorKind::kInvalidArgument, "max_delay must be non-negative");
  }
};

/// Genuine utterance: harmonics of a gliding f0 weighted by three random
/// formant bumps, a resonant breath-noise component, and a syllabic envelope.
inline AudioSignal SynthesizeGenuine(Rng& rng, int sample_rate, double seconds) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double fs = sample_rate;
  const auto n = static_cast<std::size_t>(seconds * fs);
  const double f0 = 90.0 + 160.0 * u(rng);
  const double glide = 0.15 * (u(rng) - 0.5);
  const double vibrato_rate = 4.0 + 3.0 * u(rng);
  const double syllable_rate = 3.0 + 3.0 * u(rng);
  const double syllable_phase = 2.0 * std::numbers::pi * u(rng);
  const double nyquist = 0.5 * fs;

  struct Formant {
    double centre, width, gain;
  };
  Formant formants[3];
  const double lows[3] = {250, 800, 1800};
  const double spans[3] = {650, 1400, 2200};
  for (int i = 0; i < 3; ++i) {
    formants[i] = {lows[i] + spans[i] * u(rng), 80 + 200 * u(rng), std::pow(0.5, i) * (0.5 + u(rng))};
  }
  auto envelope = [&](double f) {
    double a = 0.02;
    for (const auto& fm : formants) a += fm.gain * std::exp(-0.5 * std::pow((f - fm.centre) / fm.width, 2));
    return a / (1.0 + f / 4000.0);
  };

  AudioSignal sig;
  sig.sample_rate = sample_rate;
  sig.samples.assign(n, 0.0);
  const int harmonics = static_cast<int>(0.9 * nyquist / (f0 * 1.1));
  std::vector<double> phase(static_cast<std::size_t>(harmonics) + 1);
  for (auto& p : phase) p = 2.0 * std::numbers::pi * u(rng);
  std::vector<double> amp(phase.size());
  for (int h = 1; h <= harmonics; ++h) amp[static_cast<std::size_t>(h)] = envelope(h * f0);

  double base_phase = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double time = t / fs;
    const double f = f0 * (1.0 + glide * time / seconds + 0.01 * std::sin(2 * std::numbers::pi * vibrato_rate * time));
    base_phase += 2.0 * std::numbers::pi * f / fs;
    double v = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      v += amp[static_cast<std::size_t>(h)] * std::sin(h * base_phase + phase[static_cast<std::size_t>(h)]);
    }
    sig.samples[t] = v;
  }

  // Breath noise through a two-pole resonator at the first formant.
  const double r = 0.97;
  const double theta = 2.0 * std::numbers::pi * formants[0].centre / fs;
  const double a1 = 2 * r * std::cos(theta);
  const double a2 = -r * r;
  double y1 = 0, y2 = 0, noise_energy = 0, voiced_energy = 0;
  std::vector<double> breath(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double y = normal(rng) + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    breath[t] = y;
    noise_energy += y * y;
    voiced_energy += sig.samples[t] * sig.samples[t];
  }
  const double breath_gain = 0.15 * std::sqrt(voiced_energy / std::max(noise_energy, 1e-30));
  for (std::size_t t = 0; t < n; ++t) {
    const double time = t / fs;
    const double env = 0.55 + 0.45 * std::sin(2 * std::numbers::pi * syllable_rate * time + syllable_phase);
    sig.samples[t] = env * (sig.samples[t] + breath_gain * breath[t]);
  }

  const double peak = std::max(1e-12, std::abs(*std::max_element(
                                          sig.samples.begin(), sig.samples.end(),
                                          [](double a, double b) { return std::abs(a) < std::abs(b); })));
  for (auto& s : sig.samples) s *= 0.5 / peak;
  return sig;
}

/// Random device/room response: a unit direct path followed by decaying
/// Gaussian taps. Length 1 gives the identity channel.
inline std::vector<double> RandomImpulseResponse(Rng& rng, int length) {
  Require(length >= 1, ErrorKind::kInvalidArgument, "impulse response needs at least one tap");
  std::normal_distribution<double> normal;
  std::vector<double> ir(static_cast<std::size_t>(length));
  ir[0] = 1.0;
  const double decay = std::max(1.0, length / 4.0);
  for (int k = 1; k < length; ++k) ir[static_cast<std::size_t>(k)] = 0.6 * normal(rng) * std::exp(-k / decay);
  return ir;
}

/// Causal convolution truncated to the input length.
inline std::vector<double> ConvolveSame(const std::vector<double>& x, const std::vector<double>& h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t taps = std::min(h.size(), t + 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += h[k] * x[t - k];
    y[t] = acc;
  }
  return y;
}

struct ReplayRendering {
  std::vector<double> clean;  // delayed and filtered, before noise
  AudioSignal replay;
};

inline ReplayRendering RenderReplay(const AudioSignal& genuine, const std::vector<double>& ir, int delay,
                                    double snr_db, Rng& rng) {
  ReplayRendering out;
  std::vector<double> delayed(static_cast<std::size_t>(delay), 0.0);
  delayed.insert(delayed.end(), genuine.samples.begin(), genuine.samples.end());
  out.clean = ConvolveSame(delayed, ir);
  out.replay.sample_rate = genuine.sample_rate;
  out.replay.samples = out.clean;
  if (std::isfinite(snr_db)) {
    std::normal_distribution<double> normal;
    std::vector<double> noise(out.clean.size());
    double noise_energy = 0, signal_energy = 0;
    for (std::size_t t = 0; t < noise.size(); ++t) {
      noise[t] = normal(rng);
      noise_energy += noise[t] * noise[t];
      signal_energy += out.clean[t] * out.clean[t];
    }
    // Scale the realised noise so the mixture hits the requested SNR exactly.
    const double gain = std::sqrt(signal_energy / (std::max(noise_energy, 1e-30) * std::pow(10.0, snr_db / 10.0)));
    for (std::size_t t = 0; t < noise.size(); ++t) out.replay.samples[t] += gain * noise[t];
  }
  double peak = 0;
  for (double v : out.replay.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.99) {
    const double scale = 0.99 / peak;
    for (auto& v : out.replay.samples) v *= scale;
    for (auto& v : out.clean) v *= scale;
  }
  return out;
}

struct SyntheticUtterance {
  std::string id;
  AudioSignal audio;
};

struct SyntheticCorpus {
  std::vector<SyntheticUtterance> utterances;
  std::vector<ProtocolEntry> train;
  std::vector<ProtocolEntry> eval;
};

/// Training and evaluation pairs draw content, delays, impulse responses and
/// noise from separate derived streams, so no evaluation response is ever
/// seen in training.
inline SyntheticCorpus GenerateSyntheticCorpus(const SyntheticReplaySpec& spec) {
  spec.Validate();
  SyntheticCorpus corpus;
  auto make_split = [&](std::string_view split, int pairs, std::vector<ProtocolEntry>& protocol) {
    const std::uint64_t split_seed = DeriveSeed(spec.seed, split);
    for (int p = 0; p < pairs; ++p) {
      Rng rng(DeriveSeed(split_seed, static_cast<std::uint64_t>(p)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double seconds = spec.min_seconds + (spec.max_seconds - spec.min_seconds) * u(rng);
      const int delay = std::uniform_int_distribution<int>(0, spec.max_delay)(rng);
      Rng content_rng(DeriveSeed(rng(), "content"));
      Rng ir_rng(DeriveSeed(rng(), "impulse-response"));
      Rng noise_rng(DeriveSeed(rng(), "noise"));
      AudioSignal genuine = SynthesizeGenuine(content_rng, spec.sample_rate, seconds);
      const auto ir = RandomImpulseResponse(ir_rng, spec.ir_length);
      auto rendering = RenderReplay(genuine, ir, delay, spec.snr_db, noise_rng);

      const std::string pair_id = fmt::format("{}{:04d}", split == "train" ? 'T' : 'E', p);
      corpus.utterances.push_back({pair_id + "_g", std::move(genuine)});
      corpus.utterances.push_back({pair_id + "_s", std::move(rendering.replay)});
      protocol.push_back({pair_id + "_g", Label::kGenuine, pair_id});
      protocol.push_back({pair_id + "_s", Label::kSpoof, pair_id});
    }
  };
  make_split("train", spec.n_pairs, corpus.train);
  make_split("eval", spec.n_eval / 2, corpus.eval);
  return corpus;
}

}  // namespace grd

#endif  // GRD_SYNTH_HPP_
