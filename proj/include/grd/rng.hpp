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

#ifndef GRD_RNG_HPP_
#define GRD_RNG_HPP_

// Seed discipline: every run has one root seed. Components never reuse it
// directly; they derive a child seed from (parent, name) with DeriveSeed, so
// adding a consumer never shifts the stream seen by another one. Engines are
// std::mt19937_64 seeded with the derived value.

#include <cstdint>
#include <random>
#include <string_view>

namespace grd {

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t Fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::string_view name) {
  return SplitMix64(parent ^ SplitMix64(Fnv1a(name)));
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t index) {
  return SplitMix64(parent ^ SplitMix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng MakeRng(std::uint64_t parent, std::string_view name) { return Rng(DeriveSeed(parent, name)); }

}  // namespace grd

#endif  // GRD_RNG_HPP_
