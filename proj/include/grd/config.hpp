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

#ifndef GRD_CONFIG_HPP_
#define GRD_CONFIG_HPP_

// Pipeline configuration as `key = value` lines. Blank lines and lines
// starting with `#` are skipped; unknown keys and malformed values are
// rejected before any work starts.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>

#include <fmt/format.h>

#include "grd/binary_io.hpp"
#include "grd/error.hpp"
#include "grd/graph_frontend.hpp"

namespace grd {

struct PipelineConfig {
  FrontendConfig frontend;
  int fa_rank = 10;
  int fa_iters = 20;
  int gmm_components = 512;
  int gmm_iters = 10;
  std::uint64_t seed = 0;

  void Validate() const {
    frontend.frame.Validate();
    frontend.ceps.Validate();
    Require(frontend.frame.frame_len >= 2, ErrorKind::kInvalidArgument, "frame_len must be at least 2");
    const int spectrum = frontend.frame.frame_len;
    Require(frontend.ceps.n_ceps <= spectrum, ErrorKind::kInvalidArgument, "n_ceps must not exceed frame_len");
    Require(fa_rank >= 1, ErrorKind::kInvalidArgument, "fa_rank must be positive");
    Require(fa_rank <= frontend.ceps.n_ceps + (frontend.ceps.append_log_energy ? 1 : 0), ErrorKind::kInvalidArgument,
            "fa_rank must not exceed the feature dimension");
    Require(fa_iters >= 1, ErrorKind::kInvalidArgument, "fa_iters must be positive");
    Require(gmm_components >= 1, ErrorKind::kInvalidArgument, "gmm_components must be positive");
    Require(gmm_iters >= 1, ErrorKind::kInvalidArgument, "gmm_iters must be positive");
  }
};

namespace detail {

inline std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(std::string_view v, std::size_t line, std::string_view key) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(line, fmt::format("bad value '{}' for {}", v, key));
  }
  return out;
}

inline double ParseReal(std::string_view v, std::size_t line, std::string_view key) {
  std::string s(v);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(out)) {
    throw ParseError(line, fmt::format("bad value '{}' for {}", v, key));
  }
  return out;
}

inline bool ParseBool(std::string_view v, std::size_t line, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(line, fmt::format("bad boolean '{}' for {}", v, key));
}

}  // namespace detail

inline PipelineConfig ParseConfigText(std::string_view text) {
  PipelineConfig cfg;
  auto& fe = cfg.frontend;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = detail::Trim(raw);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected key=value");
    const auto key = std::string(detail::Trim(body.substr(0, eq)));
    const auto val = detail::Trim(body.substr(eq + 1));
    if (!seen.insert(key).second) throw ParseError(line, "duplicate key '" + key + "'");

    if (key == "frame_len") {
      fe.frame.frame_len = detail::ParseNumber<int>(val, line, key);
    } else if (key == "hop") {
      fe.frame.hop = detail::ParseNumber<int>(val, line, key);
    } else if (key == "window") {
      if (val == "hamming") fe.frame.window = WindowType::kHamming;
      else if (val == "rectangular") fe.frame.window = WindowType::kRectangular;
      else throw ParseError(line, fmt::format("unknown window '{}'", val));
    } else if (key == "topology") {
      if (val == "path") fe.topology = Topology::kPath;
      else if (val == "cycle") fe.topology = Topology::kCycle;
      else throw ParseError(line, fmt::format("unknown topology '{}'", val));
    } else if (key == "operator") {
      if (val == "laplacian") fe.op = GraphOperator::kLaplacian;
      else if (val == "adjacency") fe.op = GraphOperator::kAdjacency;
      else throw ParseError(line, fmt::format("unknown operator '{}'", val));
    } else if (key == "n_ceps") {
      fe.ceps.n_ceps = detail::ParseNumber<int>(val, line, key);
    } else if (key == "log_floor") {
      fe.ceps.log_floor = detail::ParseReal(val, line, key);
    } else if (key == "append_log_energy") {
      fe.ceps.append_log_energy = detail::ParseBool(val, line, key);
    } else if (key == "cmvn") {
      fe.cmvn = detail::ParseBool(val, line, key);
    } else if (key == "fa_rank") {
      cfg.fa_rank = detail::ParseNumber<int>(val, line, key);
    } else if (key == "fa_iters") {
      cfg.fa_iters = detail::ParseNumber<int>(val, line, key);
    } else if (key == "gmm_components") {
      cfg.gmm_components = detail::ParseNumber<int>(val, line, key);
    } else if (key == "gmm_iters") {
      cfg.gmm_iters = detail::ParseNumber<int>(val, line, key);
    } else if (key == "seed") {
      cfg.seed = detail::ParseNumber<std::uint64_t>(val, line, key);
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  cfg.Validate();
  return cfg;
}

inline PipelineConfig LoadConfig(const std::filesystem::path& path) {
  auto bytes = bin::ReadFile(path);
  return ParseConfigText(std::string_view(bytes.data(), bytes.size()));
}

inline std::string RenderConfig(const PipelineConfig& cfg) {
  const auto& fe = cfg.frontend;
  return fmt::format(
      "frame_len = {}\nhop = {}\nwindow = {}\ntopology = {}\noperator = {}\nn_ceps = {}\nlog_floor = {}\n"
      "append_log_energy = {}\ncmvn = {}\nfa_rank = {}\nfa_iters = {}\ngmm_components = {}\ngmm_iters = {}\n"
      "seed = {}\n",
      fe.frame.frame_len, fe.frame.hop, fe.frame.window == WindowType::kHamming ? "hamming" : "rectangular",
      fe.topology == Topology::kPath ? "path" : "cycle", fe.op == GraphOperator::kLaplacian ? "laplacian" : "adjacency",
      fe.ceps.n_ceps, fe.ceps.log_floor, fe.ceps.append_log_energy, fe.cmvn, cfg.fa_rank, cfg.fa_iters,
      cfg.gmm_components, cfg.gmm_iters, cfg.seed);
}

}  // namespace grd

#endif  // GRD_CONFIG_HPP_
