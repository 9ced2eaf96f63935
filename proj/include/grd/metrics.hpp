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

#ifndef GRD_METRICS_HPP_
#define GRD_METRICS_HPP_

// Equal error rate and DET operating points. Higher scores mean "more
// genuine". At threshold t a genuine trial is rejected when score < t and a
// spoof trial is accepted when score >= t.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "grd/error.hpp"
#include "grd/log.hpp"
#include "grd/signal_io.hpp"

namespace grd {

struct Trial {
  double score = 0;
  Label label = Label::kGenuine;
};

struct OperatingPoint {
  double threshold = 0;
  double far = 0;  // spoof accepted
  double frr = 0;  // genuine rejected
};

struct EvalResult {
  double eer = 0;
  double threshold = 0;
  std::size_t n_genuine = 0;
  std::size_t n_spoof = 0;
};

/// Operating points at the lowest score, every midpoint between adjacent
/// distinct scores, and one step past the highest score. FAR is
/// nonincreasing and FRR nondecreasing along the list.
inline std::vector<OperatingPoint> DetPoints(std::span<const Trial> trials) {
  std::vector<double> gen;
  std::vector<double> spf;
  for (const auto& t : trials) {
    if (!std::isfinite(t.score)) Fail(ErrorKind::kInvalidArgument, "non-finite trial score");
    (t.label == Label::kGenuine ? gen : spf).push_back(t.score);
  }
  if (gen.empty() || spf.empty()) Fail(ErrorKind::kInvalidArgument, "EER needs at least one genuine and one spoof trial");
  std::sort(gen.begin(), gen.end());
  std::sort(spf.begin(), spf.end());

  std::vector<double> scores;
  scores.reserve(trials.size());
  std::merge(gen.begin(), gen.end(), spf.begin(), spf.end(), std::back_inserter(scores));
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  std::vector<double> thresholds;
  thresholds.reserve(scores.size() + 1);
  thresholds.push_back(scores.front());
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) thresholds.push_back(0.5 * (scores[i] + scores[i + 1]));
  thresholds.push_back(scores.back() + std::max(1.0, std::abs(scores.back())));

  const double ng = static_cast<double>(gen.size());
  const double ns = static_cast<double>(spf.size());
  std::vector<OperatingPoint> points;
  points.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto rejected = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
    const auto accepted = spf.end() - std::lower_bound(spf.begin(), spf.end(), t);
    points.push_back({t, static_cast<double>(accepted) / ns, static_cast<double>(rejected) / ng});
  }
  return points;
}

/// EER by linear interpolation between the two adjacent operating points
/// where FAR - FRR changes sign.
inline EvalResult ComputeEer(std::span<const Trial> trials) {
  const auto points = DetPoints(trials);
  EvalResult res;
  for (const auto& t : trials) (t.label == Label::kGenuine ? res.n_genuine : res.n_spoof)++;

  // The first point has FRR = 0, the last FAR = 0, so a crossing exists.
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double gap = points[k].far - points[k].frr;
    if (gap > 0) continue;
    if (gap == 0 || k == 0) {
      res.eer = points[k].far;
      res.threshold = points[k].threshold;
    } else {
      const auto& a = points[k - 1];
      const auto& b = points[k];
      const double ga = a.far - a.frr;
      const double alpha = ga / (ga - gap);
      res.eer = a.far + alpha * (b.far - a.far);
      res.threshold = a.threshold + alpha * (b.threshold - a.threshold);
    }
    break;
  }
  if (res.eer > 0.5) Log().warn("EER {:.4f} above 0.5: scores look anti-correlated with labels", res.eer);
  return res;
}

/// `EER=<percent> threshold=<value>`.
inline std::string FormatEerReport(const EvalResult& r) {
  return fmt::format("EER={:.4f} threshold={:.6f}", 100.0 * r.eer, r.threshold);
}

// ---------------------------------------------------------------------------
// Score files: `utterance_id score` per line, six decimals.

struct TrialScore {
  std::string utterance_id;
  double score = 0;
};

inline std::string RenderScores(std::span<const TrialScore> scores) {
  std::string out;
  for (const auto& s : scores) out += fmt::format("{} {:.6f}\n", s.utterance_id, s.score);
  return out;
}

inline std::vector<TrialScore> ParseScoresText(std::string_view text) {
  std::vector<TrialScore> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    TrialScore s;
    if (!(fields >> s.utterance_id) || s.utterance_id.starts_with('#')) continue;
    std::string value;
    if (!(fields >> value)) throw ParseError(lineno, "missing score");
    std::size_t used = 0;
    try {
      s.score = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || !std::isfinite(s.score)) throw ParseError(lineno, "bad score '" + value + "'");
    if (std::string extra; fields >> extra) throw ParseError(lineno, "unexpected trailing field '" + extra + "'");
    out.push_back(std::move(s));
  }
  return out;
}

/// Attaches protocol labels to scores by utterance id. Scores without a
/// protocol entry are an error; protocol entries without scores are ignored.
inline std::vector<Trial> JoinTrials(std::span<const TrialScore> scores, std::span<const ProtocolEntry> protocol) {
  std::unordered_map<std::string, Label> labels;
  for (const auto& e : protocol) labels.emplace(e.utterance_id, e.label);
  std::vector<Trial> trials;
  trials.reserve(scores.size());
  for (const auto& s : scores) {
    auto it = labels.find(s.utterance_id);
    if (it == labels.end()) Fail(ErrorKind::kInvalidArgument, "score for '" + s.utterance_id + "' has no protocol entry");
    trials.push_back({s.score, it->second});
  }
  return trials;
}

}  // namespace grd

#endif  // GRD_METRICS_HPP_
