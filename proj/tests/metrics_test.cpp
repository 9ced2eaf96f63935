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

#include "grd/metrics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace grd {
namespace {

std::vector<Trial> Trials(const std::vector<double>& genuine, const std::vector<double>& spoof) {
  std::vector<Trial> out;
  for (double g : genuine) out.push_back({g, Label::kGenuine});
  for (double s : spoof) out.push_back({s, Label::kSpoof});
  return out;
}

double Eer(const std::vector<double>& genuine, const std::vector<double>& spoof) {
  return ComputeEer(Trials(genuine, spoof)).eer;
}

TEST(Eer, PerfectSeparation) {
  const auto r = ComputeEer(Trials({2, 3}, {0, 1}));
  EXPECT_EQ(r.eer, 0.0);
  EXPECT_EQ(r.n_genuine, 2u);
  EXPECT_EQ(r.n_spoof, 2u);
  EXPECT_EQ(FormatEerReport(r), "EER=0.0000 threshold=1.500000");
}

TEST(Eer, TotalInversion) { EXPECT_EQ(Eer({0, 1}, {2, 3}), 1.0); }

TEST(Eer, Interleaved) { EXPECT_DOUBLE_EQ(Eer({1, 3}, {0, 2}), 0.5); }

TEST(Eer, AllTiedIsTheMidpoint) { EXPECT_DOUBLE_EQ(Eer({1, 1}, {1}), 0.5); }

TEST(Eer, InterpolatesBetweenPoints) {
  // Thresholds 0, .5, 1.5, 2.5, 3.5, 5: (FAR, FRR) steps (1,0) (2/3,0)
  // (2/3,1/3)... the crossing is found by linear interpolation.
  const auto r = ComputeEer(Trials({1, 3}, {0, 2, 4}));
  EXPECT_NEAR(r.eer, oracle::BruteForceEer({1, 3}, {0, 2, 4}), 1e-12);
}

TEST(DetPoints, MonotoneAndBracketing) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<Trial> trials;
  for (int i = 0; i < 200; ++i) trials.push_back({normal(rng) + (i % 2 ? 1.0 : 0.0), i % 2 ? Label::kGenuine : Label::kSpoof});
  const auto pts = DetPoints(trials);
  ASSERT_EQ(pts.size(), 201u);
  EXPECT_EQ(pts.front().frr, 0.0);
  EXPECT_EQ(pts.front().far, 1.0);
  EXPECT_EQ(pts.back().far, 0.0);
  EXPECT_EQ(pts.back().frr, 1.0);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    EXPECT_LT(pts[k - 1].threshold, pts[k].threshold);
    EXPECT_LE(pts[k].far, pts[k - 1].far);
    EXPECT_GE(pts[k].frr, pts[k - 1].frr);
  }
}

void CheckAgainstOracle(const std::vector<double>& g, const std::vector<double>& s) {
  const double expect = oracle::BruteForceEer(g, s);
  ASSERT_FALSE(std::isnan(expect));
  EXPECT_NEAR(Eer(g, s), expect, 1e-12) << ::testing::PrintToString(g) << " vs " << ::testing::PrintToString(s);
}

TEST(Eer, ExhaustiveSmallListsMatchBruteForce) {
  // Every labelling and every score assignment from {0, 1, 2} for up to five
  // trials, so ties and all orderings are covered.
  for (int n = 2; n <= 5; ++n) {
    int total = 1;
    for (int i = 0; i < n; ++i) total *= 6;
    for (int code = 0; code < total; ++code) {
      std::vector<double> g, s;
      int c = code;
      for (int i = 0; i < n; ++i) {
        const int v = c % 6;
        c /= 6;
        (v < 3 ? g : s).push_back(v % 3);
      }
      if (g.empty() || s.empty()) continue;
      CheckAgainstOracle(g, s);
    }
  }
}

TEST(Eer, RandomListsUpToEightMatchBruteForce) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(2, 8), lab(0, 1), score(0, 5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = size(rng);
    std::vector<double> g, s;
    for (int i = 0; i < n; ++i) {
      const double v = trial % 2 ? score(rng) : normal(rng);
      (lab(rng) ? g : s).push_back(v);
    }
    if (g.empty() || s.empty()) continue;
    CheckAgainstOracle(g, s);
  }
}

TEST(Eer, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> g, s;
    for (int i = 0; i < 30; ++i) g.push_back(normal(rng) + 0.8);
    for (int i = 0; i < 40; ++i) s.push_back(normal(rng));
    const double base = Eer(g, s);
    auto map = [](std::vector<double> v, auto f) {
      for (auto& x : v) x = f(x);
      return v;
    };
    auto affine = [](double x) { return 2 * x + 1; };
    auto squash = [](double x) { return 10.0 * std::tanh(x / 4.0); };
    auto cube = [](double x) { return x * x * x; };
    EXPECT_NEAR(Eer(map(g, affine), map(s, affine)), base, 1e-12);
    EXPECT_NEAR(Eer(map(g, squash), map(s, squash)), base, 1e-12);
    EXPECT_NEAR(Eer(map(g, cube), map(s, cube)), base, 1e-12);
  }
}

TEST(Eer, InvariantUnderDuplication) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  std::vector<double> g, s;
  for (int i = 0; i < 25; ++i) g.push_back(normal(rng) + 1);
  for (int i = 0; i < 35; ++i) s.push_back(normal(rng));
  auto g2 = g, s2 = s;
  g2.insert(g2.end(), g.begin(), g.end());
  s2.insert(s2.end(), s.begin(), s.end());
  EXPECT_NEAR(Eer(g2, s2), Eer(g, s), 1e-12);
}

TEST(Eer, Errors) {
  testing::ExpectErrorKind([] { Eer({1, 2}, {}); }, ErrorKind::kInvalidArgument);
  testing::ExpectErrorKind([] { Eer({}, {1}); }, ErrorKind::kInvalidArgument);
  testing::ExpectErrorKind([] { Eer({NAN}, {1}); }, ErrorKind::kInvalidArgument);
}

TEST(Scores, RenderParseAndJoin) {
  const std::vector<TrialScore> scores{{"a", 1.25}, {"b", -0.5}, {"c", 3.0}};
  const auto text = RenderScores(scores);
  EXPECT_EQ(text, "a 1.250000\nb -0.500000\nc 3.000000\n");
  const auto back = ParseScoresText("# header\n" + text + "\n");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].utterance_id, "b");
  EXPECT_EQ(back[1].score, -0.5);

  const std::vector<ProtocolEntry> protocol{{"c", Label::kSpoof, {}}, {"a", Label::kGenuine, {}},
                                            {"b", Label::kSpoof, {}}, {"z", Label::kGenuine, {}}};
  const auto trials = JoinTrials(back, protocol);
  ASSERT_EQ(trials.size(), 3u);
  EXPECT_EQ(trials[0].label, Label::kGenuine);
  EXPECT_EQ(trials[2].label, Label::kSpoof);
  EXPECT_EQ(ComputeEer(trials).eer, 0.5);

  const std::vector<TrialScore> orphan{{"q", 0.0}};
  testing::ExpectErrorKind([&] { JoinTrials(orphan, protocol); }, ErrorKind::kInvalidArgument);
}

TEST(Scores, ParseErrorsCarryLineNumbers) {
  for (const char* bad : {"a 1\nb\n", "a 1\nb x\n", "a 1\nb 2 3\n", "a 1\nb inf\n"}) {
    try {
      ParseScoresText(bad);
      ADD_FAILURE() << bad;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << bad;
    }
  }
}

}  // namespace
}  // namespace grd
