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

#include "grd/device_fa.hpp"

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace grd {
namespace {

Matrix RandomMatrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (auto& x : m.reshaped()) x = normal(rng);
  return m;
}

FaModel RandomModel(std::mt19937_64& rng, Eigen::Index d, Eigen::Index q) {
  std::uniform_real_distribution<double> u(0.2, 2.0);
  FaModel m{RandomMatrix(rng, d, 1), RandomMatrix(rng, d, q), Vector(d)};
  for (auto& s : m.sigma) s = u(rng);
  return m;
}

// Draws K frames sharing one latent h from the model.
RowMatrix Sample(std::mt19937_64& rng, const FaModel& m, Eigen::Index k, Vector* h_out = nullptr) {
  std::normal_distribution<double> normal;
  Vector h(m.rank());
  for (auto& x : h) x = normal(rng);
  RowMatrix out(k, m.dim());
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < m.dim(); ++c) out(r, c) = std::sqrt(m.sigma[c]) * normal(rng);
    out.row(r) += (m.mu + m.F * h).transpose();
  }
  if (h_out) *h_out = h;
  return out;
}

FeatureMatrix Wrap(RowMatrix rows) { return {FeatureKind::kGfcc, std::move(rows)}; }

TEST(Fa, GlobalMeanWeightsByFrames) {
  RowMatrix a(1, 2), b(3, 2);
  a << 4, 0;
  b << 0, 0, 0, 4, 0, 8;
  const std::vector<RowMatrix> data{a, b};
  const Vector mu = ComputeGlobalMean(data);
  EXPECT_DOUBLE_EQ(mu[0], 1.0);
  EXPECT_DOUBLE_EQ(mu[1], 3.0);
  testing::ExpectErrorKind([] { ComputeGlobalMean(std::vector<RowMatrix>{}); }, ErrorKind::kInvalidArgument);
}

TEST(Fa, EStepZeroLoadingGivesPrior) {
  std::mt19937_64 rng(2);
  FaModel m = RandomModel(rng, 5, 3);
  m.F.setZero();
  const auto post = EStep(RowMatrix(RandomMatrix(rng, 4, 5)), m);
  EXPECT_EQ(post.mean.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((post.cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fa, EStepScalarClosedForm) {
  // D = Q = 1, F = f, Sigma = s: L = 1 + K f^2 / s, E[h] = (f / s) sum(x - mu) / L.
  FaModel m{Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 0.25)};
  RowMatrix x(3, 1);
  x << 1.5, 0.5, 2.5;
  const double l = 1 + 3 * 4.0 / 0.25;
  const auto post = EStep(x, m);
  EXPECT_NEAR(post.cov(0, 0), 1 / l, 1e-14);
  EXPECT_NEAR(post.mean[0], (2.0 / 0.25) * 3.0 / l, 1e-12);
}

TEST(Fa, EStepMatchesStackedSystem) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(2, 6), frames(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dim(rng);
    const int q = std::uniform_int_distribution<int>(1, d)(rng);
    const auto m = RandomModel(rng, d, q);
    const Matrix x = RandomMatrix(rng, frames(rng), d, 2.0);
    const auto post = EStep(RowMatrix(x), m);
    const auto ref = oracle::StackedEStep(x, m.mu, m.F, m.sigma);
    EXPECT_LT((post.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-8 * (1 + ref.mean.cwiseAbs().maxCoeff())) << trial;
    EXPECT_LT((post.cov - ref.cov).cwiseAbs().maxCoeff(), 1e-8) << trial;
    // Posterior covariance shrinks below the prior.
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix::Identity(q, q) - post.cov);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(Fa, PosteriorShrinksWithMoreFrames) {
  std::mt19937_64 rng(4);
  const auto m = RandomModel(rng, 6, 2);
  double prev = 1e300;
  for (int k : {1, 4, 16, 64}) {
    const double tr = EStep(RowMatrix(RandomMatrix(rng, k, 6)), m).cov.trace();
    EXPECT_LT(tr, prev);
    prev = tr;
  }
}

TEST(Fa, LogLikelihoodMatchesExplicitCovariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = RandomModel(rng, 4, 2);
    const Matrix x = RandomMatrix(rng, 1 + trial % 5, 4);
    const PairStats st = ComputePairStats(RowMatrix(x), m.mu);
    const double got = FaLogLikelihood(std::span<const PairStats>(&st, 1), m);
    EXPECT_NEAR(got, oracle::StackedLogLikelihood(x, m.mu, m.F, m.sigma), 1e-8 * (1 + std::abs(got)));
  }
}

TEST(Fa, MStepRecoversNoiselessLoading) {
  // With exact posteriors E[h_l] = h_l and zero posterior covariance the
  // update solves a least-squares problem whose solution is the true F.
  std::mt19937_64 rng(6);
  const Matrix f = RandomMatrix(rng, 5, 2);
  std::vector<RowMatrix> stacked;
  std::vector<Posterior> posts;
  for (int l = 0; l < 20; ++l) {
    const Vector h = RandomMatrix(rng, 2, 1);
    RowMatrix x(3, 5);
    for (int r = 0; r < 3; ++r) x.row(r) = (f * h).transpose();
    stacked.push_back(x);
    posts.push_back({h, Matrix::Zero(2, 2)});
  }
  const auto up = MStep(stacked, posts, Vector::Zero(5));
  EXPECT_LT((up.F - f).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE((up.sigma.array() == kFaVarianceFloor).all());
}

TEST(Fa, MStepZeroPosteriorMeans) {
  std::mt19937_64 rng(7);
  std::vector<RowMatrix> stacked{RowMatrix(RandomMatrix(rng, 4, 3)), RowMatrix(RandomMatrix(rng, 2, 3))};
  std::vector<Posterior> posts(2, Posterior{Vector::Zero(2), Matrix::Identity(2, 2)});
  const Vector mu = Vector::Zero(3);
  const auto up = MStep(stacked, posts, mu);
  EXPECT_EQ(up.F.cwiseAbs().maxCoeff(), 0.0);
  Vector expect = (stacked[0].array().square().colwise().sum() + stacked[1].array().square().colwise().sum()).transpose() / 6.0;
  EXPECT_LT((up.sigma - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fa, MStepSingularMomentIsRegularised) {
  std::vector<RowMatrix> stacked{RowMatrix::Ones(2, 3)};
  std::vector<Posterior> posts{Posterior{Vector::Zero(2), Matrix::Zero(2, 2)}};
  const auto up = MStep(stacked, posts, Vector::Zero(3));
  EXPECT_TRUE(up.F.allFinite());
  EXPECT_TRUE(up.sigma.allFinite());
}

struct SyntheticFa {
  FaModel truth;
  std::vector<ParallelPair> pairs;
};

SyntheticFa MakeSynthetic(std::uint64_t seed, int n_pairs) {
  std::mt19937_64 rng(seed);
  SyntheticFa s;
  s.truth = RandomModel(rng, 8, 2);
  s.truth.sigma = Vector::Constant(8, 0.05);
  for (int l = 0; l < n_pairs; ++l) {
    const RowMatrix x = Sample(rng, s.truth, 10);
    s.pairs.push_back({Wrap(x.topRows(5)), Wrap(x.bottomRows(5))});
  }
  return s;
}

double SubspaceCosine(const Matrix& a, const Matrix& b) {
  // Smallest principal-angle cosine between the column spaces.
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  return svd.singularValues().minCoeff();
}

TEST(Fa, TrainingRecoversTheLoadingSubspace) {
  const auto s = MakeSynthetic(11, 400);
  const auto res = TrainFa(s.pairs, {2, 50, 3});
  EXPECT_GT(SubspaceCosine(res.model.F, s.truth.F), 0.99);
  ASSERT_EQ(res.log_likelihood.size(), 51u);
  for (std::size_t k = 1; k < res.log_likelihood.size(); ++k) {
    EXPECT_GE(res.log_likelihood[k], res.log_likelihood[k - 1] - 1e-6 * std::abs(res.log_likelihood[k - 1])) << k;
  }
}

TEST(Fa, ReportedLikelihoodMatchesOracle) {
  const auto s = MakeSynthetic(12, 10);
  const auto res = TrainFa(s.pairs, {2, 3, 1});
  double ref = 0;
  for (const auto& p : s.pairs) {
    ref += oracle::StackedLogLikelihood(Matrix(StackPair(p)), res.model.mu, res.model.F, res.model.sigma);
  }
  EXPECT_NEAR(res.log_likelihood.back(), ref, 1e-8 * std::abs(ref));
}

TEST(Fa, TrainingIsDeterministic) {
  const auto s = MakeSynthetic(13, 30);
  const auto a = TrainFa(s.pairs, {2, 5, 9});
  const auto b = TrainFa(s.pairs, {2, 5, 9});
  EXPECT_TRUE(a.model.F == b.model.F);
  EXPECT_TRUE(a.model.sigma == b.model.sigma);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  const auto c = TrainFa(s.pairs, {2, 5, 10});
  EXPECT_FALSE(a.model.F == c.model.F);
}

TEST(Fa, TrainingRejectsBadInput) {
  const auto s = MakeSynthetic(14, 3);
  testing::ExpectErrorKind([&] { TrainFa(std::span<const ParallelPair>{}, {}); }, ErrorKind::kInvalidArgument);
  testing::ExpectErrorKind([&] { TrainFa(s.pairs, {9, 5, 0}); }, ErrorKind::kInvalidArgument);
  auto bad = s.pairs;
  bad[1].replay.rows = RowMatrix::Zero(2, 7);
  testing::ExpectErrorKind([&] { TrainFa(bad, {2, 5, 0}); }, ErrorKind::kDimension);
}

TEST(DeviceFeature, ZeroLoadingOnlyCentres) {
  std::mt19937_64 rng(20);
  FaModel m = RandomModel(rng, 4, 2);
  m.F.setZero();
  const auto x = Wrap(RowMatrix(RandomMatrix(rng, 6, 4)));
  const auto out = ExtractDeviceFeature(x, m);
  EXPECT_EQ(out.kind, FeatureKind::kGfdcc);
  EXPECT_LT((out.rows - (x.rows.rowwise() - m.mu.transpose())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DeviceFeature, KindMappingAndShape) {
  std::mt19937_64 rng(21);
  const auto m = RandomModel(rng, 4, 2);
  FeatureMatrix x{FeatureKind::kGflc, RowMatrix(RandomMatrix(rng, 5, 4))};
  const auto out = ExtractDeviceFeature(x, m);
  EXPECT_EQ(out.kind, FeatureKind::kGfldc);
  EXPECT_EQ(out.frames(), 5);
  EXPECT_EQ(out.dim(), 4);
  testing::ExpectErrorKind([&] { ExtractDeviceFeature(Wrap(RowMatrix::Zero(3, 5)), m); }, ErrorKind::kDimension);
}

TEST(DeviceFeature, ResidualMatchesPosteriorReconstruction) {
  std::mt19937_64 rng(22);
  const auto m = RandomModel(rng, 5, 2);
  const Matrix x = RandomMatrix(rng, 7, 5);
  const auto ref = oracle::StackedEStep(x, m.mu, m.F, m.sigma);
  const auto out = ExtractDeviceFeature(Wrap(RowMatrix(x)), m);
  const Vector offset = m.mu + m.F * ref.mean;
  EXPECT_LT((out.rows - (x.rowwise() - offset.transpose())).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DeviceFeature, ShiftAlongLoadingIsAbsorbed) {
  // Adding F c to every frame moves E[h] by (I - L^-1) c, so the residual
  // changes by F L^-1 c, which vanishes as K grows.
  std::mt19937_64 rng(23);
  FaModel m = RandomModel(rng, 6, 2);
  m.sigma.setConstant(0.1);
  const Vector c = RandomMatrix(rng, 2, 1);
  const RowMatrix x = RandomMatrix(rng, 200, 6);
  const RowMatrix shifted = x.rowwise() + (m.F * c).transpose();
  const auto a = ExtractDeviceFeature(Wrap(x), m);
  const auto b = ExtractDeviceFeature(Wrap(shifted), m);
  const Posterior post = EStep(x, m);
  const Vector expect = m.F * post.cov * c;
  for (Eigen::Index r = 0; r < 200; ++r) {
    EXPECT_LT((b.rows.row(r) - a.rows.row(r) - expect.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_LT(expect.norm(), 0.05 * (m.F * c).norm());
}

TEST(FaModelFile, RoundTripIsExact) {
  std::mt19937_64 rng(30);
  const auto m = RandomModel(rng, 7, 3);
  testing::TempDir dir;
  WriteFaModel(m, dir / "fa.bin");
  const auto back = ReadFaModel(dir / "fa.bin");
  EXPECT_TRUE(back.mu == m.mu);
  EXPECT_TRUE(back.F == m.F);
  EXPECT_TRUE(back.sigma == m.sigma);
  EXPECT_EQ(std::filesystem::file_size(dir / "fa.bin"), 16u + 8u * (7 + 21 + 7));
}

TEST(FaModelFile, Errors) {
  std::mt19937_64 rng(31);
  auto bytes = EncodeFaModel(RandomModel(rng, 3, 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  testing::ExpectErrorKind([&] { DecodeFaModel(bad_magic); }, ErrorKind::kFormat);
  auto truncated = bytes;
  truncated.pop_back();
  testing::ExpectErrorKind([&] { DecodeFaModel(truncated); }, ErrorKind::kLength);
  auto bad_version = bytes;
  bad_version[4] = 9;
  testing::ExpectErrorKind([&] { DecodeFaModel(bad_version); }, ErrorKind::kFormat);
}

}  // namespace
}  // namespace grd
