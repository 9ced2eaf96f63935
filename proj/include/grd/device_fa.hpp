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

#ifndef GRD_DEVICE_FA_HPP_
#define GRD_DEVICE_FA_HPP_

// Device-related linear transformation. Each genuine/replay pair l shares a
// latent factor h_l ~ N(0, I); every frame of the pair is modelled as
//   phi = mu + F h_l + eps,   eps ~ N(0, diag(Sigma)).
// The factor captures what the pair has in common (speaker, content); the
// residual phi - mu - F E[h] keeps the device and environment part.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "grd/binary_io.hpp"
#include "grd/error.hpp"
#include "grd/feature_matrix.hpp"
#include "grd/log.hpp"
#include "grd/rng.hpp"

namespace grd {

inline constexpr double kFaVarianceFloor = 1e-6;

struct FaModel {
  Vector mu;     // D
  Matrix F;      // D x Q
  Vector sigma;  // D diagonal residual variances

  Eigen::Index dim() const { return mu.size(); }
  Eigen::Index rank() const { return F.cols(); }

  void Validate() const {
    const auto d = dim();
    Require(d >= 1, ErrorKind::kInvalidArgument, "FA model has no dimensions");
    Require(F.rows() == d && sigma.size() == d, ErrorKind::kDimension, "FA model parts disagree on dimension");
    Require(rank() >= 1 && rank() <= d, ErrorKind::kInvalidArgument, "FA rank must satisfy 1 <= Q <= D");
    Require(mu.allFinite() && F.allFinite() && sigma.allFinite(), ErrorKind::kInvalidArgument,
            "FA model has non-finite parameters");
    Require((sigma.array() >= kFaVarianceFloor).all(), ErrorKind::kInvalidArgument,
            "FA variances below floor");
  }
};

struct ParallelPair {
  FeatureMatrix genuine;
  FeatureMatrix replay;
};

/// Posterior of the shared factor given K stacked frames.
struct Posterior {
  Vector mean;  // E[h]
  Matrix cov;   // L^-1

  Matrix SecondMoment() const { return cov + mean * mean.transpose(); }
};

/// Frame-weighted mean over every row of every matrix.
inline Vector ComputeGlobalMean(std::span<const RowMatrix> data) {
  Eigen::Index dim = -1;
  Vector sum;
  double count = 0;
  for (const auto& m : data) {
    if (m.rows() == 0) continue;
    if (dim < 0) {
      dim = m.cols();
      sum = Vector::Zero(dim);
    }
    if (m.cols() != dim) Fail(ErrorKind::kDimension, "corpus mixes feature dimensions");
    sum += m.colwise().sum().transpose();
    count += static_cast<double>(m.rows());
  }
  if (count == 0) Fail(ErrorKind::kInvalidArgument, "global mean of an empty corpus");
  return sum / count;
}

/// Replay frames followed by genuine frames, all sharing one factor.
inline RowMatrix StackPair(const ParallelPair& pair) {
  if (pair.genuine.dim() != pair.replay.dim()) Fail(ErrorKind::kDimension, "pair dimensions differ");
  if (pair.genuine.frames() == 0 || pair.replay.frames() == 0) Fail(ErrorKind::kInvalidArgument, "empty pair member");
  RowMatrix stacked(pair.replay.frames() + pair.genuine.frames(), pair.genuine.dim());
  stacked << pair.replay.rows, pair.genuine.rows;
  return stacked;
}

/// Sufficient statistics of one stacked pair, centred on mu.
struct PairStats {
  double frames = 0;  // K
  Vector sum;         // sum_r (phi_r - mu)
  Vector sum_sq;      // sum_r (phi_r - mu)^2, elementwise
};

inline PairStats ComputePairStats(const RowMatrix& stacked, const Vector& mu) {
  if (stacked.rows() == 0) Fail(ErrorKind::kInvalidArgument, "no frames");
  if (stacked.cols() != mu.size()) Fail(ErrorKind::kDimension, "frame dimension != model dimension");
  const RowMatrix centred = stacked.rowwise() - mu.transpose();
  return {static_cast<double>(stacked.rows()), centred.colwise().sum().transpose(),
          centred.array().square().colwise().sum().transpose()};
}

namespace detail {

struct EStepTerms {
  Posterior post;
  double log_det_precision = 0;  // log |L|
  double quad = 0;               // b^T L^-1 b
};

inline EStepTerms EStepFromStats(const PairStats& st, const FaModel& model) {
  const Eigen::Index q = model.rank();
  const Vector inv_sigma = model.sigma.cwiseInverse();
  const Matrix ft_sinv = model.F.transpose() * inv_sigma.asDiagonal();  // Q x D
  Matrix precision = Matrix::Identity(q, q) + st.frames * (ft_sinv * model.F);
  precision = 0.5 * (precision + precision.transpose());
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) Fail(ErrorKind::kInternal, "posterior precision is not positive definite");
  const Vector b = ft_sinv * st.sum;
  EStepTerms out;
  out.post.cov = llt.solve(Matrix::Identity(q, q));
  out.post.cov = 0.5 * (out.post.cov + out.post.cov.transpose());
  out.post.mean = llt.solve(b);
  out.log_det_precision = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.quad = b.dot(out.post.mean);
  return out;
}

/// Marginal log-likelihood of a stacked pair under phi ~ N(mu, A A^T + Sigma_hat),
/// using |Sigma_hat + A A^T| = |Sigma_hat| |L| and the Woodbury identity.
inline double PairLogLikelihood(const PairStats& st, const FaModel& model, const EStepTerms& terms) {
  const double d = static_cast<double>(model.dim());
  const double log_det_sigma = model.sigma.array().log().sum();
  const double mahal = (st.sum_sq.array() / model.sigma.array()).sum();
  return -0.5 * (st.frames * d * std::log(2.0 * std::numbers::pi) + st.frames * log_det_sigma +
                 terms.log_det_precision + mahal - terms.quad);
}

}  // namespace detail

/// Posterior of the shared factor given stacked frames. L = I + K F^T S^-1 F and
/// E[h] = L^-1 F^T S^-1 sum_r (phi_r - mu).
inline Posterior EStep(const RowMatrix& stacked, const FaModel& model) {
  return detail::EStepFromStats(ComputePairStats(stacked, model.mu), model).post;
}

struct FaUpdate {
  Matrix F;
  Vector sigma;
};

/// Maximum-likelihood update of F and the diagonal residual variances given
/// per-pair posteriors; mu stays fixed.
inline FaUpdate MStep(std::span<const PairStats> stats, std::span<const Posterior> posts) {
  if (stats.empty()) Fail(ErrorKind::kInvalidArgument, "M-step needs at least one pair");
  if (stats.size() != posts.size()) Fail(ErrorKind::kDimension, "one posterior per pair required");
  const Eigen::Index d = stats.front().sum.size();
  const Eigen::Index q = posts.front().mean.size();
  Matrix cross = Matrix::Zero(d, q);  // sum_l sum_r x_lr E[h_l]^T
  Matrix moment = Matrix::Zero(q, q);  // sum_l K_l E[h_l h_l^T]
  Vector sq = Vector::Zero(d);
  double total = 0;
  for (std::size_t l = 0; l < stats.size(); ++l) {
    cross += stats[l].sum * posts[l].mean.transpose();
    moment += stats[l].frames * posts[l].SecondMoment();
    sq += stats[l].sum_sq;
    total += stats[l].frames;
  }
  moment = 0.5 * (moment + moment.transpose());
  Eigen::LLT<Matrix> llt(moment);
  if (llt.info() != Eigen::Success) {
    Log().warn("FA M-step: singular factor moment matrix, adding 1e-8 I");
    llt.compute(moment + 1e-8 * Matrix::Identity(q, q));
  }
  FaUpdate up;
  up.F = llt.solve(cross.transpose()).transpose();
  Vector explained = Vector::Zero(d);
  for (std::size_t l = 0; l < stats.size(); ++l) {
    explained += (up.F * posts[l].mean).cwiseProduct(stats[l].sum);
  }
  up.sigma = ((sq - explained) / total).cwiseMax(kFaVarianceFloor);
  return up;
}

inline FaUpdate MStep(std::span<const RowMatrix> stacked, std::span<const Posterior> posts, const Vector& mu) {
  std::vector<PairStats> stats;
  stats.reserve(stacked.size());
  for (const auto& s : stacked) stats.push_back(ComputePairStats(s, mu));
  return MStep(stats, posts);
}

struct FaTrainOptions {
  int rank = 10;
  int iterations = 20;
  std::uint64_t seed = 0;
};

struct FaTrainResult {
  FaModel model;
  /// Entry k is the total marginal log-likelihood after k EM iterations.
  std::vector<double> log_likelihood;
};

inline double FaLogLikelihood(std::span<const PairStats> stats, const FaModel& model) {
  double total = 0;
  for (const auto& st : stats) total += detail::PairLogLikelihood(st, model, detail::EStepFromStats(st, model));
  return total;
}

inline FaTrainResult TrainFa(std::span<const ParallelPair> pairs, const FaTrainOptions& opts) {
  if (pairs.empty()) Fail(ErrorKind::kInvalidArgument, "FA training needs at least one pair");
  if (opts.iterations < 1) Fail(ErrorKind::kInvalidArgument, "FA training needs at least one iteration");

  std::vector<RowMatrix> stacked;
  stacked.reserve(pairs.size());
  for (const auto& p : pairs) stacked.push_back(StackPair(p));
  const Eigen::Index d = stacked.front().cols();
  for (const auto& s : stacked) {
    if (s.cols() != d) Fail(ErrorKind::kDimension, "pairs disagree on feature dimension");
  }
  if (opts.rank < 1 || opts.rank > d) {
    Fail(ErrorKind::kInvalidArgument, "FA rank " + std::to_string(opts.rank) + " outside [1, " + std::to_string(d) + "]");
  }

  FaModel model;
  model.mu = ComputeGlobalMean(stacked);
  std::vector<PairStats> stats;
  stats.reserve(stacked.size());
  double total = 0;
  Vector sq = Vector::Zero(d);
  for (const auto& s : stacked) {
    stats.push_back(ComputePairStats(s, model.mu));
    sq += stats.back().sum_sq;
    total += stats.back().frames;
  }
  model.sigma = (sq / total).cwiseMax(kFaVarianceFloor);
  Rng rng = MakeRng(opts.seed, "fa-init");
  std::normal_distribution<double> normal;
  model.F.resize(d, opts.rank);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < opts.rank; ++c) model.F(r, c) = 0.1 * normal(rng);
  }

  FaTrainResult result;
  std::vector<Posterior> posts(stats.size());
  for (int it = 0; it < opts.iterations; ++it) {
    double ll = 0;
    for (std::size_t l = 0; l < stats.size(); ++l) {
      auto terms = detail::EStepFromStats(stats[l], model);
      ll += detail::PairLogLikelihood(stats[l], model, terms);
      posts[l] = std::move(terms.post);
    }
    result.log_likelihood.push_back(ll);
    Log().info("FA iteration {}: log-likelihood {:.6f}", it, ll);
    auto up = MStep(stats, posts);
    model.F = std::move(up.F);
    model.sigma = std::move(up.sigma);
  }
  result.log_likelihood.push_back(FaLogLikelihood(stats, model));
  Log().info("FA final log-likelihood {:.6f}", result.log_likelihood.back());
  result.model = std::move(model);
  return result;
}

/// Removes the universal mean and the utterance's common-factor
/// reconstruction from every frame: phi_r - mu - F E[h].
inline FeatureMatrix ExtractDeviceFeature(const FeatureMatrix& m, const FaModel& model) {
  if (m.dim() != model.dim()) {
    Fail(ErrorKind::kDimension, "feature dimension " + std::to_string(m.dim()) + " != FA dimension " +
                                    std::to_string(model.dim()));
  }
  FeatureMatrix out;
  out.kind = DeviceKindOf(m.kind);
  if (m.frames() == 0) {
    out.rows.resize(0, m.dim());
    return out;
  }
  const Posterior post = EStep(m.rows, model);
  const Vector offset = model.mu + model.F * post.mean;
  out.rows = m.rows.rowwise() - offset.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// GFAM model file: magic, u32 version, u32 D, u32 Q, then mu, F (row-major)
// and Sigma as little-endian float64.

inline constexpr std::string_view kFaMagic = "GFAM";
inline constexpr std::uint32_t kFaVersion = 1;

inline std::vector<char> EncodeFaModel(const FaModel& model) {
  model.Validate();
  bin::Writer w;
  w.Bytes(kFaMagic);
  w.U32(kFaVersion);
  w.U32(static_cast<std::uint32_t>(model.dim()));
  w.U32(static_cast<std::uint32_t>(model.rank()));
  for (double v : model.mu) w.F64(v);
  for (Eigen::Index r = 0; r < model.F.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.F.cols(); ++c) w.F64(model.F(r, c));
  }
  for (double v : model.sigma) w.F64(v);
  return w.buffer();
}

inline FaModel DecodeFaModel(std::span<const char> bytes) {
  bin::Reader r(bytes);
  if (!r.Has(16)) Fail(ErrorKind::kFormat, "FA model header truncated");
  if (r.Bytes(4) != kFaMagic) Fail(ErrorKind::kFormat, "bad FA model magic");
  if (auto v = r.U32(); v != kFaVersion) Fail(ErrorKind::kFormat, "unsupported FA model version " + std::to_string(v));
  const std::uint64_t d = r.U32();
  const std::uint64_t q = r.U32();
  if (d == 0 || q == 0 || q > d) Fail(ErrorKind::kFormat, "bad FA model shape");
  if (r.remaining() != (2 * d + d * q) * 8) Fail(ErrorKind::kLength, "FA model payload size mismatch");
  FaModel m;
  const auto di = static_cast<Eigen::Index>(d);
  const auto qi = static_cast<Eigen::Index>(q);
  m.mu.resize(di);
  m.F.resize(di, qi);
  m.sigma.resize(di);
  for (Eigen::Index i = 0; i < di; ++i) m.mu[i] = r.F64();
  for (Eigen::Index i = 0; i < di; ++i) {
    for (Eigen::Index c = 0; c < qi; ++c) m.F(i, c) = r.F64();
  }
  for (Eigen::Index i = 0; i < di; ++i) m.sigma[i] = r.F64();
  m.Validate();
  return m;
}

inline void WriteFaModel(const FaModel& model, const std::filesystem::path& path) {
  bin::WriteFileAtomic(path, EncodeFaModel(model));
}

inline FaModel ReadFaModel(const std::filesystem::path& path) {
  auto bytes = bin::ReadFile(path);
  return DecodeFaModel(bytes);
}

}  // namespace grd

#endif  // GRD_DEVICE_FA_HPP_
