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

#ifndef GRD_GMM_HPP_
#define GRD_GMM_HPP_

// Diagonal-covariance Gaussian mixture back-end.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
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

inline constexpr double kGmmVarianceFloor = 1e-6;

struct GmmModel {
  Vector weights;       // K
  RowMatrix means;      // K x D
  RowMatrix variances;  // K x D

  Eigen::Index components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }

  void Validate() const {
    const auto k = components();
    Require(k >= 1, ErrorKind::kInvalidArgument, "GMM has no components");
    Require(means.rows() == k && variances.rows() == k && variances.cols() == means.cols(), ErrorKind::kDimension,
            "GMM parts disagree on shape");
    Require(weights.allFinite() && means.allFinite() && variances.allFinite(), ErrorKind::kInvalidArgument,
            "GMM has non-finite parameters");
    Require((weights.array() > 0).all() && std::abs(weights.sum() - 1.0) < 1e-9, ErrorKind::kInvalidArgument,
            "GMM weights are not a probability vector");
    Require((variances.array() >= kGmmVarianceFloor).all(), ErrorKind::kInvalidArgument, "GMM variance below floor");
  }
};

namespace detail {

inline double LogSumExp(const Eigen::Ref<const Vector>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

/// Per-frame, per-component log(w_k N(x; m_k, v_k)) for a batch of frames,
/// expanded so the quadratic term is two matrix products.
inline RowMatrix ComponentLogDensities(const GmmModel& model, const RowMatrix& x) {
  const double d = static_cast<double>(model.dim());
  const RowMatrix inv_var = model.variances.cwiseInverse();
  const RowMatrix mean_scaled = model.means.cwiseProduct(inv_var);
  Vector constant(model.components());
  for (Eigen::Index k = 0; k < model.components(); ++k) {
    constant[k] = std::log(model.weights[k]) -
                  0.5 * (d * std::log(2.0 * std::numbers::pi) + model.variances.row(k).array().log().sum() +
                         model.means.row(k).dot(mean_scaled.row(k)));
  }
  RowMatrix out = x * mean_scaled.transpose();
  out -= 0.5 * (x.cwiseProduct(x) * inv_var.transpose());
  out.rowwise() += constant.transpose();
  return out;
}

}  // namespace detail

/// log sum_k w_k N(frame; mean_k, diag var_k), evaluated term by term.
inline double GmmLogLikelihood(const GmmModel& model, const Eigen::Ref<const Vector>& frame) {
  if (frame.size() != model.dim()) Fail(ErrorKind::kDimension, "frame dimension != GMM dimension");
  const double d = static_cast<double>(model.dim());
  Vector terms(model.components());
  for (Eigen::Index k = 0; k < model.components(); ++k) {
    const auto var = model.variances.row(k).transpose().array();
    const auto diff = frame.array() - model.means.row(k).transpose().array();
    terms[k] = std::log(model.weights[k]) -
               0.5 * (d * std::log(2.0 * std::numbers::pi) + var.log().sum() + (diff.square() / var).sum());
  }
  return detail::LogSumExp(terms);
}

/// Frame log-likelihoods for a whole matrix.
inline Vector GmmFrameLogLikelihoods(const GmmModel& model, const RowMatrix& x) {
  if (x.cols() != model.dim()) Fail(ErrorKind::kDimension, "feature dimension != GMM dimension");
  const RowMatrix logd = detail::ComponentLogDensities(model, x);
  Vector out(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) out[t] = detail::LogSumExp(logd.row(t).transpose());
  return out;
}

/// Posterior component probabilities, one row per frame.
inline RowMatrix GmmResponsibilities(const GmmModel& model, const RowMatrix& x) {
  if (x.cols() != model.dim()) Fail(ErrorKind::kDimension, "feature dimension != GMM dimension");
  RowMatrix logd = detail::ComponentLogDensities(model, x);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double lse = detail::LogSumExp(logd.row(t).transpose());
    logd.row(t) = (logd.row(t).array() - lse).exp().matrix();
  }
  return logd;
}

// ---------------------------------------------------------------------------
// Initialisation

inline constexpr Eigen::Index kGmmInitSubsample = 100000;

namespace detail {

inline RowMatrix SquaredDistances(const RowMatrix& x, const RowMatrix& centers) {
  RowMatrix d = -2.0 * (x * centers.transpose());
  d.colwise() += x.rowwise().squaredNorm();
  d.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

inline std::vector<Eigen::Index> NearestCenter(const RowMatrix& x, const RowMatrix& centers, Vector* best_dist) {
  const RowMatrix d = SquaredDistances(x, centers);
  std::vector<Eigen::Index> assign(static_cast<std::size_t>(x.rows()));
  if (best_dist) best_dist->resize(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    Eigen::Index k = 0;
    double v = d.row(t).minCoeff(&k);
    assign[static_cast<std::size_t>(t)] = k;
    if (best_dist) (*best_dist)[t] = v;
  }
  return assign;
}

inline Vector ColumnVariance(const RowMatrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows())).transpose();
}

}  // namespace detail

/// k-means++ seeding plus a few Lloyd refinements on a seeded subsample.
/// Means are the cluster centres, variances the within-cluster variances and
/// weights the cluster proportions.
inline GmmModel GmmInit(const RowMatrix& data, int k, std::uint64_t seed, int lloyd_iterations = 5) {
  if (k < 1) Fail(ErrorKind::kInvalidArgument, "GMM needs at least one component");
  if (data.rows() < k) {
    Fail(ErrorKind::kInvalidArgument, "GMM with " + std::to_string(k) + " components needs at least as many frames, got " +
                                          std::to_string(data.rows()));
  }
  Rng rng = MakeRng(seed, "gmm-init");

  RowMatrix x;
  if (data.rows() > kGmmInitSubsample) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::vector<Eigen::Index> pick;
    std::sample(idx.begin(), idx.end(), std::back_inserter(pick), kGmmInitSubsample, rng);
    x.resize(static_cast<Eigen::Index>(pick.size()), data.cols());
    for (std::size_t i = 0; i < pick.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = data.row(pick[i]);
  } else {
    x = data;
  }
  const Eigen::Index n = x.rows();

  RowMatrix centers(k, x.cols());
  {
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = x.row(first(rng));
    Vector closest = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
      const double total = closest.sum();
      Eigen::Index chosen = 0;
      if (total > 0) {
        double target = unit(rng) * total;
        chosen = n - 1;
        for (Eigen::Index t = 0; t < n; ++t) {
          target -= closest[t];
          if (target < 0 && closest[t] > 0) {
            chosen = t;
            break;
          }
        }
      } else {
        std::uniform_int_distribution<Eigen::Index> any(0, n - 1);
        chosen = any(rng);
      }
      centers.row(c) = x.row(chosen);
      closest = closest.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
  }

  std::vector<Eigen::Index> assign;
  Vector dist;
  for (int it = 0; it <= lloyd_iterations; ++it) {
    assign = detail::NearestCenter(x, centers, &dist);
    if (it == lloyd_iterations) break;
    RowMatrix sums = RowMatrix::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index t = 0; t < n; ++t) {
      sums.row(assign[static_cast<std::size_t>(t)]) += x.row(t);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(t)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Move an empty cluster onto the worst-served frame.
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        centers.row(c) = x.row(far);
        dist[far] = 0;
      }
    }
  }

  GmmModel model;
  model.weights = Vector::Zero(k);
  model.means = RowMatrix::Zero(k, x.cols());
  model.variances = RowMatrix::Zero(k, x.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto c = assign[static_cast<std::size_t>(t)];
    model.weights[c] += 1;
    model.means.row(c) += x.row(t);
  }
  const Vector global_var = detail::ColumnVariance(x).cwiseMax(kGmmVarianceFloor);
  for (int c = 0; c < k; ++c) {
    if (model.weights[c] > 0) {
      model.means.row(c) /= model.weights[c];
    } else {
      model.means.row(c) = centers.row(c);
    }
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto c = assign[static_cast<std::size_t>(t)];
    model.variances.row(c) += (x.row(t) - model.means.row(c)).array().square().matrix();
  }
  for (int c = 0; c < k; ++c) {
    if (model.weights[c] > 0) {
      model.variances.row(c) = (model.variances.row(c) / model.weights[c]).cwiseMax(kGmmVarianceFloor);
    } else {
      model.variances.row(c) = global_var.transpose();
      model.weights[c] = 1.0;  // keep the weight strictly positive
    }
  }
  model.weights /= model.weights.sum();
  return model;
}

// ---------------------------------------------------------------------------
// EM

struct GmmTrainOptions {
  int components = 512;
  int iterations = 10;
  std::uint64_t seed = 0;
};

struct GmmTrainResult {
  GmmModel model;
  /// Entry k is the total data log-likelihood after k EM iterations.
  std::vector<double> log_likelihood;
  int reinitialised = 0;
};

inline GmmTrainResult GmmEmTrain(const RowMatrix& data, const GmmTrainOptions& opts) {
  if (opts.iterations < 1) Fail(ErrorKind::kInvalidArgument, "GMM training needs at least one iteration");
  GmmTrainResult result;
  result.model = GmmInit(data, opts.components, opts.seed);
  GmmModel& model = result.model;
  const Eigen::Index k = model.components();
  const double n = static_cast<double>(data.rows());
  const RowMatrix data_sq = data.cwiseProduct(data);
  const Vector global_var = detail::ColumnVariance(data).cwiseMax(kGmmVarianceFloor);
  Rng reinit_rng = MakeRng(opts.seed, "gmm-reinit");

  auto e_step = [&](RowMatrix* resp) {
    RowMatrix logd = detail::ComponentLogDensities(model, data);
    double ll = 0;
    for (Eigen::Index t = 0; t < data.rows(); ++t) {
      const double lse = detail::LogSumExp(logd.row(t).transpose());
      ll += lse;
      if (resp) logd.row(t) = (logd.row(t).array() - lse).exp().matrix();
    }
    if (resp) *resp = std::move(logd);
    return ll;
  };

  RowMatrix resp;
  for (int it = 0; it < opts.iterations; ++it) {
    const double ll = e_step(&resp);
    result.log_likelihood.push_back(ll);
    Log().info("GMM iteration {}: average log-likelihood {:.6f}", it, ll / n);

    const Vector occ = resp.colwise().sum().transpose();
    const RowMatrix first = resp.transpose() * data;
    const RowMatrix second = resp.transpose() * data_sq;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (occ[c] < 1e-8) {
        std::uniform_int_distribution<Eigen::Index> any(0, data.rows() - 1);
        Log().warn("GMM component {} starved (occupancy {:.3g}), reinitialising", c, occ[c]);
        model.means.row(c) = data.row(any(reinit_rng));
        model.variances.row(c) = global_var.transpose();
        model.weights[c] = 1.0 / n;
        ++result.reinitialised;
        continue;
      }
      model.weights[c] = occ[c] / n;
      model.means.row(c) = first.row(c) / occ[c];
      model.variances.row(c) =
          (second.row(c) / occ[c] - model.means.row(c).cwiseProduct(model.means.row(c))).cwiseMax(kGmmVarianceFloor);
    }
    model.weights /= model.weights.sum();
  }
  result.log_likelihood.push_back(e_step(nullptr));
  return result;
}

/// Frame-averaged log-likelihood ratio, genuine minus spoof.
inline double ScoreLlr(const GmmModel& genuine, const GmmModel& spoof, const FeatureMatrix& m) {
  if (m.frames() < 1) Fail(ErrorKind::kInvalidArgument, "cannot score an empty utterance");
  if (m.dim() != genuine.dim() || m.dim() != spoof.dim()) Fail(ErrorKind::kDimension, "feature dimension != GMM dimension");
  return (GmmFrameLogLikelihoods(genuine, m.rows) - GmmFrameLogLikelihoods(spoof, m.rows)).mean();
}

// ---------------------------------------------------------------------------
// GFGM model file: magic, u32 version, u32 K, u32 D, then weights, means and
// variances (row-major) as little-endian float64.

inline constexpr std::string_view kGmmMagic = "GFGM";
inline constexpr std::uint32_t kGmmVersion = 1;

inline std::vector<char> EncodeGmm(const GmmModel& model) {
  model.Validate();
  bin::Writer w;
  w.Bytes(kGmmMagic);
  w.U32(kGmmVersion);
  w.U32(static_cast<std::uint32_t>(model.components()));
  w.U32(static_cast<std::uint32_t>(model.dim()));
  for (double v : model.weights) w.F64(v);
  for (const RowMatrix* m : {&model.means, &model.variances}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) w.F64((*m)(r, c));
    }
  }
  return w.buffer();
}

inline GmmModel DecodeGmm(std::span<const char> bytes) {
  bin::Reader r(bytes);
  if (!r.Has(16)) Fail(ErrorKind::kFormat, "GMM header truncated");
  if (r.Bytes(4) != kGmmMagic) Fail(ErrorKind::kFormat, "bad GMM magic");
  if (auto v = r.U32(); v != kGmmVersion) Fail(ErrorKind::kFormat, "unsupported GMM version " + std::to_string(v));
  const std::uint64_t k = r.U32();
  const std::uint64_t d = r.U32();
  if (k == 0 || d == 0) Fail(ErrorKind::kFormat, "bad GMM shape");
  if (r.remaining() != (k + 2 * k * d) * 8) Fail(ErrorKind::kLength, "GMM payload size mismatch");
  GmmModel m;
  const auto ki = static_cast<Eigen::Index>(k);
  const auto di = static_cast<Eigen::Index>(d);
  m.weights.resize(ki);
  m.means.resize(ki, di);
  m.variances.resize(ki, di);
  for (Eigen::Index i = 0; i < ki; ++i) m.weights[i] = r.F64();
  for (RowMatrix* mat : {&m.means, &m.variances}) {
    for (Eigen::Index i = 0; i < ki; ++i) {
      for (Eigen::Index c = 0; c < di; ++c) (*mat)(i, c) = r.F64();
    }
  }
  m.Validate();
  return m;
}

inline void WriteGmm(const GmmModel& model, const std::filesystem::path& path) {
  bin::WriteFileAtomic(path, EncodeGmm(model));
}

inline GmmModel ReadGmm(const std::filesystem::path& path) {
  auto bytes = bin::ReadFile(path);
  return DecodeGmm(bytes);
}

}  // namespace grd

#endif  // GRD_GMM_HPP_
