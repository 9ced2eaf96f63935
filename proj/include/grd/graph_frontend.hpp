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

#ifndef GRD_GRAPH_FRONTEND_HPP_
#define GRD_GRAPH_FRONTEND_HPP_

// Graph Fourier transform front-end: frame-sized graph, its eigenbasis, and
// the cepstral features computed from graph-frequency coefficients.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "grd/error.hpp"
#include "grd/feature_matrix.hpp"
#include "grd/signal_io.hpp"

namespace grd {

enum class Topology { kPath, kCycle };
enum class GraphOperator { kLaplacian, kAdjacency };

struct GraphSpec {
  Topology topology = Topology::kPath;
  int size = 512;
  GraphOperator op = GraphOperator::kLaplacian;
};

/// Orthonormal eigenbasis of a graph operator. Column k of `vectors` pairs
/// with `frequencies[k]`; frequencies are nondecreasing.
struct GftBasis {
  Matrix vectors;
  Vector frequencies;

  Eigen::Index size() const { return vectors.rows(); }
};

inline Matrix AdjacencyMatrix(const GraphSpec& spec) {
  const int n = spec.size;
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  // A 2-node cycle would duplicate the single edge.
  if (spec.topology == Topology::kCycle && n > 2) a(n - 1, 0) = a(0, n - 1) = 1.0;
  return a;
}

inline Matrix GraphOperatorMatrix(const GraphSpec& spec) {
  Matrix a = AdjacencyMatrix(spec);
  if (spec.op == GraphOperator::kAdjacency) return a;
  Matrix lap = -a;
  lap.diagonal() = a.rowwise().sum();
  return lap;
}

inline GftBasis BuildGraphBasis(const GraphSpec& spec) {
  if (spec.size < 2) Fail(ErrorKind::kInvalidArgument, "graph needs at least 2 nodes, got " + std::to_string(spec.size));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(GraphOperatorMatrix(spec));
  if (solver.info() != Eigen::Success) Fail(ErrorKind::kInternal, "graph eigendecomposition did not converge");
  GftBasis basis{solver.eigenvectors(), solver.eigenvalues()};
  // Eigenvectors are defined up to sign; make the first non-negligible entry
  // of each column positive.
  for (Eigen::Index k = 0; k < basis.vectors.cols(); ++k) {
    auto col = basis.vectors.col(k);
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col[i]) > 1e-9) {
        if (col[i] < 0) col = -col;
        break;
      }
    }
  }
  return basis;
}

/// Graph-frequency coefficients of one frame: U^T y.
inline Vector Gft(const GftBasis& basis, const Eigen::Ref<const Vector>& frame) {
  if (frame.size() != basis.size()) {
    Fail(ErrorKind::kDimension, "frame length " + std::to_string(frame.size()) + " != basis size " +
                                    std::to_string(basis.size()));
  }
  return basis.vectors.transpose() * frame;
}

// ---------------------------------------------------------------------------
// Cepstra

struct CepstralConfig {
  int n_ceps = 60;
  double log_floor = 1e-10;
  bool append_log_energy = false;

  void Validate() const {
    Require(n_ceps > 0, ErrorKind::kInvalidArgument, "n_ceps must be positive");
    Require(log_floor > 0 && std::isfinite(log_floor), ErrorKind::kInvalidArgument, "log_floor must be positive");
  }
};

/// Truncated orthonormal DCT-II as a length x n_out matrix, so that a row
/// vector times the table gives the first n_out coefficients:
///   out[z] = c(z) * sum_i x[i] cos((i + 0.5) pi z / length),
///   c(0) = sqrt(1/length), c(z > 0) = sqrt(2/length).
inline Matrix DctTable(int length, int n_out) {
  if (n_out > length) {
    Fail(ErrorKind::kInvalidArgument, "n_ceps " + std::to_string(n_out) + " exceeds DCT length " +
                                          std::to_string(length));
  }
  Matrix table(length, n_out);
  for (int z = 0; z < n_out; ++z) {
    const double c = std::sqrt((z == 0 ? 1.0 : 2.0) / length);
    for (int i = 0; i < length; ++i) {
      table(i, z) = c * std::cos((i + 0.5) * std::numbers::pi * z / length);
    }
  }
  return table;
}

inline Vector LogPower(const Eigen::Ref<const Vector>& x, double floor) {
  return x.unaryExpr([floor](double v) { return std::log(std::max(v * v, floor)); });
}

/// [|y|; ln|y|] with the logarithm floored at `floor`.
inline Vector LogSplice(const Eigen::Ref<const Vector>& coeffs, double floor) {
  const Eigen::Index n = coeffs.size();
  Vector v(2 * n);
  v.head(n) = coeffs.cwiseAbs();
  v.tail(n) = coeffs.unaryExpr([floor](double c) { return std::log(std::max(std::abs(c), floor)); });
  return v;
}

inline Vector GfccFrame(const Eigen::Ref<const Vector>& spectrum, const CepstralConfig& cfg) {
  cfg.Validate();
  const Matrix table = DctTable(static_cast<int>(spectrum.size()), cfg.n_ceps);
  return table.transpose() * LogPower(spectrum, cfg.log_floor);
}

inline Vector GflcFrame(const Eigen::Ref<const Vector>& spectrum, const CepstralConfig& cfg) {
  cfg.Validate();
  const Vector spliced = LogSplice(spectrum, cfg.log_floor);
  const Matrix table = DctTable(static_cast<int>(spliced.size()), cfg.n_ceps);
  return table.transpose() * LogPower(spliced, cfg.log_floor);
}

inline double LogEnergy(const Eigen::Ref<const Vector>& frame, double floor) {
  return std::log(std::max(frame.squaredNorm(), floor));
}

inline Vector AppendLogEnergy(const Eigen::Ref<const Vector>& row, const Eigen::Ref<const Vector>& frame,
                              double floor = 1e-10) {
  Require(frame.size() > 0, ErrorKind::kInvalidArgument, "empty frame");
  Vector out(row.size() + 1);
  out.head(row.size()) = row;
  out[row.size()] = LogEnergy(frame, floor);
  return out;
}

/// Per-utterance mean and variance normalisation (population variance).
/// Columns whose deviation is below 1e-12 are only mean-subtracted.
inline FeatureMatrix Cmvn(const FeatureMatrix& m) {
  Require(m.frames() >= 1, ErrorKind::kInvalidArgument, "CMVN needs at least one frame");
  FeatureMatrix out = m;
  const Eigen::RowVectorXd mean = m.rows.colwise().mean();
  out.rows.rowwise() -= mean;
  const Eigen::RowVectorXd sd = (out.rows.array().square().colwise().sum() / static_cast<double>(m.frames())).sqrt();
  for (Eigen::Index d = 0; d < m.dim(); ++d) {
    if (sd[d] >= 1e-12) out.rows.col(d) /= sd[d];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Utterance-level extraction

struct FrontendConfig {
  FrameConfig frame;
  Topology topology = Topology::kPath;
  GraphOperator op = GraphOperator::kLaplacian;
  CepstralConfig ceps;
  bool cmvn = false;

  GraphSpec graph() const { return {topology, frame.frame_len, op}; }
};

/// Holds the graph basis and DCT tables for one configuration; immutable
/// after construction and safe to share between threads.
class FeatureExtractor {
 public:
  FeatureExtractor(const FrontendConfig& cfg, FeatureKind kind) : cfg_(cfg), kind_(kind) {
    cfg_.frame.Validate();
    cfg_.ceps.Validate();
    if (kind != FeatureKind::kGfcc && kind != FeatureKind::kGflc) {
      Fail(ErrorKind::kInvalidArgument, "front-end extracts gfcc or gflc only");
    }
    basis_ = BuildGraphBasis(cfg_.graph());
    const int n = cfg_.frame.frame_len;
    dct_ = DctTable(kind == FeatureKind::kGfcc ? n : 2 * n, cfg_.ceps.n_ceps);
  }

  const GftBasis& basis() const { return basis_; }
  const FrontendConfig& config() const { return cfg_; }
  FeatureKind kind() const { return kind_; }

  int dim() const { return cfg_.ceps.n_ceps + (cfg_.ceps.append_log_energy ? 1 : 0); }

  FeatureMatrix Extract(const AudioSignal& sig) const {
    const RowMatrix frames = FrameSignal(sig, cfg_.frame);
    const RowMatrix spectra = frames * basis_.vectors;
    const double floor = cfg_.ceps.log_floor;

    FeatureMatrix out;
    out.kind = kind_;
    out.rows.resize(frames.rows(), dim());
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
      const Vector coeffs = spectra.row(t).transpose();
      const Vector logp = kind_ == FeatureKind::kGfcc ? LogPower(coeffs, floor)
                                                      : LogPower(LogSplice(coeffs, floor), floor);
      out.rows.row(t).head(cfg_.ceps.n_ceps) = (dct_.transpose() * logp).transpose();
      if (cfg_.ceps.append_log_energy) {
        out.rows(t, cfg_.ceps.n_ceps) = LogEnergy(frames.row(t).transpose(), floor);
      }
    }
    return cfg_.cmvn ? Cmvn(out) : out;
  }

 private:
  FrontendConfig cfg_;
  FeatureKind kind_;
  GftBasis basis_;
  Matrix dct_;
};

inline FeatureMatrix ExtractFeatures(const AudioSignal& sig, FeatureKind kind, const FrontendConfig& cfg) {
  return FeatureExtractor(cfg, kind).Extract(sig);
}

}  // namespace grd

#endif  // GRD_GRAPH_FRONTEND_HPP_
