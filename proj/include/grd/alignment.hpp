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

#ifndef GRD_ALIGNMENT_HPP_
#define GRD_ALIGNMENT_HPP_

// Dynamic time warping between a genuine and a replayed feature sequence.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "grd/error.hpp"
#include "grd/feature_matrix.hpp"

namespace grd {

struct WarpStep {
  Eigen::Index i = 0;  // genuine frame
  Eigen::Index j = 0;  // replay frame

  friend bool operator==(const WarpStep&, const WarpStep&) = default;
};

struct WarpPath {
  std::vector<WarpStep> steps;
  double total_cost = 0.0;
};

template <typename A, typename B>
double LocalCost(const Eigen::MatrixBase<A>& g, const Eigen::MatrixBase<B>& s) {
  if (g.size() != s.size()) Fail(ErrorKind::kDimension, "frame dimensions differ");
  return (g.derived().template cast<double>() - s.derived().template cast<double>()).norm();
}

/// Pairwise Euclidean distances, genuine frames down the rows.
inline Matrix CostMatrix(const RowMatrix& g, const RowMatrix& s) {
  if (g.cols() != s.cols()) Fail(ErrorKind::kDimension, "feature dimensions differ");
  Matrix d(g.rows(), s.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.rows(); ++j) d(i, j) = (g.row(i) - s.row(j)).norm();
  }
  return d;
}

/// Minimum-cost monotone path through a precomputed cost matrix. Steps move
/// by (1,0), (0,1) or (1,1). Backtracking prefers the diagonal predecessor,
/// then the vertical one (i-1, j), then the horizontal one (i, j-1).
inline WarpPath DtwFromCost(const Matrix& d) {
  const Eigen::Index m = d.rows();
  const Eigen::Index n = d.cols();
  if (m == 0 || n == 0) Fail(ErrorKind::kInvalidArgument, "DTW needs nonempty sequences");

  Matrix acc(m, n);
  acc(0, 0) = d(0, 0);
  for (Eigen::Index i = 1; i < m; ++i) acc(i, 0) = d(i, 0) + acc(i - 1, 0);
  for (Eigen::Index j = 1; j < n; ++j) acc(0, j) = d(0, j) + acc(0, j - 1);
  for (Eigen::Index i = 1; i < m; ++i) {
    for (Eigen::Index j = 1; j < n; ++j) {
      acc(i, j) = d(i, j) + std::min({acc(i - 1, j - 1), acc(i - 1, j), acc(i, j - 1)});
    }
  }

  WarpPath path;
  path.total_cost = acc(m - 1, n - 1);
  Eigen::Index i = m - 1;
  Eigen::Index j = n - 1;
  path.steps.push_back({i, j});
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1);
      const double up = acc(i - 1, j);
      const double left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.steps.push_back({i, j});
  }
  std::reverse(path.steps.begin(), path.steps.end());
  return path;
}

inline WarpPath DtwAlign(const FeatureMatrix& genuine, const FeatureMatrix& replay) {
  if (genuine.frames() == 0 || replay.frames() == 0) Fail(ErrorKind::kInvalidArgument, "DTW needs nonempty sequences");
  return DtwFromCost(CostMatrix(genuine.rows, replay.rows));
}

/// Repeats rows of both sequences along the path so they share its length.
inline std::pair<FeatureMatrix, FeatureMatrix> ExpandAlongPath(const FeatureMatrix& genuine,
                                                               const FeatureMatrix& replay,
                                                               const WarpPath& path) {
  if (genuine.dim() != replay.dim()) Fail(ErrorKind::kDimension, "feature dimensions differ");
  const auto len = static_cast<Eigen::Index>(path.steps.size());
  FeatureMatrix g{genuine.kind, RowMatrix(len, genuine.dim())};
  FeatureMatrix s{replay.kind, RowMatrix(len, replay.dim())};
  for (Eigen::Index k = 0; k < len; ++k) {
    const auto [i, j] = path.steps[static_cast<std::size_t>(k)];
    if (i < 0 || i >= genuine.frames() || j < 0 || j >= replay.frames()) {
      Fail(ErrorKind::kInvalidArgument, "warp step (" + std::to_string(i) + ", " + std::to_string(j) +
                                            ") outside the sequences");
    }
    g.rows.row(k) = genuine.rows.row(i);
    s.rows.row(k) = replay.rows.row(j);
  }
  return {std::move(g), std::move(s)};
}

}  // namespace grd

#endif  // GRD_ALIGNMENT_HPP_
