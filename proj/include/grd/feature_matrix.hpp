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

#ifndef GRD_FEATURE_MATRIX_HPP_
#define GRD_FEATURE_MATRIX_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "grd/error.hpp"

namespace grd {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Feature family. The numeric values are the on-disk kind byte.
enum class FeatureKind : std::uint8_t {
  kGfcc = 0,
  kGflc = 1,
  kGfdcc = 2,
  kGfldc = 3,
};

constexpr std::string_view FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kGfcc: return "gfcc";
    case FeatureKind::kGflc: return "gflc";
    case FeatureKind::kGfdcc: return "gfdcc";
    case FeatureKind::kGfldc: return "gfldc";
  }
  return "unknown";
}

inline std::optional<FeatureKind> ParseFeatureKind(std::string_view name) {
  for (auto k : {FeatureKind::kGfcc, FeatureKind::kGflc, FeatureKind::kGfdcc, FeatureKind::kGfldc}) {
    if (FeatureKindName(k) == name) return k;
  }
  return std::nullopt;
}

/// The device-transformed kind produced from a base cepstral kind.
inline FeatureKind DeviceKindOf(FeatureKind base) {
  switch (base) {
    case FeatureKind::kGfcc: return FeatureKind::kGfdcc;
    case FeatureKind::kGflc: return FeatureKind::kGfldc;
    default: break;
  }
  Fail(ErrorKind::kInvalidArgument,
       "device transform expects gfcc or gflc input, got " + std::string(FeatureKindName(base)));
}

/// T frames by D dimensions, one feature vector per row.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kGfcc;
  RowMatrix rows;

  Eigen::Index frames() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }

  bool AllFinite() const { return rows.allFinite(); }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.kind == b.kind && a.rows.rows() == b.rows.rows() && a.rows.cols() == b.rows.cols() &&
           a.rows == b.rows;
  }
};

}  // namespace grd

#endif  // GRD_FEATURE_MATRIX_HPP_
