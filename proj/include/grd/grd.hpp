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

#ifndef GRD_GRD_HPP_
#define GRD_GRD_HPP_

#include "grd/alignment.hpp"
#include "grd/config.hpp"
#include "grd/device_fa.hpp"
#include "grd/error.hpp"
#include "grd/feature_matrix.hpp"
#include "grd/gmm.hpp"
#include "grd/graph_frontend.hpp"
#include "grd/metrics.hpp"
#include "grd/parallel.hpp"
#include "grd/rng.hpp"
#include "grd/signal_io.hpp"
#include "grd/synth.hpp"

#endif  // GRD_GRD_HPP_
