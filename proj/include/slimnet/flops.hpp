/*
 * Copyright 2026 The slimnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "slimnet/model_spec.hpp"

namespace slimnet {

/// Multiply-accumulate count of one layer at sliced channel counts.
/// Convolutions cost C1*(C2/g)*K*K*H*W over output H*W, fully-connected
/// layers in*out; normalization, pooling and activations cost nothing.
/// Throws InvalidArgument on non-positive dimensions.
std::int64_t layer_cost(const SlicedLayer& layer, int out_h, int out_w);

struct LayerCost {
    std::size_t layer = 0;
    std::int64_t macs = 0;
};

struct CostReport {
    SubnetConfig config;
    std::vector<LayerCost> per_layer;
    std::int64_t total = 0;

    double mflops() const noexcept { return static_cast<double>(total) / 1e6; }
};

/// Analytic cost of the sub-network at `config`; spatial sizes follow the
/// executable network's floor semantics.
CostReport network_cost(const SlimmableModelSpec& spec, const SubnetConfig& config);

/// Writes "width,resolution,mflops" rows for every pair of the two grids.
void write_flops_grid(std::ostream& out, const SlimmableModelSpec& spec, const std::vector<double>& widths,
                      const std::vector<int>& resolutions);

}  // namespace slimnet
