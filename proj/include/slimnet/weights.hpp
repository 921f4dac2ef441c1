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
#include <vector>

#include "slimnet/model_spec.hpp"

namespace slimnet {

/// A full-width parameter stored as a row-major [rows, cols] matrix with a
/// gradient buffer of identical layout. Sub-networks address its leading
/// block, so every width shares one copy of the values.
struct Parameter {
    int rows = 0;
    int cols = 0;
    std::vector<float> value;
    std::vector<float> grad;

    bool empty() const noexcept { return value.empty(); }
    float& at(int r, int c) { return value[static_cast<std::size_t>(r) * cols + c]; }
    float at(int r, int c) const { return value[static_cast<std::size_t>(r) * cols + c]; }
    float grad_at(int r, int c) const { return grad[static_cast<std::size_t>(r) * cols + c]; }
};

/// Parameters of one layer. Convolutions keep [out, in/groups*k*k]; fully
/// connected layers keep [out, in]; normalization keeps scale in `weight`
/// and shift in `bias`, both [1, channels].
struct LayerParams {
    Parameter weight;
    Parameter bias;
};

/// The single shared weight store behind every sub-network.
class WeightStore {
public:
    WeightStore() = default;
    /// Allocates every parameter at full width and initializes it from `seed`.
    WeightStore(const SlimmableModelSpec& spec, std::uint64_t seed);

    std::vector<LayerParams>& layers() noexcept { return layers_; }
    const std::vector<LayerParams>& layers() const noexcept { return layers_; }
    LayerParams& layer(std::size_t i) { return layers_.at(i); }
    const LayerParams& layer(std::size_t i) const { return layers_.at(i); }

    void zero_grad();
    std::size_t parameter_count() const;

    /// Calls fn(layer index, is_bias, Parameter&) for every non-empty parameter.
    template <typename Fn>
    void for_each(Fn&& fn) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (!layers_[i].weight.empty()) fn(i, false, layers_[i].weight);
            if (!layers_[i].bias.empty()) fn(i, true, layers_[i].bias);
        }
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (!layers_[i].weight.empty()) fn(i, false, layers_[i].weight);
            if (!layers_[i].bias.empty()) fn(i, true, layers_[i].bias);
        }
    }

private:
    std::vector<LayerParams> layers_;
};

}  // namespace slimnet
