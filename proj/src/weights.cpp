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

#include "slimnet/weights.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace slimnet {

namespace {

Parameter make_param(int rows, int cols) {
    Parameter p;
    p.rows = rows;
    p.cols = cols;
    p.value.assign(static_cast<std::size_t>(rows) * cols, 0.0f);
    p.grad.assign(p.value.size(), 0.0f);
    return p;
}

}  // namespace

WeightStore::WeightStore(const SlimmableModelSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    layers_.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        LayerParams& p = layers_[i];
        switch (l.kind) {
            case LayerKind::Convolution:
            case LayerKind::GroupConvolution:
            case LayerKind::DepthwiseConvolution: {
                const int groups = l.kind == LayerKind::Convolution ? 1 : l.groups;
                const int cols = l.base_in_channels / groups * l.kernel * l.kernel;
                p.weight = make_param(l.base_out_channels, cols);
                // He initialization on fan-out, as is usual for separable stacks.
                const double fan_out = static_cast<double>(l.base_out_channels) / groups * l.kernel * l.kernel;
                std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan_out)));
                for (float& v : p.weight.value) v = dist(rng);
                if (l.bias) p.bias = make_param(1, l.base_out_channels);
                break;
            }
            case LayerKind::FullyConnected: {
                p.weight = make_param(l.base_out_channels, l.base_in_channels);
                std::normal_distribution<float> dist(0.0f, 0.01f);
                for (float& v : p.weight.value) v = dist(rng);
                if (l.bias) p.bias = make_param(1, l.base_out_channels);
                break;
            }
            case LayerKind::Normalization:
                p.weight = make_param(1, l.base_in_channels);
                std::fill(p.weight.value.begin(), p.weight.value.end(), 1.0f);
                p.bias = make_param(1, l.base_in_channels);
                break;
            default:
                break;
        }
    }
}

void WeightStore::zero_grad() {
    for_each([](std::size_t, bool, Parameter& p) { std::fill(p.grad.begin(), p.grad.end(), 0.0f); });
}

std::size_t WeightStore::parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::size_t, bool, const Parameter& p) { n += p.value.size(); });
    return n;
}

}  // namespace slimnet
