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

#include "slimnet/flops.hpp"

#include <iomanip>
#include <ostream>

#include "slimnet/errors.hpp"

namespace slimnet {

std::int64_t layer_cost(const SlicedLayer& l, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1 || l.in_channels < 1 || l.out_channels < 1 || l.kernel < 1 || l.groups < 1) {
        throw InvalidArgument("layer_cost needs positive dimensions");
    }
    switch (l.kind) {
        case LayerKind::Convolution:
        case LayerKind::DepthwiseConvolution:
        case LayerKind::GroupConvolution: {
            if (l.out_channels % l.groups != 0) throw InvalidArgument("groups must divide output channels");
            const std::int64_t k2 = static_cast<std::int64_t>(l.kernel) * l.kernel;
            return static_cast<std::int64_t>(l.in_channels) * (l.out_channels / l.groups) * k2 * out_h * out_w;
        }
        case LayerKind::FullyConnected:
            return static_cast<std::int64_t>(l.in_channels) * l.out_channels;
        default:
            return 0;
    }
}

CostReport network_cost(const SlimmableModelSpec& spec, const SubnetConfig& config) {
    const std::vector<int> sides = spec.spatial_walk(config.resolution);
    const std::vector<SlicedLayer> sliced = spec.slice(config.width.value());
    CostReport report;
    report.config = config;
    for (std::size_t i = 0; i < sliced.size(); ++i) {
        const int out = sides[i + 1];
        const std::int64_t macs = layer_cost(sliced[i], out, out);
        report.per_layer.push_back({i, macs});
        report.total += macs;
    }
    return report;
}

void write_flops_grid(std::ostream& out, const SlimmableModelSpec& spec, const std::vector<double>& widths,
                      const std::vector<int>& resolutions) {
    out << "width,resolution,mflops\n";
    for (double w : widths) {
        for (int r : resolutions) {
            const CostReport c = network_cost(spec, {WidthMultiplier(w), r});
            out << std::fixed << std::setprecision(2) << w << ',' << r << ',' << std::setprecision(6) << c.mflops()
                << '\n';
        }
    }
}

}  // namespace slimnet
