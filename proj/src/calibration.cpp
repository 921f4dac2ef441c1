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

#include "slimnet/calibration.hpp"

#include <algorithm>
#include <numeric>

#include "slimnet/errors.hpp"

namespace slimnet {

std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t batch_size) {
    batch_size = std::max<std::size_t>(batch_size, 2);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t b = 0; b < n; b += batch_size) out.emplace_back(b, std::min(n, b + batch_size));
    // A trailing single sample joins the previous batch.
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out.pop_back();
        out.back().second = n;
    }
    return out;
}

BNStatsEntry calibrate(const SubnetView& view, const SubnetConfig& config, const Dataset& stream, int budget,
                       int batch_size) {
    if (budget < 1) throw InvalidArgument("calibration budget must be >= 1");
    if (stream.size() == 0) throw InsufficientData("calibration stream is empty");
    if (WidthMultiplier(view.width()) != config.width) {
        throw InvalidArgument("view width does not match the calibrated config " + to_string(config));
    }
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(budget), stream.size());
    if (n < 2) throw InsufficientData("calibration needs at least two samples");

    std::map<std::size_t, ChannelMoments> moments;
    for (std::size_t i = 0; i < view.layers().size(); ++i) {
        if (view.layers()[i].kind == LayerKind::Normalization) moments.emplace(i, ChannelMoments(view.layers()[i].in_channels));
    }
    ForwardOptions opts;
    opts.mode = NormMode::Batch;
    opts.on_norm_input = [&](std::size_t layer, const Tensor& x) { moments.at(layer).add(x); };

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (auto [b, e] : batch_bounds(n, static_cast<std::size_t>(batch_size))) {
        Batch batch = eval_batch(stream, std::span<const std::size_t>(idx).subspan(b, e - b), config.resolution);
        view.forward(batch.images, opts);
    }
    BNStatsEntry entry;
    entry.config = config;
    for (auto& [layer, m] : moments) entry.layers.emplace(layer, m.finish(static_cast<std::int64_t>(n)));
    return entry;
}

}  // namespace slimnet
