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

#include "slimnet/data.hpp"
#include "slimnet/network.hpp"
#include "slimnet/norm.hpp"

namespace slimnet {

/// Collects post-training normalization statistics for `config` over the
/// first min(budget, stream size) samples of `stream`, forwarded clean at
/// config.resolution. Batches of `batch_size` normalize with their own
/// statistics while each layer's input moments accumulate exactly over the
/// whole stream. Weights are not modified.
/// Throws InsufficientData for an empty stream.
BNStatsEntry calibrate(const SubnetView& view, const SubnetConfig& config, const Dataset& stream,
                       int budget = kDefaultCalibrationBudget, int batch_size = 100);

/// Contiguous [begin, end) batch bounds over n samples, none of size one.
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t batch_size);

}  // namespace slimnet
