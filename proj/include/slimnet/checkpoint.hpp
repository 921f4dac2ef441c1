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
#include <string>

#include "slimnet/model_spec.hpp"
#include "slimnet/weights.hpp"

namespace slimnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    SlimmableModelSpec spec;
    WeightStore store;
};

/// Binary checkpoint: magic, version, spec hash, spec text, then every
/// parameter's shape and values. Written atomically.
void save_checkpoint(const std::string& path, const SlimmableModelSpec& spec, const WeightStore& store);

/// Throws IngestionError on bad magic, unknown version, hash mismatch or truncation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace slimnet
