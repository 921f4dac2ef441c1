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

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "slimnet/model_spec.hpp"
#include "slimnet/tensor.hpp"

namespace slimnet {

enum class Split { Train, Val, Test };

const char* to_string(Split s);

/// Images held as uint8 CHW planes at a common square side.
struct Dataset {
    std::string name;
    int num_classes = 0;
    int channels = 3;
    int side = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    /// Per-channel normalization, computed from the training split.
    std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
    std::array<float, 3> stddev{1.0f, 1.0f, 1.0f};

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t image_bytes() const noexcept { return static_cast<std::size_t>(channels) * side * side; }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * image_bytes(), image_bytes()};
    }
    /// Subset in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;
};

struct DatasetSource {
    std::string name = "cifar10";  // cifar10 | cifar100 | folder | synthetic
    std::string root;
    std::uint64_t seed = 0;
    /// Held out from the training files for validation.
    std::size_t val_size = 5000;
    /// Optional cap on the training split (0 = all), for reduced runs.
    std::size_t train_limit = 0;
    std::size_t test_limit = 0;
    /// folder datasets are resized to this side on load.
    int side = 32;
    /// synthetic only
    int synthetic_classes = 10;
    std::size_t synthetic_train = 2000;
    std::size_t synthetic_test = 500;
};

/// Loads one split. Orders are deterministic under `source.seed` and the
/// three splits are disjoint. Throws IngestionError naming the offending file.
Dataset load_dataset(const DatasetSource& source, Split split);

/// Verifies `sha256sum`-style lines "<hex>  <relative path>" under `root`.
/// Throws IngestionError on the first mismatch or missing file.
void verify_manifest(const std::string& root, const std::string& manifest_path);

/// Procedurally generated class-conditional images, for tests and smoke runs.
Dataset make_synthetic_dataset(int num_classes, std::size_t count, int side, std::uint64_t seed);

struct Batch {
    Tensor images;  // [N, C, r, r], normalized
    std::vector<int> labels;
    int resolution = 0;
};

struct AugmentOptions {
    bool enabled = true;
    int pad = 4;
    bool flip = true;
};

/// Bilinear resampling of every plane of an NCHW tensor (half-pixel centers).
Tensor resize_bilinear(const Tensor& images, int out_side);

/// One crop per sample at `base_resolution`, augmented when `augment.enabled`.
Batch prepare_base_batch(const Dataset& data, std::span<const std::size_t> indices, int base_resolution,
                         const AugmentOptions& augment, std::mt19937_64& rng);

/// The same crops downsampled to every target; throws InvalidArgument for
/// a target above the base resolution.
std::map<int, Batch> make_multires_batch(const Batch& base, const ResolutionSet& targets);

/// Un-augmented batch at `resolution`, for calibration and evaluation.
Batch eval_batch(const Dataset& data, std::span<const std::size_t> indices, int resolution);

/// Shuffled index order for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::mt19937_64& rng);

}  // namespace slimnet
