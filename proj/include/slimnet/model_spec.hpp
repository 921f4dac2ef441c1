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
#include <vector>

namespace slimnet {

/// Fraction of channels kept in every sliceable layer, in (0, 1].
class WidthMultiplier {
public:
    WidthMultiplier() = default;
    /// Throws InvalidArgument outside (0, 1].
    explicit WidthMultiplier(double value);

    double value() const noexcept { return value_; }
    /// Integer key at 1e-4 resolution, used to index per-config tables.
    int key() const noexcept;

    friend bool operator==(WidthMultiplier a, WidthMultiplier b) noexcept { return a.key() == b.key(); }
    friend auto operator<=>(WidthMultiplier a, WidthMultiplier b) noexcept { return a.key() <=> b.key(); }

private:
    double value_ = 1.0;
};

/// The unit of execution, costing and planning: a width at a square input resolution.
struct SubnetConfig {
    WidthMultiplier width;
    int resolution = 0;

    friend bool operator==(const SubnetConfig&, const SubnetConfig&) = default;
    friend auto operator<=>(const SubnetConfig& a, const SubnetConfig& b) {
        if (auto c = a.width <=> b.width; c != 0) return c;
        return a.resolution <=> b.resolution;
    }
};

std::string to_string(const SubnetConfig& c);

/// Strictly decreasing, non-empty list of input sides.
class ResolutionSet {
public:
    ResolutionSet() = default;
    /// Sorts descending; throws InvalidArgument on empty, duplicate or non-positive input.
    explicit ResolutionSet(std::vector<int> values);

    const std::vector<int>& values() const noexcept { return values_; }
    int max() const { return values_.front(); }
    int min() const { return values_.back(); }
    bool contains(int r) const;
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<int> values_;
};

enum class LayerKind { Convolution, DepthwiseConvolution, GroupConvolution, FullyConnected, Normalization, Pooling, Activation };

const char* to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& token);

/// One layer of the backbone at full width.
struct LayerSpec {
    LayerKind kind = LayerKind::Activation;
    int base_in_channels = 0;
    int base_out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int groups = 1;
    int pad = 0;
    bool bias = false;

    bool has_weights() const noexcept {
        return kind == LayerKind::Convolution || kind == LayerKind::DepthwiseConvolution ||
               kind == LayerKind::GroupConvolution || kind == LayerKind::FullyConnected ||
               kind == LayerKind::Normalization;
    }
    bool is_conv() const noexcept {
        return kind == LayerKind::Convolution || kind == LayerKind::DepthwiseConvolution ||
               kind == LayerKind::GroupConvolution;
    }
};

/// A layer after slicing to a concrete width.
struct SlicedLayer {
    LayerKind kind = LayerKind::Activation;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int groups = 1;
    int pad = 0;
    bool bias = false;
};

/// Output side of a convolution with floor semantics; 0 when the window does not fit.
int conv_output_size(int in, int kernel, int stride, int pad) noexcept;

/// Leading-channel count kept at `width`: max(divisor, round(base*width/divisor)*divisor).
int sliced_channels(int base_channels, double width, int divisor);

class SlimmableModelSpec {
public:
    std::string name = "backbone";
    int input_channels = 3;
    int num_classes = 10;
    int channel_divisor = 8;
    double width_lower_bound = 0.25;
    ResolutionSet resolutions{{32}};
    std::vector<LayerSpec> layers;

    /// Checks channel interfaces, divisibility and classifier placement.
    void validate() const;

    /// Throws ConstraintViolation when width is below the lower bound.
    void check_width(double width) const;

    /// Per-layer channel counts at `width`. Does not enforce the lower bound.
    std::vector<SlicedLayer> slice(double width) const;

    /// Spatial side at the input of each layer plus the final one; throws
    /// InvalidArgument when some layer's window no longer fits.
    std::vector<int> spatial_walk(int resolution) const;

    /// Index of the classifier (last fully-connected layer).
    std::size_t classifier_index() const;

    std::string to_text() const;
    std::uint64_t hash() const;

    static SlimmableModelSpec parse(const std::string& text);
    static SlimmableModelSpec load(const std::string& path);
};

/// MobileNet v1 at 224 with a 1000-way classifier.
SlimmableModelSpec mobilenet_v1_spec(int num_classes = 1000);

/// A MobileNet-v1-style stack shrunk for 32x32 inputs.
SlimmableModelSpec cifar_mobilenet_spec(int num_classes = 10);

/// Minimal conv/bn/relu/pool/fc network, handy for tests.
SlimmableModelSpec tiny_spec(int c1, int c2, int num_classes, int divisor = 8);

}  // namespace slimnet
