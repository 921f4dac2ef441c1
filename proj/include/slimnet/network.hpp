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

#include <functional>
#include <vector>

#include "slimnet/model_spec.hpp"
#include "slimnet/norm.hpp"
#include "slimnet/tensor.hpp"
#include "slimnet/weights.hpp"

namespace slimnet {

enum class NormMode {
    Batch,       // current-batch statistics (training, calibration)
    Calibrated,  // statistics from a BNStatsEntry
};

struct ForwardOptions {
    NormMode mode = NormMode::Batch;
    const BNStatsEntry* stats = nullptr;
    /// Called with the input of every normalization layer.
    std::function<void(std::size_t layer, const Tensor& input)> on_norm_input;
    /// Called after every layer with its input and output.
    std::function<void(std::size_t layer, const SlicedLayer&, const Tensor& input, const Tensor& output)> on_layer;
};

/// Activations retained by forward() so backward() can run.
struct ForwardTrace {
    NormMode mode = NormMode::Batch;
    const BNStatsEntry* stats = nullptr;
    std::vector<Tensor> inputs;
    std::vector<NormCache> norms;
};

/// A width-sliced, executable view over the shared weight store. Every layer
/// reads the leading block of its full-width parameters in place and
/// backward() accumulates into the leading block of the shared gradients,
/// so several views stepped in sequence sum their gradients automatically.
class SubnetView {
public:
    const SlimmableModelSpec& spec() const noexcept { return *spec_; }
    WeightStore& store() const noexcept { return *store_; }
    double width() const noexcept { return width_; }
    const std::vector<SlicedLayer>& layers() const noexcept { return layers_; }

    /// images: [N, input_channels, r, r] -> logits [N, num_classes].
    Tensor forward(const Tensor& images, const ForwardOptions& options = {}, ForwardTrace* trace = nullptr) const;

    /// Accumulates parameter gradients of `grad_logits` into the store.
    /// Returns the gradient with respect to the images.
    Tensor backward(const Tensor& grad_logits, ForwardTrace& trace) const;

    /// Copies the leading [rows, cols] block this view uses from a layer's weight or bias.
    std::vector<float> slice_values(std::size_t layer, bool bias = false) const;
    /// Shape of that block.
    std::pair<int, int> slice_shape(std::size_t layer, bool bias = false) const;

private:
    friend SubnetView materialize_subnet(const SlimmableModelSpec&, WeightStore&, double);
    friend SubnetView materialize_unchecked(const SlimmableModelSpec&, WeightStore&, double);
    SubnetView(const SlimmableModelSpec& spec, WeightStore& store, double width);

    const SlimmableModelSpec* spec_;
    WeightStore* store_;
    double width_;
    std::vector<SlicedLayer> layers_;
};

/// View at `width`; throws ConstraintViolation below the model's lower bound.
SubnetView materialize_subnet(const SlimmableModelSpec& spec, WeightStore& store, double width);

/// Same without the lower-bound check (used to probe widths in tests and cost walks).
SubnetView materialize_unchecked(const SlimmableModelSpec& spec, WeightStore& store, double width);

}  // namespace slimnet
