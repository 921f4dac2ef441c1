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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "slimnet/model_spec.hpp"
#include "slimnet/tensor.hpp"

namespace slimnet {

inline constexpr float kNormEpsilon = 1e-5f;
inline constexpr int kDefaultCalibrationBudget = 2000;

/// Mean and population variance of one normalization layer's input.
struct LayerStats {
    std::vector<double> mean;
    std::vector<double> variance;
    std::int64_t count = 0;  // samples (images) that contributed
};

/// Post-training statistics for one (width, resolution) configuration,
/// keyed by the normalization layer's index in the model.
struct BNStatsEntry {
    SubnetConfig config;
    std::map<std::size_t, LayerStats> layers;
};

/// Per-configuration statistics collected after training.
class BNStatsBank {
public:
    int calibration_sample_budget = kDefaultCalibrationBudget;

    void insert(BNStatsEntry entry);
    bool contains(const SubnetConfig& c) const { return entries_.count(c) != 0; }
    /// Throws CalibrationRequired when the exact config was never calibrated.
    const BNStatsEntry& at(const SubnetConfig& c) const;
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<SubnetConfig, BNStatsEntry>& entries() const noexcept { return entries_; }

    void save(const std::string& path, std::uint64_t spec_hash) const;
    static BNStatsBank load(const std::string& path, std::uint64_t expected_spec_hash);

private:
    std::map<SubnetConfig, BNStatsEntry> entries_;
};

/// One-pass per-channel mean/variance over NCHW activations, merged batch by
/// batch with Chan's parallel update.
class ChannelMoments {
public:
    explicit ChannelMoments(int channels = 0);

    void add(const Tensor& activations);
    int channels() const noexcept { return static_cast<int>(mean_.size()); }
    std::int64_t elements() const noexcept { return n_; }
    LayerStats finish(std::int64_t samples) const;

private:
    std::int64_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Cache kept by a training-mode normalization for its backward pass.
struct NormCache {
    Tensor normalized;
    std::vector<float> inv_std;
};

/// Normalizes with current-batch statistics; `scale`/`shift` are the leading
/// slices of the shared parameters. Throws DegenerateBatch for batch < 2.
Tensor train_mode_normalize(const Tensor& x, std::span<const float> scale, std::span<const float> shift,
                            NormCache* cache = nullptr);

/// Gradient of train_mode_normalize. Accumulates into the scale/shift gradient slices.
Tensor train_mode_normalize_backward(const Tensor& grad_out, const NormCache& cache, std::span<const float> scale,
                                     std::span<float> scale_grad, std::span<float> shift_grad);

/// Normalizes with stored statistics.
Tensor eval_mode_normalize(const Tensor& x, const LayerStats& stats, std::span<const float> scale,
                           std::span<const float> shift);

}  // namespace slimnet
