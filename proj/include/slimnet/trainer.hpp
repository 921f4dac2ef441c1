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
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "slimnet/data.hpp"
#include "slimnet/model_spec.hpp"
#include "slimnet/network.hpp"
#include "slimnet/weights.hpp"

namespace slimnet {

enum class TrainMode {
    MutualNet,            // sandwich widths, per-student random resolutions
    USNetBaseline,        // sandwich widths, one fixed resolution
    MultiscaleAugSingle,  // full network only, per-iteration random resolution
    MultiscaleAugUSNet,   // sandwich widths sharing one per-iteration random resolution
    Independent,          // one fixed (width, resolution), cross-entropy only
};

const char* to_string(TrainMode mode);
/// Accepts mutualnet, usnet_baseline, multiscale_aug_single, multiscale_aug_usnet, independent.
TrainMode parse_train_mode(const std::string& name);

enum class LossRole { Teacher, Student };

struct PlanEntry {
    double width = 1.0;
    int resolution = 0;
    LossRole role = LossRole::Student;
};

/// Sub-networks of one iteration. The teacher, when present, comes first
/// so its predictions exist before any student needs them.
struct TrainStepPlan {
    std::vector<PlanEntry> subnets;
};

/// Sandwich sampling: {1.0 teacher at max resolution, lower, a1, a2} with
/// a1, a2 ~ U(lower, 1) and student resolutions drawn uniformly with
/// replacement. Throws DegenerateRange unless 0 < lower < 1.
TrainStepPlan sample_plan(double lower, const ResolutionSet& resolutions, std::mt19937_64& rng);

/// Plan for one iteration of `mode`; consumes rng in the same order as
/// sample_plan for the sandwich modes.
TrainStepPlan plan_for_mode(TrainMode mode, double lower, const ResolutionSet& resolutions, int fixed_resolution,
                            double fixed_width, std::mt19937_64& rng);

struct LossBreakdown {
    double loss_full = 0.0;
    std::vector<double> loss_sub;
    double total = 0.0;
};

Tensor softmax(const Tensor& logits);

/// Mean cross-entropy over the batch; writes d(loss)/d(logits) when `grad` is set.
/// Throws InvalidArgument for labels outside [0, classes).
double cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* grad = nullptr);

/// Mean over the batch of KL(teacher || student) at temperature 1. The
/// teacher distribution is a constant target; `grad` receives the gradient
/// with respect to the student logits only.
double kl_divergence(const Tensor& teacher_probs, const Tensor& student_logits, Tensor* grad = nullptr);

/// Forward-only losses of a plan. `batch` carries images at the plan's
/// largest resolution; every entry sees a bilinear downsample of the same crops.
LossBreakdown compute_losses(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                             const Batch& batch);

/// Zeros the gradients, then runs forward/backward for every entry of the
/// plan in order, summing all parameter gradients in the shared store.
/// Throws NonFiniteLoss (before any update) when a loss is not finite.
LossBreakdown accumulate_gradients(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                                   const Batch& batch);

/// Momentum SGD with decoupled-from-BN weight decay (convolution and
/// fully-connected weights only).
class SgdOptimizer {
public:
    double momentum = 0.9;
    double weight_decay = 5e-4;
    bool nesterov = true;

    SgdOptimizer() = default;
    SgdOptimizer(const SlimmableModelSpec& spec, const WeightStore& store);

    void step(WeightStore& store, double lr);

private:
    std::vector<bool> decays_;  // per layer
    std::vector<std::vector<float>> velocity_;
    std::size_t param_count_ = 0;
};

/// One optimizer update from the summed gradients of every plan entry.
LossBreakdown train_step(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                         const Batch& batch, SgdOptimizer& optimizer, double lr);

struct Schedule {
    int epochs = 10;
    int batch_size = 64;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    bool nesterov = true;
};

/// Cosine decay from `base` to 0 over `total` iterations.
double cosine_lr(double base, std::int64_t iteration, std::int64_t total);

struct EpochMetrics {
    int epoch = 0;
    double loss_full = 0.0;
    double loss_sub = 0.0;  // mean per student per step
    double total = 0.0;
    double train_top1 = 0.0;  // teacher entry on its training crops
    double val_top1 = -1.0;   // full network, calibrated; -1 when not evaluated
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainOptions {
    TrainMode mode = TrainMode::MutualNet;
    double width_lower_bound = 0.25;
    ResolutionSet resolutions{{32, 28, 24, 20}};
    /// usnet_baseline and independent resolution; 0 means the largest of `resolutions`.
    int fixed_resolution = 0;
    /// independent-mode width.
    double fixed_width = 1.0;
    Schedule schedule;
    AugmentOptions augment;
    std::uint64_t seed = 0;
    /// Per-epoch validation of the full network (0 disables).
    std::size_t val_samples = 0;
    int val_calibration = 500;
    std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
    WeightStore store;
    std::vector<EpochMetrics> epochs;
};

/// Trains from scratch on `train`. `val` is used only for per-epoch metrics.
TrainResult run_training(const SlimmableModelSpec& spec, const Dataset& train, const Dataset* val,
                         const TrainOptions& options);

/// Top-1 accuracy of a calibrated sub-network.
double evaluate_top1(const SubnetView& view, const BNStatsEntry& stats, const Dataset& data, int resolution,
                     int batch_size = 200);

}  // namespace slimnet
