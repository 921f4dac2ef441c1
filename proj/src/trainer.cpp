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

#include "slimnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "slimnet/calibration.hpp"
#include "slimnet/errors.hpp"

namespace slimnet {

const char* to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::MutualNet: return "mutualnet";
        case TrainMode::USNetBaseline: return "usnet_baseline";
        case TrainMode::MultiscaleAugSingle: return "multiscale_aug_single";
        case TrainMode::MultiscaleAugUSNet: return "multiscale_aug_usnet";
        case TrainMode::Independent: return "independent";
    }
    return "?";
}

TrainMode parse_train_mode(const std::string& name) {
    for (TrainMode m : {TrainMode::MutualNet, TrainMode::USNetBaseline, TrainMode::MultiscaleAugSingle,
                        TrainMode::MultiscaleAugUSNet, TrainMode::Independent}) {
        if (name == to_string(m)) return m;
    }
    throw InvalidArgument("unknown training mode '" + name + "'");
}

TrainStepPlan sample_plan(double lower, const ResolutionSet& resolutions, std::mt19937_64& rng) {
    if (!(lower > 0.0 && lower < 1.0)) {
        throw DegenerateRange("sandwich sampling needs a width lower bound in (0, 1), got " + std::to_string(lower));
    }
    if (resolutions.size() == 0) throw InvalidArgument("resolution set is empty");
    std::uniform_real_distribution<double> width_dist(lower, 1.0);
    std::uniform_int_distribution<std::size_t> res_dist(0, resolutions.size() - 1);
    auto open_width = [&] {
        double w;
        do {
            w = width_dist(rng);
        } while (w <= lower || w >= 1.0);
        return w;
    };
    TrainStepPlan plan;
    plan.subnets.push_back({1.0, resolutions.max(), LossRole::Teacher});
    const double a1 = open_width();
    const double a2 = open_width();
    for (double w : {lower, a1, a2}) {
        plan.subnets.push_back({w, resolutions.values()[res_dist(rng)], LossRole::Student});
    }
    return plan;
}

TrainStepPlan plan_for_mode(TrainMode mode, double lower, const ResolutionSet& resolutions, int fixed_resolution,
                            double fixed_width, std::mt19937_64& rng) {
    const int fixed = fixed_resolution > 0 ? fixed_resolution : resolutions.max();
    switch (mode) {
        case TrainMode::MutualNet:
            return sample_plan(lower, resolutions, rng);
        case TrainMode::USNetBaseline:
            return sample_plan(lower, ResolutionSet({fixed}), rng);
        case TrainMode::MultiscaleAugUSNet: {
            TrainStepPlan plan = sample_plan(lower, ResolutionSet({fixed}), rng);
            std::uniform_int_distribution<std::size_t> res_dist(0, resolutions.size() - 1);
            const int r = resolutions.values()[res_dist(rng)];
            for (PlanEntry& e : plan.subnets) e.resolution = r;
            return plan;
        }
        case TrainMode::MultiscaleAugSingle: {
            std::uniform_int_distribution<std::size_t> res_dist(0, resolutions.size() - 1);
            return TrainStepPlan{{{1.0, resolutions.values()[res_dist(rng)], LossRole::Teacher}}};
        }
        case TrainMode::Independent:
            return TrainStepPlan{{{fixed_width, fixed, LossRole::Teacher}}};
    }
    throw InvalidArgument("unknown training mode");
}

Tensor softmax(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor p(logits.shape);
    for (int i = 0; i < n; ++i) {
        const float* z = logits.ptr() + static_cast<std::size_t>(i) * k;
        float* q = p.ptr() + static_cast<std::size_t>(i) * k;
        const float mx = *std::max_element(z, z + k);
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += std::exp(static_cast<double>(z[j] - mx));
        for (int j = 0; j < k; ++j) q[j] = static_cast<float>(std::exp(static_cast<double>(z[j] - mx)) / s);
    }
    return p;
}

namespace {

// log-softmax of one row, in double.
void log_softmax_row(const float* z, int k, std::vector<double>& out) {
    out.resize(k);
    const float mx = *std::max_element(z, z + k);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(static_cast<double>(z[j] - mx));
    const double lse = std::log(s) + mx;
    for (int j = 0; j < k; ++j) out[j] = z[j] - lse;
}

}  // namespace

double cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* grad) {
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n) throw InvalidArgument("label count does not match batch size");
    if (grad) *grad = Tensor(logits.shape);
    std::vector<double> lp;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= k) throw InvalidArgument("label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
        log_softmax_row(logits.ptr() + static_cast<std::size_t>(i) * k, k, lp);
        loss -= lp[y];
        if (grad) {
            float* g = grad->ptr() + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) g[j] = static_cast<float>((std::exp(lp[j]) - (j == y ? 1.0 : 0.0)) / n);
        }
    }
    return loss / n;
}

double kl_divergence(const Tensor& teacher_probs, const Tensor& student_logits, Tensor* grad) {
    const int n = student_logits.dim(0), k = student_logits.dim(1);
    if (teacher_probs.shape != student_logits.shape) throw InvalidArgument("teacher and student shapes differ");
    if (grad) *grad = Tensor(student_logits.shape);
    std::vector<double> lq;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        log_softmax_row(student_logits.ptr() + static_cast<std::size_t>(i) * k, k, lq);
        const float* p = teacher_probs.ptr() + static_cast<std::size_t>(i) * k;
        double row = 0.0;
        for (int j = 0; j < k; ++j) {
            if (p[j] > 0.0f) row += p[j] * (std::log(static_cast<double>(p[j])) - lq[j]);
        }
        loss += row;
        if (grad) {
            float* g = grad->ptr() + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < k; ++j) g[j] = static_cast<float>((std::exp(lq[j]) - p[j]) / n);
        }
    }
    // Rounding can leave a tiny negative value for identical distributions.
    return std::max(0.0, loss / n);
}

namespace {

LossBreakdown run_plan(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                       const Batch& batch, bool backward, Tensor* teacher_logits_out) {
    if (plan.subnets.empty()) throw InvalidArgument("empty training plan");
    for (int y : batch.labels) {
        if (y < 0 || y >= spec.num_classes) throw InvalidArgument("label " + std::to_string(y) + " out of range");
    }
    std::map<int, Tensor> inputs;
    for (const PlanEntry& e : plan.subnets) {
        if (e.resolution > batch.resolution) {
            throw InvalidArgument("plan resolution " + std::to_string(e.resolution) + " exceeds batch resolution " +
                                  std::to_string(batch.resolution));
        }
        if (!inputs.count(e.resolution)) inputs.emplace(e.resolution, resize_bilinear(batch.images, e.resolution));
    }
    if (backward) store.zero_grad();

    LossBreakdown out;
    Tensor teacher_probs;
    bool have_teacher = false;
    for (const PlanEntry& e : plan.subnets) {
        const SubnetView view = materialize_subnet(spec, store, e.width);
        ForwardTrace trace;
        const Tensor logits = view.forward(inputs.at(e.resolution), {}, backward ? &trace : nullptr);
        Tensor grad;
        double loss = 0.0;
        if (e.role == LossRole::Teacher) {
            if (have_teacher) throw InvalidArgument("plan has more than one teacher");
            loss = cross_entropy(logits, batch.labels, backward ? &grad : nullptr);
            teacher_probs = softmax(logits);
            have_teacher = true;
            if (teacher_logits_out) *teacher_logits_out = logits;
            out.loss_full = loss;
        } else {
            if (!have_teacher) throw InvalidArgument("student entry precedes the teacher");
            loss = kl_divergence(teacher_probs, logits, backward ? &grad : nullptr);
            out.loss_sub.push_back(loss);
        }
        if (!std::isfinite(loss)) {
            std::ostringstream os;
            os << "non-finite loss " << loss << " at width " << e.width << ", resolution " << e.resolution
               << (e.role == LossRole::Teacher ? " (teacher cross-entropy)" : " (student KL)");
            throw NonFiniteLoss(os.str());
        }
        if (backward) view.backward(grad, trace);
    }
    out.total = out.loss_full;
    for (double l : out.loss_sub) out.total += l;
    return out;
}

}  // namespace

LossBreakdown compute_losses(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                             const Batch& batch) {
    return run_plan(plan, spec, store, batch, false, nullptr);
}

LossBreakdown accumulate_gradients(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                                   const Batch& batch) {
    return run_plan(plan, spec, store, batch, true, nullptr);
}

SgdOptimizer::SgdOptimizer(const SlimmableModelSpec& spec, const WeightStore& store) {
    decays_.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        decays_[i] = spec.layers[i].is_conv() || spec.layers[i].kind == LayerKind::FullyConnected;
    }
    store.for_each([&](std::size_t, bool, const Parameter& p) {
        velocity_.emplace_back(p.value.size(), 0.0f);
        ++param_count_;
    });
}

void SgdOptimizer::step(WeightStore& store, double lr) {
    std::size_t k = 0;
    store.for_each([&](std::size_t layer, bool is_bias, Parameter& p) {
        if (k >= velocity_.size() || velocity_[k].size() != p.value.size()) {
            throw InvalidArgument("optimizer state does not match the weight store");
        }
        std::vector<float>& v = velocity_[k++];
        const float wd = (!is_bias && layer < decays_.size() && decays_[layer]) ? static_cast<float>(weight_decay) : 0.0f;
        const float m = static_cast<float>(momentum), rate = static_cast<float>(lr);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const float g = p.grad[i] + wd * p.value[i];
            v[i] = m * v[i] + g;
            p.value[i] -= rate * (nesterov ? g + m * v[i] : v[i]);
        }
    });
    if (k != param_count_) throw InvalidArgument("optimizer state does not match the weight store");
}

LossBreakdown train_step(const TrainStepPlan& plan, const SlimmableModelSpec& spec, WeightStore& store,
                         const Batch& batch, SgdOptimizer& optimizer, double lr) {
    LossBreakdown losses = accumulate_gradients(plan, spec, store, batch);
    optimizer.step(store, lr);
    return losses;
}

double cosine_lr(double base, std::int64_t iteration, std::int64_t total) {
    if (total <= 0) return base;
    const double t = std::clamp(static_cast<double>(iteration) / static_cast<double>(total), 0.0, 1.0);
    return 0.5 * base * (1.0 + std::cos(M_PI * t));
}

double evaluate_top1(const SubnetView& view, const BNStatsEntry& stats, const Dataset& data, int resolution,
                     int batch_size) {
    if (data.size() == 0) throw InsufficientData("evaluation set is empty");
    ForwardOptions opts;
    opts.mode = NormMode::Calibrated;
    opts.stats = &stats;
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < idx.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t e = std::min(idx.size(), b + static_cast<std::size_t>(batch_size));
        Batch batch = eval_batch(data, std::span<const std::size_t>(idx).subspan(b, e - b), resolution);
        const Tensor logits = view.forward(batch.images, opts);
        const int k = logits.dim(1);
        for (std::size_t i = 0; i < batch.labels.size(); ++i) {
            const float* z = logits.ptr() + i * k;
            if (std::max_element(z, z + k) - z == batch.labels[i]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

TrainResult run_training(const SlimmableModelSpec& spec, const Dataset& train, const Dataset* val,
                         const TrainOptions& options) {
    spec.validate();
    const Schedule& sched = options.schedule;
    if (sched.epochs < 0 || sched.batch_size < 2 || !(sched.lr >= 0.0)) {
        throw InvalidArgument("schedule needs epochs >= 0, batch_size >= 2, lr >= 0");
    }
    if (train.num_classes != spec.num_classes) {
        throw InvalidArgument("dataset has " + std::to_string(train.num_classes) + " classes, backbone expects " +
                              std::to_string(spec.num_classes));
    }
    const bool sandwich = options.mode == TrainMode::MutualNet || options.mode == TrainMode::USNetBaseline ||
                          options.mode == TrainMode::MultiscaleAugUSNet;
    if (sandwich) spec.check_width(options.width_lower_bound);
    if (options.mode == TrainMode::Independent) spec.check_width(options.fixed_width);

    const int fixed = options.fixed_resolution > 0 ? options.fixed_resolution : options.resolutions.max();
    const int base_resolution = std::max(options.resolutions.max(), fixed);
    for (int r : options.resolutions.values()) spec.spatial_walk(r);
    spec.spatial_walk(fixed);

    TrainResult result{WeightStore(spec, splitmix(options.seed)), {}};
    WeightStore& store = result.store;
    SgdOptimizer opt(spec, store);
    opt.momentum = sched.momentum;
    opt.weight_decay = sched.weight_decay;
    opt.nesterov = sched.nesterov;

    std::mt19937_64 rng(splitmix(options.seed + 1));
    const std::size_t per_epoch = train.size() / static_cast<std::size_t>(sched.batch_size);
    if (per_epoch == 0 && sched.epochs > 0) throw InsufficientData("training set smaller than one batch");
    const std::int64_t total_iters = static_cast<std::int64_t>(per_epoch) * sched.epochs;
    std::int64_t iter = 0;

    for (int epoch = 1; epoch <= sched.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = epoch;
        std::size_t correct = 0, seen = 0, students = 0;
        const std::vector<std::size_t> order = epoch_order(train.size(), rng);
        for (std::size_t b = 0; b < per_epoch; ++b) {
            const std::span<const std::size_t> idx(order.data() + b * sched.batch_size, sched.batch_size);
            const TrainStepPlan plan = plan_for_mode(options.mode, options.width_lower_bound, options.resolutions,
                                                     fixed, options.fixed_width, rng);
            const Batch batch = prepare_base_batch(train, idx, base_resolution, options.augment, rng);
            const double lr = cosine_lr(sched.lr, iter++, total_iters);
            Tensor teacher_logits;
            LossBreakdown losses = run_plan(plan, spec, store, batch, true, &teacher_logits);
            opt.step(store, lr);
            m.lr = lr;
            m.loss_full += losses.loss_full;
            for (double l : losses.loss_sub) m.loss_sub += l;
            students += losses.loss_sub.size();
            m.total += losses.total;
            const int k = teacher_logits.dim(1);
            for (std::size_t i = 0; i < batch.labels.size(); ++i) {
                const float* z = teacher_logits.ptr() + i * k;
                if (std::max_element(z, z + k) - z == batch.labels[i]) ++correct;
            }
            seen += batch.labels.size();
        }
        if (per_epoch > 0) {
            m.loss_full /= static_cast<double>(per_epoch);
            m.total /= static_cast<double>(per_epoch);
            m.loss_sub = students > 0 ? m.loss_sub / static_cast<double>(students) : 0.0;
            m.train_top1 = static_cast<double>(correct) / static_cast<double>(seen);
        }
        if (val != nullptr && options.val_samples > 0 && val->size() > 0) {
            const double w = options.mode == TrainMode::Independent ? options.fixed_width : 1.0;
            const int r = options.mode == TrainMode::Independent || options.mode == TrainMode::USNetBaseline
                              ? fixed
                              : options.resolutions.max();
            const SubnetView view = materialize_subnet(spec, store, w);
            const BNStatsEntry stats = calibrate(view, {WidthMultiplier(w), r}, train, options.val_calibration);
            std::vector<std::size_t> vi(std::min(options.val_samples, val->size()));
            for (std::size_t i = 0; i < vi.size(); ++i) vi[i] = i;
            m.val_top1 = evaluate_top1(view, stats, val->subset(vi), r);
        }
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.epochs.push_back(m);
        if (options.on_epoch) options.on_epoch(m);
    }
    return result;
}

}  // namespace slimnet
