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

#include "slimnet/norm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "binary_io.hpp"
#include "slimnet/errors.hpp"

namespace slimnet {

namespace {
constexpr char kBankMagic[8] = {'S', 'L', 'B', 'N', 'B', 'A', 'N', 'K'};
constexpr std::uint32_t kBankVersion = 1;
}  // namespace

void BNStatsBank::insert(BNStatsEntry entry) {
    const SubnetConfig key = entry.config;
    entries_[key] = std::move(entry);
}

const BNStatsEntry& BNStatsBank::at(const SubnetConfig& c) const {
    auto it = entries_.find(c);
    if (it == entries_.end()) {
        throw CalibrationRequired("no normalization statistics for config " + to_string(c) + "; calibrate it first");
    }
    return it->second;
}

void BNStatsBank::save(const std::string& path, std::uint64_t spec_hash) const {
    detail::write_atomically(path, [&](std::ofstream& out) {
        detail::BinaryWriter w(out);
        out.write(kBankMagic, sizeof(kBankMagic));
        w.pod(kBankVersion);
        w.pod(spec_hash);
        w.pod<std::int32_t>(calibration_sample_budget);
        w.pod<std::uint64_t>(entries_.size());
        for (const auto& [config, entry] : entries_) {
            w.pod<double>(config.width.value());
            w.pod<std::int32_t>(config.resolution);
            w.pod<std::uint64_t>(entry.layers.size());
            for (const auto& [index, stats] : entry.layers) {
                w.pod<std::uint64_t>(index);
                w.pod<std::int64_t>(stats.count);
                w.vec(stats.mean);
                w.vec(stats.variance);
            }
        }
    });
}

BNStatsBank BNStatsBank::load(const std::string& path, std::uint64_t expected_spec_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError(path, "cannot open statistics bank");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kBankMagic)) throw IngestionError(path, "not a statistics bank");
    detail::BinaryReader r(in, path);
    const auto version = r.pod<std::uint32_t>();
    if (version != kBankVersion) throw IngestionError(path, "unsupported bank version " + std::to_string(version));
    if (r.pod<std::uint64_t>() != expected_spec_hash) {
        throw IngestionError(path, "statistics bank was collected for a different backbone");
    }
    BNStatsBank bank;
    bank.calibration_sample_budget = r.pod<std::int32_t>();
    const auto n = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < n; ++i) {
        BNStatsEntry e;
        e.config.width = WidthMultiplier(r.pod<double>());
        e.config.resolution = r.pod<std::int32_t>();
        const auto layers = r.pod<std::uint64_t>();
        for (std::uint64_t j = 0; j < layers; ++j) {
            const auto index = r.pod<std::uint64_t>();
            LayerStats s;
            s.count = r.pod<std::int64_t>();
            s.mean = r.vec<double>();
            s.variance = r.vec<double>();
            e.layers.emplace(index, std::move(s));
        }
        bank.insert(std::move(e));
    }
    return bank;
}

ChannelMoments::ChannelMoments(int channels) : mean_(channels, 0.0), m2_(channels, 0.0) {}

void ChannelMoments::add(const Tensor& x) {
    const int n = x.dim(0), c = x.dim(1);
    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    if (c != channels()) throw InvalidArgument("channel count changed between calibration batches");
    const auto nb = static_cast<std::int64_t>(n * hw);
    if (nb == 0) return;
    for (int ch = 0; ch < c; ++ch) {
        // Two-pass moments within the batch, then Chan's merge into the running state.
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const float* p = x.ptr() + (static_cast<std::size_t>(i) * c + ch) * hw;
            for (std::size_t k = 0; k < hw; ++k) sum += p[k];
        }
        const double bmean = sum / static_cast<double>(nb);
        double bm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const float* p = x.ptr() + (static_cast<std::size_t>(i) * c + ch) * hw;
            for (std::size_t k = 0; k < hw; ++k) {
                const double d = p[k] - bmean;
                bm2 += d * d;
            }
        }
        const double na = static_cast<double>(n_), nbd = static_cast<double>(nb), total = na + nbd;
        const double delta = bmean - mean_[ch];
        mean_[ch] += delta * nbd / total;
        m2_[ch] += bm2 + delta * delta * na * nbd / total;
    }
    n_ += nb;
}

LayerStats ChannelMoments::finish(std::int64_t samples) const {
    LayerStats s;
    s.mean = mean_;
    s.variance.resize(m2_.size());
    for (std::size_t i = 0; i < m2_.size(); ++i) s.variance[i] = n_ > 0 ? std::max(0.0, m2_[i] / n_) : 0.0;
    s.count = samples;
    return s;
}

Tensor train_mode_normalize(const Tensor& x, std::span<const float> scale, std::span<const float> shift,
                            NormCache* cache) {
    const int n = x.dim(0), c = x.dim(1);
    if (n < 2) throw DegenerateBatch("batch normalization in training mode needs batch size >= 2, got " + std::to_string(n));
    if (static_cast<int>(scale.size()) < c || static_cast<int>(shift.size()) < c) {
        throw InvalidArgument("normalization parameters narrower than activations");
    }
    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    const double m = static_cast<double>(n) * hw;
    Tensor y(x.shape);
    NormCache local;
    NormCache& cc = cache ? *cache : local;
    cc.normalized = Tensor(x.shape);
    cc.inv_std.assign(c, 0.0f);
    for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const float* p = x.ptr() + (static_cast<std::size_t>(i) * c + ch) * hw;
            for (std::size_t k = 0; k < hw; ++k) sum += p[k];
        }
        const double mean = sum / m;
        double sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const float* p = x.ptr() + (static_cast<std::size_t>(i) * c + ch) * hw;
            for (std::size_t k = 0; k < hw; ++k) {
                const double d = p[k] - mean;
                sq += d * d;
            }
        }
        const float inv = static_cast<float>(1.0 / std::sqrt(sq / m + kNormEpsilon));
        cc.inv_std[ch] = inv;
        const float g = scale[ch], b = shift[ch], mf = static_cast<float>(mean);
        for (int i = 0; i < n; ++i) {
            const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
            const float* p = x.ptr() + off;
            float* xh = cc.normalized.ptr() + off;
            float* q = y.ptr() + off;
            for (std::size_t k = 0; k < hw; ++k) {
                xh[k] = (p[k] - mf) * inv;
                q[k] = g * xh[k] + b;
            }
        }
    }
    return y;
}

Tensor train_mode_normalize_backward(const Tensor& dy, const NormCache& cache, std::span<const float> scale,
                                     std::span<float> scale_grad, std::span<float> shift_grad) {
    const int n = dy.dim(0), c = dy.dim(1);
    const std::size_t hw = static_cast<std::size_t>(dy.dim(2)) * dy.dim(3);
    const double m = static_cast<double>(n) * hw;
    Tensor dx(dy.shape);
    for (int ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
            const float* g = dy.ptr() + off;
            const float* xh = cache.normalized.ptr() + off;
            for (std::size_t k = 0; k < hw; ++k) {
                sum_dy += g[k];
                sum_dy_xh += static_cast<double>(g[k]) * xh[k];
            }
        }
        scale_grad[ch] += static_cast<float>(sum_dy_xh);
        shift_grad[ch] += static_cast<float>(sum_dy);
        const float k1 = scale[ch] * cache.inv_std[ch];
        const float mean_dy = static_cast<float>(sum_dy / m), mean_dy_xh = static_cast<float>(sum_dy_xh / m);
        for (int i = 0; i < n; ++i) {
            const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
            const float* g = dy.ptr() + off;
            const float* xh = cache.normalized.ptr() + off;
            float* q = dx.ptr() + off;
            for (std::size_t k = 0; k < hw; ++k) q[k] = k1 * (g[k] - mean_dy - xh[k] * mean_dy_xh);
        }
    }
    return dx;
}

Tensor eval_mode_normalize(const Tensor& x, const LayerStats& stats, std::span<const float> scale,
                           std::span<const float> shift) {
    const int n = x.dim(0), c = x.dim(1);
    if (static_cast<int>(stats.mean.size()) != c || static_cast<int>(stats.variance.size()) != c) {
        throw CalibrationRequired("stored statistics cover " + std::to_string(stats.mean.size()) +
                                  " channels but activations have " + std::to_string(c));
    }
    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    Tensor y(x.shape);
    for (int ch = 0; ch < c; ++ch) {
        const float inv = static_cast<float>(1.0 / std::sqrt(stats.variance[ch] + kNormEpsilon));
        const float a = scale[ch] * inv;
        const float b = shift[ch] - a * static_cast<float>(stats.mean[ch]);
        for (int i = 0; i < n; ++i) {
            const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
            const float* p = x.ptr() + off;
            float* q = y.ptr() + off;
            for (std::size_t k = 0; k < hw; ++k) q[k] = a * p[k] + b;
        }
    }
    return y;
}

}  // namespace slimnet
