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

#include "slimnet/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "slimnet/errors.hpp"

namespace slimnet {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstBlock = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using Block = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstDense = Eigen::Map<const RowMat>;
using Dense = Eigen::Map<RowMat>;

ConstBlock leading(const Parameter& p, int row0, int rows, int cols) {
    return {p.value.data() + static_cast<std::size_t>(row0) * p.cols, rows, cols, Eigen::OuterStride<>(p.cols)};
}
Block leading_grad(Parameter& p, int row0, int rows, int cols) {
    return {p.grad.data() + static_cast<std::size_t>(row0) * p.cols, rows, cols, Eigen::OuterStride<>(p.cols)};
}

struct ConvGeometry {
    int in_c, in_h, in_w, out_h, out_w, k, stride, pad;
};

// col: [cin * k * k, out_h * out_w] for channels [c0, c0 + cin) of one image.
void im2col(const float* img, const ConvGeometry& g, int c0, int cin, float* col) {
    const int ohw = g.out_h * g.out_w;
    for (int c = 0; c < cin; ++c) {
        const float* plane = img + static_cast<std::size_t>(c0 + c) * g.in_h * g.in_w;
        for (int ki = 0; ki < g.k; ++ki) {
            for (int kj = 0; kj < g.k; ++kj) {
                float* row = col + (static_cast<std::size_t>(c * g.k + ki) * g.k + kj) * ohw;
                for (int oh = 0; oh < g.out_h; ++oh) {
                    const int ih = oh * g.stride - g.pad + ki;
                    float* dst = row + oh * g.out_w;
                    if (ih < 0 || ih >= g.in_h) {
                        std::fill(dst, dst + g.out_w, 0.0f);
                        continue;
                    }
                    const float* src = plane + static_cast<std::size_t>(ih) * g.in_w;
                    for (int ow = 0; ow < g.out_w; ++ow) {
                        const int iw = ow * g.stride - g.pad + kj;
                        dst[ow] = (iw >= 0 && iw < g.in_w) ? src[iw] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, const ConvGeometry& g, int c0, int cin, float* img) {
    const int ohw = g.out_h * g.out_w;
    for (int c = 0; c < cin; ++c) {
        float* plane = img + static_cast<std::size_t>(c0 + c) * g.in_h * g.in_w;
        for (int ki = 0; ki < g.k; ++ki) {
            for (int kj = 0; kj < g.k; ++kj) {
                const float* row = col + (static_cast<std::size_t>(c * g.k + ki) * g.k + kj) * ohw;
                for (int oh = 0; oh < g.out_h; ++oh) {
                    const int ih = oh * g.stride - g.pad + ki;
                    if (ih < 0 || ih >= g.in_h) continue;
                    float* dst = plane + static_cast<std::size_t>(ih) * g.in_w;
                    const float* src = row + oh * g.out_w;
                    for (int ow = 0; ow < g.out_w; ++ow) {
                        const int iw = ow * g.stride - g.pad + kj;
                        if (iw >= 0 && iw < g.in_w) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

bool is_pointwise(const SlicedLayer& l) { return l.kernel == 1 && l.stride == 1 && l.pad == 0; }

ConvGeometry geometry(const SlicedLayer& l, const Tensor& x) {
    ConvGeometry g{x.dim(1), x.dim(2), x.dim(3), 0, 0, l.kernel, l.stride, l.pad};
    g.out_h = conv_output_size(g.in_h, l.kernel, l.stride, l.pad);
    g.out_w = conv_output_size(g.in_w, l.kernel, l.stride, l.pad);
    if (g.out_h < 1 || g.out_w < 1) throw InvalidArgument("input too small for convolution window");
    return g;
}

Tensor conv_forward(const SlicedLayer& l, const LayerParams& p, const Tensor& x) {
    const ConvGeometry g = geometry(l, x);
    const int n = x.dim(0);
    const int cin_g = l.in_channels / l.groups, cout_g = l.out_channels / l.groups;
    const int kk = cin_g * l.kernel * l.kernel, ohw = g.out_h * g.out_w;
    Tensor y({n, l.out_channels, g.out_h, g.out_w});
    std::vector<float> col(is_pointwise(l) ? 0 : static_cast<std::size_t>(kk) * ohw);
    for (int i = 0; i < n; ++i) {
        const float* img = x.ptr() + static_cast<std::size_t>(i) * g.in_c * g.in_h * g.in_w;
        float* out = y.ptr() + static_cast<std::size_t>(i) * l.out_channels * ohw;
        for (int grp = 0; grp < l.groups; ++grp) {
            const float* src;
            if (is_pointwise(l)) {
                src = img + static_cast<std::size_t>(grp) * cin_g * ohw;
            } else {
                im2col(img, g, grp * cin_g, cin_g, col.data());
                src = col.data();
            }
            Dense(out + static_cast<std::size_t>(grp) * cout_g * ohw, cout_g, ohw).noalias() =
                leading(p.weight, grp * cout_g, cout_g, kk) * ConstDense(src, kk, ohw);
        }
        if (!p.bias.empty()) {
            for (int c = 0; c < l.out_channels; ++c) {
                float* q = out + static_cast<std::size_t>(c) * ohw;
                std::for_each(q, q + ohw, [b = p.bias.value[c]](float& v) { v += b; });
            }
        }
    }
    return y;
}

Tensor conv_backward(const SlicedLayer& l, LayerParams& p, const Tensor& x, const Tensor& dy) {
    const ConvGeometry g = geometry(l, x);
    const int n = x.dim(0);
    const int cin_g = l.in_channels / l.groups, cout_g = l.out_channels / l.groups;
    const int kk = cin_g * l.kernel * l.kernel, ohw = g.out_h * g.out_w;
    Tensor dx(x.shape);
    std::vector<float> col(is_pointwise(l) ? 0 : static_cast<std::size_t>(kk) * ohw);
    std::vector<float> dcol(col.size());
    for (int i = 0; i < n; ++i) {
        const std::size_t in_off = static_cast<std::size_t>(i) * g.in_c * g.in_h * g.in_w;
        const float* img = x.ptr() + in_off;
        float* dimg = dx.ptr() + in_off;
        const float* gout = dy.ptr() + static_cast<std::size_t>(i) * l.out_channels * ohw;
        for (int grp = 0; grp < l.groups; ++grp) {
            ConstDense dout(gout + static_cast<std::size_t>(grp) * cout_g * ohw, cout_g, ohw);
            auto w = leading(p.weight, grp * cout_g, cout_g, kk);
            if (is_pointwise(l)) {
                const std::size_t off = static_cast<std::size_t>(grp) * cin_g * ohw;
                leading_grad(p.weight, grp * cout_g, cout_g, kk).noalias() +=
                    dout * ConstDense(img + off, kk, ohw).transpose();
                Dense(dimg + off, kk, ohw).noalias() += w.transpose() * dout;
            } else {
                im2col(img, g, grp * cin_g, cin_g, col.data());
                leading_grad(p.weight, grp * cout_g, cout_g, kk).noalias() +=
                    dout * ConstDense(col.data(), kk, ohw).transpose();
                Dense(dcol.data(), kk, ohw).noalias() = w.transpose() * dout;
                col2im_add(dcol.data(), g, grp * cin_g, cin_g, dimg);
            }
        }
        if (!p.bias.empty()) {
            for (int c = 0; c < l.out_channels; ++c) {
                const float* q = gout + static_cast<std::size_t>(c) * ohw;
                double s = 0.0;
                for (int k = 0; k < ohw; ++k) s += q[k];
                p.bias.grad[c] += static_cast<float>(s);
            }
        }
    }
    return dx;
}

Tensor depthwise_forward(const SlicedLayer& l, const LayerParams& p, const Tensor& x) {
    const ConvGeometry g = geometry(l, x);
    const int n = x.dim(0), c = l.in_channels, k = l.kernel;
    Tensor y({n, c, g.out_h, g.out_w});
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* plane = x.ptr() + (static_cast<std::size_t>(i) * c + ch) * g.in_h * g.in_w;
            const float* w = p.weight.value.data() + static_cast<std::size_t>(ch) * p.weight.cols;
            float* out = y.ptr() + (static_cast<std::size_t>(i) * c + ch) * g.out_h * g.out_w;
            const float b = p.bias.empty() ? 0.0f : p.bias.value[ch];
            for (int oh = 0; oh < g.out_h; ++oh) {
                for (int ow = 0; ow < g.out_w; ++ow) {
                    float acc = b;
                    for (int ki = 0; ki < k; ++ki) {
                        const int ih = oh * g.stride - g.pad + ki;
                        if (ih < 0 || ih >= g.in_h) continue;
                        const float* row = plane + static_cast<std::size_t>(ih) * g.in_w;
                        for (int kj = 0; kj < k; ++kj) {
                            const int iw = ow * g.stride - g.pad + kj;
                            if (iw >= 0 && iw < g.in_w) acc += w[ki * k + kj] * row[iw];
                        }
                    }
                    out[oh * g.out_w + ow] = acc;
                }
            }
        }
    }
    return y;
}

Tensor depthwise_backward(const SlicedLayer& l, LayerParams& p, const Tensor& x, const Tensor& dy) {
    const ConvGeometry g = geometry(l, x);
    const int n = x.dim(0), c = l.in_channels, k = l.kernel;
    Tensor dx(x.shape);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const std::size_t in_off = (static_cast<std::size_t>(i) * c + ch) * g.in_h * g.in_w;
            const float* plane = x.ptr() + in_off;
            float* dplane = dx.ptr() + in_off;
            const float* w = p.weight.value.data() + static_cast<std::size_t>(ch) * p.weight.cols;
            float* dw = p.weight.grad.data() + static_cast<std::size_t>(ch) * p.weight.cols;
            const float* gout = dy.ptr() + (static_cast<std::size_t>(i) * c + ch) * g.out_h * g.out_w;
            double bias_acc = 0.0;
            for (int oh = 0; oh < g.out_h; ++oh) {
                for (int ow = 0; ow < g.out_w; ++ow) {
                    const float d = gout[oh * g.out_w + ow];
                    bias_acc += d;
                    for (int ki = 0; ki < k; ++ki) {
                        const int ih = oh * g.stride - g.pad + ki;
                        if (ih < 0 || ih >= g.in_h) continue;
                        for (int kj = 0; kj < k; ++kj) {
                            const int iw = ow * g.stride - g.pad + kj;
                            if (iw < 0 || iw >= g.in_w) continue;
                            const std::size_t idx = static_cast<std::size_t>(ih) * g.in_w + iw;
                            dw[ki * k + kj] += d * plane[idx];
                            dplane[idx] += d * w[ki * k + kj];
                        }
                    }
                }
            }
            if (!p.bias.empty()) p.bias.grad[ch] += static_cast<float>(bias_acc);
        }
    }
    return dx;
}

Tensor fc_forward(const SlicedLayer& l, const LayerParams& p, const Tensor& x) {
    const int n = x.dim(0);
    const int in = static_cast<int>(x.size() / n);
    if (in != l.in_channels) throw InvalidArgument("fully-connected layer expects " + std::to_string(l.in_channels) + " features");
    Tensor y({n, l.out_channels});
    Dense out(y.ptr(), n, l.out_channels);
    out.noalias() = ConstDense(x.ptr(), n, in) * leading(p.weight, 0, l.out_channels, in).transpose();
    if (!p.bias.empty()) {
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < l.out_channels; ++o) out(i, o) += p.bias.value[o];
    }
    return y;
}

Tensor fc_backward(const SlicedLayer& l, LayerParams& p, const Tensor& x, const Tensor& dy) {
    const int n = x.dim(0);
    const int in = l.in_channels;
    ConstDense gout(dy.ptr(), n, l.out_channels);
    leading_grad(p.weight, 0, l.out_channels, in).noalias() += gout.transpose() * ConstDense(x.ptr(), n, in);
    if (!p.bias.empty()) {
        for (int o = 0; o < l.out_channels; ++o) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += gout(i, o);
            p.bias.grad[o] += static_cast<float>(s);
        }
    }
    Tensor dx(x.shape);
    Dense(dx.ptr(), n, in).noalias() = gout * leading(p.weight, 0, l.out_channels, in);
    return dx;
}

Tensor pool_forward(const Tensor& x) {
    const int n = x.dim(0), c = x.dim(1);
    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    Tensor y({n, c, 1, 1});
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * c; ++i) {
        double s = 0.0;
        const float* p = x.ptr() + i * hw;
        for (std::size_t k = 0; k < hw; ++k) s += p[k];
        y.data[i] = static_cast<float>(s / static_cast<double>(hw));
    }
    return y;
}

Tensor pool_backward(const Tensor& x, const Tensor& dy) {
    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    Tensor dx(x.shape);
    for (std::size_t i = 0; i < dy.size(); ++i) {
        const float v = dy.data[i] / static_cast<float>(hw);
        std::fill(dx.ptr() + i * hw, dx.ptr() + (i + 1) * hw, v);
    }
    return dx;
}

std::span<const float> leading_span(const Parameter& p, int n) { return {p.value.data(), static_cast<std::size_t>(n)}; }
std::span<float> leading_grad_span(Parameter& p, int n) { return {p.grad.data(), static_cast<std::size_t>(n)}; }

}  // namespace

SubnetView::SubnetView(const SlimmableModelSpec& spec, WeightStore& store, double width)
    : spec_(&spec), store_(&store), width_(WidthMultiplier(width).value()), layers_(spec.slice(width)) {
    if (store.layers().size() != spec.layers.size()) {
        throw InvalidArgument("weight store does not match the backbone description");
    }
}

SubnetView materialize_subnet(const SlimmableModelSpec& spec, WeightStore& store, double width) {
    WidthMultiplier checked(width);
    spec.check_width(checked.value());
    return SubnetView(spec, store, width);
}

SubnetView materialize_unchecked(const SlimmableModelSpec& spec, WeightStore& store, double width) {
    return SubnetView(spec, store, width);
}

Tensor SubnetView::forward(const Tensor& images, const ForwardOptions& options, ForwardTrace* trace) const {
    if (images.rank() != 4 || images.dim(1) != spec_->input_channels) {
        throw InvalidArgument("expected images of shape [N, " + std::to_string(spec_->input_channels) +
                              ", r, r], got " + shape_string(images.shape));
    }
    if (options.mode == NormMode::Calibrated) {
        if (options.stats == nullptr) throw CalibrationRequired("calibrated evaluation needs a statistics entry");
        const SubnetConfig here{WidthMultiplier(width_), images.dim(2)};
        if (!(options.stats->config == here)) {
            throw CalibrationRequired("statistics for " + to_string(options.stats->config) +
                                      " cannot normalize config " + to_string(here));
        }
    }
    if (trace) {
        trace->mode = options.mode;
        trace->stats = options.stats;
        trace->inputs.assign(layers_.size(), Tensor{});
        trace->norms.assign(layers_.size(), NormCache{});
    }
    Tensor x = images;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const SlicedLayer& l = layers_[i];
        const LayerParams& p = store_->layer(i);
        Tensor y;
        switch (l.kind) {
            case LayerKind::Convolution:
            case LayerKind::GroupConvolution:
                y = conv_forward(l, p, x);
                break;
            case LayerKind::DepthwiseConvolution:
                y = depthwise_forward(l, p, x);
                break;
            case LayerKind::FullyConnected:
                y = fc_forward(l, p, x);
                break;
            case LayerKind::Normalization:
                if (options.on_norm_input) options.on_norm_input(i, x);
                if (options.mode == NormMode::Batch) {
                    y = train_mode_normalize(x, leading_span(p.weight, l.in_channels), leading_span(p.bias, l.in_channels),
                                             trace ? &trace->norms[i] : nullptr);
                } else {
                    auto it = options.stats->layers.find(i);
                    if (it == options.stats->layers.end()) {
                        throw CalibrationRequired("statistics entry lacks normalization layer " + std::to_string(i));
                    }
                    y = eval_mode_normalize(x, it->second, leading_span(p.weight, l.in_channels),
                                            leading_span(p.bias, l.in_channels));
                }
                break;
            case LayerKind::Pooling:
                y = pool_forward(x);
                break;
            case LayerKind::Activation:
                y = x;
                for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
                break;
        }
        if (options.on_layer) options.on_layer(i, l, x, y);
        if (trace) trace->inputs[i] = std::move(x);
        x = std::move(y);
    }
    return x;
}

Tensor SubnetView::backward(const Tensor& grad_logits, ForwardTrace& trace) const {
    if (trace.inputs.size() != layers_.size()) throw InvalidArgument("backward() needs a trace from forward()");
    Tensor g = grad_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const SlicedLayer& l = layers_[i];
        LayerParams& p = store_->layer(i);
        const Tensor& x = trace.inputs[i];
        switch (l.kind) {
            case LayerKind::Convolution:
            case LayerKind::GroupConvolution:
                g = conv_backward(l, p, x, g);
                break;
            case LayerKind::DepthwiseConvolution:
                g = depthwise_backward(l, p, x, g);
                break;
            case LayerKind::FullyConnected:
                g = fc_backward(l, p, x, g);
                g.shape = x.shape;
                break;
            case LayerKind::Normalization:
                if (trace.mode == NormMode::Batch) {
                    g = train_mode_normalize_backward(g, trace.norms[i], leading_span(p.weight, l.in_channels),
                                                      leading_grad_span(p.weight, l.in_channels),
                                                      leading_grad_span(p.bias, l.in_channels));
                } else {
                    const LayerStats& s = trace.stats->layers.at(i);
                    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
                    Tensor dx(x.shape);
                    for (int n = 0; n < x.dim(0); ++n) {
                        for (int c = 0; c < l.in_channels; ++c) {
                            const float inv = static_cast<float>(1.0 / std::sqrt(s.variance[c] + kNormEpsilon));
                            const std::size_t off = (static_cast<std::size_t>(n) * l.in_channels + c) * hw;
                            for (std::size_t k = 0; k < hw; ++k) {
                                const float xh = (x.data[off + k] - static_cast<float>(s.mean[c])) * inv;
                                p.weight.grad[c] += g.data[off + k] * xh;
                                p.bias.grad[c] += g.data[off + k];
                                dx.data[off + k] = g.data[off + k] * p.weight.value[c] * inv;
                            }
                        }
                    }
                    g = std::move(dx);
                }
                break;
            case LayerKind::Pooling:
                g = pool_backward(x, g);
                break;
            case LayerKind::Activation:
                for (std::size_t k = 0; k < g.size(); ++k) {
                    if (!(x.data[k] > 0.0f)) g.data[k] = 0.0f;
                }
                break;
        }
    }
    return g;
}

std::pair<int, int> SubnetView::slice_shape(std::size_t layer, bool bias) const {
    const SlicedLayer& l = layers_.at(layer);
    if (bias) {
        if (store_->layer(layer).bias.empty()) return {0, 0};
        return {1, l.kind == LayerKind::Normalization ? l.in_channels : l.out_channels};
    }
    switch (l.kind) {
        case LayerKind::Convolution:
        case LayerKind::GroupConvolution:
            return {l.out_channels, l.in_channels / l.groups * l.kernel * l.kernel};
        case LayerKind::DepthwiseConvolution:
            return {l.out_channels, l.kernel * l.kernel};
        case LayerKind::FullyConnected:
            return {l.out_channels, l.in_channels};
        case LayerKind::Normalization:
            return {1, l.in_channels};
        default:
            return {0, 0};
    }
}

std::vector<float> SubnetView::slice_values(std::size_t layer, bool bias) const {
    const auto [rows, cols] = slice_shape(layer, bias);
    const Parameter& p = bias ? store_->layer(layer).bias : store_->layer(layer).weight;
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out.push_back(p.at(r, c));
    return out;
}

}  // namespace slimnet
