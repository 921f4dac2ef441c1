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

#include "slimnet/model_spec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "slimnet/errors.hpp"

namespace slimnet {

WidthMultiplier::WidthMultiplier(double value) : value_(value) {
    if (!(value > 0.0 && value <= 1.0 + 1e-9)) {
        throw InvalidArgument("width multiplier must lie in (0, 1], got " + std::to_string(value));
    }
    value_ = std::min(value, 1.0);
}

int WidthMultiplier::key() const noexcept { return static_cast<int>(std::lround(value_ * 10000.0)); }

std::string to_string(const SubnetConfig& c) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << c.width.value() << "x-" << c.resolution;
    return os.str();
}

ResolutionSet::ResolutionSet(std::vector<int> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("resolution set is empty");
    std::sort(values_.begin(), values_.end(), std::greater<>());
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] <= 0) throw InvalidArgument("resolutions must be positive");
        if (i > 0 && values_[i] == values_[i - 1]) {
            throw InvalidArgument("duplicate resolution " + std::to_string(values_[i]));
        }
    }
}

bool ResolutionSet::contains(int r) const { return std::find(values_.begin(), values_.end(), r) != values_.end(); }

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Convolution: return "conv";
        case LayerKind::DepthwiseConvolution: return "dwconv";
        case LayerKind::GroupConvolution: return "gconv";
        case LayerKind::FullyConnected: return "fc";
        case LayerKind::Normalization: return "bn";
        case LayerKind::Pooling: return "pool";
        case LayerKind::Activation: return "relu";
    }
    return "?";
}

LayerKind parse_layer_kind(const std::string& token) {
    static const std::map<std::string, LayerKind> kinds = {
        {"conv", LayerKind::Convolution},   {"dwconv", LayerKind::DepthwiseConvolution},
        {"gconv", LayerKind::GroupConvolution}, {"fc", LayerKind::FullyConnected},
        {"bn", LayerKind::Normalization},   {"pool", LayerKind::Pooling},
        {"relu", LayerKind::Activation},
    };
    auto it = kinds.find(token);
    if (it == kinds.end()) throw InvalidArgument("unknown layer kind '" + token + "'");
    return it->second;
}

int conv_output_size(int in, int kernel, int stride, int pad) noexcept {
    const int span = in + 2 * pad - kernel;
    if (span < 0 || stride < 1) return 0;
    return span / stride + 1;
}

int sliced_channels(int base_channels, double width, int divisor) {
    if (!(width > 0.0 && width <= 1.0 + 1e-9)) {
        throw InvalidArgument("width multiplier must lie in (0, 1], got " + std::to_string(width));
    }
    if (base_channels < 1 || divisor < 1) throw InvalidArgument("channel count and divisor must be positive");
    if (width >= 1.0) return base_channels;
    // Bases that are not a divisor multiple (only reachable through direct
    // calls; validate() rejects them) are capped so the count never exceeds the base.
    const double groups = std::round(static_cast<double>(base_channels) * width / divisor);
    return std::min(base_channels, std::max(divisor, static_cast<int>(groups) * divisor));
}

std::size_t SlimmableModelSpec::classifier_index() const {
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (layers[i].kind == LayerKind::FullyConnected) return i;
    }
    throw InvalidArgument("model '" + name + "' has no fully-connected classifier");
}

void SlimmableModelSpec::validate() const {
    if (input_channels < 1 || num_classes < 1 || channel_divisor < 1) {
        throw InvalidArgument("input_channels, num_classes and channel_divisor must be positive");
    }
    if (!(width_lower_bound > 0.0 && width_lower_bound <= 1.0)) {
        throw InvalidArgument("width_lower_bound must lie in (0, 1]");
    }
    if (layers.empty()) throw InvalidArgument("model has no layers");
    const std::size_t cls = classifier_index();
    for (std::size_t i = cls + 1; i < layers.size(); ++i) {
        if (layers[i].has_weights()) throw InvalidArgument("parametric layer after the classifier");
    }
    if (layers[cls].base_out_channels != num_classes) {
        throw InvalidArgument("classifier emits " + std::to_string(layers[cls].base_out_channels) +
                              " units but num_classes is " + std::to_string(num_classes));
    }
    int channels = input_channels;
    bool pooled = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
        if (l.kernel < 1 || l.stride < 1 || l.groups < 1 || l.pad < 0) {
            throw InvalidArgument(where + ": kernel, stride and groups must be >= 1");
        }
        if (l.base_in_channels != channels) {
            throw InvalidArgument(where + ": expects " + std::to_string(l.base_in_channels) +
                                  " input channels, previous layer provides " + std::to_string(channels));
        }
        if (pooled && l.kind != LayerKind::FullyConnected && l.kind != LayerKind::Activation) {
            throw InvalidArgument(where + ": only fully-connected layers may follow global pooling");
        }
        const bool sliced_out = (l.kind == LayerKind::Convolution || l.kind == LayerKind::GroupConvolution ||
                                 l.kind == LayerKind::FullyConnected) && i != cls;
        if (sliced_out && l.base_out_channels % channel_divisor != 0) {
            throw InvalidArgument(where + ": output channels not divisible by channel_divisor");
        }
        switch (l.kind) {
            case LayerKind::GroupConvolution:
                if (l.base_in_channels % l.groups != 0 || l.base_out_channels % l.groups != 0) {
                    throw InvalidArgument(where + ": groups must divide channel counts");
                }
                // Sliced counts are multiples of the divisor, so this keeps every width valid.
                if (channel_divisor % l.groups != 0 || (i != 0 && channels % l.groups != 0)) {
                    throw InvalidArgument(where + ": groups must divide channel_divisor");
                }
                if (i == 0 && input_channels % l.groups != 0) throw InvalidArgument(where + ": groups vs input");
                break;
            case LayerKind::DepthwiseConvolution:
                if (l.base_out_channels != l.base_in_channels) {
                    throw InvalidArgument(where + ": depthwise layers keep the channel count");
                }
                if (l.groups != l.base_in_channels) throw InvalidArgument(where + ": depthwise groups must equal channels");
                break;
            case LayerKind::Normalization:
            case LayerKind::Activation:
            case LayerKind::Pooling:
                if (l.base_out_channels != l.base_in_channels) {
                    throw InvalidArgument(where + ": layer must preserve channel count");
                }
                break;
            case LayerKind::FullyConnected:
                if (!pooled) throw InvalidArgument(where + ": fully-connected layers need global pooling first");
                break;
            case LayerKind::Convolution:
                break;
        }
        if (l.kind == LayerKind::Pooling) pooled = true;
        channels = l.base_out_channels;
    }
    if (!pooled) throw InvalidArgument("model needs a global pooling layer before the classifier");
    for (int r : resolutions.values()) spatial_walk(r);
}

void SlimmableModelSpec::check_width(double width) const {
    if (width + 1e-9 < width_lower_bound) {
        throw ConstraintViolation("width " + std::to_string(width) + " is below the model lower bound " +
                                  std::to_string(width_lower_bound));
    }
}

std::vector<SlicedLayer> SlimmableModelSpec::slice(double width) const {
    WidthMultiplier w(width);
    const std::size_t cls = classifier_index();
    std::vector<SlicedLayer> out;
    out.reserve(layers.size());
    int channels = input_channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        SlicedLayer s;
        s.kind = l.kind;
        s.kernel = l.kernel;
        s.stride = l.stride;
        s.pad = l.pad;
        s.bias = l.bias;
        s.in_channels = channels;
        switch (l.kind) {
            case LayerKind::Convolution:
            case LayerKind::GroupConvolution:
            case LayerKind::FullyConnected:
                s.out_channels = (i == cls) ? num_classes : sliced_channels(l.base_out_channels, w.value(), channel_divisor);
                s.groups = l.kind == LayerKind::GroupConvolution ? l.groups : 1;
                break;
            case LayerKind::DepthwiseConvolution:
                s.out_channels = channels;
                s.groups = channels;
                break;
            default:
                s.out_channels = channels;
                break;
        }
        channels = s.out_channels;
        out.push_back(s);
    }
    return out;
}

std::vector<int> SlimmableModelSpec::spatial_walk(int resolution) const {
    if (resolution < 1) throw InvalidArgument("resolution must be positive");
    std::vector<int> sides;
    sides.reserve(layers.size() + 1);
    int side = resolution;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        sides.push_back(side);
        const LayerSpec& l = layers[i];
        if (l.is_conv()) {
            side = conv_output_size(side, l.kernel, l.stride, l.pad);
            if (side < 1) {
                throw InvalidArgument("resolution " + std::to_string(resolution) +
                                      " is incompatible with the stride pattern at layer " + std::to_string(i));
            }
        } else if (l.kind == LayerKind::Pooling) {
            side = 1;
        }
    }
    sides.push_back(side);
    return sides;
}

std::string SlimmableModelSpec::to_text() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "name = " << name << "\n";
    os << "input_channels = " << input_channels << "\n";
    os << "num_classes = " << num_classes << "\n";
    os << "channel_divisor = " << channel_divisor << "\n";
    os << "width_lower_bound = " << width_lower_bound << "\n";
    os << "resolutions =";
    for (int r : resolutions.values()) os << ' ' << r;
    os << "\n";
    for (const LayerSpec& l : layers) {
        os << "layer " << to_string(l.kind) << " in=" << l.base_in_channels << " out=" << l.base_out_channels;
        if (l.is_conv()) os << " kernel=" << l.kernel << " stride=" << l.stride << " pad=" << l.pad;
        if (l.kind == LayerKind::GroupConvolution) os << " groups=" << l.groups;
        if (l.bias || l.kind == LayerKind::FullyConnected) os << " bias=" << (l.bias ? 1 : 0);
        os << "\n";
    }
    return os.str();
}

std::uint64_t SlimmableModelSpec::hash() const {
    // FNV-1a over the canonical text form.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_text()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& v, const std::string& key, int line) {
    try {
        std::size_t used = 0;
        int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw InvalidArgument("line " + std::to_string(line) + ": '" + key + "' expects an integer, got '" + v + "'");
    }
}

}  // namespace

SlimmableModelSpec SlimmableModelSpec::parse(const std::string& text) {
    SlimmableModelSpec spec;
    spec.layers.clear();
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    int channels = -1;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.rfind("layer ", 0) == 0 || line == "layer") {
            std::istringstream ls(line.substr(5));
            std::string kind_token;
            ls >> kind_token;
            LayerSpec l;
            l.kind = parse_layer_kind(kind_token);
            if (channels < 0) channels = spec.input_channels;
            l.base_in_channels = channels;
            l.base_out_channels = -1;
            int pad = -1;
            std::string kv;
            while (ls >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw InvalidArgument("line " + std::to_string(line_no) + ": expected key=value, got '" + kv + "'");
                }
                const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
                if (k == "in") l.base_in_channels = to_int(v, k, line_no);
                else if (k == "out") l.base_out_channels = to_int(v, k, line_no);
                else if (k == "kernel") l.kernel = to_int(v, k, line_no);
                else if (k == "stride") l.stride = to_int(v, k, line_no);
                else if (k == "groups") l.groups = to_int(v, k, line_no);
                else if (k == "pad") pad = to_int(v, k, line_no);
                else if (k == "bias") l.bias = to_int(v, k, line_no) != 0;
                else throw InvalidArgument("line " + std::to_string(line_no) + ": unknown layer key '" + k + "'");
            }
            const bool sets_out = l.kind == LayerKind::Convolution || l.kind == LayerKind::GroupConvolution ||
                                  l.kind == LayerKind::FullyConnected;
            if (l.base_out_channels < 0) {
                if (sets_out) throw InvalidArgument("line " + std::to_string(line_no) + ": layer needs out=");
                l.base_out_channels = l.base_in_channels;
            }
            if (l.kind == LayerKind::DepthwiseConvolution) l.groups = l.base_in_channels;
            l.pad = pad >= 0 ? pad : (l.is_conv() ? l.kernel / 2 : 0);
            if (l.kind == LayerKind::FullyConnected && line.find("bias=") == std::string::npos) l.bias = true;
            channels = l.base_out_channels;
            spec.layers.push_back(l);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!spec.layers.empty()) {
            throw InvalidArgument("line " + std::to_string(line_no) + ": header keys must precede layers");
        }
        if (key == "name") spec.name = value;
        else if (key == "input_channels") spec.input_channels = to_int(value, key, line_no);
        else if (key == "num_classes") spec.num_classes = to_int(value, key, line_no);
        else if (key == "channel_divisor") spec.channel_divisor = to_int(value, key, line_no);
        else if (key == "width_lower_bound") {
            try {
                spec.width_lower_bound = std::stod(value);
            } catch (const std::exception&) {
                throw InvalidArgument("line " + std::to_string(line_no) + ": bad width_lower_bound");
            }
        } else if (key == "resolutions") {
            std::istringstream rs(value);
            std::vector<int> rv;
            std::string tok;
            while (rs >> tok) rv.push_back(to_int(tok, key, line_no));
            spec.resolutions = ResolutionSet(rv);
        } else {
            throw InvalidArgument("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

SlimmableModelSpec SlimmableModelSpec::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestionError(path, "cannot open backbone description");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse(ss.str());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

namespace {

void add_conv_bn_relu(SlimmableModelSpec& s, int& ch, LayerKind kind, int out, int kernel, int stride) {
    LayerSpec conv;
    conv.kind = kind;
    conv.base_in_channels = ch;
    conv.base_out_channels = kind == LayerKind::DepthwiseConvolution ? ch : out;
    conv.kernel = kernel;
    conv.stride = stride;
    conv.pad = kernel / 2;
    conv.groups = kind == LayerKind::DepthwiseConvolution ? ch : 1;
    s.layers.push_back(conv);
    ch = conv.base_out_channels;
    LayerSpec bn;
    bn.kind = LayerKind::Normalization;
    bn.base_in_channels = bn.base_out_channels = ch;
    s.layers.push_back(bn);
    LayerSpec relu = bn;
    relu.kind = LayerKind::Activation;
    s.layers.push_back(relu);
}

void add_head(SlimmableModelSpec& s, int ch) {
    LayerSpec pool;
    pool.kind = LayerKind::Pooling;
    pool.base_in_channels = pool.base_out_channels = ch;
    s.layers.push_back(pool);
    LayerSpec fc;
    fc.kind = LayerKind::FullyConnected;
    fc.base_in_channels = ch;
    fc.base_out_channels = s.num_classes;
    fc.bias = true;
    s.layers.push_back(fc);
}

SlimmableModelSpec separable_stack(const std::string& name, int num_classes, int stem, int stem_stride,
                                   const std::vector<std::pair<int, int>>& blocks, std::vector<int> resolutions) {
    SlimmableModelSpec s;
    s.name = name;
    s.num_classes = num_classes;
    s.resolutions = ResolutionSet(std::move(resolutions));
    int ch = s.input_channels;
    add_conv_bn_relu(s, ch, LayerKind::Convolution, stem, 3, stem_stride);
    for (auto [out, stride] : blocks) {
        add_conv_bn_relu(s, ch, LayerKind::DepthwiseConvolution, ch, 3, stride);
        add_conv_bn_relu(s, ch, LayerKind::Convolution, out, 1, 1);
    }
    add_head(s, ch);
    s.validate();
    return s;
}

}  // namespace

SlimmableModelSpec mobilenet_v1_spec(int num_classes) {
    std::vector<std::pair<int, int>> blocks = {{64, 1}, {128, 2}, {128, 1}, {256, 2}, {256, 1}, {512, 2}};
    for (int i = 0; i < 5; ++i) blocks.emplace_back(512, 1);
    blocks.emplace_back(1024, 2);
    blocks.emplace_back(1024, 1);
    return separable_stack("mobilenet_v1", num_classes, 32, 2, blocks, {224, 192, 160, 128});
}

SlimmableModelSpec cifar_mobilenet_spec(int num_classes) {
    return separable_stack("cifar_mobilenet", num_classes, 32, 1,
                           {{64, 1}, {128, 2}, {128, 1}, {256, 2}, {256, 1}}, {32, 28, 24, 20});
}

SlimmableModelSpec tiny_spec(int c1, int c2, int num_classes, int divisor) {
    SlimmableModelSpec s;
    s.name = "tiny";
    s.num_classes = num_classes;
    s.channel_divisor = divisor;
    s.width_lower_bound = 0.25;
    s.resolutions = ResolutionSet({8, 6});
    int ch = s.input_channels;
    add_conv_bn_relu(s, ch, LayerKind::Convolution, c1, 3, 1);
    add_conv_bn_relu(s, ch, LayerKind::Convolution, c2, 3, 2);
    add_head(s, ch);
    s.validate();
    return s;
}

}  // namespace slimnet
