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

#include "slimnet/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"
#include "slimnet/errors.hpp"

namespace slimnet {

namespace {
constexpr char kMagic[8] = {'S', 'L', 'I', 'M', 'C', 'K', 'P', 'T'};
}

void save_checkpoint(const std::string& path, const SlimmableModelSpec& spec, const WeightStore& store) {
    detail::write_atomically(path, [&](std::ofstream& out) {
        detail::BinaryWriter w(out);
        out.write(kMagic, sizeof(kMagic));
        w.pod(kCheckpointVersion);
        w.pod(spec.hash());
        w.str(spec.to_text());
        w.pod<std::uint64_t>(store.layers().size());
        for (const LayerParams& p : store.layers()) {
            for (const Parameter* param : {&p.weight, &p.bias}) {
                w.pod<std::int32_t>(param->rows);
                w.pod<std::int32_t>(param->cols);
                w.vec(param->value);
            }
        }
    });
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError(path, "cannot open checkpoint");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kMagic)) throw IngestionError(path, "not a checkpoint");
    detail::BinaryReader r(in, path);
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion) throw IngestionError(path, "unsupported checkpoint version " + std::to_string(version));
    const auto hash = r.pod<std::uint64_t>();
    Checkpoint ck;
    try {
        ck.spec = SlimmableModelSpec::parse(r.str());
    } catch (const InvalidArgument& e) {
        throw IngestionError(path, std::string("embedded backbone invalid: ") + e.what());
    }
    if (ck.spec.hash() != hash) throw IngestionError(path, "backbone hash mismatch");
    const auto layers = r.pod<std::uint64_t>();
    if (layers != ck.spec.layers.size()) throw IngestionError(path, "layer count mismatch");
    ck.store.layers().resize(layers);
    for (LayerParams& p : ck.store.layers()) {
        for (Parameter* param : {&p.weight, &p.bias}) {
            param->rows = r.pod<std::int32_t>();
            param->cols = r.pod<std::int32_t>();
            param->value = r.vec<float>();
            if (param->value.size() != static_cast<std::size_t>(param->rows) * param->cols) {
                throw IngestionError(path, "parameter size mismatch");
            }
            param->grad.assign(param->value.size(), 0.0f);
        }
    }
    // Shapes must agree with a freshly built store for this backbone.
    const WeightStore fresh(ck.spec, 0);
    for (std::size_t i = 0; i < layers; ++i) {
        const LayerParams& a = fresh.layer(i);
        const LayerParams& b = ck.store.layer(i);
        if (a.weight.rows != b.weight.rows || a.weight.cols != b.weight.cols || a.bias.rows != b.bias.rows ||
            a.bias.cols != b.bias.cols) {
            throw IngestionError(path, "parameter shapes do not match layer " + std::to_string(i));
        }
    }
    return ck;
}

}  // namespace slimnet
