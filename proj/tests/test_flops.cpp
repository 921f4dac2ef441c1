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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "slimnet/errors.hpp"
#include "slimnet/flops.hpp"
#include "slimnet/network.hpp"
#include "slimnet/planner.hpp"
#include "oracles.hpp"

using namespace slimnet;
using namespace slimnet::fixtures;

namespace {

SlicedLayer conv(int c1, int c2, int k, int groups = 1) {
    SlicedLayer l;
    l.kind = groups == 1 ? LayerKind::Convolution : LayerKind::GroupConvolution;
    l.in_channels = c1;
    l.out_channels = c2;
    l.kernel = k;
    l.groups = groups;
    return l;
}

}  // namespace

TEST(LayerCost, Examples) {
    EXPECT_EQ(layer_cost(conv(16, 32, 3), 8, 8), 294912);
    EXPECT_EQ(layer_cost(conv(32, 32, 3, 32), 8, 8), 18432);
    SlicedLayer fc;
    fc.kind = LayerKind::FullyConnected;
    fc.in_channels = 256;
    fc.out_channels = 10;
    EXPECT_EQ(layer_cost(fc, 1, 1), 2560);
    SlicedLayer bn;
    bn.kind = LayerKind::Normalization;
    bn.in_channels = bn.out_channels = 32;
    EXPECT_EQ(layer_cost(bn, 8, 8), 0);
}

TEST(LayerCost, HalvingSpatialQuarters) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
        const int g = 1 << pick(0, 3);
        const SlicedLayer l = conv(g * pick(1, 8), g * pick(1, 8), 2 * pick(0, 2) + 1, g);
        const int h = 2 * pick(1, 16), w = 2 * pick(1, 16);
        EXPECT_EQ(layer_cost(l, h, w), 4 * layer_cost(l, h / 2, w / 2));
    }
}

TEST(LayerCost, RejectsNonPositiveDims) {
    EXPECT_THROW(layer_cost(conv(16, 32, 3), 0, 8), InvalidArgument);
    EXPECT_THROW(layer_cost(conv(0, 32, 3), 8, 8), InvalidArgument);
}

TEST(NetworkCost, MatchesShapeWalkOracle) {
    const SlimmableModelSpec spec = cifar_mobilenet_spec(10);
    int checked = 0;
    for (double w : width_grid(0.25, 0.05))
        for (int r : {32, 28, 24, 20}) {
            EXPECT_EQ(network_cost(spec, {WidthMultiplier(w), r}).total, shape_walk_oracle(spec, w, r))
                << w << "x" << r;
            ++checked;
        }
    EXPECT_EQ(checked, 64);
}

TEST(NetworkCost, MatchesShapeWalkOracleOnRandomSpecs) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const SlimmableModelSpec spec = fixtures::random_spec(rng);
        for (double w : {0.25, 0.5, 0.8, 1.0})
            for (int r : {8, 7, 6, 5})
                EXPECT_EQ(network_cost(spec, {WidthMultiplier(w), r}).total, shape_walk_oracle(spec, w, r));
    }
}

TEST(NetworkCost, Monotone) {
    const SlimmableModelSpec spec = cifar_mobilenet_spec(10);
    const auto widths = width_grid(0.25, 0.05);
    for (int r : {32, 28, 24, 20})
        for (std::size_t i = 1; i < widths.size(); ++i)
            EXPECT_LE(network_cost(spec, {WidthMultiplier(widths[i - 1]), r}).total,
                      network_cost(spec, {WidthMultiplier(widths[i]), r}).total);
    for (double w : widths)
        for (int r = 21; r <= 32; ++r)
            EXPECT_LE(network_cost(spec, {WidthMultiplier(w), r - 1}).total,
                      network_cost(spec, {WidthMultiplier(w), r}).total);
}

TEST(NetworkCost, DepthwiseSeparableCheaperThanVanilla) {
    for (int c : {16, 32, 64, 128})
        for (int k : {3, 5}) {
            const std::int64_t separable = layer_cost(conv(c, c, k, c), 14, 14) + layer_cost(conv(c, 2 * c, 1), 14, 14);
            EXPECT_LT(separable, layer_cost(conv(c, 2 * c, k), 14, 14));
        }
}

TEST(NetworkCost, MobileNetFullWidthEndpoint) {
    const double m = network_cost(mobilenet_v1_spec(), {WidthMultiplier(1.0), 224}).mflops();
    EXPECT_NEAR(m, 569.0, 569.0 * 0.03);
}

TEST(NetworkCost, PerLayerReportSumsToTotal) {
    const CostReport r = network_cost(cifar_mobilenet_spec(10), {WidthMultiplier(0.5), 28});
    std::int64_t s = 0;
    for (const auto& l : r.per_layer) s += l.macs;
    EXPECT_EQ(s, r.total);
}

TEST(NetworkCost, RejectsResolutionTooSmall) {
    SlimmableModelSpec spec = tiny_spec(8, 8, 2, 8);
    spec.layers[0].pad = 0;
    EXPECT_THROW(network_cost(spec, {WidthMultiplier(1.0), 2}), InvalidArgument);
}

TEST(FlopsGrid, CsvLayout) {
    std::ostringstream os;
    write_flops_grid(os, cifar_mobilenet_spec(10), {0.25, 1.0}, {32, 20});
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "width,resolution,mflops");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4);
}
