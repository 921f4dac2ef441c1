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

#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <random>
#include <set>

#include "slimnet/errors.hpp"
#include "slimnet/data.hpp"
#include "test_util.hpp"

using namespace slimnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Every record gets a unique first two pixel bytes so splits can be compared by content.
void write_cifar10(const fs::path& dir, int per_batch, int test_count) {
    int serial = 0;
    auto write = [&](const fs::path& f, int n) {
        std::ofstream out(f, std::ios::binary);
        for (int i = 0; i < n; ++i, ++serial) {
            out.put(static_cast<char>(serial % 10));
            std::vector<char> px(3072, static_cast<char>(serial * 7 % 251));
            px[0] = static_cast<char>(serial & 0xff);
            px[1] = static_cast<char>(serial >> 8);
            out.write(px.data(), static_cast<std::streamsize>(px.size()));
        }
    };
    for (int b = 1; b <= 5; ++b) write(dir / ("data_batch_" + std::to_string(b) + ".bin"), per_batch);
    write(dir / "test_batch.bin", test_count);
}

std::set<int> serials(const Dataset& d) {
    std::set<int> s;
    for (std::size_t i = 0; i < d.size(); ++i) s.insert(d.image(i)[0] | (d.image(i)[1] << 8));
    return s;
}

}  // namespace

TEST(Resize, IdentityAtSameSize) {
    std::mt19937_64 rng(1);
    const Tensor x = fixtures::random_tensor({2, 3, 9, 9}, rng);
    EXPECT_EQ(resize_bilinear(x, 9).data, x.data);
}

TEST(Resize, ShapesAndFirstMoment) {
    std::mt19937_64 rng(2);
    Tensor x = fixtures::random_tensor({4, 3, 32, 32}, rng, 0.2f);
    for (float& v : x.data) v += 1.0f;
    double mean_in = 0.0;
    for (float v : x.data) mean_in += v;
    mean_in /= x.size();
    for (int r : {28, 24, 20, 16}) {
        const Tensor y = resize_bilinear(x, r);
        EXPECT_EQ(y.shape, (std::vector<int>{4, 3, r, r}));
        double m = 0.0;
        for (float v : y.data) m += v;
        m /= y.size();
        EXPECT_NEAR(m, mean_in, 0.02 * std::abs(mean_in));
    }
}

TEST(Resize, ConstantImageStaysConstant) {
    Tensor x({1, 1, 32, 32}, 0.75f);
    for (float v : resize_bilinear(x, 20).data) EXPECT_FLOAT_EQ(v, 0.75f);
}

TEST(MultiresBatch, SharedCropAllResolutions) {
    const Dataset d = make_synthetic_dataset(3, 12, 32, 1);
    std::mt19937_64 rng(3);
    const std::vector<std::size_t> idx{0, 1, 2, 3};
    const Batch base = prepare_base_batch(d, idx, 32, {}, rng);
    const auto m = make_multires_batch(base, ResolutionSet({32, 28, 24, 20}));
    ASSERT_EQ(m.size(), 4u);
    for (const auto& [r, b] : m) {
        EXPECT_EQ(b.images.shape, (std::vector<int>{4, 3, r, r}));
        EXPECT_EQ(b.labels, base.labels);
    }
    EXPECT_EQ(m.at(32).images.data, base.images.data);
    EXPECT_THROW(make_multires_batch(base, ResolutionSet({40, 32})), InvalidArgument);
}

TEST(Augment, DeterministicInRngAndDisabledIsClean) {
    const Dataset d = make_synthetic_dataset(3, 12, 32, 1);
    const std::vector<std::size_t> idx{0, 5, 7};
    std::mt19937_64 a(4), b(4);
    EXPECT_EQ(prepare_base_batch(d, idx, 32, {}, a).images.data, prepare_base_batch(d, idx, 32, {}, b).images.data);
    AugmentOptions off;
    off.enabled = false;
    std::mt19937_64 c(5);
    EXPECT_EQ(prepare_base_batch(d, idx, 32, off, c).images.data, eval_batch(d, idx, 32).images.data);
}

TEST(Cifar, SplitsAreDeterministicAndDisjoint) {
    TempDir tmp("slimnet_cifar_test");
    const fs::path dir = tmp.path / "cifar-10-batches-bin";
    fs::create_directories(dir);
    write_cifar10(dir, 20, 10);
    DatasetSource src;
    src.name = "cifar10";
    src.root = tmp.path.string();
    src.val_size = 15;
    const Dataset train = load_dataset(src, Split::Train), val = load_dataset(src, Split::Val);
    const Dataset test = load_dataset(src, Split::Test);
    EXPECT_EQ(train.size(), 85u);
    EXPECT_EQ(val.size(), 15u);
    EXPECT_EQ(test.size(), 10u);
    EXPECT_EQ(train.num_classes, 10);
    const auto st = serials(train), sv = serials(val);
    for (int s : sv) EXPECT_FALSE(st.count(s));
    EXPECT_EQ(st.size() + sv.size(), 100u);
    EXPECT_EQ(load_dataset(src, Split::Train).pixels, train.pixels);
    src.seed = 1;
    EXPECT_NE(serials(load_dataset(src, Split::Val)), sv);
}

TEST(Cifar, CorruptAndMissingFiles) {
    TempDir tmp("slimnet_cifar_bad");
    DatasetSource src;
    src.name = "cifar10";
    src.root = tmp.path.string();
    EXPECT_THROW(load_dataset(src, Split::Train), IngestionError);
    write_cifar10(tmp.path, 4, 2);
    src.val_size = 2;
    EXPECT_NO_THROW(load_dataset(src, Split::Train));
    {
        std::ofstream f(tmp.path / "data_batch_3.bin", std::ios::binary | std::ios::app);
        f << "xx";
    }
    try {
        load_dataset(src, Split::Train);
        FAIL() << "expected IngestionError";
    } catch (const IngestionError& e) {
        EXPECT_NE(e.path().find("data_batch_3.bin"), std::string::npos);
    }
}

TEST(Cifar, ManifestMismatchIsReported) {
    TempDir tmp("slimnet_cifar_manifest");
    write_cifar10(tmp.path, 4, 2);
    {
        std::ofstream m(tmp.path / "SHA256SUMS");
        m << std::string(64, '0') << "  test_batch.bin\n";
    }
    DatasetSource src;
    src.name = "cifar10";
    src.root = tmp.path.string();
    src.val_size = 2;
    EXPECT_THROW(load_dataset(src, Split::Test), IngestionError);
    // sha256 of the empty string
    {
        std::ofstream(tmp.path / "empty.bin");
        std::ofstream m(tmp.path / "SHA256SUMS");
        m << "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855  empty.bin\n";
    }
    EXPECT_NO_THROW(load_dataset(src, Split::Test));
}

TEST(Folder, LoadsClassDirectories) {
    TempDir tmp("slimnet_folder_test");
    for (const char* split : {"train", "test"})
        for (const char* cls : {"cat", "dog"}) {
            fs::create_directories(tmp.path / split / cls);
            for (int i = 0; i < 6; ++i) {
                cv::Mat img(20, 24, CV_8UC3, cv::Scalar(10 * i, cls[0] == 'c' ? 200 : 50, 30));
                cv::imwrite((tmp.path / split / cls / (std::to_string(i) + ".png")).string(), img);
            }
        }
    DatasetSource src;
    src.name = "folder";
    src.root = tmp.path.string();
    src.side = 16;
    src.val_size = 2;
    const Dataset train = load_dataset(src, Split::Train);
    EXPECT_EQ(train.num_classes, 2);
    EXPECT_EQ(train.size(), 10u);
    EXPECT_EQ(train.side, 16);
    EXPECT_EQ(train.class_names, (std::vector<std::string>{"cat", "dog"}));
    EXPECT_EQ(load_dataset(src, Split::Test).size(), 12u);
    // Green channel separates the classes (BGR on disk, RGB in memory).
    for (std::size_t i = 0; i < train.size(); ++i) {
        EXPECT_EQ(train.image(i)[256], train.labels[i] == 0 ? 200 : 50);
    }
    {
        std::ofstream(tmp.path / "train" / "cat" / "broken.png") << "not a png";
    }
    EXPECT_THROW(load_dataset(src, Split::Train), IngestionError);
}

TEST(Synthetic, FixedContentSeededSplit) {
    DatasetSource src;
    src.name = "synthetic";
    src.synthetic_train = 300;
    src.synthetic_test = 50;
    src.val_size = 60;
    const Dataset a = load_dataset(src, Split::Train);
    EXPECT_EQ(a.size(), 240u);
    EXPECT_EQ(load_dataset(src, Split::Val).size(), 60u);
    EXPECT_EQ(load_dataset(src, Split::Test).size(), 50u);
    EXPECT_EQ(load_dataset(src, Split::Train).pixels, a.pixels);
    src.val_size = 1000;
    EXPECT_THROW(load_dataset(src, Split::Train), InvalidArgument);
}
