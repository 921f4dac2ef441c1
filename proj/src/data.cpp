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

#include "slimnet/data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "slimnet/errors.hpp"

namespace fs = std::filesystem;

namespace slimnet {

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset d = *this;
    d.pixels.clear();
    d.labels.clear();
    d.pixels.reserve(indices.size() * image_bytes());
    d.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        auto img = image(i);
        d.pixels.insert(d.pixels.end(), img.begin(), img.end());
        d.labels.push_back(labels[i]);
    }
    return d;
}

namespace {

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError(path.string(), "cannot open for checksum");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError(path.string(), "missing dataset file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Records are <label bytes><3072 pixel bytes>, CHW, 32x32.
void append_cifar(const fs::path& path, int label_bytes, Dataset& d) {
    const std::vector<char> raw = read_file(path);
    const std::size_t rec = static_cast<std::size_t>(label_bytes) + 3072;
    if (raw.empty() || raw.size() % rec != 0) {
        throw IngestionError(path.string(), "corrupt CIFAR file: size " + std::to_string(raw.size()) +
                                                " is not a multiple of " + std::to_string(rec));
    }
    for (std::size_t off = 0; off < raw.size(); off += rec) {
        const int label = static_cast<unsigned char>(raw[off + label_bytes - 1]);
        if (label >= d.num_classes) throw IngestionError(path.string(), "label out of range");
        d.labels.push_back(label);
        d.pixels.insert(d.pixels.end(), raw.begin() + static_cast<std::ptrdiff_t>(off + label_bytes),
                        raw.begin() + static_cast<std::ptrdiff_t>(off + rec));
    }
}

fs::path find_dir(const fs::path& root, const std::string& sub, const std::string& probe) {
    if (fs::exists(root / probe)) return root;
    if (fs::exists(root / sub / probe)) return root / sub;
    throw IngestionError((root / sub / probe).string(), "dataset file not found");
}

void maybe_verify(const fs::path& dir) {
    const fs::path manifest = dir / "SHA256SUMS";
    if (fs::exists(manifest)) verify_manifest(dir.string(), manifest.string());
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

Dataset split_pool(const Dataset& pool, const DatasetSource& src, Split split) {
    if (src.val_size >= pool.size()) {
        throw InvalidArgument("val_size " + std::to_string(src.val_size) + " leaves no training data");
    }
    const auto order = permutation(pool.size(), src.seed ^ 0x5eedf00dull);
    std::vector<std::size_t> pick;
    if (split == Split::Val) {
        pick.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(src.val_size));
    } else {
        pick.assign(order.begin() + static_cast<std::ptrdiff_t>(src.val_size), order.end());
        if (src.train_limit > 0 && pick.size() > src.train_limit) pick.resize(src.train_limit);
    }
    return pool.subset(pick);
}

Dataset limit_test(const Dataset& test, const DatasetSource& src) {
    auto order = permutation(test.size(), src.seed ^ 0x7e57ull);
    if (src.test_limit > 0 && order.size() > src.test_limit) order.resize(src.test_limit);
    return test.subset(order);
}

void set_channel_stats(Dataset& d) {
    const std::size_t plane = static_cast<std::size_t>(d.side) * d.side;
    for (int c = 0; c < d.channels && c < 3; ++c) {
        double s = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const std::uint8_t* p = d.pixels.data() + i * d.image_bytes() + c * plane;
            for (std::size_t k = 0; k < plane; ++k) {
                const double v = p[k] / 255.0;
                s += v;
                sq += v * v;
            }
        }
        const double n = static_cast<double>(d.size() * plane);
        const double mean = s / n;
        d.mean[c] = static_cast<float>(mean);
        d.stddev[c] = static_cast<float>(std::sqrt(std::max(1e-8, sq / n - mean * mean)));
    }
}

Dataset load_cifar(const DatasetSource& src, Split split, bool hundred) {
    const fs::path root = src.root.empty() ? fs::path(".") : fs::path(src.root);
    Dataset d;
    d.name = hundred ? "cifar100" : "cifar10";
    d.num_classes = hundred ? 100 : 10;
    d.side = 32;
    const int label_bytes = hundred ? 2 : 1;
    if (hundred) {
        d.mean = {0.5071f, 0.4865f, 0.4409f};
        d.stddev = {0.2673f, 0.2564f, 0.2762f};
    } else {
        d.mean = {0.4914f, 0.4822f, 0.4465f};
        d.stddev = {0.2470f, 0.2435f, 0.2616f};
    }
    const fs::path dir = hundred ? find_dir(root, "cifar-100-binary", "train.bin")
                                 : find_dir(root, "cifar-10-batches-bin", "data_batch_1.bin");
    maybe_verify(dir);
    if (split == Split::Test) {
        append_cifar(dir / (hundred ? "test.bin" : "test_batch.bin"), label_bytes, d);
        return limit_test(d, src);
    }
    if (hundred) {
        append_cifar(dir / "train.bin", label_bytes, d);
    } else {
        for (int b = 1; b <= 5; ++b) append_cifar(dir / ("data_batch_" + std::to_string(b) + ".bin"), label_bytes, d);
    }
    return split_pool(d, src, split);
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".ppm" || ext == ".pgm";
}

Dataset load_folder_tree(const fs::path& dir, int side) {
    if (!fs::is_directory(dir)) throw IngestionError(dir.string(), "not a directory");
    Dataset d;
    d.name = "folder";
    d.side = side;
    std::vector<fs::path> classes;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) classes.push_back(e.path());
    }
    std::sort(classes.begin(), classes.end());
    if (classes.empty()) throw IngestionError(dir.string(), "no class directories");
    for (std::size_t k = 0; k < classes.size(); ++k) {
        d.class_names.push_back(classes[k].filename().string());
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(classes[k])) {
            if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
            if (img.empty()) throw IngestionError(f.string(), "cannot decode image");
            cv::Mat rgb, resized;
            cv::cvtColor(img, rgb, cv::COLOR_BGR2RGB);
            cv::resize(rgb, resized, cv::Size(side, side), 0, 0, cv::INTER_AREA);
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < side; ++y)
                    for (int x = 0; x < side; ++x) d.pixels.push_back(resized.at<cv::Vec3b>(y, x)[c]);
            d.labels.push_back(static_cast<int>(k));
        }
    }
    d.num_classes = static_cast<int>(classes.size());
    if (d.size() == 0) throw IngestionError(dir.string(), "no images found");
    return d;
}

Dataset load_folder(const DatasetSource& src, Split split) {
    const fs::path root(src.root);
    if (fs::is_directory(root / "train")) {
        if (split == Split::Test) {
            if (!fs::is_directory(root / "test")) throw IngestionError((root / "test").string(), "missing test split");
            Dataset t = load_folder_tree(root / "test", src.side);
            Dataset train = load_folder_tree(root / "train", src.side);
            if (t.class_names != train.class_names) {
                throw IngestionError((root / "test").string(), "class directories differ from train/");
            }
            set_channel_stats(train);
            t.mean = train.mean;
            t.stddev = train.stddev;
            return limit_test(t, src);
        }
        Dataset pool = load_folder_tree(root / "train", src.side);
        set_channel_stats(pool);
        return split_pool(pool, src, split);
    }
    // Single tree: a seeded tenth is reserved for test, validation comes out of the rest.
    Dataset all = load_folder_tree(root, src.side);
    set_channel_stats(all);
    const auto order = permutation(all.size(), src.seed ^ 0xf01dull);
    const std::size_t n_test = std::max<std::size_t>(1, all.size() / 10);
    std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    if (split == Split::Test) return limit_test(all.subset(test_idx), src);
    return split_pool(all.subset(rest), src, split);
}

Dataset load_synthetic(const DatasetSource& src, Split split) {
    // Content is fixed by the class count; the run seed only orders and splits it.
    if (split == Split::Test) {
        Dataset t = make_synthetic_dataset(src.synthetic_classes, src.synthetic_test, src.side, 0x7e57ull + src.synthetic_classes);
        Dataset pool = make_synthetic_dataset(src.synthetic_classes, src.synthetic_train, src.side, 0x7a1full + src.synthetic_classes);
        set_channel_stats(pool);
        t.mean = pool.mean;
        t.stddev = pool.stddev;
        return limit_test(t, src);
    }
    Dataset pool = make_synthetic_dataset(src.synthetic_classes, src.synthetic_train, src.side, 0x7a1full + src.synthetic_classes);
    set_channel_stats(pool);
    return split_pool(pool, src, split);
}

}  // namespace

Dataset load_dataset(const DatasetSource& source, Split split) {
    if (source.name == "cifar10") return load_cifar(source, split, false);
    if (source.name == "cifar100") return load_cifar(source, split, true);
    if (source.name == "folder") return load_folder(source, split);
    if (source.name == "synthetic") return load_synthetic(source, split);
    throw InvalidArgument("unknown dataset '" + source.name + "' (expected cifar10, cifar100, folder or synthetic)");
}

void verify_manifest(const std::string& root, const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IngestionError(manifest_path, "cannot open checksum manifest");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string digest, rel;
        ls >> digest >> rel;
        if (rel.empty()) throw IngestionError(manifest_path, "malformed line '" + line + "'");
        if (!rel.empty() && rel[0] == '*') rel.erase(0, 1);
        const fs::path file = fs::path(root) / rel;
        if (!fs::exists(file)) throw IngestionError(file.string(), "listed in manifest but missing");
        if (sha256_file(file) != digest) throw IngestionError(file.string(), "checksum mismatch");
    }
}

Dataset make_synthetic_dataset(int num_classes, std::size_t count, int side, std::uint64_t seed) {
    if (num_classes < 2 || side < 4) throw InvalidArgument("synthetic dataset needs >= 2 classes and side >= 4");
    Dataset d;
    d.name = "synthetic";
    d.num_classes = num_classes;
    d.side = side;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 22.0);
    // Each class: an oriented grating with its own frequency, tint and blob position.
    struct Proto { double freq, angle, tint[3], bx, by; };
    std::vector<Proto> protos(num_classes);
    for (int k = 0; k < num_classes; ++k) {
        Proto& p = protos[k];
        p.freq = 1.5 + 3.0 * (k % 4) / 3.0 + unit(rng);
        p.angle = M_PI * k / num_classes;
        for (double& t : p.tint) t = 0.4 + 0.6 * unit(rng);
        p.bx = 0.25 + 0.5 * unit(rng);
        p.by = 0.25 + 0.5 * unit(rng);
    }
    for (std::size_t i = 0; i < count; ++i) {
        const int k = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        const Proto& p = protos[k];
        const double phase = 2.0 * M_PI * unit(rng);
        const double shift_x = (unit(rng) - 0.5) * 0.2, shift_y = (unit(rng) - 0.5) * 0.2;
        const double contrast = 0.6 + 0.4 * unit(rng);
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    const double u = static_cast<double>(x) / side, v = static_cast<double>(y) / side;
                    const double proj = u * std::cos(p.angle) + v * std::sin(p.angle);
                    const double grating = std::sin(2.0 * M_PI * p.freq * proj + phase);
                    const double dx = u - p.bx - shift_x, dy = v - p.by - shift_y;
                    const double blob = std::exp(-(dx * dx + dy * dy) / 0.02);
                    double val = 128.0 + contrast * (55.0 * grating * p.tint[c] + 60.0 * blob * (c == k % 3 ? 1.0 : -0.5));
                    val += noise(rng);
                    d.pixels.push_back(static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0)));
                }
            }
        }
        d.labels.push_back(k);
    }
    return d;
}

Tensor resize_bilinear(const Tensor& x, int out_side) {
    const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
    if (out_side < 1) throw InvalidArgument("resize target must be positive");
    if (ih == out_side && iw == out_side) return x;
    Tensor y({n, c, out_side, out_side});
    const double sy = static_cast<double>(ih) / out_side, sx = static_cast<double>(iw) / out_side;
    std::vector<int> x0(out_side), x1(out_side);
    std::vector<float> wx(out_side);
    for (int ox = 0; ox < out_side; ++ox) {
        const double src = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(iw - 1));
        x0[ox] = static_cast<int>(src);
        x1[ox] = std::min(x0[ox] + 1, iw - 1);
        wx[ox] = static_cast<float>(src - x0[ox]);
    }
    for (int oy = 0; oy < out_side; ++oy) {
        const double src = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(ih - 1));
        const int y0 = static_cast<int>(src), y1 = std::min(y0 + 1, ih - 1);
        const float wy = static_cast<float>(src - y0);
        for (int p = 0; p < n * c; ++p) {
            const float* plane = x.ptr() + static_cast<std::size_t>(p) * ih * iw;
            const float* r0 = plane + static_cast<std::size_t>(y0) * iw;
            const float* r1 = plane + static_cast<std::size_t>(y1) * iw;
            float* out = y.ptr() + (static_cast<std::size_t>(p) * out_side + oy) * out_side;
            for (int ox = 0; ox < out_side; ++ox) {
                const float top = r0[x0[ox]] + wx[ox] * (r0[x1[ox]] - r0[x0[ox]]);
                const float bot = r1[x0[ox]] + wx[ox] * (r1[x1[ox]] - r1[x0[ox]]);
                out[ox] = top + wy * (bot - top);
            }
        }
    }
    return y;
}

namespace {

// Normalized float planes of one image at the dataset's native side.
void decode(const Dataset& d, std::size_t index, float* out) {
    const std::size_t plane = static_cast<std::size_t>(d.side) * d.side;
    auto img = d.image(index);
    for (int c = 0; c < d.channels; ++c) {
        const float m = d.mean[c % 3], s = d.stddev[c % 3];
        for (std::size_t k = 0; k < plane; ++k) out[c * plane + k] = (img[c * plane + k] / 255.0f - m) / s;
    }
}

Tensor decode_batch(const Dataset& d, std::span<const std::size_t> indices) {
    Tensor t({static_cast<int>(indices.size()), d.channels, d.side, d.side});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= d.size()) throw InvalidArgument("sample index out of range");
        decode(d, indices[i], t.ptr() + i * d.image_bytes());
    }
    return t;
}

}  // namespace

Batch prepare_base_batch(const Dataset& data, std::span<const std::size_t> indices, int base_resolution,
                         const AugmentOptions& augment, std::mt19937_64& rng) {
    Tensor native = decode_batch(data, indices);
    if (augment.enabled) {
        // Zero-padded random crop (zero is the post-normalization mean) plus horizontal flip.
        const int side = data.side, pad = augment.pad;
        std::uniform_int_distribution<int> offset(0, 2 * pad);
        std::bernoulli_distribution coin(0.5);
        Tensor out(native.shape);
        const std::size_t plane = static_cast<std::size_t>(side) * side;
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const int oy = offset(rng) - pad, ox = offset(rng) - pad;
            const bool flip = augment.flip && coin(rng);
            for (int c = 0; c < data.channels; ++c) {
                const float* src = native.ptr() + (i * data.channels + c) * plane;
                float* dst = out.ptr() + (i * data.channels + c) * plane;
                for (int y = 0; y < side; ++y) {
                    for (int x = 0; x < side; ++x) {
                        const int sy = y + oy, sx = (flip ? side - 1 - x : x) + ox;
                        dst[y * side + x] = (sy >= 0 && sy < side && sx >= 0 && sx < side) ? src[sy * side + sx] : 0.0f;
                    }
                }
            }
        }
        native = std::move(out);
    }
    Batch b;
    b.images = resize_bilinear(native, base_resolution);
    b.resolution = base_resolution;
    b.labels.reserve(indices.size());
    for (std::size_t i : indices) b.labels.push_back(data.labels[i]);
    return b;
}

std::map<int, Batch> make_multires_batch(const Batch& base, const ResolutionSet& targets) {
    std::map<int, Batch> out;
    for (int r : targets.values()) {
        if (r > base.resolution) {
            throw InvalidArgument("target resolution " + std::to_string(r) + " exceeds base " + std::to_string(base.resolution));
        }
        Batch b;
        b.images = r == base.resolution ? base.images : resize_bilinear(base.images, r);
        b.labels = base.labels;
        b.resolution = r;
        out.emplace(r, std::move(b));
    }
    return out;
}

Batch eval_batch(const Dataset& data, std::span<const std::size_t> indices, int resolution) {
    Batch b;
    b.images = resize_bilinear(decode_batch(data, indices), resolution);
    b.resolution = resolution;
    for (std::size_t i : indices) b.labels.push_back(data.labels[i]);
    return b;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

}  // namespace slimnet
