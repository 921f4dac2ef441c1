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
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "slimnet/errors.hpp"

namespace slimnet::detail {

class BinaryWriter {
public:
    explicit BinaryWriter(std::ofstream& out) : out_(out) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void pod(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <typename T>
    void vec(const std::vector<T>& v) {
        pod<std::uint64_t>(v.size());
        out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
    }
    void str(const std::string& s) {
        pod<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    std::ofstream& out_;
};

class BinaryReader {
public:
    BinaryReader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    T pod() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw IngestionError(path_, "truncated file");
        return v;
    }
    template <typename T>
    std::vector<T> vec() {
        const auto n = pod<std::uint64_t>();
        if (n > (std::uint64_t{1} << 34)) throw IngestionError(path_, "corrupt length field");
        std::vector<T> v(n);
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
        if (!in_) throw IngestionError(path_, "truncated file");
        return v;
    }
    std::string str() {
        auto v = vec<char>();
        return {v.begin(), v.end()};
    }

private:
    std::ifstream& in_;
    std::string path_;
};

/// Writes to `path.tmp` and renames into place once `fn` succeeds.
template <typename Fn>
void write_atomically(const std::string& path, Fn&& fn) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IngestionError(tmp, "cannot open for writing");
        fn(out);
        out.flush();
        if (!out) throw IngestionError(tmp, "write failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IngestionError(path, "rename failed");
}

}  // namespace slimnet::detail
