// Copyright 2026 The qipkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file io.hpp
 * Little-endian binary packing, bounds-checked reading, and atomic file
 * writes. All multi-byte fields in this library's file formats are
 * little-endian regardless of host order; floats travel as their IEEE-754
 * bit patterns so round trips are bitwise exact.
 */
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "qip/errors.hpp"

namespace qip {

class byte_writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void bytes(const char* p, std::size_t n) { buf_.append(p, n); }

    [[nodiscard]] const std::string& str() const noexcept { return buf_; }

  private:
    std::string buf_;
};

class byte_reader {
  public:
    explicit byte_reader(std::string data) : data_(std::move(data)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
        }
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
        }
        return v;
    }

    /// Big-endian u32 (the image-file convention; everything else here is
    /// little-endian).
    std::uint32_t u32_be() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) | static_cast<unsigned char>(data_[pos_++]);
        }
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string bytes(std::size_t n) {
        need(n);
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    [[nodiscard]] bool exhausted() const noexcept { return pos_ == data_.size(); }
    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) {
            throw data_error(data_error::kind::truncated,
                             "unexpected end of data at offset " + std::to_string(pos_));
        }
    }

    std::string data_;
    std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error(data_error::kind::truncated, "cannot open '" + path + "' for reading");
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

/// Writes via a sibling temp file and renames into place, so readers never
/// observe a half-written artifact.
inline void atomic_write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw data_error(data_error::kind::truncated, "cannot open '" + tmp + "' for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw data_error(data_error::kind::truncated, "short write to '" + tmp + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace qip
