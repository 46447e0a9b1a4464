// Copyright 2026 The incrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian record container shared by the TextDB, ImageDB and KNN
// training-set files.
//
//   offset  size  field
//   0       8     magic "IRAGSTOR"
//   8       4     format version (1)
//   12      4     store kind (1 text, 2 image, 3 knn)
//   16      4     vector dimension
//   20      8     record count
//   28      8     payload byte length
//   36      4     CRC-32 of the payload
//   40      ...   payload: per record a u32 length followed by its fields

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace incrag::detail {

enum class StoreKind : std::uint32_t { kText = 1, kImage = 2, kKnn = 3 };

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void str(std::string_view s);
    void vec(std::span<const double> v);

    std::size_t size() const { return bytes_.size(); }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string str();
    std::vector<double> vec(std::size_t n);

    void skip(std::size_t n);
    std::size_t offset() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Accumulates records, each framed by its byte length.
class RecordWriter {
public:
    ByteWriter& begin();
    void end();

    std::size_t count() const { return count_; }
    std::vector<std::uint8_t>& payload() { return payload_.bytes(); }

private:
    ByteWriter payload_;
    std::size_t mark_ = 0;
    std::size_t count_ = 0;
};

struct Container {
    std::uint32_t dimension = 0;
    std::uint64_t record_count = 0;
    std::vector<std::uint8_t> payload;
};

[[noreturn]] void corrupt(const std::string& what);
std::size_t len_checked(const Container& c, std::size_t start, std::uint32_t len);

void write_container(const std::filesystem::path& path, StoreKind kind, std::uint32_t dimension,
                     RecordWriter& records);
Container read_container(const std::filesystem::path& path, StoreKind expected);

/// Hands each framed record of the payload to `fn` as a ByteReader; the
/// callback must consume the record exactly.
template <typename Fn>
void for_each_record(const Container& c, Fn&& fn) {
    ByteReader outer(c.payload);
    for (std::uint64_t i = 0; i < c.record_count; ++i) {
        std::uint32_t len = outer.u32();
        std::size_t start = outer.offset();
        ByteReader rec(std::span<const std::uint8_t>(c.payload).subspan(start, len_checked(c, start, len)));
        fn(rec);
        if (!rec.done()) corrupt("record has trailing bytes");
        outer.skip(len);
    }
    if (!outer.done()) corrupt("payload has trailing bytes");
}

}  // namespace incrag::detail
