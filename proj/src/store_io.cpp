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

#include "store_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "incrag/error.hpp"

namespace incrag::detail {

namespace {

constexpr char kMagic[8] = {'I', 'R', 'A', 'G', 'S', 'T', 'O', 'R'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 40;

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in bounded slices.
    std::size_t off = 0;
    while (off < bytes.size()) {
        auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, n);
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

void corrupt(const std::string& what) { throw Error(ErrorCode::kCorruptStore, "corrupt store: " + what); }

std::size_t len_checked(const Container& c, std::size_t start, std::uint32_t len) {
    if (start > c.payload.size() || len > c.payload.size() - start) corrupt("record overruns payload");
    return len;
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteWriter::vec(std::span<const double> v) {
    for (double x : v) f64(x);
}

void ByteReader::need(std::size_t n) const {
    if (n > bytes_.size() - pos_) corrupt("unexpected end of data");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::vector<double> ByteReader::vec(std::size_t n) {
    if (n > (bytes_.size() - pos_) / 8) corrupt("vector overruns record");
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
}

void ByteReader::skip(std::size_t n) {
    need(n);
    pos_ += n;
}

ByteWriter& RecordWriter::begin() {
    mark_ = payload_.size();
    payload_.u32(0);  // patched in end()
    return payload_;
}

void RecordWriter::end() {
    auto& b = payload_.bytes();
    auto len = static_cast<std::uint32_t>(b.size() - mark_ - 4);
    for (int i = 0; i < 4; ++i) b[mark_ + i] = static_cast<std::uint8_t>(len >> (8 * i));
    ++count_;
}

void write_container(const std::filesystem::path& path, StoreKind kind, std::uint32_t dimension,
                     RecordWriter& records) {
    const auto& payload = records.payload();
    ByteWriter header;
    for (char c : kMagic) header.u8(static_cast<std::uint8_t>(c));
    header.u32(kFormatVersion);
    header.u32(static_cast<std::uint32_t>(kind));
    header.u32(dimension);
    header.u64(records.count());
    header.u64(payload.size());
    header.u32(crc_of(payload));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(header.bytes().data()),
                  static_cast<std::streamsize>(header.size()));
        out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
        if (!out) throw Error(ErrorCode::kIo, "short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path, StoreKind expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < kHeaderSize) corrupt("file shorter than header");
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) corrupt("bad magic");

    ByteReader header(std::span<const std::uint8_t>(bytes).first(kHeaderSize));
    header.skip(sizeof kMagic);
    if (header.u32() != kFormatVersion) corrupt("unsupported format version");
    if (header.u32() != static_cast<std::uint32_t>(expected)) corrupt("unexpected store kind");
    Container c;
    c.dimension = header.u32();
    c.record_count = header.u64();
    std::uint64_t payload_len = header.u64();
    std::uint32_t crc = header.u32();
    if (payload_len != bytes.size() - kHeaderSize) corrupt("payload length mismatch (truncated?)");
    c.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
    if (crc_of(c.payload) != crc) corrupt("checksum mismatch");
    return c;
}

}  // namespace incrag::detail
