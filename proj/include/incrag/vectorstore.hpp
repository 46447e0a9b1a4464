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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "incrag/embedding.hpp"
#include "incrag/kernels.hpp"

namespace incrag {

enum class ChunkLevel : std::uint8_t {
    kIndex = 0,     // lightweight model output, written at preprocessing
    kDetailed = 1,  // heavyweight model output, written by the extractor
};

std::string_view to_string(ChunkLevel level);

struct Chunk {
    std::string chunk_id;
    std::string clip_id;
    std::string text;
    std::string source_model_id;
    ChunkLevel level = ChunkLevel::kIndex;
    Vector embedding;

    bool operator==(const Chunk&) const = default;
};

/// One chunk per (clip, model output).
std::string make_chunk_id(std::string_view clip_id, std::string_view model_id);

struct TextHit {
    Chunk chunk;
    double score = 0.0;
};

/// Append-only store of chunk embeddings with a per-clip index. Exact search;
/// ties rank by ascending chunk_id. Not internally synchronized: callers hold
/// the corpus lock (shared for search, exclusive for upsert).
class TextDB {
public:
    explicit TextDB(std::size_t dimension);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<Chunk>& records() const noexcept { return records_; }
    std::span<const double> matrix() const noexcept { return matrix_; }

    /// Appends new chunks and returns how many were added. Re-sending an
    /// identical chunk is a no-op; a known chunk_id with different content
    /// throws kDuplicateChunk and leaves the store untouched.
    std::size_t upsert(std::span<const Chunk> chunks);

    const Chunk* find(std::string_view chunk_id) const;
    std::vector<Chunk> chunks_for_clip(std::string_view clip_id) const;
    bool has_detailed(std::string_view clip_id) const;

    /// Exactly min(n, size()) hits, best first. n must be >= 1.
    std::vector<TextHit> topn(std::span<const double> query, std::size_t n,
                              kernels::Exec exec = kernels::Exec::kAuto) const;
    std::vector<TextHit> topn_if(std::span<const double> query, std::size_t n,
                                 const std::function<bool(const Chunk&)>& eligible,
                                 kernels::Exec exec = kernels::Exec::kAuto) const;

private:
    std::size_t dimension_;
    std::vector<Chunk> records_;
    std::vector<double> matrix_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_clip_;
};

struct FrameRecord {
    std::string frame_id;
    std::string clip_id;
    Vector vector;

    bool operator==(const FrameRecord&) const = default;
};

struct FrameHit {
    std::string frame_id;
    std::string clip_id;
    double score = 0.0;
};

/// Frame embeddings, one record per keyframe. Ties rank by ascending frame_id.
class ImageDB {
public:
    explicit ImageDB(std::size_t dimension);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<FrameRecord>& records() const noexcept { return records_; }

    std::size_t upsert(std::span<const FrameRecord> records);
    bool contains(std::string_view frame_id) const { return by_id_.count(std::string(frame_id)) != 0; }

    std::vector<FrameHit> topf(std::span<const double> query, std::size_t f,
                               kernels::Exec exec = kernels::Exec::kAuto) const;

private:
    std::size_t dimension_;
    std::vector<FrameRecord> records_;
    std::vector<double> matrix_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// On-disk stores; byte layout in docs/formats.md. Corruption (bad magic,
// truncation, checksum mismatch) throws kCorruptStore.
void persist(const TextDB& db, const std::filesystem::path& path);
void persist(const ImageDB& db, const std::filesystem::path& path);
TextDB restore_text_db(const std::filesystem::path& path);
ImageDB restore_image_db(const std::filesystem::path& path);

}  // namespace incrag
