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

#include "incrag/vectorstore.hpp"

#include <unordered_set>

#include "incrag/error.hpp"
#include "store_io.hpp"

namespace incrag {

std::string_view to_string(ChunkLevel level) { return level == ChunkLevel::kIndex ? "index" : "detailed"; }

std::string make_chunk_id(std::string_view clip_id, std::string_view model_id) {
    std::string id(clip_id);
    id += '#';
    id += model_id;
    return id;
}

namespace {

void check_dimension(std::size_t have, std::size_t want, const std::string& what) {
    if (have != want) {
        throw Error(ErrorCode::kDimensionMismatch,
                    what + ": dimension " + std::to_string(have) + ", store expects " + std::to_string(want));
    }
}

void check_query(std::size_t have, std::size_t want, std::size_t n) {
    check_dimension(have, want, "query vector");
    if (n == 0) throw Error(ErrorCode::kInvalidArgument, "search count must be >= 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// TextDB

TextDB::TextDB(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorCode::kInvalidArgument, "TextDB dimension must be positive");
}

std::size_t TextDB::upsert(std::span<const Chunk> chunks) {
    // Validate the whole batch before touching the store.
    std::unordered_map<std::string, const Chunk*> fresh;
    std::vector<const Chunk*> order;
    for (const auto& c : chunks) {
        if (c.chunk_id.empty() || c.clip_id.empty()) {
            throw Error(ErrorCode::kInvalidArgument, "chunk needs a chunk_id and a clip_id");
        }
        check_dimension(c.embedding.size(), dimension_, "chunk '" + c.chunk_id + "'");
        const Chunk* existing = find(c.chunk_id);
        if (!existing) {
            auto it = fresh.find(c.chunk_id);
            existing = it == fresh.end() ? nullptr : it->second;
        }
        if (existing) {
            if (!(*existing == c)) {
                throw Error(ErrorCode::kDuplicateChunk, "chunk_id '" + c.chunk_id + "' already holds different content");
            }
            continue;
        }
        fresh.emplace(c.chunk_id, &c);
        order.push_back(&c);
    }
    for (const Chunk* c : order) {
        std::size_t pos = records_.size();
        records_.push_back(*c);
        matrix_.insert(matrix_.end(), c->embedding.begin(), c->embedding.end());
        by_id_.emplace(c->chunk_id, pos);
        by_clip_[c->clip_id].push_back(pos);
    }
    return order.size();
}

const Chunk* TextDB::find(std::string_view chunk_id) const {
    auto it = by_id_.find(std::string(chunk_id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::vector<Chunk> TextDB::chunks_for_clip(std::string_view clip_id) const {
    std::vector<Chunk> out;
    auto it = by_clip_.find(std::string(clip_id));
    if (it == by_clip_.end()) return out;
    for (auto pos : it->second) out.push_back(records_[pos]);
    return out;
}

bool TextDB::has_detailed(std::string_view clip_id) const {
    auto it = by_clip_.find(std::string(clip_id));
    if (it == by_clip_.end()) return false;
    for (auto pos : it->second) {
        if (records_[pos].level == ChunkLevel::kDetailed) return true;
    }
    return false;
}

std::vector<TextHit> TextDB::topn(std::span<const double> query, std::size_t n, kernels::Exec exec) const {
    return topn_if(query, n, [](const Chunk&) { return true; }, exec);
}

std::vector<TextHit> TextDB::topn_if(std::span<const double> query, std::size_t n,
                                     const std::function<bool(const Chunk&)>& eligible, kernels::Exec exec) const {
    check_query(query.size(), dimension_, n);
    std::vector<TextHit> hits;
    if (records_.empty()) return hits;
    std::vector<double> scores(records_.size());
    kernels::dot_rows(exec, matrix_, dimension_, query, scores);
    auto best = kernels::select_best(
        records_.size(), n,
        [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return records_[a].chunk_id < records_[b].chunk_id;
        },
        [&](std::size_t i) { return eligible(records_[i]); });
    hits.reserve(best.size());
    for (auto i : best) hits.push_back(TextHit{records_[i], scores[i]});
    return hits;
}

// ---------------------------------------------------------------------------
// ImageDB

ImageDB::ImageDB(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorCode::kInvalidArgument, "ImageDB dimension must be positive");
}

std::size_t ImageDB::upsert(std::span<const FrameRecord> records) {
    std::unordered_set<std::string> fresh;
    std::vector<const FrameRecord*> order;
    for (const auto& r : records) {
        if (r.frame_id.empty() || r.clip_id.empty()) {
            throw Error(ErrorCode::kInvalidArgument, "frame record needs a frame_id and a clip_id");
        }
        check_dimension(r.vector.size(), dimension_, "frame '" + r.frame_id + "'");
        auto it = by_id_.find(r.frame_id);
        if (it != by_id_.end()) {
            if (!(records_[it->second] == r)) {
                throw Error(ErrorCode::kDuplicateChunk, "frame_id '" + r.frame_id + "' already holds a different vector");
            }
            continue;
        }
        if (!fresh.insert(r.frame_id).second) continue;
        order.push_back(&r);
    }
    for (const auto* r : order) {
        by_id_.emplace(r->frame_id, records_.size());
        records_.push_back(*r);
        matrix_.insert(matrix_.end(), r->vector.begin(), r->vector.end());
    }
    return order.size();
}

std::vector<FrameHit> ImageDB::topf(std::span<const double> query, std::size_t f, kernels::Exec exec) const {
    check_query(query.size(), dimension_, f);
    std::vector<FrameHit> hits;
    if (records_.empty()) return hits;
    std::vector<double> scores(records_.size());
    kernels::dot_rows(exec, matrix_, dimension_, query, scores);
    auto best = kernels::select_best(
        records_.size(), f,
        [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return records_[a].frame_id < records_[b].frame_id;
        },
        [](std::size_t) { return true; });
    hits.reserve(best.size());
    for (auto i : best) hits.push_back(FrameHit{records_[i].frame_id, records_[i].clip_id, scores[i]});
    return hits;
}

// ---------------------------------------------------------------------------
// Persistence

void persist(const TextDB& db, const std::filesystem::path& path) {
    detail::RecordWriter rw;
    for (const auto& c : db.records()) {
        auto& w = rw.begin();
        w.str(c.chunk_id);
        w.str(c.clip_id);
        w.str(c.text);
        w.str(c.source_model_id);
        w.u8(static_cast<std::uint8_t>(c.level));
        w.vec(c.embedding);
        rw.end();
    }
    detail::write_container(path, detail::StoreKind::kText, static_cast<std::uint32_t>(db.dimension()), rw);
}

void persist(const ImageDB& db, const std::filesystem::path& path) {
    detail::RecordWriter rw;
    for (const auto& r : db.records()) {
        auto& w = rw.begin();
        w.str(r.frame_id);
        w.str(r.clip_id);
        w.vec(r.vector);
        rw.end();
    }
    detail::write_container(path, detail::StoreKind::kImage, static_cast<std::uint32_t>(db.dimension()), rw);
}

TextDB restore_text_db(const std::filesystem::path& path) {
    auto c = detail::read_container(path, detail::StoreKind::kText);
    if (c.dimension == 0) detail::corrupt("zero dimension");
    TextDB db(c.dimension);
    std::vector<Chunk> chunks;
    detail::for_each_record(c, [&](detail::ByteReader& r) {
        Chunk ch;
        ch.chunk_id = r.str();
        ch.clip_id = r.str();
        ch.text = r.str();
        ch.source_model_id = r.str();
        auto level = r.u8();
        if (level > 1) detail::corrupt("bad chunk level");
        ch.level = static_cast<ChunkLevel>(level);
        ch.embedding = r.vec(c.dimension);
        chunks.push_back(std::move(ch));
    });
    if (db.upsert(chunks) != chunks.size()) detail::corrupt("duplicate chunk records");
    return db;
}

ImageDB restore_image_db(const std::filesystem::path& path) {
    auto c = detail::read_container(path, detail::StoreKind::kImage);
    if (c.dimension == 0) detail::corrupt("zero dimension");
    ImageDB db(c.dimension);
    std::vector<FrameRecord> records;
    detail::for_each_record(c, [&](detail::ByteReader& r) {
        FrameRecord fr;
        fr.frame_id = r.str();
        fr.clip_id = r.str();
        fr.vector = r.vec(c.dimension);
        records.push_back(std::move(fr));
    });
    if (db.upsert(records) != records.size()) detail::corrupt("duplicate frame records");
    return db;
}

}  // namespace incrag
