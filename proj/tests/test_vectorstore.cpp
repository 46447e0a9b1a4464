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

#include <doctest.h>

#include <fstream>

#include "incrag/embedding.hpp"
#include "incrag/error.hpp"
#include "incrag/vectorstore.hpp"
#include "oracles.hpp"

using namespace incrag;

namespace {

Chunk chunk(const TextEmbedder& e, const std::string& clip, const std::string& model, const std::string& text,
            ChunkLevel level = ChunkLevel::kIndex) {
    return Chunk{make_chunk_id(clip, model), clip, text, model, level, e.embed(text)};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::kIo;
}

void flip_byte(const std::filesystem::path& p, std::size_t offset) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(offset));
    char c = 0;
    f.get(c);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(static_cast<char>(c ^ 0x5a));
}

}  // namespace

TEST_CASE("upsert appends and is idempotent") {
    TextEmbedder e;
    TextDB db(64);
    auto c = chunk(e, "clip-1", "detector", "objects: truck");
    CHECK(db.upsert(std::vector{c}) == 1);
    CHECK(db.upsert(std::vector{c}) == 0);
    CHECK(db.size() == 1);
    auto d = chunk(e, "clip-1", "captioner", "a white truck", ChunkLevel::kDetailed);
    CHECK(db.upsert(std::vector{d}) == 1);
    auto both = db.chunks_for_clip("clip-1");
    REQUIRE(both.size() == 2);
    CHECK(both[0] == c);
    CHECK(both[1] == d);
    CHECK(db.has_detailed("clip-1"));
    CHECK(db.chunks_for_clip("clip-2").empty());
}

TEST_CASE("conflicting chunk ids are rejected without partial writes") {
    TextEmbedder e;
    TextDB db(64);
    db.upsert(std::vector{chunk(e, "clip-1", "detector", "objects: truck")});
    auto fresh = chunk(e, "clip-2", "detector", "objects: bus");
    auto clash = chunk(e, "clip-1", "detector", "objects: car");
    CHECK(code_of([&] { db.upsert(std::vector{fresh, clash}); }) == ErrorCode::kDuplicateChunk);
    CHECK(db.size() == 1);
    CHECK(code_of([&] { db.upsert(std::vector{Chunk{"x", "c", "t", "m", ChunkLevel::kIndex, {1.0}}}); }) ==
          ErrorCode::kDimensionMismatch);
}

TEST_CASE("search edge cases") {
    TextEmbedder e;
    TextDB db(64);
    auto q = e.embed("truck");
    CHECK(db.topn(q, 3).empty());
    auto c = chunk(e, "clip-1", "detector", "objects: bus");
    db.upsert(std::vector{c});
    auto hits = db.topn(q, 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].chunk == c);
    db.upsert(std::vector{chunk(e, "clip-2", "detector", "objects: truck")});
    hits = db.topn(e.embed("objects: truck"), 1);
    CHECK(hits[0].chunk.clip_id == "clip-2");
    CHECK(hits[0].score == doctest::Approx(1.0));
    CHECK(code_of([&] { db.topn(q, 0); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { db.topn(std::vector<double>(3, 0.0), 1); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("ties rank by ascending id") {
    TextDB db(2);
    std::vector<Chunk> cs;
    for (const char* id : {"c", "a", "b"}) cs.push_back(Chunk{id, "clip", "t", "m", ChunkLevel::kIndex, {1.0, 0.0}});
    db.upsert(cs);
    auto hits = db.topn(std::vector<double>{1.0, 0.0}, 3);
    CHECK(hits[0].chunk.chunk_id == "a");
    CHECK(hits[1].chunk.chunk_id == "b");
    CHECK(hits[2].chunk.chunk_id == "c");
}

TEST_CASE("image store search") {
    TextEmbedder e;
    ImageDB db(64);
    CHECK(db.topf(e.embed("car"), 2).empty());
    db.upsert(std::vector<FrameRecord>{{"f1", "clip-1", e.embed("a red car")}, {"f2", "clip-2", e.embed("a blue bus")}});
    CHECK(db.upsert(std::vector<FrameRecord>{{"f1", "clip-1", e.embed("a red car")}}) == 0);
    auto hits = db.topf(e.embed("a red car"), 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].frame_id == "f1");
    CHECK(hits[0].score == doctest::Approx(1.0));
}

TEST_CASE("exact search equals the brute-force oracle on 1000 random instances") {
    CHECK(oracle::store_oracle_mismatches(1000, 20260101) == 0);
}

TEST_CASE("persist and restore") {
    oracle::TempDir dir("store");
    std::mt19937_64 rng(5);

    SUBCASE("empty stores") {
        persist(TextDB(16), dir.path / "t.db");
        persist(ImageDB(16), dir.path / "i.db");
        CHECK(restore_text_db(dir.path / "t.db").size() == 0);
        CHECK(restore_image_db(dir.path / "i.db").dimension() == 16);
    }

    SUBCASE("1k records round trip field by field") {
        TextDB t(32);
        ImageDB im(32);
        std::vector<Chunk> cs;
        std::vector<FrameRecord> fs;
        for (int i = 0; i < 1000; ++i) {
            auto v = oracle::random_unit(rng, 32);
            cs.push_back(Chunk{"c" + std::to_string(i), "clip" + std::to_string(i / 3), "text \xe2\x9c\x93 " + std::to_string(i),
                               i % 2 ? "captioner" : "detector", i % 2 ? ChunkLevel::kDetailed : ChunkLevel::kIndex, v});
            fs.push_back(FrameRecord{"f" + std::to_string(i), "clip" + std::to_string(i / 3), v});
        }
        t.upsert(cs);
        im.upsert(fs);
        persist(t, dir.path / "t.db");
        persist(im, dir.path / "i.db");
        CHECK(restore_text_db(dir.path / "t.db").records() == t.records());
        CHECK(restore_image_db(dir.path / "i.db").records() == im.records());
    }

    SUBCASE("damage is detected") {
        TextEmbedder e;
        TextDB t(64);
        t.upsert(std::vector{chunk(e, "clip-1", "detector", "objects: truck")});
        auto p = dir.path / "t.db";
        persist(t, p);
        auto size = std::filesystem::file_size(p);
        std::filesystem::resize_file(p, size - 5);
        CHECK(code_of([&] { restore_text_db(p); }) == ErrorCode::kCorruptStore);
        persist(t, p);
        flip_byte(p, size - 20);
        CHECK(code_of([&] { restore_text_db(p); }) == ErrorCode::kCorruptStore);
        persist(t, p);
        flip_byte(p, 0);
        CHECK(code_of([&] { restore_text_db(p); }) == ErrorCode::kCorruptStore);
        persist(ImageDB(64), dir.path / "i.db");
        CHECK(code_of([&] { restore_text_db(dir.path / "i.db"); }) == ErrorCode::kCorruptStore);
        CHECK(code_of([&] { restore_text_db(dir.path / "missing.db"); }) == ErrorCode::kIo);
    }
}
