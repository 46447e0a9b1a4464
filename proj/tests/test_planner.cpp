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

#include <map>

#include "incrag/error.hpp"
#include "incrag/planner.hpp"
#include "oracles.hpp"

using namespace incrag;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::kIo;
}

// Five labelled points at distance 1..5 from the origin along x, plus far
// points carrying the opposite label.
KnnModel placed(const std::vector<std::uint8_t>& near_labels) {
    KnnModel m(2);
    for (std::size_t i = 0; i < near_labels.size(); ++i) {
        m.add(std::vector<double>{static_cast<double>(i + 1), 0.0}, near_labels[i]);
    }
    for (int i = 0; i < 4; ++i) m.add(std::vector<double>{100.0 + i, 0.0}, 1);
    for (int i = 0; i < 4; ++i) m.add(std::vector<double>{-100.0 - i, 0.0}, 0);
    return m;
}

struct World {
    Vocabulary vocab = Vocabulary::street_scene();
    CorpusManifest corpus = gen_synthetic(17, 40, vocab);
    ModelRegistry registry = make_synthetic_registry(vocab);
    TextEmbedder embedder;
    TextDB text{64};
    ImageDB image{64};

    World() {
        const auto& det = registry.clip_model("detector");
        for (auto& clip : corpus.clips) {
            auto out = det.run(clip);
            text.upsert(std::vector{Chunk{make_chunk_id(clip.clip_id, "detector"), clip.clip_id, out.text, "detector",
                                          ChunkLevel::kIndex, embedder.embed(out.text)}});
            clip.mark_extracted("detector");
            for (const auto& f : clip.frames) {
                image.upsert(std::vector{FrameRecord{f.frame_id, clip.clip_id, registry.frame_embedder()->embed(f)}});
            }
        }
    }

    PlanInputs inputs(const KnnModel* knn = nullptr) const {
        return PlanInputs{corpus, text, &image, embedder, registry, knn, nullptr};
    }
};

}  // namespace

TEST_CASE("hand-placed neighbours decide by majority") {
    std::vector<double> origin{0.0, 0.0};
    auto yes = knn_vote(placed({1, 1, 1, 0, 0}), origin);
    CHECK(yes.accept);
    CHECK(yes.positive == 3);
    CHECK(yes.neighbors == std::vector<std::size_t>{0, 1, 2, 3, 4});
    auto no = knn_vote(placed({1, 1, 0, 0, 0}), origin);
    CHECK_FALSE(no.accept);
    CHECK(no.positive == 2);
    CHECK(knn_classify(placed({0, 0, 1, 1, 1}), origin));
}

TEST_CASE("equidistant neighbours resolve by insertion order") {
    KnnModel m(1);
    for (int i = 0; i < 3; ++i) m.add(std::vector<double>{1.0}, 0);
    for (int i = 0; i < 3; ++i) m.add(std::vector<double>{-1.0}, 1);
    auto v = knn_vote(m, std::vector<double>{0.0});
    CHECK(v.neighbors == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(v.positive == 2);
    CHECK_FALSE(v.accept);
}

TEST_CASE("votes match the brute-force oracle") {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 300; ++t) {
        std::size_t dim = 2 + rng() % 10, n = 5 + rng() % 200;
        KnnModel m(dim);
        std::vector<std::vector<double>> pts;
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            auto p = (i > 0 && rng() % 4 == 0) ? pts[rng() % i] : oracle::random_unit(rng, dim);
            int l = static_cast<int>(rng() % 2);
            m.add(p, static_cast<std::uint8_t>(l));
            pts.push_back(p);
            labels.push_back(l);
        }
        auto x = oracle::random_unit(rng, dim);
        auto want = oracle::nearest_labels(pts, labels, x, 5);
        int pos = 0;
        for (int l : want) pos += l;
        auto exec = t % 2 ? kernels::Exec::kParallel : kernels::Exec::kSerial;
        auto got = knn_vote(m, x, 5, 3, exec);
        CHECK(got.positive == static_cast<std::size_t>(pos));
        CHECK(got.accept == (pos >= 3));
    }
}

TEST_CASE("undertrained and malformed models") {
    KnnModel m(2);
    for (int i = 0; i < 4; ++i) m.add(std::vector<double>{0.0, static_cast<double>(i)}, 1);
    CHECK(code_of([&] { knn_vote(m, std::vector<double>{0.0, 0.0}); }) == ErrorCode::kUndertrained);
    CHECK(code_of([&] { m.add(std::vector<double>{1.0}, 1); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("training labels follow the baseline clip sets") {
    World w;
    PlannerConfig cfg;
    cfg.top_n = 12;
    std::vector<std::string> queries = {"Is there a white truck?", "What is the color of the bus?", "Is there a dog?"};
    std::vector<QueryCandidates> cands;
    std::vector<QueryClips> base;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        cands.push_back(knn_candidates(queries[i], w.text, w.embedder, cfg));
        CHECK(cands.back().candidates.size() == 12);
        QueryClips qc{queries[i], {}};
        // Mark every third candidate clip as the baseline answer.
        for (std::size_t j = 0; j < cands.back().candidates.size(); j += 3) {
            qc.clips.insert(cands.back().candidates[j].clip_id);
        }
        base.push_back(qc);
    }
    auto knn = knn_train(base, cands, 128);
    CHECK(knn.size() == 36);
    std::size_t at = 0, positives = 0;
    for (std::size_t q = 0; q < cands.size(); ++q) {
        for (const auto& c : cands[q].candidates) {
            auto want = base[q].clips.count(c.clip_id) ? 1 : 0;
            positives += want;
            CHECK(knn.labels()[at] == want);
            CHECK(std::equal(c.feature.begin(), c.feature.end(), knn.feature(at).begin()));
            ++at;
        }
    }
    CHECK(knn.count_label(1) == positives);

    std::swap(base[0], base[1]);
    CHECK(code_of([&] { knn_train(base, cands, 128); }) == ErrorCode::kQuerySetMismatch);
}

TEST_CASE("knn store round trip") {
    oracle::TempDir dir("knn");
    auto m = placed({1, 0, 1, 0, 1});
    persist(m, dir.path / "knn.db");
    CHECK(restore_knn(dir.path / "knn.db") == m);
    persist(TextDB(2), dir.path / "t.db");
    CHECK(code_of([&] { restore_knn(dir.path / "t.db"); }) == ErrorCode::kCorruptStore);
}

TEST_CASE("plan without filtering") {
    World w;
    PlannerConfig cfg;
    cfg.k = 5;
    cfg.top_f = 4;
    const std::string q = "Is there a red car?";

    SUBCASE("all-chunks ranking is the plain top-k") {
        cfg.ranking = ContextRanking::kAllChunks;
        auto p = plan(q, w.inputs(), cfg);
        auto want = oracle::topn_text(w.text, w.embedder.embed(q), 5);
        REQUIRE(p.context_chunks.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(p.context_chunks[i].chunk.chunk_id == want[i].first);
    }
    SUBCASE("frames count distinct clips") {
        auto p = plan(q, w.inputs(), cfg);
        std::set<std::string> clips;
        for (const auto& f : p.frames) clips.insert(f.clip_id);
        CHECK(clips.size() == 4);
        CHECK(p.frames.size() == 4);
    }
    SUBCASE("context clips and models to run") {
        w.corpus.clips[3].mark_extracted("captioner");
        auto p = plan(q, w.inputs(), cfg);
        std::vector<std::string> expect;
        for (const auto& h : p.context_chunks) expect.push_back(h.chunk.clip_id);
        for (const auto& f : p.frames) expect.push_back(f.clip_id);
        std::vector<std::string> dedup;
        for (auto& c : expect) {
            if (std::find(dedup.begin(), dedup.end(), c) == dedup.end()) dedup.push_back(c);
        }
        CHECK(p.context_clips == dedup);
        std::vector<PlannedExtraction> runs;
        for (const auto& c : dedup) {
            if (!w.corpus.find_clip(c)->extracted_by("captioner")) runs.push_back({c, "captioner"});
        }
        CHECK(p.models_to_run == runs);
    }
    SUBCASE("deterministic") {
        auto a = plan(q, w.inputs(), cfg);
        auto b = plan(q, w.inputs(), cfg);
        CHECK(a.context_clips == b.context_clips);
        CHECK(a.models_to_run == b.models_to_run);
    }
    SUBCASE("frame retrieval off") {
        cfg.top_f = 0;
        auto p = plan(q, w.inputs(), cfg);
        CHECK(p.frames.empty());
        CHECK(p.context_clips.size() <= 5);
    }
    SUBCASE("empty index") {
        TextDB empty(64);
        PlanInputs in{w.corpus, empty, nullptr, w.embedder, w.registry, nullptr, nullptr};
        CHECK(code_of([&] { plan(q, in, cfg); }) == ErrorCode::kEmptyIndex);
    }
}

TEST_CASE("filtering and fallback") {
    World w;
    PlannerConfig cfg;
    cfg.k = 4;
    cfg.top_n = 10;
    cfg.filtering_enabled = true;
    auto qv = w.embedder.embed("Is there a blue bus?");
    auto cands = knn_candidates("Is there a blue bus?", w.text, w.embedder, cfg);

    SUBCASE("everything rejected falls back to the unfiltered list") {
        KnnModel reject_all(128);
        for (const auto& c : cands.candidates) reject_all.add(c.feature, 0);
        std::size_t n = 0, rejected = 0;
        bool fallback = false;
        auto ctx = select_context(qv, w.text, cfg, &reject_all, &n, &rejected, &fallback);
        CHECK(fallback);
        CHECK(rejected == 10);
        CHECK(ctx.size() == 4);
        cfg.fallback_unfiltered = false;
        CHECK(select_context(qv, w.text, cfg, &reject_all).empty());
    }
    SUBCASE("accepted candidates keep their order") {
        KnnModel m(128);
        std::set<std::string> keep;
        for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
            std::uint8_t l = i % 2 == 0;
            // Each candidate is its own five nearest points.
            for (int r = 0; r < 5; ++r) m.add(cands.candidates[i].feature, l);
            if (l) keep.insert(cands.candidates[i].chunk_id);
        }
        bool fallback = true;
        auto ctx = select_context(qv, w.text, cfg, &m, nullptr, nullptr, &fallback);
        CHECK_FALSE(fallback);
        REQUIRE(ctx.size() == 4);
        for (std::size_t i = 0; i < ctx.size(); ++i) {
            CHECK(keep.count(ctx[i].chunk.chunk_id));
            CHECK(ctx[i].chunk.chunk_id == cands.candidates[2 * i].chunk_id);
        }
    }
    SUBCASE("disabled filtering ignores the model") {
        cfg.filtering_enabled = false;
        KnnModel reject_all(128);
        for (const auto& c : cands.candidates) reject_all.add(c.feature, 0);
        bool fallback = true;
        auto ctx = select_context(qv, w.text, cfg, &reject_all, nullptr, nullptr, &fallback);
        CHECK_FALSE(fallback);
        CHECK(ctx.size() == 4);
    }
}

TEST_CASE("config validation") {
    PlannerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
