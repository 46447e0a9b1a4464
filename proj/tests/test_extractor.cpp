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

#include "incrag/error.hpp"
#include "incrag/extractor.hpp"

using namespace incrag;

namespace {

// Captioner that fails on one clip.
class FlakyCaptioner final : public ClipModel {
public:
    explicit FlakyCaptioner(std::string bad) : bad_(std::move(bad)) {}
    const ModelDescriptor& descriptor() const override { return d_; }
    ModelOutput run(const Clip& clip) const override {
        if (clip.clip_id == bad_) throw Error(ErrorCode::kProvider, "backend down");
        return inner_.run(clip);
    }

private:
    std::string bad_;
    SyntheticCaptioner inner_;
    ModelDescriptor d_ = SyntheticCaptioner::default_descriptor();
};

ExtractionPlan plan_for(const std::vector<std::string>& clips) {
    ExtractionPlan p;
    p.query = "q";
    for (const auto& c : clips) p.models_to_run.push_back({c, "captioner"});
    return p;
}

}  // namespace

TEST_CASE("three five-keyframe clips cost 22500 units") {
    auto vocab = Vocabulary::street_scene();
    auto corpus = gen_synthetic(1, 10, vocab);
    for (const auto& c : corpus.clips) REQUIRE(c.frames.size() == 5);
    auto reg = make_synthetic_registry(vocab);
    TextEmbedder emb;
    TextDB db(64);
    CostLedger ledger;
    auto plan = plan_for({corpus.clips[2].clip_id, corpus.clips[5].clip_id, corpus.clips[7].clip_id});

    auto r = extract(plan, corpus, db, emb, reg, &ledger);
    CHECK(r.simulated_cost == 22500);
    CHECK(ledger.of(ModelRole::kCaptioner) == 22500);
    CHECK(r.chunks_added == 3);
    CHECK(r.executed.size() == 3);
    CHECK(r.failures.empty());
    CHECK(db.size() == 3);
    for (const auto& p : plan.models_to_run) {
        const auto* clip = corpus.find_clip(p.clip_id);
        CHECK(clip->extracted_by("captioner"));
        auto chunks = db.chunks_for_clip(p.clip_id);
        REQUIRE(chunks.size() == 1);
        CHECK(chunks[0].level == ChunkLevel::kDetailed);
        CHECK(chunks[0].chunk_id == make_chunk_id(p.clip_id, "captioner"));
        CHECK(chunks[0].text == SyntheticCaptioner().run(*clip).text);
    }
    CHECK(fraction_extracted(corpus, reg, "captioner") == doctest::Approx(0.3));

    SUBCASE("second run is free") {
        auto again = extract(plan, corpus, db, emb, reg, &ledger);
        CHECK(again.simulated_cost == 0);
        CHECK(again.skipped == 3);
        CHECK(again.chunks_added == 0);
        CHECK(db.size() == 3);
    }
}

TEST_CASE("serial and parallel extraction commit the same state") {
    auto vocab = Vocabulary::street_scene();
    auto reg = make_synthetic_registry(vocab);
    TextEmbedder emb;
    std::vector<std::string> ids;
    auto base = gen_synthetic(4, 30, vocab);
    for (std::size_t i = 0; i < base.clips.size(); i += 2) ids.push_back(base.clips[i].clip_id);
    ids.push_back(ids.front());  // duplicate pair in the plan

    auto a = base, b = base;
    TextDB da(64), db(64);
    auto ra = extract(plan_for(ids), a, da, emb, reg, nullptr, {false});
    auto rb = extract(plan_for(ids), b, db, emb, reg, nullptr, {true});
    CHECK(a == b);
    CHECK(da.records() == db.records());
    CHECK(ra.simulated_cost == rb.simulated_cost);
    CHECK(ra.chunks_added == 15);
    // Conservation: the cost equals the per-frame cost times the keyframes of distinct clips.
    std::int64_t frames = 0;
    for (std::size_t i = 0; i < base.clips.size(); i += 2) frames += static_cast<std::int64_t>(base.clips[i].frames.size());
    CHECK(ra.simulated_cost == 1500 * frames);
}

TEST_CASE("a failing pair leaves its clip re-plannable") {
    auto vocab = Vocabulary::street_scene();
    auto corpus = gen_synthetic(2, 5, vocab);
    ModelRegistry reg;
    reg.add(std::make_shared<SyntheticDetector>());
    reg.add(std::make_shared<FlakyCaptioner>(corpus.clips[1].clip_id));
    TextEmbedder emb;
    TextDB db(64);
    auto r = extract(plan_for({corpus.clips[0].clip_id, corpus.clips[1].clip_id, corpus.clips[2].clip_id}), corpus, db,
                     emb, reg);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].clip_id == corpus.clips[1].clip_id);
    CHECK(r.failures[0].message.find("backend down") != std::string::npos);
    CHECK(r.chunks_added == 2);
    CHECK_FALSE(corpus.clips[1].extracted_by("captioner"));
    CHECK(corpus.clips[0].extracted_by("captioner"));
    CHECK(corpus.clips[2].extracted_by("captioner"));
    CHECK(r.simulated_cost == 1500 * static_cast<std::int64_t>(corpus.clips[0].frames.size() + corpus.clips[2].frames.size()));
}

TEST_CASE("bad plans") {
    auto vocab = Vocabulary::street_scene();
    auto corpus = gen_synthetic(2, 3, vocab);
    auto reg = make_synthetic_registry(vocab);
    TextEmbedder emb;
    TextDB db(64);
    CHECK_THROWS_AS(extract(plan_for({"nope"}), corpus, db, emb, reg), Error);
    ExtractionPlan p;
    p.models_to_run.push_back({corpus.clips[0].clip_id, "ocr"});
    CHECK_THROWS_AS(extract(p, corpus, db, emb, reg), Error);
    CHECK_THROWS_AS(fraction_extracted(corpus, reg, "ocr"), Error);
    CHECK(fraction_extracted(corpus, reg, "captioner") == 0.0);
}
