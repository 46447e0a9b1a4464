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

#include <random>

#include "incrag/embedding.hpp"
#include "incrag/error.hpp"
#include "incrag/models.hpp"
#include "incrag/prompt.hpp"

using namespace incrag;

namespace {

Frame frame(const std::string& id, double t, std::vector<ObjectFact> objects) {
    auto caption = compose_caption(objects);
    return Frame{id, t, GroundTruth{std::move(objects), caption}};
}

Clip truck_clip() {
    Clip c{"clip-7", 35.0, 40.0, {}, {}, {}};
    c.frames.push_back(frame("f0", 35.0, {{"truck", "white", "FedEx"}, {"car", "red", std::nullopt}}));
    c.frames.push_back(frame("f1", 36.0, {{"bus", "blue", std::nullopt}}));
    c.frames.push_back(frame("f2", 37.0, {}));
    return c;
}

std::string ask(const SyntheticLlm& llm, std::vector<std::string> lines, const std::string& q) {
    return llm.answer(lines, q);
}

}  // namespace

TEST_CASE("detector lists distinct classes without attributes") {
    SyntheticDetector det;
    auto out = det.run(truck_clip());
    CHECK(out.text == "objects: bus, car, truck");
    CHECK(out.frames_processed == 3);
    CHECK(out.model_id == "detector");
    for (const auto& color : Vocabulary::street_scene().colors) {
        CHECK(out.text.find(color) == std::string::npos);
    }
    Clip empty{"e", 0, 1, {frame("x", 0, {})}, {}, {}};
    CHECK(det.run(empty).text == "objects: ");
}

TEST_CASE("captioner joins non-empty captions in frame order") {
    SyntheticCaptioner cap;
    auto out = cap.run(truck_clip());
    CHECK(out.text == "a white truck with text 'FedEx', a red car; a blue bus");
    CHECK(out.frames_processed == 3);
}

TEST_CASE("detector tokens are a subset of captioner tokens") {
    auto vocab = Vocabulary::street_scene();
    auto corpus = gen_synthetic(31, 120, vocab);
    SyntheticDetector det;
    SyntheticCaptioner cap;
    for (const auto& clip : corpus.clips) {
        auto d = tokenize(det.run(clip).text);
        auto c = tokenize(cap.run(clip).text);
        for (const auto& t : d) {
            if (t == "objects") continue;
            CHECK_MESSAGE(std::find(c.begin(), c.end(), t) != c.end(), clip.clip_id, " token ", t);
        }
    }
}

TEST_CASE("missing ground truth is reported") {
    Clip c{"c", 0, 1, {Frame{"f", 0, std::nullopt}}, {}, {}};
    CHECK_THROWS_AS(SyntheticDetector().run(c), Error);
    try {
        SyntheticCaptioner().run(c);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kMissingGroundTruth);
    }
    CHECK_THROWS_AS(SyntheticFrameEmbedder().embed(c.frames[0]), Error);
}

TEST_CASE("frame embedder embeds the caption") {
    SyntheticFrameEmbedder emb;
    TextEmbedder text;
    auto f = frame("f", 0, {{"truck", "white", std::nullopt}});
    CHECK(emb.embed(f) == text.embed("a white truck"));
    CHECK(emb.dimension() == 64);
    auto near = similarity(emb.embed(f), text.embed("white truck"));
    auto far = similarity(emb.embed(f), text.embed("blue bus"));
    CHECK(near > far);
}

TEST_CASE("language model rules") {
    SyntheticLlm llm(Vocabulary::street_scene());
    const std::string s(kSentinel);
    std::vector<std::string> index = {"objects: car, truck"};
    std::vector<std::string> detailed = {"a white truck with text 'FedEx', a red car"};

    SUBCASE("existence") {
        CHECK(ask(llm, detailed, "Is there a white truck?") == "Yes");
        CHECK(ask(llm, detailed, "is there a truck with text 'FedEx'?") == "Yes");
        CHECK(ask(llm, detailed, "Is there a blue truck?") == "No");
        CHECK(ask(llm, index, "Is there a truck?") == "Yes");
        CHECK(ask(llm, index, "Is there a white truck?") == s);
        CHECK(ask(llm, index, "Is there a bus?") == s);
        CHECK(ask(llm, {}, "Is there a red car?") == s);
        CHECK(ask(llm, detailed, "Is there a purple unicorn?") == "No");
    }
    SUBCASE("color") {
        CHECK(ask(llm, detailed, "What is the color of the truck?") == "white");
        CHECK(ask(llm, detailed, "What is the color of the car?") == "red");
        CHECK(ask(llm, index, "What is the color of the truck?") == s);
        CHECK(ask(llm, detailed, "What is the color of the bus?") == s);
    }
    SUBCASE("other forms") {
        CHECK(ask(llm, detailed, "How many trucks?") == s);
        CHECK(ask(llm, detailed, "") == s);
    }
    SUBCASE("through the prompt") {
        std::vector<ContextEntry> ctx = {{35.0, detailed[0]}};
        CHECK(llm.complete(build_prompt(ctx, "Is there a white truck?")) == "Yes");
        CHECK(llm.complete(build_synthesis_prompt("a white truck, a red car")) == "Is there a white truck?");
        CHECK(llm.complete(build_synthesis_prompt("")) == s);
        CHECK_THROWS_AS(llm.complete("no sections here"), Error);
    }
}

TEST_CASE("sentinel text is exact") {
    CHECK(kSentinel == "Unable to answer query. Please run additional models");
}

TEST_CASE("information hierarchy: detailed text answers what the index cannot") {
    auto vocab = Vocabulary::street_scene();
    auto corpus = gen_synthetic(3, 60, vocab);
    SyntheticLlm llm(vocab);
    SyntheticDetector det;
    SyntheticCaptioner cap;
    std::size_t index_answers = 0, detailed_answers = 0;
    for (const auto& clip : corpus.clips) {
        for (const auto& f : clip.frames) {
            for (const auto& obj : f.facts->objects) {
                if (!obj.color) continue;
                auto q = "Is there a " + *obj.color + " " + obj.object_class + "?";
                auto a = llm.answer({det.run(clip).text}, q);
                auto b = llm.answer({cap.run(clip).text}, q);
                index_answers += a == "Yes";
                detailed_answers += b == "Yes";
                CHECK(b == "Yes");
            }
        }
    }
    CHECK(index_answers == 0);
    CHECK(detailed_answers > 0);
}

TEST_CASE("cost accounting") {
    auto reg = make_synthetic_registry(Vocabulary::street_scene());
    CostLedger ledger;
    auto clip = truck_clip();
    run_clip_model(reg.clip_model("detector"), clip, &ledger);
    run_clip_model(reg.clip_model("captioner"), clip, &ledger);
    for (const auto& f : clip.frames) run_frame_embedder(*reg.frame_embedder(), f, &ledger);
    run_llm(reg.llm(), build_prompt({}, "Is there a bus?"), &ledger);
    CHECK(ledger.of(ModelRole::kDetector) == 210);
    CHECK(ledger.of(ModelRole::kCaptioner) == 4500);
    CHECK(ledger.of(ModelRole::kFrameEmbedder) == 30);
    CHECK(ledger.of(ModelRole::kLlm) == 1);
    CHECK(ledger.total() == 4741);
}

TEST_CASE("registry") {
    auto reg = make_synthetic_registry(Vocabulary::street_scene());
    CHECK(reg.clip_models(WeightClass::kHeavyweight).size() == 1);
    CHECK(reg.clip_models(WeightClass::kLightweight).size() == 1);
    CHECK(reg.descriptors().size() == 4);
    CHECK(reg.contains("llm"));
    CHECK_FALSE(reg.contains("ocr"));
    CHECK_THROWS_AS(reg.clip_model("ocr"), Error);
    CHECK_THROWS_AS(reg.add(std::make_shared<SyntheticDetector>()), Error);
    CHECK_THROWS_AS(SyntheticDetector({"d", ModelRole::kDetector, 0, WeightClass::kLightweight}), Error);
    CHECK(parse_role("captioner") == ModelRole::kCaptioner);
    CHECK_THROWS_AS(parse_role("ocr"), Error);
}
