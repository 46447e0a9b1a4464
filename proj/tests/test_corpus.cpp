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
#include <sstream>

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"
#include "incrag/error.hpp"
#include "oracles.hpp"

using namespace incrag;

namespace {

const char* kHeader = R"({"type":"corpus","format":1,"corpus_id":"c1","keyframe_rate":1.0})";

std::string clip_line(const std::string& id, double start, double end) {
    return R"({"type":"clip","clip_id":")" + id + R"(","start":)" + std::to_string(start) + R"(,"end":)" +
           std::to_string(end) + R"(,"frames":[{"frame_id":")" + id + R"(-f0","timestamp":)" + std::to_string(start) +
           "}]}";
}

CorpusManifest parse(const std::string& text) {
    std::istringstream in(text);
    return parse_manifest(in);
}

ErrorCode code_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("manifest parsed without error");
    return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("two well-formed clips load") {
    auto m = parse(std::string(kHeader) + "\n" + clip_line("a", 0, 5) + "\n" + clip_line("b", 5, 10) + "\n");
    CHECK(m.corpus_id == "c1");
    REQUIRE(m.clips.size() == 2);
    CHECK(m.clips[1].clip_id == "b");
    CHECK(m.total_keyframes() == 2);
}

TEST_CASE("manifest invariants are enforced") {
    std::string h = std::string(kHeader) + "\n";
    CHECK(code_of(h + clip_line("a", 0, 6) + "\n" + clip_line("b", 5, 10)) == ErrorCode::kInvariant);
    CHECK(code_of(h + clip_line("a", 0, 5) + "\n" + clip_line("a", 5, 10)) == ErrorCode::kInvariant);
    CHECK(code_of(h + clip_line("a", 5, 5)) == ErrorCode::kInvariant);
    CHECK(code_of(h + R"({"type":"clip","clip_id":"a","start":0,"end":5,"frames":[]})") == ErrorCode::kInvariant);
    // frame outside the clip's range
    CHECK(code_of(h + R"({"type":"clip","clip_id":"a","start":0,"end":5,"frames":[{"frame_id":"x","timestamp":7}]})") ==
          ErrorCode::kInvariant);
    CHECK(code_of(h + R"({"type":"clip","clip_id":"a","start":0,"end":5,"bogus":1,"frames":[]})") == ErrorCode::kParse);
    CHECK(code_of(clip_line("a", 0, 5)) == ErrorCode::kParse);
    CHECK(code_of("") == ErrorCode::kParse);
    CHECK(code_of("{not json") == ErrorCode::kParse);
}

TEST_CASE("ground truth captions must mention every fact") {
    std::string h = std::string(kHeader) + "\n";
    std::string bad = R"({"type":"clip","clip_id":"a","start":0,"end":5,"frames":[{"frame_id":"f","timestamp":1,)"
                      R"("facts":{"objects":[{"class":"truck","color":"white"}],"caption":"a truck"}}]})";
    CHECK(code_of(h + bad) == ErrorCode::kInvariant);
}

TEST_CASE("synthetic corpus is deterministic and seed sensitive") {
    auto vocab = Vocabulary::street_scene();
    auto a = gen_synthetic(7, 200, vocab);
    auto b = gen_synthetic(7, 200, vocab);
    auto c = gen_synthetic(8, 200, vocab);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("synthetic corpus covers every (object, color) pair") {
    auto vocab = Vocabulary::street_scene();
    auto m = gen_synthetic(7, 200, vocab);
    std::map<std::pair<std::string, std::string>, int> seen;
    for (const auto& clip : m.clips) {
        for (const auto& f : clip.frames) {
            REQUIRE(f.facts);
            for (const auto& o : f.facts->objects) seen[{o.object_class, *o.color}]++;
        }
    }
    for (const auto& o : vocab.objects) {
        for (const auto& c : vocab.colors) CHECK_MESSAGE(seen[std::make_pair(o, c)] > 0, o << " " << c);
    }
}

TEST_CASE("captions follow the object template") {
    ObjectFact f{"truck", "white", "FedEx"};
    CHECK(describe_object(f) == "a white truck with text 'FedEx'");
    CHECK(compose_caption({f, ObjectFact{"tree", std::nullopt, std::nullopt}}) ==
          "a white truck with text 'FedEx', a tree");
}

TEST_CASE("manifest round trip is lossless") {
    auto vocab = Vocabulary::street_scene();
    auto m = gen_synthetic(7, 200, vocab, SyntheticOptions{.keyframe_rate = 0.6});
    m.clips[3].mark_extracted("captioner");
    m.clips[4].thumbnail_url = "http://example.invalid/t.png";
    oracle::TempDir dir("corpus");
    save_manifest(dir.path / "m.jsonl", m);
    CHECK(load_manifest(dir.path / "m.jsonl") == m);
}

TEST_CASE("external frames group into fixed windows") {
    std::vector<ExternalFrame> frames{{"f2", 7.0, {}}, {"f0", 0.5, {}}, {"f1", 4.9, {}}, {"f3", 12.0, {}}};
    auto m = build_manifest("ext", frames, 5.0, 1.0);
    REQUIRE(m.clips.size() == 3);
    CHECK(m.clips[0].frames.size() == 2);
    CHECK(m.clips[0].frames[0].frame_id == "f0");
    CHECK(m.clips[1].start == 5.0);
    CHECK(m.clips[2].frames[0].frame_id == "f3");
}

TEST_CASE("signature corpus pairs each color with its companion") {
    auto vocab = Vocabulary::street_scene();
    auto m = gen_signature_corpus(101, 3, vocab);
    CHECK(m.clips.size() == vocab.objects.size() * vocab.colors.size() * 3);
    for (const auto& clip : m.clips) {
        const auto& objs = clip.frames.front().facts->objects;
        REQUIRE(objs.size() == 2);
        auto ci = std::find(vocab.colors.begin(), vocab.colors.end(), *objs[0].color) - vocab.colors.begin();
        CHECK(objs[1].object_class == vocab.companions[static_cast<std::size_t>(ci)]);
    }
}
