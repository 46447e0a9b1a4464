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
#include <sstream>

#include "incrag/error.hpp"
#include "incrag/prompt.hpp"

using namespace incrag;

namespace {

std::string read_golden(const std::string& name) {
    std::ifstream in(std::string(INCRAG_TEST_DIR) + "/golden/" + name, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("timestamps") {
    CHECK(format_timestamp(0) == "00:00:00");
    CHECK(format_timestamp(35.9) == "00:00:35");
    CHECK(format_timestamp(3661) == "01:01:01");
    CHECK(format_timestamp(100 * 3600) == "100:00:00");
    CHECK(format_timestamp(-4) == "00:00:00");
}

TEST_CASE("three-chunk prompt matches the golden file byte for byte") {
    std::vector<ContextEntry> ctx = {{35.0, "objects: car, truck"},
                                     {65.2, "a white truck with text 'FedEx', a red car"},
                                     {3600.0, "a blue bus\ntwo lines"}};
    CHECK(build_prompt(ctx, "Is there a white truck?") == read_golden("prompt_3chunks.txt"));
}

TEST_CASE("parse inverts build") {
    std::vector<ContextEntry> ctx = {{1, "objects: bus"}, {2, "a red car"}};
    auto p = parse_prompt(build_prompt(ctx, "What is the color of the car?"));
    CHECK(p.kind == ParsedPrompt::Kind::kAnswer);
    CHECK(p.query == "What is the color of the car?");
    CHECK(p.context_lines == std::vector<std::string>{"objects: bus", "a red car"});

    auto empty = parse_prompt(build_prompt({}, "Is there a bus?"));
    CHECK(empty.context_lines.empty());
    CHECK(empty.query == "Is there a bus?");

    auto s = parse_prompt(build_synthesis_prompt("a white truck"));
    CHECK(s.kind == ParsedPrompt::Kind::kSynthesis);
    CHECK(s.synthesis_context == "a white truck");
}

TEST_CASE("synthesis prompt text") {
    auto p = build_synthesis_prompt("a red car");
    CHECK(p.starts_with("Given a context, generate a question for the context. Here are a few examples of questions: \n"
                        "Is there a white truck?\nWhat is the color of the bus?\nIs there a truck with text 'FedEx'?\n"));
    CHECK(p.ends_with("\nContext: a red car"));
}

TEST_CASE("malformed prompts") {
    CHECK_THROWS_AS(parse_prompt("hello"), Error);
    try {
        parse_prompt("x\nContext: a");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kMalformedPrompt);
    }
}
