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

#include "incrag/prompt.hpp"

#include <cmath>
#include <cstdio>

#include "incrag/error.hpp"

namespace incrag {

namespace {

constexpr std::string_view kAnswerPreamble =
    "You operate as a chatbot that is supported by a retrieval augmented generation system. "
    "You will utilize the given context and your knowledge to answer queries. "
    "If you are unable to answer a query, your response is "
    "\"Unable to answer query. Please run additional models\".";

constexpr std::string_view kSynthesisPreamble =
    "Given a context, generate a question for the context. Here are a few examples of questions: \n"
    "Is there a white truck?\n"
    "What is the color of the bus?\n"
    "Is there a truck with text 'FedEx'?\n"
    "Return the question without any additional text. "
    "Think you are an investigator querying a textual description of a video.";

constexpr std::string_view kContextTag = "\nContext: ";
constexpr std::string_view kQueryTag = "\nQuery: ";

std::string one_line(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

std::string strip_timestamp(std::string_view line) {
    if (line.size() >= 11 && line[0] == '[') {
        auto close = line.find("] ");
        if (close != std::string_view::npos) return std::string(line.substr(close + 2));
    }
    return std::string(line);
}

}  // namespace

std::string format_timestamp(double seconds) {
    auto total = static_cast<long long>(std::floor(std::max(0.0, seconds)));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", total / 3600, (total / 60) % 60, total % 60);
    return buf;
}

std::string build_prompt(std::span<const ContextEntry> context, std::string_view query) {
    std::string out(kAnswerPreamble);
    out += kContextTag;
    for (std::size_t i = 0; i < context.size(); ++i) {
        if (i) out += '\n';
        out += '[';
        out += format_timestamp(context[i].timestamp);
        out += "] ";
        out += one_line(context[i].text);
    }
    out += kQueryTag;
    out += one_line(query);
    return out;
}

std::string build_synthesis_prompt(std::string_view context) {
    std::string out(kSynthesisPreamble);
    out += kContextTag;
    out += one_line(context);
    return out;
}

ParsedPrompt parse_prompt(std::string_view prompt) {
    ParsedPrompt parsed;
    auto ctx = prompt.find(kContextTag);
    if (ctx == std::string_view::npos) throw Error(ErrorCode::kMalformedPrompt, "prompt has no Context section");

    if (prompt.substr(0, ctx).starts_with("Given a context, generate a question")) {
        parsed.kind = ParsedPrompt::Kind::kSynthesis;
        parsed.synthesis_context = std::string(prompt.substr(ctx + kContextTag.size()));
        return parsed;
    }

    auto q = prompt.rfind(kQueryTag);
    if (q == std::string_view::npos || q < ctx) {
        throw Error(ErrorCode::kMalformedPrompt, "prompt has no Query section after its Context section");
    }
    parsed.query = std::string(prompt.substr(q + kQueryTag.size()));
    auto body = prompt.substr(ctx + kContextTag.size(), q - ctx - kContextTag.size());
    std::size_t start = 0;
    while (start <= body.size() && !body.empty()) {
        auto nl = body.find('\n', start);
        auto line = body.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty()) parsed.context_lines.push_back(strip_timestamp(line));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return parsed;
}

}  // namespace incrag
