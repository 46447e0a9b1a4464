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

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace incrag {

struct ContextEntry {
    double timestamp = 0.0;  // clip start, seconds from corpus start
    std::string text;
};

/// HH:MM:SS, hours not wrapped.
std::string format_timestamp(double seconds);

/// Question-answering prompt. Each context entry becomes one
/// "[HH:MM:SS] text" line.
std::string build_prompt(std::span<const ContextEntry> context, std::string_view query);

/// Query-synthesis prompt over one context passage.
std::string build_synthesis_prompt(std::string_view context);

struct ParsedPrompt {
    enum class Kind { kAnswer, kSynthesis };
    Kind kind = Kind::kAnswer;
    // Context lines with the timestamp prefix removed.
    std::vector<std::string> context_lines;
    std::string query;
    std::string synthesis_context;
};

/// Throws kMalformedPrompt when the Context or Query section is missing.
ParsedPrompt parse_prompt(std::string_view prompt);

}  // namespace incrag
