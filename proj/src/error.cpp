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

#include "incrag/error.hpp"

namespace incrag {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kParse: return "parse_error";
        case ErrorCode::kInvariant: return "invariant_violation";
        case ErrorCode::kInvalidArgument: return "invalid_argument";
        case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
        case ErrorCode::kDuplicateChunk: return "duplicate_chunk";
        case ErrorCode::kCorruptStore: return "corrupt_store";
        case ErrorCode::kIo: return "io_error";
        case ErrorCode::kMissingGroundTruth: return "missing_ground_truth";
        case ErrorCode::kProvider: return "provider_failure";
        case ErrorCode::kMalformedPrompt: return "malformed_prompt";
        case ErrorCode::kUndertrained: return "undertrained";
        case ErrorCode::kQuerySetMismatch: return "query_set_mismatch";
        case ErrorCode::kUnknownModel: return "unknown_model";
        case ErrorCode::kEmptyIndex: return "empty_index";
        case ErrorCode::kNotReady: return "not_ready";
        case ErrorCode::kNotFound: return "not_found";
    }
    return "unknown";
}

}  // namespace incrag
