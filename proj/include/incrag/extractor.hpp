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

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"
#include "incrag/models.hpp"
#include "incrag/planner.hpp"
#include "incrag/vectorstore.hpp"

namespace incrag {

struct ExtractionFailure {
    std::string clip_id;
    std::string model_id;
    std::string message;
};

struct ExtractionReport {
    std::string query;
    std::vector<PlannedExtraction> executed;
    std::size_t chunks_added = 0;
    std::size_t skipped = 0;  // pairs already extracted when the plan ran
    std::vector<std::string> clips_touched;
    std::int64_t simulated_cost = 0;
    std::vector<ExtractionFailure> failures;
    double wall_ms = 0.0;
};

nlohmann::json to_json(const ExtractionReport& report);

struct ExtractOptions {
    // Provider calls fan out over OpenMP threads; commits stay serial.
    bool parallel = true;
};

/// Runs the plan's (clip, model) pairs, appends one detailed chunk per
/// success and marks the clip's extraction_state. Pairs already extracted are
/// skipped. A failing pair is recorded and leaves its clip re-plannable; the
/// rest still commit. The caller holds the corpus writer lock.
ExtractionReport extract(const ExtractionPlan& plan, CorpusManifest& corpus, TextDB& text_db,
                         const TextEmbedder& embedder, const ModelRegistry& registry, CostLedger* ledger = nullptr,
                         const ExtractOptions& options = {});

/// Share of clips whose extraction_state holds `model_id`. Throws
/// kUnknownModel for ids missing from the registry.
double fraction_extracted(const CorpusManifest& corpus, const ModelRegistry& registry, std::string_view model_id);

}  // namespace incrag
