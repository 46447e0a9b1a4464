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
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"
#include "incrag/extractor.hpp"
#include "incrag/models.hpp"
#include "incrag/planner.hpp"
#include "incrag/prompt.hpp"
#include "incrag/vectorstore.hpp"

namespace incrag {

struct EngineConfig {
    // Incremental rounds allowed after the first answer attempt.
    std::size_t max_iterations = 2;
    PlannerConfig planner;
    EmbeddingConfig embedding;
    // Simulated units charged per retrieval round.
    std::int64_t retrieval_cost = 1;
    bool parallel_extraction = true;
    // Clips per preprocessing batch; progress is reported between batches.
    std::size_t preprocess_batch = 16;

    void validate() const;
};

struct Timing {
    std::int64_t retrieval_units = 0;
    std::int64_t extraction_units = 0;
    std::int64_t llm_units = 0;
    double retrieval_ms = 0.0;
    double extraction_ms = 0.0;
    double llm_ms = 0.0;
    double total_ms = 0.0;

    /// Query-processing cost with LLM time left out.
    std::int64_t latency_units() const { return retrieval_units + extraction_units; }
};

struct IterationTrace {
    std::size_t iteration = 0;
    std::vector<std::string> context_chunks;
    std::string response;
    bool sentinel = false;
    // Pairs this round's extraction committed (empty when none ran).
    std::vector<PlannedExtraction> extracted;
    std::int64_t extraction_cost = 0;
    std::size_t extraction_failures = 0;
};

struct QueryResult {
    std::string query;
    std::string answer;
    std::vector<std::string> supporting_clips;
    std::vector<std::string> context_chunks;
    std::size_t iterations_used = 0;
    std::vector<IterationTrace> trace;
    Timing timing;

    bool unresolved() const { return answer == kSentinel; }
};

nlohmann::json to_json(const QueryResult& result);

struct PreprocessFailure {
    std::string clip_id;
    std::string model_id;
    std::string message;
};

struct PreprocessReport {
    std::size_t clips_total = 0;
    std::size_t clips_done = 0;
    std::size_t keyframes = 0;
    std::size_t index_chunks_added = 0;
    std::size_t frames_added = 0;
    std::int64_t simulated_cost = 0;
    std::vector<PreprocessFailure> failures;
    double wall_ms = 0.0;
};

nlohmann::json to_json(const PreprocessReport& report);

struct PreprocessProgress {
    std::size_t clips_done = 0;
    std::size_t clips_total = 0;
    std::int64_t simulated_cost = 0;
};

struct QueryOptions {
    std::optional<std::size_t> k;  // overrides the planner k (top_n grows to match)
    std::optional<std::size_t> max_iterations;
    std::optional<std::size_t> top_f;  // 0 turns frame retrieval off
};

struct StoreSizes {
    std::size_t text_chunks = 0;
    std::size_t index_chunks = 0;
    std::size_t detailed_chunks = 0;
    std::size_t frames = 0;
};

/// One corpus with its stores and providers. Queries may run concurrently;
/// preprocessing and extraction take the corpus writer lock, so a query that
/// waits on extraction sees the committed state.
class Engine {
public:
    Engine(CorpusManifest corpus, std::shared_ptr<const ModelRegistry> registry, EngineConfig config = {});

    /// Runs every lightweight clip model and the frame embedder on clips that
    /// have not seen them. Idempotent.
    PreprocessReport preprocess(const std::function<void(const PreprocessProgress&)>& progress = {});

    /// True once every clip carries every lightweight model.
    bool ready() const;

    QueryResult answer_query(std::string_view query, const QueryOptions& options = {});

    /// The plan the next answer attempt would follow; touches nothing.
    ExtractionPlan plan_query(std::string_view query, const QueryOptions& options = {}) const;

    void set_knn(std::optional<KnnModel> knn);
    void set_model_selector(std::optional<ModelSelector> selector);
    void set_query_log(std::function<void(const nlohmann::json&)> sink);

    /// Writes manifest.jsonl, text.db, image.db (and knn.db when set).
    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<Engine> open(const std::filesystem::path& dir, std::shared_ptr<const ModelRegistry> registry,
                                        EngineConfig config = {});

    /// Independent engine over a snapshot of the current state.
    std::unique_ptr<Engine> clone() const;

    // Snapshots taken under the reader lock.
    CorpusManifest corpus() const;
    std::optional<Clip> clip(std::string_view clip_id) const;
    std::vector<Chunk> chunks_for_clip(std::string_view clip_id) const;
    StoreSizes store_sizes() const;
    double fraction_extracted(std::string_view model_id) const;
    std::int64_t extraction_cost_total() const;
    TextDB text_db_snapshot() const;

    const EngineConfig& config() const { return config_; }
    const ModelRegistry& registry() const { return *registry_; }
    const TextEmbedder& embedder() const { return embedder_; }

private:
    Engine(CorpusManifest corpus, std::shared_ptr<const ModelRegistry> registry, EngineConfig config, TextDB text,
           ImageDB image);

    PlannerConfig planner_config(const QueryOptions& options) const;
    std::vector<ContextEntry> context_entries(const std::vector<TextHit>& hits) const;

    EngineConfig config_;
    std::shared_ptr<const ModelRegistry> registry_;
    TextEmbedder embedder_;

    mutable std::shared_mutex mutex_;
    CorpusManifest corpus_;
    ClipIndex clip_index_;
    TextDB text_db_;
    ImageDB image_db_;
    std::optional<KnnModel> knn_;
    std::optional<ModelSelector> selector_;
    std::int64_t extraction_cost_total_ = 0;

    std::mutex log_mutex_;
    std::function<void(const nlohmann::json&)> log_sink_;
};

}  // namespace incrag
