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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"
#include "incrag/models.hpp"
#include "incrag/planner.hpp"
#include "incrag/queryengine.hpp"
#include "incrag/vectorstore.hpp"

namespace incrag {

// ---------------------------------------------------------------------------
// Full-upfront baseline: every heavyweight model on every clip before any
// query, then plain top-k retrieval over the heavyweight chunks.

struct Baseline {
    CorpusManifest corpus;
    TextDB text_db;
    std::int64_t preprocess_cost = 0;
    double wall_ms = 0.0;

    std::vector<TextHit> retrieve(const TextEmbedder& embedder, std::string_view query, std::size_t k) const;
    /// Clips behind the top-k context, in rank order without repeats.
    std::vector<std::string> clips(const TextEmbedder& embedder, std::string_view query, std::size_t k) const;
    std::string answer(const TextEmbedder& embedder, const LanguageModel& llm, std::string_view query,
                       std::size_t k) const;
};

Baseline run_baseline(const CorpusManifest& corpus, const ModelRegistry& registry, const TextEmbedder& embedder);

// ---------------------------------------------------------------------------
// recall@k

struct RecallResult {
    double score = 0.0;
    std::size_t counted = 0;  // queries with a nonempty baseline set
    std::size_t skipped = 0;
};

/// Mean over queries of |baseline ∩ irag| / |baseline|. Queries whose
/// baseline set is empty are left out of the mean. Both sides must list the
/// same queries in the same order (kQuerySetMismatch otherwise).
RecallResult recall_at_k(std::span<const QueryClips> baseline, std::span<const QueryClips> irag);

// ---------------------------------------------------------------------------
// Query synthesis

struct SourceContext {
    std::string clip_id;
    std::string text;
};

struct SynthesizedQuery {
    std::string query;
    std::string source_clip;
};

/// Detailed (heavyweight) text per clip, in corpus order.
std::vector<SourceContext> caption_contexts(const Baseline& baseline);

/// Walks the contexts in a seeded order, asks the LLM for one question per
/// context, and keeps the first `n` distinct non-sentinel questions. Returns
/// fewer when the contexts run out.
std::vector<SynthesizedQuery> synthesize_queries(std::span<const SourceContext> contexts, const LanguageModel& llm,
                                                 std::size_t n, std::uint64_t seed);

/// "Is there a <color> <object>?" for every pair, then "What is the color of
/// the <object>?" for every object.
std::vector<std::string> attribute_queries(const Vocabulary& vocab);

/// The "Is there ..." subset of attribute_queries.
std::vector<std::string> existence_queries(const Vocabulary& vocab);

/// Up to `n` questions synthesized over the baseline's detailed captions.
std::vector<SynthesizedQuery> query_pool(const CorpusManifest& corpus, const ModelRegistry& registry,
                                         const EmbeddingConfig& embedding, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments. Each builds its own engines from the corpus and registry.

struct PreprocessComparison {
    std::size_t clips = 0;
    std::size_t keyframes = 0;
    std::int64_t irag_cost = 0;
    std::int64_t baseline_cost = 0;
    double irag_wall_ms = 0.0;
    double baseline_wall_ms = 0.0;

    double ratio() const { return static_cast<double>(irag_cost) / static_cast<double>(baseline_cost); }
};

PreprocessComparison compare_preprocessing(const CorpusManifest& corpus,
                                           std::shared_ptr<const ModelRegistry> registry,
                                           const EngineConfig& config);

struct EquivalenceCase {
    std::string query;
    std::string baseline_answer;
    std::string irag_answer;
    std::string evidence_clip;  // baseline clip holding the answer, if any
    bool evidence_in_candidates = true;
    std::size_t calls = 0;  // answer_query calls until no extraction ran
    bool match() const { return baseline_answer == irag_answer; }
};

struct EquivalenceReport {
    std::vector<EquivalenceCase> cases;
    std::size_t eligible() const;
    std::size_t matched_eligible() const;
};

/// For each query: the baseline answer at k, and the converged incremental answer
/// from cold stores (the query is repeated until a call runs no extraction).
EquivalenceReport equivalence_sweep(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                                    const EngineConfig& config, std::span<const std::string> queries,
                                    std::size_t max_calls = 8);

struct RecallRow {
    std::size_t k = 0;
    RecallResult text_only;
    RecallResult dual;
};

enum class RecallMode {
    kColdPlan,      // clips the cold planner selects, before any extraction
    kFinalContext,  // clips behind the context after the incremental flow
};

// Clip sets behind one recall row entry, for logging and recounting.
struct RecallSets {
    std::size_t k = 0;
    std::string query;
    std::set<std::string> baseline;
    std::set<std::string> text_only;
    std::set<std::string> dual;
};

/// Per query, from cold stores: the incremental clip set at k against the baseline's
/// top-k clips. Text-only runs without frame retrieval; dual retrieves
/// `top_f` frame clips, or k when `top_f` is unset. When `sets` is given it
/// receives every per-query triple.
std::vector<RecallRow> recall_experiment(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                                         const EngineConfig& config, std::span<const std::string> queries,
                                         std::span<const std::size_t> k_grid,
                                         RecallMode mode = RecallMode::kColdPlan,
                                         std::optional<std::size_t> top_f = std::nullopt,
                                         std::vector<RecallSets>* sets = nullptr);

nlohmann::json to_json(const RecallSets& s);

struct FilteringRow {
    std::size_t initial_k = 0;
    double avg_chunks_filtered = 0.0;
    RecallResult recall_filtered;
    std::size_t matched_k = 0;  // unfiltered k closest to the filtered average
    RecallResult recall_unfiltered_matched;
    RecallResult recall_unfiltered_initial;
    std::size_t fallbacks = 0;
};

struct FilteringSetup {
    std::size_t label_k = 0;  // baseline depth defining relevant clips; 0 = auto
    std::vector<std::size_t> k_grid{10, 20, 30, 40, 50};
};

struct FilteringReport {
    std::size_t train_points = 0;
    std::size_t train_positive = 0;
    std::size_t label_k = 0;
    std::vector<FilteringRow> rows;
};

/// Labels the unfiltered top-N candidates of each query on `train` by
/// membership of their clip in the baseline's top label_k, then fits the
/// context filter on them.
KnnModel train_filter(const CorpusManifest& train, std::shared_ptr<const ModelRegistry> registry,
                      const EngineConfig& config, std::span<const std::string> queries, std::size_t label_k,
                      std::size_t top_n);

/// Trains the KNN filter on `train` and evaluates text-only context
/// selection on `eval`. Top-N equals the initial k at every grid point.
FilteringReport filtering_tradeoff(const CorpusManifest& train, const CorpusManifest& eval,
                                   std::shared_ptr<const ModelRegistry> registry, const EngineConfig& config,
                                   std::span<const std::string> queries, const FilteringSetup& setup = {});

struct StreamRun {
    std::size_t k = 0;
    std::vector<std::int64_t> latency_units;     // retrieval + extraction per query
    std::vector<std::int64_t> extraction_units;  // extraction only
    std::vector<std::int64_t> repeat_extraction_units;  // second pass over the same stream
    double fraction_extracted = 0.0;  // after the first pass
    std::size_t unresolved = 0;
};

/// Cold engine, the stream in order at planner k, then the same stream again.
/// Frame retrieval uses `top_f` frames, or k frames when unset.
StreamRun run_stream(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                     const EngineConfig& config, std::span<const std::string> stream, std::size_t k,
                     const std::string& heavyweight_model_id, bool repeat_pass = true,
                     std::optional<std::size_t> top_f = std::nullopt);

/// `count` queries drawn with replacement from `pool`, seeded.
std::vector<std::string> sample_stream(std::span<const SynthesizedQuery> pool, std::size_t count,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reporting

nlohmann::json to_json(const PreprocessComparison& r);
nlohmann::json to_json(const EquivalenceReport& r);
nlohmann::json to_json(const std::vector<RecallRow>& rows);
nlohmann::json to_json(const FilteringReport& r);
nlohmann::json to_json(const StreamRun& r);

std::string format_table(const PreprocessComparison& r);
std::string format_table(const std::vector<RecallRow>& rows);
std::string format_table(const FilteringReport& r);
std::string format_fraction_table(std::span<const StreamRun> runs);
std::string format_latency_table(std::span<const StreamRun> runs);

double mean(std::span<const std::int64_t> values, std::size_t begin, std::size_t end);

}  // namespace incrag
