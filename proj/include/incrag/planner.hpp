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
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"
#include "incrag/kernels.hpp"
#include "incrag/models.hpp"
#include "incrag/vectorstore.hpp"

namespace incrag {

/// How index and detailed chunks of one clip share the context.
enum class ContextRanking {
    kAllChunks,    // every chunk competes on its own score
    // Once a clip holds a detailed chunk its index chunk stops competing.
    kShadowIndex,
    // One entry per clip, ranked by its best chunk and showing the clip's
    // best detailed chunk when it has one.
    kClipBest,
};

struct PlannerConfig {
    std::size_t top_n = 50;  // chunk candidates before filtering
    std::size_t top_f = 10;  // frame-retrieval depth; 0 disables frame retrieval
    // Count top_f in distinct clips (best frame per clip) rather than frames.
    bool frames_per_clip = true;
    std::size_t k = 8;       // context chunks kept after filtering
    std::size_t knn_neighbors = 5;
    std::size_t knn_accept_threshold = 3;
    // Only takes effect when a trained KnnModel is passed to plan().
    bool filtering_enabled = false;
    bool fallback_unfiltered = true;
    ContextRanking ranking = ContextRanking::kShadowIndex;
    kernels::Exec exec = kernels::Exec::kAuto;

    void validate() const;
};

/// Labelled points for the context filter. Features are
/// concat_features(query, chunk), labels 1 (accept) or 0 (reject).
class KnnModel {
public:
    explicit KnnModel(std::size_t feature_dim);

    std::size_t feature_dim() const noexcept { return feature_dim_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
    std::span<const double> features() const noexcept { return features_; }
    std::span<const double> feature(std::size_t i) const;
    std::size_t count_label(std::uint8_t label) const;

    void add(std::span<const double> feature, std::uint8_t label);

    bool operator==(const KnnModel&) const = default;

private:
    std::size_t feature_dim_;
    std::vector<double> features_;
    std::vector<std::uint8_t> labels_;
};

struct KnnVote {
    bool accept = false;
    std::size_t positive = 0;  // label-1 points among the neighbors
    std::vector<std::size_t> neighbors;  // training indices, nearest first
};

/// Euclidean nearest neighbours, ties broken by insertion order; accepts iff
/// at least `threshold` of them carry label 1. Throws kUndertrained when the
/// model holds fewer than `neighbors` points.
KnnVote knn_vote(const KnnModel& knn, std::span<const double> feature, std::size_t neighbors = 5,
                 std::size_t threshold = 3, kernels::Exec exec = kernels::Exec::kAuto);
bool knn_classify(const KnnModel& knn, std::span<const double> feature, std::size_t neighbors = 5,
                  std::size_t threshold = 3, kernels::Exec exec = kernels::Exec::kAuto);

struct CandidateFeature {
    std::string chunk_id;
    std::string clip_id;
    Vector feature;
};

struct QueryCandidates {
    std::string query;
    std::vector<CandidateFeature> candidates;
};

struct QueryClips {
    std::string query;
    std::set<std::string> clips;
};

/// One point per (query, candidate): label 1 iff the candidate's clip is in
/// the baseline clip set of the same query. Both sides must list the same
/// queries in the same order (kQuerySetMismatch otherwise).
KnnModel knn_train(std::span<const QueryClips> baseline, std::span<const QueryCandidates> candidates,
                   std::size_t feature_dim);

/// Unfiltered top-N candidates of a query with their classifier features.
QueryCandidates knn_candidates(std::string_view query, const TextDB& text_db, const TextEmbedder& embedder,
                               const PlannerConfig& cfg);

// Training sets persist in the store container (kind 3): per record a u8
// label followed by the feature vector.
void persist(const KnnModel& knn, const std::filesystem::path& path);
KnnModel restore_knn(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct PlannedExtraction {
    std::string clip_id;
    std::string model_id;

    bool operator==(const PlannedExtraction&) const = default;
};

/// Picks the heavyweight models to run on one clip. The default assigns every
/// heavyweight model the clip has not seen yet.
using ModelSelector = std::function<std::vector<std::string>(std::string_view query, const Clip& clip,
                                                             const std::vector<const ClipModel*>& heavyweight)>;

struct ExtractionPlan {
    std::string query;
    std::vector<TextHit> context_chunks;  // <= k, best first
    std::vector<FrameHit> frames;         // top-F frame hits
    std::vector<std::string> context_clips;  // chunk clips then frame clips, deduplicated
    std::vector<PlannedExtraction> models_to_run;
    std::size_t candidates = 0;
    std::size_t rejected = 0;
    bool fallback_used = false;
};

struct PlanInputs {
    const CorpusManifest& corpus;
    const TextDB& text_db;
    const ImageDB* image_db = nullptr;  // null: text-only retrieval
    const TextEmbedder& embedder;
    const ModelRegistry& registry;
    const KnnModel* knn = nullptr;
    const ModelSelector* selector = nullptr;
};

/// Context selection only: top-N candidates, optional KNN filter, top-k.
std::vector<TextHit> select_context(std::span<const double> query_vec, const TextDB& text_db, const PlannerConfig& cfg,
                                    const KnnModel* knn, std::size_t* candidates = nullptr,
                                    std::size_t* rejected = nullptr, bool* fallback_used = nullptr);

/// Throws kEmptyIndex when the TextDB is empty.
ExtractionPlan plan(std::string_view query, const PlanInputs& in, const PlannerConfig& cfg);

}  // namespace incrag
