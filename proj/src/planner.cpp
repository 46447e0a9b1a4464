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

#include "incrag/planner.hpp"

#include <unordered_map>
#include <unordered_set>

#include "incrag/error.hpp"
#include "store_io.hpp"

namespace incrag {

void PlannerConfig::validate() const {
    if (k == 0) throw Error(ErrorCode::kInvalidArgument, "planner k must be >= 1");
    if (k > top_n) throw Error(ErrorCode::kInvalidArgument, "planner k must not exceed top_n");
    if (knn_neighbors == 0) throw Error(ErrorCode::kInvalidArgument, "knn_neighbors must be >= 1");
    if (knn_accept_threshold > knn_neighbors) {
        throw Error(ErrorCode::kInvalidArgument, "knn_accept_threshold must not exceed knn_neighbors");
    }
}

// ---------------------------------------------------------------------------
// KNN

KnnModel::KnnModel(std::size_t feature_dim) : feature_dim_(feature_dim) {
    if (feature_dim == 0) throw Error(ErrorCode::kInvalidArgument, "KNN feature dimension must be positive");
}

std::span<const double> KnnModel::feature(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * feature_dim_, feature_dim_);
}

std::size_t KnnModel::count_label(std::uint8_t label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

void KnnModel::add(std::span<const double> feature, std::uint8_t label) {
    if (feature.size() != feature_dim_) {
        throw Error(ErrorCode::kDimensionMismatch, "KNN feature has length " + std::to_string(feature.size()) +
                                                       ", model expects " + std::to_string(feature_dim_));
    }
    if (label > 1) throw Error(ErrorCode::kInvalidArgument, "KNN labels are 0 or 1");
    features_.insert(features_.end(), feature.begin(), feature.end());
    labels_.push_back(label);
}

KnnVote knn_vote(const KnnModel& knn, std::span<const double> feature, std::size_t neighbors, std::size_t threshold,
                 kernels::Exec exec) {
    if (neighbors == 0 || threshold > neighbors) {
        throw Error(ErrorCode::kInvalidArgument, "KNN needs 1 <= threshold <= neighbors");
    }
    if (knn.size() < neighbors) {
        throw Error(ErrorCode::kUndertrained, "KNN holds " + std::to_string(knn.size()) + " points, needs " +
                                                  std::to_string(neighbors));
    }
    if (feature.size() != knn.feature_dim()) {
        throw Error(ErrorCode::kDimensionMismatch, "KNN query feature has length " + std::to_string(feature.size()));
    }
    std::vector<double> dist(knn.size());
    kernels::sq_dist_rows(exec, knn.features(), knn.feature_dim(), feature, dist);
    KnnVote vote;
    vote.neighbors = kernels::select_best(
        knn.size(), neighbors,
        [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; },
        [](std::size_t) { return true; });
    for (auto i : vote.neighbors) vote.positive += knn.labels()[i];
    vote.accept = vote.positive >= threshold;
    return vote;
}

bool knn_classify(const KnnModel& knn, std::span<const double> feature, std::size_t neighbors, std::size_t threshold,
                  kernels::Exec exec) {
    return knn_vote(knn, feature, neighbors, threshold, exec).accept;
}

KnnModel knn_train(std::span<const QueryClips> baseline, std::span<const QueryCandidates> candidates,
                   std::size_t feature_dim) {
    if (baseline.size() != candidates.size()) {
        throw Error(ErrorCode::kQuerySetMismatch, "baseline lists " + std::to_string(baseline.size()) +
                                                      " queries, candidates list " +
                                                      std::to_string(candidates.size()));
    }
    KnnModel knn(feature_dim);
    for (std::size_t q = 0; q < baseline.size(); ++q) {
        if (baseline[q].query != candidates[q].query) {
            throw Error(ErrorCode::kQuerySetMismatch, "query " + std::to_string(q) + " differs: '" +
                                                          baseline[q].query + "' vs '" + candidates[q].query + "'");
        }
        for (const auto& c : candidates[q].candidates) {
            knn.add(c.feature, baseline[q].clips.count(c.clip_id) ? 1 : 0);
        }
    }
    return knn;
}

QueryCandidates knn_candidates(std::string_view query, const TextDB& text_db, const TextEmbedder& embedder,
                               const PlannerConfig& cfg) {
    QueryCandidates out{std::string(query), {}};
    if (text_db.empty()) return out;
    auto q = embedder.embed(query);
    for (auto& hit : text_db.topn(q, cfg.top_n, cfg.exec)) {
        out.candidates.push_back({hit.chunk.chunk_id, hit.chunk.clip_id, concat_features(q, hit.chunk.embedding)});
    }
    return out;
}

void persist(const KnnModel& knn, const std::filesystem::path& path) {
    detail::RecordWriter rw;
    for (std::size_t i = 0; i < knn.size(); ++i) {
        auto& w = rw.begin();
        w.u8(knn.labels()[i]);
        w.vec(knn.feature(i));
        rw.end();
    }
    detail::write_container(path, detail::StoreKind::kKnn, static_cast<std::uint32_t>(knn.feature_dim()), rw);
}

KnnModel restore_knn(const std::filesystem::path& path) {
    auto c = detail::read_container(path, detail::StoreKind::kKnn);
    if (c.dimension == 0) detail::corrupt("zero dimension");
    KnnModel knn(c.dimension);
    detail::for_each_record(c, [&](detail::ByteReader& r) {
        auto label = r.u8();
        if (label > 1) detail::corrupt("bad KNN label");
        auto f = r.vec(c.dimension);
        knn.add(f, label);
    });
    return knn;
}

// ---------------------------------------------------------------------------
// Planning

std::vector<TextHit> select_context(std::span<const double> query_vec, const TextDB& text_db, const PlannerConfig& cfg,
                                    const KnnModel* knn, std::size_t* candidates, std::size_t* rejected,
                                    bool* fallback_used) {
    cfg.validate();
    std::vector<TextHit> pool;
    if (!text_db.empty()) {
        switch (cfg.ranking) {
            case ContextRanking::kAllChunks:
                pool = text_db.topn(query_vec, cfg.top_n, cfg.exec);
                break;
            case ContextRanking::kShadowIndex:
                pool = text_db.topn_if(
                    query_vec, cfg.top_n,
                    [&](const Chunk& c) { return c.level == ChunkLevel::kDetailed || !text_db.has_detailed(c.clip_id); },
                    cfg.exec);
                break;
            case ContextRanking::kClipBest: {
                auto all = text_db.topn(query_vec, text_db.size(), cfg.exec);
                std::unordered_map<std::string, std::size_t> slot;
                for (auto& hit : all) {
                    auto it = slot.find(hit.chunk.clip_id);
                    if (it == slot.end()) {
                        if (pool.size() == cfg.top_n) continue;
                        slot.emplace(hit.chunk.clip_id, pool.size());
                        pool.push_back(std::move(hit));
                        continue;
                    }
                    // Hits arrive best first, so the first detailed one is the best.
                    auto& entry = pool[it->second];
                    if (entry.chunk.level != ChunkLevel::kDetailed && hit.chunk.level == ChunkLevel::kDetailed) {
                        entry.chunk = std::move(hit.chunk);
                    }
                }
                break;
            }
        }
    }
    if (candidates) *candidates = pool.size();
    if (rejected) *rejected = 0;
    if (fallback_used) *fallback_used = false;

    std::vector<TextHit> kept;
    if (cfg.filtering_enabled && knn) {
        std::size_t dropped = 0;
        for (auto& hit : pool) {
            if (kept.size() == cfg.k) break;
            auto f = concat_features(query_vec, hit.chunk.embedding);
            if (knn_classify(*knn, f, cfg.knn_neighbors, cfg.knn_accept_threshold, cfg.exec)) {
                kept.push_back(hit);
            } else {
                ++dropped;
            }
        }
        if (rejected) *rejected = dropped;
        if (kept.empty() && !pool.empty() && cfg.fallback_unfiltered) {
            if (fallback_used) *fallback_used = true;
        } else {
            return kept;
        }
    }
    if (pool.size() > cfg.k) pool.resize(cfg.k);
    return pool;
}

ExtractionPlan plan(std::string_view query, const PlanInputs& in, const PlannerConfig& cfg) {
    if (in.text_db.empty()) throw Error(ErrorCode::kEmptyIndex, "TextDB is empty; preprocess the corpus first");
    ExtractionPlan p;
    p.query = std::string(query);
    auto q = in.embedder.embed(query);
    p.context_chunks = select_context(q, in.text_db, cfg, in.knn, &p.candidates, &p.rejected, &p.fallback_used);

    std::unordered_set<std::string> seen;
    for (const auto& hit : p.context_chunks) {
        if (seen.insert(hit.chunk.clip_id).second) p.context_clips.push_back(hit.chunk.clip_id);
    }
    if (in.image_db && cfg.top_f > 0 && !in.image_db->empty()) {
        if (cfg.frames_per_clip) {
            std::unordered_set<std::string> clips;
            for (auto& f : in.image_db->topf(q, in.image_db->size(), cfg.exec)) {
                if (clips.size() == cfg.top_f) break;
                if (clips.insert(f.clip_id).second) p.frames.push_back(std::move(f));
            }
        } else {
            p.frames = in.image_db->topf(q, cfg.top_f, cfg.exec);
        }
        for (const auto& f : p.frames) {
            if (seen.insert(f.clip_id).second) p.context_clips.push_back(f.clip_id);
        }
    }

    auto heavy = in.registry.clip_models(WeightClass::kHeavyweight);
    for (const auto& clip_id : p.context_clips) {
        const Clip* clip = in.corpus.find_clip(clip_id);
        if (!clip) throw Error(ErrorCode::kNotFound, "store references clip '" + clip_id + "' missing from corpus");
        std::vector<std::string> chosen;
        if (in.selector) {
            chosen = (*in.selector)(query, *clip, heavy);
        } else {
            for (const auto* m : heavy) chosen.push_back(m->descriptor().model_id);
        }
        for (auto& model_id : chosen) {
            if (in.registry.descriptor(model_id).weight_class != WeightClass::kHeavyweight) continue;
            if (clip->extracted_by(model_id)) continue;
            PlannedExtraction e{clip_id, std::move(model_id)};
            if (std::find(p.models_to_run.begin(), p.models_to_run.end(), e) == p.models_to_run.end()) {
                p.models_to_run.push_back(std::move(e));
            }
        }
    }
    return p;
}

}  // namespace incrag
