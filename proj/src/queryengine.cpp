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

#include "incrag/queryengine.hpp"

#include <chrono>
#include <exception>
#include <set>

#include "incrag/error.hpp"

namespace incrag {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

nlohmann::json pairs_json(const std::vector<PlannedExtraction>& pairs) {
    auto out = nlohmann::json::array();
    for (const auto& p : pairs) out.push_back({{"clip_id", p.clip_id}, {"model_id", p.model_id}});
    return out;
}

}  // namespace

void EngineConfig::validate() const {
    if (max_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
    if (retrieval_cost < 0) throw Error(ErrorCode::kInvalidArgument, "retrieval_cost must be >= 0");
    if (preprocess_batch == 0) throw Error(ErrorCode::kInvalidArgument, "preprocess_batch must be >= 1");
    planner.validate();
    embedding.validate();
}

nlohmann::json to_json(const QueryResult& r) {
    auto trace = nlohmann::json::array();
    for (const auto& t : r.trace) {
        trace.push_back({{"iteration", t.iteration},
                         {"context_chunks", t.context_chunks},
                         {"response", t.response},
                         {"sentinel", t.sentinel},
                         {"extracted", pairs_json(t.extracted)},
                         {"extraction_cost", t.extraction_cost},
                         {"extraction_failures", t.extraction_failures}});
    }
    return {{"query", r.query},
            {"answer", r.answer},
            {"supporting_clips", r.supporting_clips},
            {"context_chunks", r.context_chunks},
            {"iterations_used", r.iterations_used},
            {"trace", trace},
            {"timing",
             {{"retrieval_units", r.timing.retrieval_units},
              {"extraction_units", r.timing.extraction_units},
              {"llm_units", r.timing.llm_units},
              {"latency_units", r.timing.latency_units()},
              {"retrieval_ms", r.timing.retrieval_ms},
              {"extraction_ms", r.timing.extraction_ms},
              {"llm_ms", r.timing.llm_ms},
              {"total_ms", r.timing.total_ms}}}};
}

nlohmann::json to_json(const PreprocessReport& r) {
    auto failures = nlohmann::json::array();
    for (const auto& f : r.failures) {
        failures.push_back({{"clip_id", f.clip_id}, {"model_id", f.model_id}, {"message", f.message}});
    }
    return {{"record", "preprocess"},
            {"clips_total", r.clips_total},
            {"clips_done", r.clips_done},
            {"keyframes", r.keyframes},
            {"index_chunks_added", r.index_chunks_added},
            {"frames_added", r.frames_added},
            {"simulated_cost", r.simulated_cost},
            {"failures", failures},
            {"wall_ms", r.wall_ms}};
}

// ---------------------------------------------------------------------------

Engine::Engine(CorpusManifest corpus, std::shared_ptr<const ModelRegistry> registry, EngineConfig config)
    : Engine(std::move(corpus), registry, config, TextDB(config.embedding.dimension),
             ImageDB(registry && registry->frame_embedder() ? registry->frame_embedder()->dimension()
                                                            : config.embedding.dimension)) {}

Engine::Engine(CorpusManifest corpus, std::shared_ptr<const ModelRegistry> registry, EngineConfig config, TextDB text,
               ImageDB image)
    : config_(std::move(config)),
      registry_(std::move(registry)),
      embedder_(config_.embedding),
      corpus_(std::move(corpus)),
      text_db_(std::move(text)),
      image_db_(std::move(image)) {
    config_.validate();
    if (!registry_) throw Error(ErrorCode::kInvalidArgument, "engine needs a model registry");
    corpus_.validate();
    clip_index_ = ClipIndex(corpus_);
    if (text_db_.dimension() != embedder_.dimension() || image_db_.dimension() != embedder_.dimension()) {
        throw Error(ErrorCode::kDimensionMismatch, "store dimensions must match the text embedder");
    }
}

void Engine::set_knn(std::optional<KnnModel> knn) {
    if (knn && knn->feature_dim() != 2 * embedder_.dimension()) {
        throw Error(ErrorCode::kDimensionMismatch, "KNN features must have length 2 x embedding dimension");
    }
    std::unique_lock lock(mutex_);
    knn_ = std::move(knn);
}

void Engine::set_model_selector(std::optional<ModelSelector> selector) {
    std::unique_lock lock(mutex_);
    selector_ = std::move(selector);
}

void Engine::set_query_log(std::function<void(const nlohmann::json&)> sink) {
    std::lock_guard lock(log_mutex_);
    log_sink_ = std::move(sink);
}

bool Engine::ready() const {
    std::shared_lock lock(mutex_);
    auto light = registry_->clip_models(WeightClass::kLightweight);
    const auto* fe = registry_->frame_embedder();
    for (const auto& c : corpus_.clips) {
        for (const auto* m : light) {
            if (!c.extracted_by(m->descriptor().model_id)) return false;
        }
        if (fe && !c.extracted_by(fe->descriptor().model_id)) return false;
    }
    return !text_db_.empty() || light.empty();
}

PreprocessReport Engine::preprocess(const std::function<void(const PreprocessProgress&)>& progress) {
    auto t0 = Clock::now();
    auto light = registry_->clip_models(WeightClass::kLightweight);
    const FrameEmbedderModel* fe = registry_->frame_embedder();

    PreprocessReport report;
    std::vector<Clip> clips;
    {
        std::shared_lock lock(mutex_);
        clips = corpus_.clips;
    }
    report.clips_total = clips.size();
    for (const auto& c : clips) report.keyframes += c.frames.size();

    struct ClipWork {
        std::vector<std::pair<const ClipModel*, ModelOutput>> outputs;
        std::vector<FrameRecord> frames;
        bool embed_done = false;
        std::vector<PreprocessFailure> failures;
    };

    for (std::size_t begin = 0; begin < clips.size(); begin += config_.preprocess_batch) {
        std::size_t end = std::min(clips.size(), begin + config_.preprocess_batch);
        std::vector<ClipWork> work(end - begin);
        const auto n = static_cast<std::int64_t>(end - begin);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) {
            const Clip& clip = clips[begin + static_cast<std::size_t>(i)];
            auto& w = work[static_cast<std::size_t>(i)];
            for (const auto* m : light) {
                const auto& d = m->descriptor();
                if (clip.extracted_by(d.model_id)) continue;
                try {
                    w.outputs.emplace_back(m, m->run(clip));
                } catch (const std::exception& ex) {
                    w.failures.push_back({clip.clip_id, d.model_id, ex.what()});
                }
            }
            if (fe && !clip.extracted_by(fe->descriptor().model_id)) {
                try {
                    for (const auto& f : clip.frames) w.frames.push_back({f.frame_id, clip.clip_id, fe->embed(f)});
                    w.embed_done = true;
                } catch (const std::exception& ex) {
                    w.frames.clear();
                    w.failures.push_back({clip.clip_id, fe->descriptor().model_id, ex.what()});
                }
            }
        }

        std::unique_lock lock(mutex_);
        for (std::size_t i = 0; i < work.size(); ++i) {
            auto& w = work[i];
            Clip& clip = corpus_.clips[*clip_index_.position(clips[begin + i].clip_id)];
            for (auto& [model, out] : w.outputs) {
                const auto& d = model->descriptor();
                Chunk chunk{make_chunk_id(clip.clip_id, d.model_id), clip.clip_id, out.text, d.model_id,
                            ChunkLevel::kIndex, embedder_.embed(out.text)};
                try {
                    report.index_chunks_added += text_db_.upsert(std::span<const Chunk>(&chunk, 1));
                } catch (const Error& ex) {
                    w.failures.push_back({clip.clip_id, d.model_id, ex.what()});
                    continue;
                }
                report.simulated_cost += d.per_frame_cost * static_cast<std::int64_t>(clip.frames.size());
                clip.mark_extracted(d.model_id);
            }
            if (w.embed_done) {
                const auto& d = fe->descriptor();
                try {
                    report.frames_added += image_db_.upsert(w.frames);
                    report.simulated_cost += d.per_frame_cost * static_cast<std::int64_t>(clip.frames.size());
                    clip.mark_extracted(d.model_id);
                } catch (const Error& ex) {
                    w.failures.push_back({clip.clip_id, d.model_id, ex.what()});
                }
            }
            for (auto& f : w.failures) report.failures.push_back(std::move(f));
        }
        lock.unlock();
        report.clips_done = end;
        if (progress) progress({report.clips_done, report.clips_total, report.simulated_cost});
    }
    report.wall_ms = ms_since(t0);
    {
        std::lock_guard lock(log_mutex_);
        if (log_sink_) log_sink_(to_json(report));
    }
    return report;
}

std::vector<ContextEntry> Engine::context_entries(const std::vector<TextHit>& hits) const {
    std::vector<ContextEntry> out;
    out.reserve(hits.size());
    for (const auto& h : hits) {
        auto pos = clip_index_.position(h.chunk.clip_id);
        double ts = pos ? corpus_.clips[*pos].start : 0.0;
        out.push_back({ts, h.chunk.text});
    }
    return out;
}

PlannerConfig Engine::planner_config(const QueryOptions& options) const {
    PlannerConfig pcfg = config_.planner;
    if (options.k) {
        pcfg.k = *options.k;
        pcfg.top_n = std::max(pcfg.top_n, pcfg.k);
    }
    if (options.top_f) pcfg.top_f = *options.top_f;
    pcfg.validate();
    return pcfg;
}

ExtractionPlan Engine::plan_query(std::string_view query, const QueryOptions& options) const {
    PlannerConfig pcfg = planner_config(options);
    std::shared_lock lock(mutex_);
    PlanInputs in{corpus_, text_db_, &image_db_, embedder_, *registry_, knn_ ? &*knn_ : nullptr,
                  selector_ ? &*selector_ : nullptr};
    return plan(query, in, pcfg);
}

QueryResult Engine::answer_query(std::string_view query, const QueryOptions& options) {
    auto t0 = Clock::now();
    if (!ready()) throw Error(ErrorCode::kNotReady, "corpus '" + corpus().corpus_id + "' is not preprocessed");
    PlannerConfig pcfg = planner_config(options);
    std::size_t max_iter = options.max_iterations.value_or(config_.max_iterations);
    if (max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");

    QueryResult result;
    result.query = std::string(query);
    const LanguageModel& llm = registry_->llm();

    for (std::size_t round = 0;; ++round) {
        auto tr = Clock::now();
        ExtractionPlan p;
        std::string prompt;
        {
            std::shared_lock lock(mutex_);
            PlanInputs in{corpus_, text_db_, &image_db_, embedder_, *registry_, knn_ ? &*knn_ : nullptr,
                          selector_ ? &*selector_ : nullptr};
            p = plan(query, in, pcfg);
            prompt = build_prompt(context_entries(p.context_chunks), query);
        }
        result.timing.retrieval_units += config_.retrieval_cost;
        result.timing.retrieval_ms += ms_since(tr);

        auto tl = Clock::now();
        std::string response = llm.complete(prompt);
        result.timing.llm_units += llm.descriptor().per_frame_cost;
        result.timing.llm_ms += ms_since(tl);

        IterationTrace it;
        it.iteration = round;
        for (const auto& h : p.context_chunks) it.context_chunks.push_back(h.chunk.chunk_id);
        it.response = response;
        it.sentinel = response == kSentinel;

        result.answer = response;
        result.context_chunks = it.context_chunks;
        result.supporting_clips.clear();
        {
            std::set<std::string> seen;
            for (const auto& h : p.context_chunks) {
                if (seen.insert(h.chunk.clip_id).second) result.supporting_clips.push_back(h.chunk.clip_id);
            }
        }

        if (!it.sentinel || round == max_iter || p.models_to_run.empty()) {
            result.trace.push_back(std::move(it));
            break;
        }

        auto te = Clock::now();
        ExtractionReport rep;
        {
            std::unique_lock lock(mutex_);
            rep = extract(p, corpus_, text_db_, embedder_, *registry_, nullptr,
                          ExtractOptions{config_.parallel_extraction});
            extraction_cost_total_ += rep.simulated_cost;
        }
        result.timing.extraction_units += rep.simulated_cost;
        result.timing.extraction_ms += ms_since(te);
        it.extracted = rep.executed;
        it.extraction_cost = rep.simulated_cost;
        it.extraction_failures = rep.failures.size();
        result.trace.push_back(std::move(it));
        result.iterations_used = round + 1;
        {
            std::lock_guard lock(log_mutex_);
            if (log_sink_) log_sink_(to_json(rep));
        }
    }
    result.timing.total_ms = ms_since(t0);

    std::lock_guard lock(log_mutex_);
    if (log_sink_) {
        auto rec = to_json(result);
        rec["record"] = "query";
        log_sink_(rec);
    }
    return result;
}

// ---------------------------------------------------------------------------

void Engine::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::shared_lock lock(mutex_);
    save_manifest(dir / "manifest.jsonl", corpus_);
    persist(text_db_, dir / "text.db");
    persist(image_db_, dir / "image.db");
    if (knn_) {
        persist(*knn_, dir / "knn.db");
    } else {
        std::filesystem::remove(dir / "knn.db");
    }
}

std::unique_ptr<Engine> Engine::open(const std::filesystem::path& dir, std::shared_ptr<const ModelRegistry> registry,
                                     EngineConfig config) {
    auto corpus = load_manifest(dir / "manifest.jsonl");
    auto text = std::filesystem::exists(dir / "text.db") ? restore_text_db(dir / "text.db")
                                                         : TextDB(config.embedding.dimension);
    auto image = std::filesystem::exists(dir / "image.db") ? restore_image_db(dir / "image.db")
                                                           : ImageDB(config.embedding.dimension);
    std::unique_ptr<Engine> engine(
        new Engine(std::move(corpus), std::move(registry), std::move(config), std::move(text), std::move(image)));
    if (std::filesystem::exists(dir / "knn.db")) engine->set_knn(restore_knn(dir / "knn.db"));
    return engine;
}

std::unique_ptr<Engine> Engine::clone() const {
    std::shared_lock lock(mutex_);
    std::unique_ptr<Engine> copy(new Engine(corpus_, registry_, config_, text_db_, image_db_));
    copy->knn_ = knn_;
    copy->selector_ = selector_;
    copy->extraction_cost_total_ = extraction_cost_total_;
    return copy;
}

CorpusManifest Engine::corpus() const {
    std::shared_lock lock(mutex_);
    return corpus_;
}

std::optional<Clip> Engine::clip(std::string_view clip_id) const {
    std::shared_lock lock(mutex_);
    auto pos = clip_index_.position(clip_id);
    if (!pos) return std::nullopt;
    return corpus_.clips[*pos];
}

std::vector<Chunk> Engine::chunks_for_clip(std::string_view clip_id) const {
    std::shared_lock lock(mutex_);
    return text_db_.chunks_for_clip(clip_id);
}

StoreSizes Engine::store_sizes() const {
    std::shared_lock lock(mutex_);
    StoreSizes s;
    s.text_chunks = text_db_.size();
    for (const auto& c : text_db_.records()) {
        (c.level == ChunkLevel::kIndex ? s.index_chunks : s.detailed_chunks) += 1;
    }
    s.frames = image_db_.size();
    return s;
}

double Engine::fraction_extracted(std::string_view model_id) const {
    std::shared_lock lock(mutex_);
    return incrag::fraction_extracted(corpus_, *registry_, model_id);
}

std::int64_t Engine::extraction_cost_total() const {
    std::shared_lock lock(mutex_);
    return extraction_cost_total_;
}

TextDB Engine::text_db_snapshot() const {
    std::shared_lock lock(mutex_);
    return text_db_;
}

}  // namespace incrag
