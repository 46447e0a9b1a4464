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

#include "incrag/evalharness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "incrag/error.hpp"
#include "incrag/extractor.hpp"
#include "incrag/prompt.hpp"
#include "rng.hpp"

namespace incrag {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::string> clips_of(const std::vector<TextHit>& hits) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& h : hits) {
        if (seen.insert(h.chunk.clip_id).second) out.push_back(h.chunk.clip_id);
    }
    return out;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

nlohmann::json recall_json(const RecallResult& r) {
    return {{"score", r.score}, {"counted", r.counted}, {"skipped", r.skipped}};
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Baseline

std::vector<TextHit> Baseline::retrieve(const TextEmbedder& embedder, std::string_view query, std::size_t k) const {
    if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
    if (text_db.empty()) return {};
    return text_db.topn(embedder.embed(query), k);
}

std::vector<std::string> Baseline::clips(const TextEmbedder& embedder, std::string_view query, std::size_t k) const {
    return clips_of(retrieve(embedder, query, k));
}

std::string Baseline::answer(const TextEmbedder& embedder, const LanguageModel& llm, std::string_view query,
                             std::size_t k) const {
    std::vector<ContextEntry> ctx;
    for (const auto& h : retrieve(embedder, query, k)) {
        const Clip* clip = corpus.find_clip(h.chunk.clip_id);
        ctx.push_back({clip ? clip->start : 0.0, h.chunk.text});
    }
    return llm.complete(build_prompt(ctx, query));
}

Baseline run_baseline(const CorpusManifest& corpus, const ModelRegistry& registry, const TextEmbedder& embedder) {
    auto t0 = Clock::now();
    Baseline b{corpus, TextDB(embedder.dimension()), 0, 0.0};
    auto heavy = registry.clip_models(WeightClass::kHeavyweight);
    const auto n = static_cast<std::int64_t>(b.corpus.clips.size());
    std::vector<std::vector<Chunk>> produced(b.corpus.clips.size());
    std::vector<std::string> errors(b.corpus.clips.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const Clip& clip = b.corpus.clips[static_cast<std::size_t>(i)];
        try {
            for (const auto* m : heavy) {
                const auto& d = m->descriptor();
                auto out = m->run(clip);
                produced[static_cast<std::size_t>(i)].push_back(
                    {make_chunk_id(clip.clip_id, d.model_id), clip.clip_id, out.text, d.model_id,
                     ChunkLevel::kDetailed, embedder.embed(out.text)});
            }
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(i)] = ex.what();
        }
    }
    for (std::size_t i = 0; i < produced.size(); ++i) {
        if (!errors[i].empty()) {
            throw Error(ErrorCode::kProvider, "baseline extraction failed on clip '" + b.corpus.clips[i].clip_id +
                                                  "': " + errors[i]);
        }
        auto& clip = b.corpus.clips[i];
        b.text_db.upsert(produced[i]);
        for (const auto& c : produced[i]) {
            const auto& d = registry.descriptor(c.source_model_id);
            b.preprocess_cost += d.per_frame_cost * static_cast<std::int64_t>(clip.frames.size());
            clip.mark_extracted(d.model_id);
        }
    }
    b.wall_ms = ms_since(t0);
    return b;
}

// ---------------------------------------------------------------------------

RecallResult recall_at_k(std::span<const QueryClips> baseline, std::span<const QueryClips> irag) {
    if (baseline.size() != irag.size()) {
        throw Error(ErrorCode::kQuerySetMismatch, "recall needs the same query list on both sides");
    }
    RecallResult r;
    double sum = 0.0;
    for (std::size_t q = 0; q < baseline.size(); ++q) {
        if (baseline[q].query != irag[q].query) {
            throw Error(ErrorCode::kQuerySetMismatch, "query " + std::to_string(q) + " differs between sides");
        }
        if (baseline[q].clips.empty()) {
            ++r.skipped;
            continue;
        }
        std::size_t common = 0;
        for (const auto& c : baseline[q].clips) common += irag[q].clips.count(c);
        sum += static_cast<double>(common) / static_cast<double>(baseline[q].clips.size());
        ++r.counted;
    }
    r.score = r.counted ? sum / static_cast<double>(r.counted) : 0.0;
    return r;
}

// ---------------------------------------------------------------------------

std::vector<SourceContext> caption_contexts(const Baseline& baseline) {
    std::vector<SourceContext> out;
    for (const auto& clip : baseline.corpus.clips) {
        for (const auto& c : baseline.text_db.chunks_for_clip(clip.clip_id)) {
            if (c.level == ChunkLevel::kDetailed && !c.text.empty()) out.push_back({clip.clip_id, c.text});
        }
    }
    return out;
}

std::vector<SynthesizedQuery> synthesize_queries(std::span<const SourceContext> contexts, const LanguageModel& llm,
                                                 std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(contexts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    detail::Rng rng(seed);
    detail::shuffle(order, rng);
    std::vector<SynthesizedQuery> out;
    std::unordered_set<std::string> seen;
    for (auto i : order) {
        if (out.size() == n) break;
        auto q = llm.complete(build_synthesis_prompt(contexts[i].text));
        if (q.empty() || q == kSentinel || !seen.insert(q).second) continue;
        out.push_back({std::move(q), contexts[i].clip_id});
    }
    return out;
}

std::vector<std::string> attribute_queries(const Vocabulary& vocab) {
    std::vector<std::string> out;
    for (const auto& color : vocab.colors) {
        for (const auto& object : vocab.objects) out.push_back("Is there a " + color + " " + object + "?");
    }
    for (const auto& object : vocab.objects) out.push_back("What is the color of the " + object + "?");
    return out;
}

std::vector<std::string> existence_queries(const Vocabulary& vocab) {
    std::vector<std::string> out;
    for (auto& q : attribute_queries(vocab)) {
        if (q.starts_with("Is there")) out.push_back(std::move(q));
    }
    return out;
}

std::vector<SynthesizedQuery> query_pool(const CorpusManifest& corpus, const ModelRegistry& registry,
                                         const EmbeddingConfig& embedding, std::size_t n, std::uint64_t seed) {
    TextEmbedder embedder(embedding);
    auto baseline = run_baseline(corpus, registry, embedder);
    return synthesize_queries(caption_contexts(baseline), registry.llm(), n, seed);
}

std::vector<std::string> sample_stream(std::span<const SynthesizedQuery> pool, std::size_t count,
                                       std::uint64_t seed) {
    if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot sample from an empty query pool");
    detail::Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(pool[rng.below(pool.size())].query);
    return out;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

std::unique_ptr<Engine> cold_engine(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                                    const EngineConfig& config, PreprocessReport* report = nullptr) {
    auto engine = std::make_unique<Engine>(corpus, std::move(registry), config);
    auto rep = engine->preprocess();
    if (!rep.failures.empty()) {
        throw Error(ErrorCode::kProvider, "preprocessing failed on clip '" + rep.failures.front().clip_id +
                                              "': " + rep.failures.front().message);
    }
    if (report) *report = rep;
    return engine;
}

}  // namespace

PreprocessComparison compare_preprocessing(const CorpusManifest& corpus,
                                           std::shared_ptr<const ModelRegistry> registry,
                                           const EngineConfig& config) {
    PreprocessComparison r;
    r.clips = corpus.clips.size();
    r.keyframes = corpus.total_keyframes();
    PreprocessReport rep;
    cold_engine(corpus, registry, config, &rep);
    r.irag_cost = rep.simulated_cost;
    r.irag_wall_ms = rep.wall_ms;
    TextEmbedder embedder(config.embedding);
    auto b = run_baseline(corpus, *registry, embedder);
    r.baseline_cost = b.preprocess_cost;
    r.baseline_wall_ms = b.wall_ms;
    return r;
}

std::size_t EquivalenceReport::eligible() const {
    return static_cast<std::size_t>(
        std::count_if(cases.begin(), cases.end(), [](const auto& c) { return c.evidence_in_candidates; }));
}

std::size_t EquivalenceReport::matched_eligible() const {
    return static_cast<std::size_t>(std::count_if(
        cases.begin(), cases.end(), [](const auto& c) { return c.evidence_in_candidates && c.match(); }));
}

EquivalenceReport equivalence_sweep(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                                    const EngineConfig& config, std::span<const std::string> queries,
                                    std::size_t max_calls) {
    TextEmbedder embedder(config.embedding);
    const auto& llm = registry->llm();
    auto baseline = run_baseline(corpus, *registry, embedder);
    const std::size_t k = config.planner.k;

    // The index is the same for every query; each query then works on its own
    // copy so no query warms the stores for the next.
    auto indexed = cold_engine(corpus, registry, config);

    EquivalenceReport report;
    for (const auto& q : queries) {
        EquivalenceCase c;
        c.query = q;
        auto hits = baseline.retrieve(embedder, q, k);
        c.baseline_answer = baseline.answer(embedder, llm, q, k);
        if (c.baseline_answer != "No" && c.baseline_answer != kSentinel) {
            // First baseline context line that supports the answer on its own.
            const auto* sllm = dynamic_cast<const SyntheticLlm*>(&llm);
            for (const auto& h : hits) {
                std::string alone = sllm ? sllm->answer({h.chunk.text}, q)
                                         : llm.complete(build_prompt(std::vector<ContextEntry>{{0.0, h.chunk.text}}, q));
                if (alone == c.baseline_answer) {
                    c.evidence_clip = h.chunk.clip_id;
                    break;
                }
            }
        }

        auto engine = indexed->clone();
        if (!c.evidence_clip.empty()) {
            QueryOptions wide;
            wide.k = config.planner.top_n;
            auto p = engine->plan_query(q, wide);
            c.evidence_in_candidates = std::find(p.context_clips.begin(), p.context_clips.end(), c.evidence_clip) !=
                                       p.context_clips.end();
        }
        for (c.calls = 1; c.calls <= max_calls; ++c.calls) {
            auto r = engine->answer_query(q);
            c.irag_answer = r.answer;
            bool extracted = std::any_of(r.trace.begin(), r.trace.end(),
                                         [](const IterationTrace& t) { return !t.extracted.empty(); });
            if (!extracted) break;
        }
        report.cases.push_back(std::move(c));
    }
    return report;
}

std::vector<RecallRow> recall_experiment(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                                         const EngineConfig& config, std::span<const std::string> queries,
                                         std::span<const std::size_t> k_grid, RecallMode mode,
                                         std::optional<std::size_t> top_f, std::vector<RecallSets>* sets) {
    TextEmbedder embedder(config.embedding);
    auto baseline = run_baseline(corpus, *registry, embedder);
    auto indexed = cold_engine(corpus, registry, config);
    auto clip_set = [&](const std::string& q, const QueryOptions& opt) {
        if (mode == RecallMode::kColdPlan) return as_set(indexed->plan_query(q, opt).context_clips);
        return as_set(indexed->clone()->answer_query(q, opt).supporting_clips);
    };
    std::vector<RecallRow> rows;
    for (auto k : k_grid) {
        std::vector<QueryClips> b, text_only, dual;
        for (const auto& q : queries) {
            b.push_back({q, as_set(baseline.clips(embedder, q, k))});
            QueryOptions opt;
            opt.k = k;
            opt.top_f = 0;
            text_only.push_back({q, clip_set(q, opt)});
            opt.top_f = top_f.value_or(k);
            dual.push_back({q, clip_set(q, opt)});
        }
        rows.push_back({k, recall_at_k(b, text_only), recall_at_k(b, dual)});
        if (sets) {
            for (std::size_t i = 0; i < queries.size(); ++i) {
                sets->push_back({k, queries[i], b[i].clips, text_only[i].clips, dual[i].clips});
            }
        }
    }
    return rows;
}

KnnModel train_filter(const CorpusManifest& train, std::shared_ptr<const ModelRegistry> registry,
                      const EngineConfig& config, std::span<const std::string> queries, std::size_t label_k,
                      std::size_t top_n) {
    if (label_k == 0 || top_n == 0) throw Error(ErrorCode::kInvalidArgument, "label_k and top_n must be >= 1");
    TextEmbedder embedder(config.embedding);
    // Labels: baseline top label_k clips vs unfiltered top-N candidates.
    auto baseline = run_baseline(train, *registry, embedder);
    auto engine = cold_engine(train, registry, config);
    auto db = engine->text_db_snapshot();
    PlannerConfig cand_cfg = config.planner;
    cand_cfg.top_n = top_n;
    cand_cfg.k = std::min(cand_cfg.k, top_n);
    std::vector<QueryClips> labels;
    std::vector<QueryCandidates> cands;
    for (const auto& q : queries) {
        labels.push_back({q, as_set(baseline.clips(embedder, q, label_k))});
        cands.push_back(knn_candidates(q, db, embedder, cand_cfg));
    }
    return knn_train(labels, cands, 2 * embedder.dimension());
}

FilteringReport filtering_tradeoff(const CorpusManifest& train, const CorpusManifest& eval,
                                   std::shared_ptr<const ModelRegistry> registry, const EngineConfig& config,
                                   std::span<const std::string> queries, const FilteringSetup& setup) {
    if (setup.k_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "filtering grid is empty");
    TextEmbedder embedder(config.embedding);
    FilteringReport report;
    report.label_k = setup.label_k ? setup.label_k : config.planner.k;
    const std::size_t max_k = *std::max_element(setup.k_grid.begin(), setup.k_grid.end());

    auto knn = train_filter(train, registry, config, queries, report.label_k, max_k);
    report.train_points = knn.size();
    report.train_positive = knn.count_label(1);

    auto eval_baseline = run_baseline(eval, *registry, embedder);
    std::vector<QueryClips> relevant;
    for (const auto& q : queries) relevant.push_back({q, as_set(eval_baseline.clips(embedder, q, report.label_k))});

    EngineConfig plain_cfg = config;
    plain_cfg.planner.filtering_enabled = false;
    plain_cfg.planner.top_f = 0;
    auto plain = cold_engine(eval, registry, plain_cfg);
    EngineConfig filt_cfg = plain_cfg;
    filt_cfg.planner.filtering_enabled = true;
    auto filtered = cold_engine(eval, registry, filt_cfg);
    filtered->set_knn(knn);

    auto unfiltered_at = [&](std::size_t k) {
        std::vector<QueryClips> got;
        QueryOptions opt;
        opt.k = k;
        for (const auto& q : queries) got.push_back({q, as_set(plain->plan_query(q, opt).context_clips)});
        return recall_at_k(relevant, got);
    };

    for (auto k : setup.k_grid) {
        FilteringRow row;
        row.initial_k = k;
        std::vector<QueryClips> got;
        std::size_t total = 0;
        QueryOptions opt;
        opt.k = k;
        for (const auto& q : queries) {
            // Top-N equals the initial k, so the filter alone decides the count.
            auto p = filtered->plan_query(q, opt);
            if (p.fallback_used) ++row.fallbacks;
            total += p.context_chunks.size();
            got.push_back({q, as_set(p.context_clips)});
        }
        row.avg_chunks_filtered = queries.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(queries.size());
        row.recall_filtered = recall_at_k(relevant, got);
        row.matched_k = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(row.avg_chunks_filtered)));
        row.recall_unfiltered_matched = unfiltered_at(row.matched_k);
        row.recall_unfiltered_initial = unfiltered_at(k);
        report.rows.push_back(row);
    }
    return report;
}

StreamRun run_stream(const CorpusManifest& corpus, std::shared_ptr<const ModelRegistry> registry,
                     const EngineConfig& config, std::span<const std::string> stream, std::size_t k,
                     const std::string& heavyweight_model_id, bool repeat_pass, std::optional<std::size_t> top_f) {
    auto engine = cold_engine(corpus, registry, config);
    StreamRun run;
    run.k = k;
    QueryOptions opt;
    opt.k = k;
    opt.top_f = top_f.value_or(k);
    for (const auto& q : stream) {
        auto r = engine->answer_query(q, opt);
        run.latency_units.push_back(r.timing.latency_units());
        run.extraction_units.push_back(r.timing.extraction_units);
        if (r.unresolved()) ++run.unresolved;
    }
    run.fraction_extracted = engine->fraction_extracted(heavyweight_model_id);
    if (repeat_pass) {
        for (const auto& q : stream) run.repeat_extraction_units.push_back(engine->answer_query(q, opt).timing.extraction_units);
    }
    return run;
}

double mean(std::span<const std::int64_t> values, std::size_t begin, std::size_t end) {
    end = std::min(end, values.size());
    if (begin >= end) return 0.0;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += static_cast<double>(values[i]);
    return s / static_cast<double>(end - begin);
}

// ---------------------------------------------------------------------------
// Reporting

nlohmann::json to_json(const PreprocessComparison& r) {
    return {{"experiment", "preprocessing"}, {"clips", r.clips},
            {"keyframes", r.keyframes},       {"irag_cost", r.irag_cost},
            {"baseline_cost", r.baseline_cost}, {"ratio", r.ratio()},
            {"speedup", 1.0 / r.ratio()},     {"irag_wall_ms", r.irag_wall_ms},
            {"baseline_wall_ms", r.baseline_wall_ms}};
}

nlohmann::json to_json(const EquivalenceReport& r) {
    auto cases = nlohmann::json::array();
    for (const auto& c : r.cases) {
        cases.push_back({{"query", c.query},
                         {"baseline_answer", c.baseline_answer},
                         {"irag_answer", c.irag_answer},
                         {"evidence_clip", c.evidence_clip},
                         {"evidence_in_candidates", c.evidence_in_candidates},
                         {"calls", c.calls},
                         {"match", c.match()}});
    }
    return {{"experiment", "equivalence"},
            {"queries", r.cases.size()},
            {"eligible", r.eligible()},
            {"matched", r.matched_eligible()},
            {"cases", cases}};
}

nlohmann::json to_json(const RecallSets& s) {
    return {{"k", s.k}, {"query", s.query}, {"baseline", s.baseline}, {"text_only", s.text_only}, {"dual", s.dual}};
}

nlohmann::json to_json(const std::vector<RecallRow>& rows) {
    auto out = nlohmann::json::array();
    for (const auto& row : rows) {
        out.push_back({{"k", row.k}, {"text_only", recall_json(row.text_only)}, {"dual", recall_json(row.dual)}});
    }
    return {{"experiment", "recall"}, {"rows", out}};
}

nlohmann::json to_json(const FilteringReport& r) {
    auto rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"initial_k", row.initial_k},
                        {"avg_chunks_filtered", row.avg_chunks_filtered},
                        {"recall_filtered", recall_json(row.recall_filtered)},
                        {"matched_k", row.matched_k},
                        {"recall_unfiltered_matched", recall_json(row.recall_unfiltered_matched)},
                        {"recall_unfiltered_initial", recall_json(row.recall_unfiltered_initial)},
                        {"fallbacks", row.fallbacks}});
    }
    return {{"experiment", "filtering"},
            {"train_points", r.train_points},
            {"train_positive", r.train_positive},
            {"label_k", r.label_k},
            {"rows", rows}};
}

nlohmann::json to_json(const StreamRun& r) {
    return {{"experiment", "stream"},
            {"k", r.k},
            {"fraction_extracted", r.fraction_extracted},
            {"unresolved", r.unresolved},
            {"latency_units", r.latency_units},
            {"extraction_units", r.extraction_units},
            {"repeat_extraction_units", r.repeat_extraction_units}};
}

std::string format_table(const PreprocessComparison& r) {
    std::ostringstream os;
    os << "system       simulated_cost   wall_ms\n";
    os << "incremental  " << std::setw(14) << r.irag_cost << "   " << std::setw(7) << fmt("%.1f", r.irag_wall_ms) << "\n";
    os << "baseline     " << std::setw(14) << r.baseline_cost << "   " << std::setw(7) << fmt("%.1f", r.baseline_wall_ms)
       << "\n";
    os << "speedup      " << fmt("%.2fx", 1.0 / r.ratio()) << "\n";
    return os.str();
}

std::string format_table(const std::vector<RecallRow>& rows) {
    std::ostringstream os;
    os << "retrieval            ";
    for (const auto& row : rows) os << "  k=" << row.k << "   ";
    os << "\ntext only (index)    ";
    for (const auto& row : rows) os << fmt("  %.4f", row.text_only.score);
    os << "\ntext + frames        ";
    for (const auto& row : rows) os << fmt("  %.4f", row.dual.score);
    os << "\n";
    return os.str();
}

std::string format_table(const FilteringReport& r) {
    std::ostringstream os;
    os << "initial_k  avg_chunks  recall_filtered  matched_k  recall_unfiltered@matched  recall_unfiltered@initial\n";
    for (const auto& row : r.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%9zu  %10.2f  %15.4f  %9zu  %25.4f  %25.4f\n", row.initial_k,
                      row.avg_chunks_filtered, row.recall_filtered.score, row.matched_k,
                      row.recall_unfiltered_matched.score, row.recall_unfiltered_initial.score);
        os << buf;
    }
    return os.str();
}

std::string format_fraction_table(std::span<const StreamRun> runs) {
    std::ostringstream os;
    os << "k     fraction_extracted\n";
    for (const auto& r : runs) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-5zu %.3f\n", r.k, r.fraction_extracted);
        os << buf;
    }
    return os.str();
}

std::string format_latency_table(std::span<const StreamRun> runs) {
    std::ostringstream os;
    os << "k     mean_latency_1-100  mean_latency_101-200  mean_extraction_1-100  mean_extraction_101-200  "
          "repeat_extraction\n";
    for (const auto& r : runs) {
        std::int64_t repeat = 0;
        for (auto v : r.repeat_extraction_units) repeat += v;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%-5zu %18.1f  %20.1f  %21.1f  %23.1f  %17lld\n", r.k,
                      mean(r.latency_units, 0, 100), mean(r.latency_units, 100, 200), mean(r.extraction_units, 0, 100),
                      mean(r.extraction_units, 100, 200), static_cast<long long>(repeat));
        os << buf;
    }
    return os.str();
}

}  // namespace incrag
