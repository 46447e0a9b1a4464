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

#include "incrag/extractor.hpp"

#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <set>

#include "incrag/error.hpp"

namespace incrag {

nlohmann::json to_json(const ExtractionReport& report) {
    nlohmann::json executed = nlohmann::json::array();
    for (const auto& e : report.executed) executed.push_back({{"clip_id", e.clip_id}, {"model_id", e.model_id}});
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"clip_id", f.clip_id}, {"model_id", f.model_id}, {"message", f.message}});
    }
    return {{"record", "extraction"},
            {"query", report.query},
            {"executed", executed},
            {"chunks_added", report.chunks_added},
            {"skipped", report.skipped},
            {"clips_touched", report.clips_touched},
            {"simulated_cost", report.simulated_cost},
            {"failures", failures},
            {"wall_ms", report.wall_ms}};
}

namespace {

struct Outcome {
    std::optional<ModelOutput> output;
    std::string error;
};

}  // namespace

ExtractionReport extract(const ExtractionPlan& plan, CorpusManifest& corpus, TextDB& text_db,
                         const TextEmbedder& embedder, const ModelRegistry& registry, CostLedger* ledger,
                         const ExtractOptions& options) {
    auto t0 = std::chrono::steady_clock::now();
    ExtractionReport report;
    report.query = plan.query;

    struct Job {
        Clip* clip;
        const ClipModel* model;
    };
    std::vector<Job> jobs;
    std::set<std::pair<std::string, std::string>> queued;
    for (const auto& e : plan.models_to_run) {
        Clip* clip = corpus.find_clip(e.clip_id);
        if (!clip) throw Error(ErrorCode::kNotFound, "plan names unknown clip '" + e.clip_id + "'");
        const ClipModel& model = registry.clip_model(e.model_id);
        if (clip->extracted_by(e.model_id) || !queued.emplace(e.clip_id, e.model_id).second) {
            ++report.skipped;
            continue;
        }
        jobs.push_back({clip, &model});
    }

    std::vector<Outcome> outcomes(jobs.size());
    const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel && n > 1)
    for (std::int64_t i = 0; i < n; ++i) {
        auto& job = jobs[static_cast<std::size_t>(i)];
        try {
            outcomes[static_cast<std::size_t>(i)].output = job.model->run(*job.clip);
        } catch (const std::exception& ex) {
            outcomes[static_cast<std::size_t>(i)].error = ex.what();
        } catch (...) {
            outcomes[static_cast<std::size_t>(i)].error = "unknown provider failure";
        }
    }

    std::set<std::string> touched;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& job = jobs[i];
        const auto& d = job.model->descriptor();
        auto& out = outcomes[i];
        if (!out.output) {
            report.failures.push_back({job.clip->clip_id, d.model_id, out.error});
            continue;
        }
        Chunk chunk;
        chunk.chunk_id = make_chunk_id(job.clip->clip_id, d.model_id);
        chunk.clip_id = job.clip->clip_id;
        chunk.text = out.output->text;
        chunk.source_model_id = d.model_id;
        chunk.level = d.weight_class == WeightClass::kHeavyweight ? ChunkLevel::kDetailed : ChunkLevel::kIndex;
        chunk.embedding = embedder.embed(chunk.text);
        try {
            report.chunks_added += text_db.upsert(std::span<const Chunk>(&chunk, 1));
        } catch (const Error& ex) {
            report.failures.push_back({job.clip->clip_id, d.model_id, ex.what()});
            continue;
        }
        std::int64_t cost = d.per_frame_cost * static_cast<std::int64_t>(job.clip->frames.size());
        if (ledger) ledger->charge(d.role, cost);
        report.simulated_cost += cost;
        job.clip->mark_extracted(d.model_id);
        report.executed.push_back({job.clip->clip_id, d.model_id});
        if (touched.insert(job.clip->clip_id).second) report.clips_touched.push_back(job.clip->clip_id);
    }
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double fraction_extracted(const CorpusManifest& corpus, const ModelRegistry& registry, std::string_view model_id) {
    if (!registry.contains(model_id)) {
        throw Error(ErrorCode::kUnknownModel, "no model '" + std::string(model_id) + "'");
    }
    if (corpus.clips.empty()) return 0.0;
    std::size_t done = 0;
    for (const auto& c : corpus.clips) done += c.extracted_by(model_id) ? 1 : 0;
    return static_cast<double>(done) / static_cast<double>(corpus.clips.size());
}

}  // namespace incrag
