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

#include "incrag/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "incrag/error.hpp"

namespace incrag {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw Error(ErrorCode::kParse, "config: '" + std::string(where) + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw Error(ErrorCode::kParse, "config: unknown key '" + key + "' in '" + std::string(where) + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::kParse, "config: bad value for '" + std::string(where) + "." + key + "'");
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_absolute() || base.empty() ? p : (base / p).lexically_normal();
}

ContextRanking parse_ranking(const std::string& s) {
    if (s == "shadow_index") return ContextRanking::kShadowIndex;
    if (s == "all_chunks") return ContextRanking::kAllChunks;
    if (s == "clip_best") return ContextRanking::kClipBest;
    throw Error(ErrorCode::kParse, "config: unknown ranking '" + s + "'");
}

std::string ranking_name(ContextRanking r) {
    switch (r) {
        case ContextRanking::kAllChunks: return "all_chunks";
        case ContextRanking::kClipBest: return "clip_best";
        case ContextRanking::kShadowIndex: break;
    }
    return "shadow_index";
}

void read_engine(const json& j, EngineConfig& e) {
    check_keys(j, "engine", {"max_iterations", "k", "top_n", "top_f", "frames_per_clip", "ranking", "filtering",
                             "fallback_unfiltered", "knn_neighbors", "knn_accept_threshold", "retrieval_cost",
                             "parallel_extraction", "preprocess_batch", "embedding"});
    read(j, "max_iterations", e.max_iterations, "engine");
    read(j, "k", e.planner.k, "engine");
    read(j, "top_n", e.planner.top_n, "engine");
    read(j, "top_f", e.planner.top_f, "engine");
    read(j, "frames_per_clip", e.planner.frames_per_clip, "engine");
    read(j, "filtering", e.planner.filtering_enabled, "engine");
    read(j, "fallback_unfiltered", e.planner.fallback_unfiltered, "engine");
    read(j, "knn_neighbors", e.planner.knn_neighbors, "engine");
    read(j, "knn_accept_threshold", e.planner.knn_accept_threshold, "engine");
    read(j, "retrieval_cost", e.retrieval_cost, "engine");
    read(j, "parallel_extraction", e.parallel_extraction, "engine");
    read(j, "preprocess_batch", e.preprocess_batch, "engine");
    if (auto it = j.find("ranking"); it != j.end()) e.planner.ranking = parse_ranking(it->get<std::string>());
    if (auto it = j.find("embedding"); it != j.end()) {
        check_keys(*it, "engine.embedding", {"dimension", "seed", "stopwords"});
        read(*it, "dimension", e.embedding.dimension, "engine.embedding");
        read(*it, "seed", e.embedding.seed, "engine.embedding");
        read(*it, "stopwords", e.embedding.stopwords, "engine.embedding");
    }
}

}  // namespace

AppConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, "config", {"manifest", "synthetic", "engine", "costs", "providers", "service", "eval", "data_dir",
                             "results_dir"});
    AppConfig c;
    if (auto it = j.find("manifest"); it != j.end()) c.manifest = resolve(it->get<std::string>(), base_dir);
    if (auto it = j.find("data_dir"); it != j.end()) c.data_dir = resolve(it->get<std::string>(), base_dir);
    if (auto it = j.find("results_dir"); it != j.end()) c.results_dir = resolve(it->get<std::string>(), base_dir);

    if (auto it = j.find("synthetic"); it != j.end()) {
        const json& s = *it;
        check_keys(s, "synthetic", {"seed", "clips", "clip_duration", "keyframe_rate", "max_objects_per_clip",
                                    "label_probability", "visibility"});
        read(s, "seed", c.synthetic.seed, "synthetic");
        read(s, "clips", c.synthetic.clips, "synthetic");
        read(s, "clip_duration", c.synthetic.options.clip_duration, "synthetic");
        read(s, "keyframe_rate", c.synthetic.options.keyframe_rate, "synthetic");
        read(s, "max_objects_per_clip", c.synthetic.options.max_objects_per_clip, "synthetic");
        read(s, "label_probability", c.synthetic.options.label_probability, "synthetic");
        read(s, "visibility", c.synthetic.options.visibility, "synthetic");
    }
    if (auto it = j.find("engine"); it != j.end()) read_engine(*it, c.engine);
    if (auto it = j.find("costs"); it != j.end()) {
        check_keys(*it, "costs", {"detector", "captioner", "frame_embedder", "llm"});
        read(*it, "detector", c.costs.detector, "costs");
        read(*it, "captioner", c.costs.captioner, "costs");
        read(*it, "frame_embedder", c.costs.frame_embedder, "costs");
        read(*it, "llm", c.costs.llm, "costs");
    }
    if (auto it = j.find("providers"); it != j.end()) {
        check_keys(*it, "providers", {"mode", "detector", "captioner", "frame_embedder", "llm"});
        std::string mode = it->value("mode", std::string("synthetic"));
        if (mode != "synthetic" && mode != "http") throw Error(ErrorCode::kParse, "config: providers.mode must be synthetic or http");
        c.providers.http = mode == "http";
        for (const char* role : {"detector", "captioner", "frame_embedder", "llm"}) {
            if (auto e = it->find(role); e != it->end()) c.providers.endpoints[role] = endpoint_from_json(*e);
        }
        if (c.providers.http && c.providers.endpoints.size() != 4) {
            throw Error(ErrorCode::kParse, "config: http providers need detector, captioner, frame_embedder and llm endpoints");
        }
    }
    if (auto it = j.find("service"); it != j.end()) {
        check_keys(*it, "service", {"host", "port", "threads", "query_timeout_ms"});
        read(*it, "host", c.service.host, "service");
        read(*it, "port", c.service.port, "service");
        read(*it, "threads", c.service.threads, "service");
        read(*it, "query_timeout_ms", c.service.query_timeout_ms, "service");
    }
    if (auto it = j.find("eval"); it != j.end()) {
        const json& e = *it;
        check_keys(e, "eval", {"queries", "query_seed", "pool", "stream_length", "stream_seed", "recall_k",
                               "fraction_k", "latency_k", "heavyweight_model", "filtering"});
        read(e, "queries", c.eval.queries, "eval");
        read(e, "query_seed", c.eval.query_seed, "eval");
        read(e, "pool", c.eval.pool, "eval");
        read(e, "stream_length", c.eval.stream_length, "eval");
        read(e, "stream_seed", c.eval.stream_seed, "eval");
        read(e, "recall_k", c.eval.recall_k, "eval");
        read(e, "fraction_k", c.eval.fraction_k, "eval");
        read(e, "latency_k", c.eval.latency_k, "eval");
        read(e, "heavyweight_model", c.eval.heavyweight_model, "eval");
        if (auto f = e.find("filtering"); f != e.end()) {
            check_keys(*f, "eval.filtering", {"train_seed", "eval_seed", "clips_per_pair", "label_k", "k_grid"});
            read(*f, "train_seed", c.eval.filtering.train_seed, "eval.filtering");
            read(*f, "eval_seed", c.eval.filtering.eval_seed, "eval.filtering");
            read(*f, "clips_per_pair", c.eval.filtering.clips_per_pair, "eval.filtering");
            read(*f, "label_k", c.eval.filtering.label_k, "eval.filtering");
            read(*f, "k_grid", c.eval.filtering.k_grid, "eval.filtering");
        }
    }
    c.engine.validate();
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kParse, "config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

json to_json(const AppConfig& c) {
    const auto& p = c.engine.planner;
    json j{
        {"synthetic",
         {{"seed", c.synthetic.seed},
          {"clips", c.synthetic.clips},
          {"clip_duration", c.synthetic.options.clip_duration},
          {"keyframe_rate", c.synthetic.options.keyframe_rate},
          {"max_objects_per_clip", c.synthetic.options.max_objects_per_clip},
          {"label_probability", c.synthetic.options.label_probability},
          {"visibility", c.synthetic.options.visibility}}},
        {"engine",
         {{"max_iterations", c.engine.max_iterations},
          {"k", p.k},
          {"top_n", p.top_n},
          {"top_f", p.top_f},
          {"frames_per_clip", p.frames_per_clip},
          {"ranking", ranking_name(p.ranking)},
          {"filtering", p.filtering_enabled},
          {"fallback_unfiltered", p.fallback_unfiltered},
          {"knn_neighbors", p.knn_neighbors},
          {"knn_accept_threshold", p.knn_accept_threshold},
          {"retrieval_cost", c.engine.retrieval_cost},
          {"parallel_extraction", c.engine.parallel_extraction},
          {"preprocess_batch", c.engine.preprocess_batch},
          {"embedding",
           {{"dimension", c.engine.embedding.dimension},
            {"seed", c.engine.embedding.seed},
            {"stopwords", c.engine.embedding.stopwords}}}}},
        {"costs",
         {{"detector", c.costs.detector},
          {"captioner", c.costs.captioner},
          {"frame_embedder", c.costs.frame_embedder},
          {"llm", c.costs.llm}}},
        {"service",
         {{"host", c.service.host},
          {"port", c.service.port},
          {"threads", c.service.threads},
          {"query_timeout_ms", c.service.query_timeout_ms}}},
        {"eval",
         {{"queries", c.eval.queries},
          {"query_seed", c.eval.query_seed},
          {"pool", c.eval.pool},
          {"stream_length", c.eval.stream_length},
          {"stream_seed", c.eval.stream_seed},
          {"recall_k", c.eval.recall_k},
          {"fraction_k", c.eval.fraction_k},
          {"latency_k", c.eval.latency_k},
          {"heavyweight_model", c.eval.heavyweight_model},
          {"filtering",
           {{"train_seed", c.eval.filtering.train_seed},
            {"eval_seed", c.eval.filtering.eval_seed},
            {"clips_per_pair", c.eval.filtering.clips_per_pair},
            {"label_k", c.eval.filtering.label_k},
            {"k_grid", c.eval.filtering.k_grid}}}}},
        {"data_dir", c.data_dir.string()},
        {"results_dir", c.results_dir.string()},
    };
    json prov{{"mode", c.providers.http ? "http" : "synthetic"}};
    for (const auto& [role, e] : c.providers.endpoints) {
        prov[role] = {{"base_url", e.base_url}, {"path", e.path}, {"timeout_ms", e.timeout_ms}, {"retries", e.retries}};
    }
    j["providers"] = std::move(prov);
    if (c.manifest) j["manifest"] = c.manifest->string();
    return j;
}

CorpusManifest load_corpus(const AppConfig& config) {
    if (config.manifest) return load_manifest(*config.manifest);
    return gen_synthetic(config.synthetic.seed, config.synthetic.clips, Vocabulary::street_scene(),
                         config.synthetic.options);
}

std::shared_ptr<const ModelRegistry> make_registry(const AppConfig& config, const Vocabulary& vocab) {
    if (!config.providers.http) {
        return std::make_shared<ModelRegistry>(make_synthetic_registry(vocab, config.engine.embedding, config.costs));
    }
    const auto& ep = config.providers.endpoints;
    auto reg = std::make_shared<ModelRegistry>();
    auto det = SyntheticDetector::default_descriptor();
    det.per_frame_cost = config.costs.detector;
    auto cap = SyntheticCaptioner::default_descriptor();
    cap.per_frame_cost = config.costs.captioner;
    auto emb = SyntheticFrameEmbedder::default_descriptor();
    emb.per_frame_cost = config.costs.frame_embedder;
    auto llm = SyntheticLlm::default_descriptor();
    llm.per_frame_cost = config.costs.llm;
    reg->add(std::make_shared<HttpClipModel>(det, ep.at("detector")));
    reg->add(std::make_shared<HttpClipModel>(cap, ep.at("captioner")));
    reg->set_frame_embedder(std::make_shared<HttpFrameEmbedder>(emb, ep.at("frame_embedder"), config.engine.embedding.dimension));
    reg->set_llm(std::make_shared<HttpLanguageModel>(llm, ep.at("llm")));
    return reg;
}

}  // namespace incrag
