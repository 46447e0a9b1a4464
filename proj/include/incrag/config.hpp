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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "incrag/corpus.hpp"
#include "incrag/models.hpp"
#include "incrag/models_http.hpp"
#include "incrag/queryengine.hpp"

namespace incrag {

struct SyntheticCorpusConfig {
    std::uint64_t seed = 7;
    std::size_t clips = 200;
    SyntheticOptions options;
};

struct ProvidersConfig {
    bool http = false;
    // Keyed by role name ("detector", "captioner", "frame_embedder", "llm").
    std::map<std::string, HttpEndpoint> endpoints;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    int threads = 8;
    int query_timeout_ms = 60000;
};

struct FilteringEvalConfig {
    std::uint64_t train_seed = 101;
    std::uint64_t eval_seed = 202;
    std::size_t clips_per_pair = 3;
    std::size_t label_k = 3;
    std::vector<std::size_t> k_grid{10, 20, 30, 40, 50};
};

struct EvalConfig {
    std::size_t queries = 100;
    std::uint64_t query_seed = 11;
    std::size_t pool = 1000;
    std::size_t stream_length = 200;
    std::uint64_t stream_seed = 5;
    std::vector<std::size_t> recall_k{1, 2, 4, 8, 20};
    std::vector<std::size_t> fraction_k{2, 4, 6, 8, 10, 20};
    std::vector<std::size_t> latency_k{2, 4};
    std::string heavyweight_model = "captioner";
    FilteringEvalConfig filtering;
};

/// Everything the CLI and the service read from one JSON file. Every section
/// is optional; absent keys keep the defaults above. Unknown keys are errors.
struct AppConfig {
    std::optional<std::filesystem::path> manifest;  // takes precedence over `synthetic`
    SyntheticCorpusConfig synthetic;
    EngineConfig engine;
    CostConfig costs;
    ProvidersConfig providers;
    ServiceConfig service;
    EvalConfig eval;
    std::filesystem::path data_dir = "data";
    std::filesystem::path results_dir = "results";
};

/// Relative paths inside the file resolve against the file's directory.
AppConfig load_config(const std::filesystem::path& path);
AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const AppConfig& config);

/// The configured manifest, or the synthetic corpus it describes.
CorpusManifest load_corpus(const AppConfig& config);

/// Synthetic providers, or HTTP adapters for every role when configured.
std::shared_ptr<const ModelRegistry> make_registry(const AppConfig& config, const Vocabulary& vocab);

}  // namespace incrag
