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

#include <memory>
#include <string>

#include "json.hpp"

#include "incrag/models.hpp"

namespace incrag {

/// Remote provider endpoint. One POST route per role; see docs/formats.md for
/// the bodies.
struct HttpEndpoint {
    std::string base_url;  // "http://host:port"
    std::string path;      // "/detect", "/caption", "/embed", "/complete"
    int timeout_ms = 30000;
    int retries = 2;       // extra attempts after a transport failure or 5xx
};

HttpEndpoint endpoint_from_json(const nlohmann::json& j);

/// Detector or captioner behind HTTP. Request {"model_id", "role", "clip":
/// <clip record>}, response {"text": string}.
class HttpClipModel final : public ClipModel {
public:
    HttpClipModel(ModelDescriptor descriptor, HttpEndpoint endpoint);

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    ModelOutput run(const Clip& clip) const override;

private:
    ModelDescriptor descriptor_;
    HttpEndpoint endpoint_;
};

/// Request {"model_id", "frame": {"frame_id", "timestamp", "facts"?}},
/// response {"vector": [...]}.
/// Nonzero vectors are L2-normalized on arrival.
class HttpFrameEmbedder final : public FrameEmbedderModel {
public:
    HttpFrameEmbedder(ModelDescriptor descriptor, HttpEndpoint endpoint, std::size_t dimension);

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    std::size_t dimension() const override { return dimension_; }
    Vector embed(const Frame& frame) const override;

private:
    ModelDescriptor descriptor_;
    HttpEndpoint endpoint_;
    std::size_t dimension_;
};

/// Request {"model_id", "prompt"}, response {"text": string}. The reply is
/// returned untouched, so the sentinel passes through byte for byte.
class HttpLanguageModel final : public LanguageModel {
public:
    HttpLanguageModel(ModelDescriptor descriptor, HttpEndpoint endpoint);

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    std::string complete(std::string_view prompt) const override;

private:
    ModelDescriptor descriptor_;
    HttpEndpoint endpoint_;
};

/// POSTs `body` and returns the parsed JSON reply. Transport failures and 5xx
/// replies are retried; anything still failing throws kProvider.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body);

}  // namespace incrag
