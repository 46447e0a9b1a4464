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

#include "incrag/models_http.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "incrag/error.hpp"

namespace incrag {

using nlohmann::json;

HttpEndpoint endpoint_from_json(const json& j) {
    HttpEndpoint e;
    try {
        e.base_url = j.at("base_url").get<std::string>();
        e.path = j.at("path").get<std::string>();
        e.timeout_ms = j.value("timeout_ms", e.timeout_ms);
        e.retries = j.value("retries", e.retries);
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::kParse, std::string("endpoint config: ") + ex.what());
    }
    if (e.timeout_ms <= 0 || e.retries < 0) throw Error(ErrorCode::kInvalidArgument, "endpoint timeout/retries out of range");
    return e;
}

json post_json(const HttpEndpoint& endpoint, const json& body) {
    httplib::Client cli(endpoint.base_url);
    auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    const std::string payload = body.dump();

    std::string last;
    for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
        auto res = cli.Post(endpoint.path, payload, "application/json");
        if (!res) {
            last = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorCode::kProvider, endpoint.base_url + endpoint.path + ": HTTP " +
                                                  std::to_string(res->status) + " " + res->body);
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::kProvider, endpoint.base_url + endpoint.path + ": reply is not JSON");
        }
    }
    throw Error(ErrorCode::kProvider, endpoint.base_url + endpoint.path + ": " + last + " after " +
                                          std::to_string(endpoint.retries + 1) + " attempts");
}

namespace {

std::string reply_text(const json& reply, const HttpEndpoint& endpoint) {
    auto it = reply.find("text");
    if (it == reply.end() || !it->is_string()) {
        throw Error(ErrorCode::kProvider, endpoint.base_url + endpoint.path + ": reply lacks a 'text' string");
    }
    return it->get<std::string>();
}

}  // namespace

HttpClipModel::HttpClipModel(ModelDescriptor descriptor, HttpEndpoint endpoint)
    : descriptor_(std::move(descriptor)), endpoint_(std::move(endpoint)) {
    descriptor_.validate();
}

ModelOutput HttpClipModel::run(const Clip& clip) const {
    json body{{"model_id", descriptor_.model_id}, {"role", to_string(descriptor_.role)}, {"clip", clip_to_json(clip)}};
    return ModelOutput{clip.clip_id, descriptor_.model_id, reply_text(post_json(endpoint_, body), endpoint_),
                       clip.frames.size()};
}

HttpFrameEmbedder::HttpFrameEmbedder(ModelDescriptor descriptor, HttpEndpoint endpoint, std::size_t dimension)
    : descriptor_(std::move(descriptor)), endpoint_(std::move(endpoint)), dimension_(dimension) {
    descriptor_.validate();
    if (dimension_ == 0) throw Error(ErrorCode::kInvalidArgument, "frame embedder dimension must be positive");
}

Vector HttpFrameEmbedder::embed(const Frame& frame) const {
    Clip holder;
    holder.frames.push_back(frame);
    json body{{"model_id", descriptor_.model_id}, {"frame", clip_to_json(holder)["frames"][0]}};
    auto reply = post_json(endpoint_, body);
    Vector v;
    try {
        v = reply.at("vector").get<Vector>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::kProvider, endpoint_.base_url + endpoint_.path + ": reply lacks a numeric 'vector'");
    }
    if (v.size() != dimension_) {
        throw Error(ErrorCode::kDimensionMismatch, "remote frame vector has dimension " + std::to_string(v.size()) +
                                                       ", expected " + std::to_string(dimension_));
    }
    double n = l2_norm(v);
    if (!std::isfinite(n)) throw Error(ErrorCode::kProvider, "remote frame vector is not finite");
    // A frame with nothing to describe embeds to zero, as the local embedder does.
    if (n > 0.0) {
        for (auto& x : v) x /= n;
    }
    return v;
}

HttpLanguageModel::HttpLanguageModel(ModelDescriptor descriptor, HttpEndpoint endpoint)
    : descriptor_(std::move(descriptor)), endpoint_(std::move(endpoint)) {
    descriptor_.validate();
}

std::string HttpLanguageModel::complete(std::string_view prompt) const {
    return reply_text(post_json(endpoint_, json{{"model_id", descriptor_.model_id}, {"prompt", prompt}}), endpoint_);
}

}  // namespace incrag
