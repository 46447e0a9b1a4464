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

#include "incrag/embedding.hpp"

#include <cmath>

#include "incrag/error.hpp"

namespace incrag {

namespace {

bool is_token_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace

const std::vector<std::string>& default_stopwords() {
    static const std::vector<std::string> words = {"a",  "an",  "color",   "is",    "of",   "objects",
                                                   "the", "text", "there", "what", "with"};
    return words;
}

void EmbeddingConfig::validate() const {
    if (dimension < 8) {
        throw Error(ErrorCode::kInvalidArgument,
                    "embedding dimension must be >= 8, got " + std::to_string(dimension));
    }
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_char(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

TextEmbedder::TextEmbedder(EmbeddingConfig config) : config_(std::move(config)) {
    config_.validate();
    for (const auto& w : config_.stopwords) {
        for (auto& t : tokenize(w)) stopwords_.insert(std::move(t));
    }
}

bool TextEmbedder::is_stopword(std::string_view token) const { return stopwords_.count(std::string(token)) != 0; }

TokenBucket TextEmbedder::bucket(std::string_view token) const {
    // FNV-1a over the token bytes, offset basis perturbed by the seed.
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(config_.seed);
    for (char ch : token) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    h = mix64(h);
    return {static_cast<std::size_t>(h % config_.dimension), ((h >> 63) & 1U) ? -1.0 : 1.0};
}

TextEmbedding TextEmbedder::embed_flagged(std::string_view text) const {
    TextEmbedding out;
    out.values.assign(config_.dimension, 0.0);
    auto tokens = tokenize(text);
    std::erase_if(tokens, [&](const std::string& t) { return is_stopword(t); });
    if (tokens.empty()) {
        out.no_tokens = true;
        return out;
    }
    for (const auto& token : tokens) {
        auto b = bucket(token);
        out.values[b.index] += b.sign;
    }
    double norm = l2_norm(out.values);
    if (norm == 0.0) {
        // Every contribution cancelled through signed collisions.
        out.no_tokens = true;
        return out;
    }
    for (auto& v : out.values) v /= norm;
    return out;
}

double similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "similarity: dimension " + std::to_string(a.size()) +
                                                       " vs " + std::to_string(b.size()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

Vector concat_features(std::span<const double> query_vec, std::span<const double> chunk_vec) {
    if (query_vec.size() != chunk_vec.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "concat_features: dimension " +
                                                       std::to_string(query_vec.size()) + " vs " +
                                                       std::to_string(chunk_vec.size()));
    }
    Vector out;
    out.reserve(query_vec.size() * 2);
    out.insert(out.end(), query_vec.begin(), query_vec.end());
    out.insert(out.end(), chunk_vec.begin(), chunk_vec.end());
    return out;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace incrag
