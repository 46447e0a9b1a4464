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
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace incrag {

using Vector = std::vector<double>;

// Chosen so the default synthetic vocabulary plus the query template words
// land in pairwise distinct buckets at dimension 64 (see
// tools/hash_seed_search.cpp and tests/test_embedding.cpp).
inline constexpr std::uint64_t kDefaultHashSeed = 0xdbda43ULL;

/// Function words of the query and caption templates. They occur in most
/// detailed captions and in no index chunk, so hashing them would rank chunks
/// by phrasing rather than content.
const std::vector<std::string>& default_stopwords();

struct EmbeddingConfig {
    std::size_t dimension = 64;
    std::uint64_t seed = kDefaultHashSeed;
    // Tokens dropped before hashing; compared after lowercasing.
    std::vector<std::string> stopwords = default_stopwords();

    void validate() const;
};

/// Lowercased runs of ASCII alphanumerics. Bytes >= 0x80 count as token
/// characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct TokenBucket {
    std::size_t index;
    double sign;
};

struct TextEmbedding {
    Vector values;
    bool no_tokens = false;
};

/// Signed feature-hashing bag-of-tokens embedder. Query vectors and chunk
/// vectors must come from the same instance configuration.
class TextEmbedder {
public:
    explicit TextEmbedder(EmbeddingConfig config = {});

    std::size_t dimension() const noexcept { return config_.dimension; }
    const EmbeddingConfig& config() const noexcept { return config_; }

    TokenBucket bucket(std::string_view token) const;
    bool is_stopword(std::string_view token) const;

    /// Unit L2 norm, or the zero vector (flagged) when the text has no tokens
    /// left after stopword removal.
    TextEmbedding embed_flagged(std::string_view text) const;
    Vector embed(std::string_view text) const { return embed_flagged(text).values; }

private:
    EmbeddingConfig config_;
    std::unordered_set<std::string> stopwords_;
};

/// Dot product. Throws kDimensionMismatch on unequal lengths.
double similarity(std::span<const double> a, std::span<const double> b);

/// [query | chunk], no renormalization.
Vector concat_features(std::span<const double> query_vec, std::span<const double> chunk_vec);

double l2_norm(std::span<const double> v);

}  // namespace incrag
