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

// Finds the smallest hash seed under which every vocabulary token and
// template word occupies its own bucket. Collision-free buckets make every
// similarity in the synthetic world an exact token-overlap cosine.

#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"

int main(int argc, char** argv) {
    CLI::App app{"search for a collision-free embedding hash seed"};
    std::size_t dimension = 64;
    std::uint64_t start = 1;
    std::uint64_t limit = 50'000'000;
    app.add_option("--dimension", dimension, "embedding dimension");
    app.add_option("--start", start, "first seed to try");
    app.add_option("--limit", limit, "number of seeds to try");
    CLI11_PARSE(app, argc, argv);

    auto vocab = incrag::Vocabulary::street_scene();
    std::set<std::string> words;
    const std::vector<const std::vector<std::string>*> lists = {
        &vocab.objects, &vocab.colors, &vocab.text_labels, &vocab.companions, &incrag::template_words()};
    for (const auto* list : lists) {
        for (const auto& w : *list) {
            for (const auto& t : incrag::tokenize(w)) words.insert(t);
        }
    }
    std::cout << words.size() << " distinct tokens, dimension " << dimension << "\n";

    for (std::uint64_t seed = start; seed < start + limit; ++seed) {
        incrag::TextEmbedder embedder({dimension, seed});
        std::vector<bool> taken(dimension, false);
        bool ok = true;
        for (const auto& w : words) {
            auto b = embedder.bucket(w).index;
            if (taken[b]) {
                ok = false;
                break;
            }
            taken[b] = true;
        }
        if (ok) {
            std::cout << "seed " << seed << " (0x" << std::hex << seed << std::dec << ")\n";
            return 0;
        }
    }
    std::cerr << "no collision-free seed in range\n";
    return 1;
}
