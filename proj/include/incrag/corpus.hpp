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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace incrag {

struct ObjectFact {
    std::string object_class;
    std::optional<std::string> color;
    std::optional<std::string> text_label;

    bool operator==(const ObjectFact&) const = default;
};

struct GroundTruth {
    std::vector<ObjectFact> objects;
    std::string caption;

    bool operator==(const GroundTruth&) const = default;
};

struct Frame {
    std::string frame_id;
    double timestamp = 0.0;
    std::optional<GroundTruth> facts;

    bool operator==(const Frame&) const = default;
};

struct Clip {
    std::string clip_id;
    double start = 0.0;
    double end = 0.0;
    std::vector<Frame> frames;
    // Model ids that already ran on this clip. Only ever grows.
    std::set<std::string> extraction_state;
    std::optional<std::string> thumbnail_url;

    bool extracted_by(std::string_view model_id) const;
    void mark_extracted(const std::string& model_id) { extraction_state.insert(model_id); }

    bool operator==(const Clip&) const = default;
};

struct CorpusManifest {
    std::string corpus_id;
    double keyframe_rate = 1.0;
    std::vector<Clip> clips;

    /// Checks every invariant; throws kInvariant naming the offending clip.
    void validate() const;

    std::size_t total_keyframes() const;
    const Clip* find_clip(std::string_view clip_id) const;
    Clip* find_clip(std::string_view clip_id);

    bool operator==(const CorpusManifest&) const = default;
};

/// Clip id -> position, rebuilt whenever the clip list changes.
class ClipIndex {
public:
    ClipIndex() = default;
    explicit ClipIndex(const CorpusManifest& manifest);

    std::optional<std::size_t> position(std::string_view clip_id) const;

private:
    std::unordered_map<std::string, std::size_t> positions_;
};

// ---------------------------------------------------------------------------
// Manifest file format: UTF-8 JSON lines. Line 1 is the corpus header, every
// further line is one clip. Field names are fixed; unknown fields are
// rejected. See docs/formats.md.

CorpusManifest parse_manifest(std::istream& in);
/// One clip record; `line_no` only feeds error messages.
Clip clip_from_json(const nlohmann::json& j, std::size_t line_no = 0);
nlohmann::json clip_to_json(const Clip& clip);
CorpusManifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const CorpusManifest& manifest);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

// ---------------------------------------------------------------------------
// Synthetic world.

struct Vocabulary {
    std::vector<std::string> objects;
    std::vector<std::string> colors;
    std::vector<std::string> text_labels;
    // Colorless scene objects, used by the signature generator.
    std::vector<std::string> companions;

    void validate() const;
    static Vocabulary street_scene();
};

/// Template words used by queries and model outputs; they share the hash
/// space with the vocabulary.
const std::vector<std::string>& template_words();

/// "a <color> <object_class>[ with text '<label>']"
std::string describe_object(const ObjectFact& fact);

/// describe_object over the objects, joined with ", ".
std::string compose_caption(const std::vector<ObjectFact>& objects);

struct SyntheticOptions {
    double clip_duration = 5.0;
    double keyframe_rate = 1.0;
    std::size_t max_objects_per_clip = 3;
    double label_probability = 0.2;
    // Chance that an object shows in a given keyframe; each object shows in
    // at least one keyframe of its clip.
    double visibility = 0.6;
};

/// Deterministic in (seed, n_clips, vocab, options). The first object of clip
/// i walks a seeded permutation of all (object, color) pairs, so every pair
/// occurs once n_clips >= |objects| * |colors|.
CorpusManifest gen_synthetic(std::uint64_t seed, std::size_t n_clips, const Vocabulary& vocab,
                             const SyntheticOptions& options = {});

/// Constructed world for classifier experiments: each clip holds one colored
/// object plus the colorless companion tied to that color, so the
/// detector-only description reveals the color indirectly.
CorpusManifest gen_signature_corpus(std::uint64_t seed, std::size_t clips_per_pair,
                                    const Vocabulary& vocab);

/// Adapter hook for externally decoded media: groups timestamped frames into
/// fixed-duration clips.
struct ExternalFrame {
    std::string frame_id;
    double timestamp = 0.0;
    std::optional<GroundTruth> facts;
};

CorpusManifest build_manifest(const std::string& corpus_id, std::vector<ExternalFrame> frames,
                              double clip_duration, double keyframe_rate);

}  // namespace incrag
