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

#include "incrag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "incrag/embedding.hpp"
#include "incrag/error.hpp"
#include "rng.hpp"

namespace incrag {

using nlohmann::json;

bool Clip::extracted_by(std::string_view model_id) const {
    return extraction_state.find(std::string(model_id)) != extraction_state.end();
}

namespace {

[[noreturn]] void invariant(const std::string& clip_id, const std::string& what) {
    throw Error(ErrorCode::kInvariant, "clip '" + clip_id + "': " + what);
}

void check_ground_truth(const std::string& clip_id, const Frame& frame) {
    if (!frame.facts) return;
    auto tokens = tokenize(frame.facts->caption);
    std::unordered_set<std::string> present(tokens.begin(), tokens.end());
    auto require = [&](const std::string& value, const char* field) {
        for (const auto& t : tokenize(value)) {
            if (!present.count(t)) {
                invariant(clip_id, "frame '" + frame.frame_id + "' caption does not mention " + field +
                                       " '" + value + "'");
            }
        }
    };
    for (const auto& obj : frame.facts->objects) {
        if (obj.object_class.empty()) {
            invariant(clip_id, "frame '" + frame.frame_id + "' has an object without a class");
        }
        require(obj.object_class, "object_class");
        if (obj.color) require(*obj.color, "color");
        if (obj.text_label) require(*obj.text_label, "text_label");
    }
}

}  // namespace

void CorpusManifest::validate() const {
    if (corpus_id.empty()) throw Error(ErrorCode::kInvariant, "corpus_id is empty");
    if (!(keyframe_rate > 0.0)) throw Error(ErrorCode::kInvariant, "keyframe_rate must be positive");
    std::unordered_set<std::string> clip_ids;
    std::unordered_set<std::string> frame_ids;
    const Clip* previous = nullptr;
    for (const auto& clip : clips) {
        if (clip.clip_id.empty()) throw Error(ErrorCode::kInvariant, "clip with empty clip_id");
        if (!clip_ids.insert(clip.clip_id).second) invariant(clip.clip_id, "duplicate clip id");
        if (!(clip.start < clip.end)) invariant(clip.clip_id, "start must be < end");
        if (previous && clip.start < previous->end) {
            invariant(clip.clip_id, "overlaps or precedes clip '" + previous->clip_id + "'");
        }
        if (clip.frames.empty()) invariant(clip.clip_id, "clip has no keyframes");
        double last_ts = -INFINITY;
        for (const auto& frame : clip.frames) {
            if (frame.frame_id.empty()) invariant(clip.clip_id, "frame with empty frame_id");
            if (!frame_ids.insert(frame.frame_id).second) {
                invariant(clip.clip_id, "duplicate frame id '" + frame.frame_id + "'");
            }
            if (frame.timestamp < clip.start || frame.timestamp >= clip.end) {
                invariant(clip.clip_id, "frame '" + frame.frame_id + "' lies outside the clip time range");
            }
            if (frame.timestamp < last_ts) invariant(clip.clip_id, "frames are not in timestamp order");
            last_ts = frame.timestamp;
            check_ground_truth(clip.clip_id, frame);
        }
        previous = &clip;
    }
}

std::size_t CorpusManifest::total_keyframes() const {
    std::size_t n = 0;
    for (const auto& clip : clips) n += clip.frames.size();
    return n;
}

const Clip* CorpusManifest::find_clip(std::string_view clip_id) const {
    auto it = std::find_if(clips.begin(), clips.end(), [&](const Clip& c) { return c.clip_id == clip_id; });
    return it == clips.end() ? nullptr : &*it;
}

Clip* CorpusManifest::find_clip(std::string_view clip_id) {
    auto it = std::find_if(clips.begin(), clips.end(), [&](const Clip& c) { return c.clip_id == clip_id; });
    return it == clips.end() ? nullptr : &*it;
}

ClipIndex::ClipIndex(const CorpusManifest& manifest) {
    positions_.reserve(manifest.clips.size());
    for (std::size_t i = 0; i < manifest.clips.size(); ++i) positions_.emplace(manifest.clips[i].clip_id, i);
}

std::optional<std::size_t> ClipIndex::position(std::string_view clip_id) const {
    auto it = positions_.find(std::string(clip_id));
    if (it == positions_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// JSON lines codec

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::kParse, where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool known = std::find(allowed.begin(), allowed.end(), item.key()) != allowed.end();
        if (!known) throw Error(ErrorCode::kParse, where + ": unknown field '" + item.key() + "'");
    }
}

template <typename T>
T require_field(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::kParse, where + ": missing field '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::kParse, where + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::kParse, where + ": field '" + key + "' has the wrong type");
    }
}

GroundTruth facts_from_json(const json& j, const std::string& where) {
    reject_unknown(j, {"objects", "caption"}, where);
    GroundTruth gt;
    gt.caption = require_field<std::string>(j, "caption", where);
    auto objects = j.find("objects");
    if (objects == j.end() || !objects->is_array()) {
        throw Error(ErrorCode::kParse, where + ": 'objects' must be an array");
    }
    for (const auto& o : *objects) {
        reject_unknown(o, {"class", "color", "text"}, where + " object");
        ObjectFact fact;
        fact.object_class = require_field<std::string>(o, "class", where);
        fact.color = optional_field<std::string>(o, "color", where);
        fact.text_label = optional_field<std::string>(o, "text", where);
        gt.objects.push_back(std::move(fact));
    }
    return gt;
}

json facts_to_json(const GroundTruth& gt) {
    json objects = json::array();
    for (const auto& o : gt.objects) {
        json obj{{"class", o.object_class}};
        if (o.color) obj["color"] = *o.color;
        if (o.text_label) obj["text"] = *o.text_label;
        objects.push_back(std::move(obj));
    }
    return json{{"objects", std::move(objects)}, {"caption", gt.caption}};
}

}  // namespace

Clip clip_from_json(const json& j, std::size_t line_no) {
    std::string where = "line " + std::to_string(line_no);
    reject_unknown(j, {"type", "clip_id", "start", "end", "frames", "extracted", "thumbnail_url"}, where);
    if (require_field<std::string>(j, "type", where) != "clip") {
        throw Error(ErrorCode::kParse, where + ": expected a clip record");
    }
    Clip clip;
    clip.clip_id = require_field<std::string>(j, "clip_id", where);
    clip.start = require_field<double>(j, "start", where);
    clip.end = require_field<double>(j, "end", where);
    clip.thumbnail_url = optional_field<std::string>(j, "thumbnail_url", where);
    auto frames = j.find("frames");
    if (frames == j.end() || !frames->is_array()) {
        throw Error(ErrorCode::kParse, where + ": 'frames' must be an array");
    }
    for (const auto& f : *frames) {
        reject_unknown(f, {"frame_id", "timestamp", "facts"}, where + " frame");
        Frame frame;
        frame.frame_id = require_field<std::string>(f, "frame_id", where);
        frame.timestamp = require_field<double>(f, "timestamp", where);
        if (auto facts = f.find("facts"); facts != f.end() && !facts->is_null()) {
            frame.facts = facts_from_json(*facts, where + " frame '" + frame.frame_id + "'");
        }
        clip.frames.push_back(std::move(frame));
    }
    if (auto ex = optional_field<std::vector<std::string>>(j, "extracted", where)) {
        clip.extraction_state.insert(ex->begin(), ex->end());
    }
    return clip;
}

json clip_to_json(const Clip& clip) {
    json frames = json::array();
    for (const auto& f : clip.frames) {
        json frame{{"frame_id", f.frame_id}, {"timestamp", f.timestamp}};
        if (f.facts) frame["facts"] = facts_to_json(*f.facts);
        frames.push_back(std::move(frame));
    }
    json j{{"type", "clip"}, {"clip_id", clip.clip_id}, {"start", clip.start}, {"end", clip.end},
           {"frames", std::move(frames)}};
    if (!clip.extraction_state.empty()) {
        j["extracted"] = std::vector<std::string>(clip.extraction_state.begin(), clip.extraction_state.end());
    }
    if (clip.thumbnail_url) j["thumbnail_url"] = *clip.thumbnail_url;
    return j;
}

CorpusManifest parse_manifest(std::istream& in) {
    CorpusManifest manifest;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!have_header) {
            std::string where = "line " + std::to_string(line_no);
            reject_unknown(j, {"type", "format", "corpus_id", "keyframe_rate"}, where);
            if (require_field<std::string>(j, "type", where) != "corpus") {
                throw Error(ErrorCode::kParse, where + ": first record must be the corpus header");
            }
            if (require_field<int>(j, "format", where) != 1) {
                throw Error(ErrorCode::kParse, where + ": unsupported manifest format version");
            }
            manifest.corpus_id = require_field<std::string>(j, "corpus_id", where);
            manifest.keyframe_rate = optional_field<double>(j, "keyframe_rate", where).value_or(1.0);
            have_header = true;
            continue;
        }
        manifest.clips.push_back(clip_from_json(j, line_no));
    }
    if (!have_header) throw Error(ErrorCode::kParse, "manifest is empty");
    manifest.validate();
    return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
    return parse_manifest(in);
}

void write_manifest(std::ostream& out, const CorpusManifest& manifest) {
    json header{{"type", "corpus"}, {"format", 1}, {"corpus_id", manifest.corpus_id},
                {"keyframe_rate", manifest.keyframe_rate}};
    out << header.dump() << '\n';
    for (const auto& clip : manifest.clips) out << clip_to_json(clip).dump() << '\n';
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + tmp.string());
        write_manifest(out, manifest);
        if (!out) throw Error(ErrorCode::kIo, "short write on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Synthetic world

void Vocabulary::validate() const {
    if (objects.empty()) throw Error(ErrorCode::kInvalidArgument, "vocabulary has no object classes");
    if (colors.empty()) throw Error(ErrorCode::kInvalidArgument, "vocabulary has no colors");
}

Vocabulary Vocabulary::street_scene() {
    Vocabulary v;
    v.objects = {"truck", "car",   "bus",     "person",   "bicycle", "motorcycle",
                 "van",   "dog",   "scooter", "stroller", "cart",    "trailer"};
    v.colors = {"red", "white", "blue", "black", "green", "yellow"};
    v.text_labels = {"FedEx", "UPS", "DHL", "Amazon", "Pepsi"};
    v.companions = {"tree", "bench", "hydrant", "lamppost", "mailbox", "kiosk"};
    return v;
}

const std::vector<std::string>& template_words() {
    static const std::vector<std::string> words = {"a",   "with", "text",  "objects", "is",
                                                   "there", "what", "the", "color",   "of"};
    return words;
}

std::string describe_object(const ObjectFact& fact) {
    std::string out = "a ";
    if (fact.color) out += *fact.color + " ";
    out += fact.object_class;
    if (fact.text_label) out += " with text '" + *fact.text_label + "'";
    return out;
}

std::string compose_caption(const std::vector<ObjectFact>& objects) {
    std::string out;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (i) out += ", ";
        out += describe_object(objects[i]);
    }
    return out;
}

namespace {

std::string clip_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "clip-%04zu", i);
    return buf;
}

std::size_t frames_per_clip(double duration, double rate) {
    auto n = static_cast<long>(std::lround(duration * rate));
    return static_cast<std::size_t>(std::max(1L, n));
}

Clip make_clip(std::size_t index, double duration, double rate) {
    Clip clip;
    clip.clip_id = clip_name(index);
    clip.start = static_cast<double>(index) * duration;
    clip.end = clip.start + duration;
    std::size_t n = frames_per_clip(duration, rate);
    double step = duration / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
        Frame f;
        f.frame_id = clip.clip_id + "/f" + std::to_string(j);
        f.timestamp = clip.start + static_cast<double>(j) * step;
        clip.frames.push_back(std::move(f));
    }
    return clip;
}

}  // namespace

CorpusManifest gen_synthetic(std::uint64_t seed, std::size_t n_clips, const Vocabulary& vocab,
                             const SyntheticOptions& options) {
    vocab.validate();
    if (n_clips == 0) throw Error(ErrorCode::kInvalidArgument, "n_clips must be >= 1");
    if (options.max_objects_per_clip == 0) {
        throw Error(ErrorCode::kInvalidArgument, "max_objects_per_clip must be >= 1");
    }
    detail::Rng rng(seed);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t o = 0; o < vocab.objects.size(); ++o) {
        for (std::size_t c = 0; c < vocab.colors.size(); ++c) pairs.emplace_back(o, c);
    }
    detail::shuffle(pairs, rng);

    CorpusManifest manifest;
    manifest.corpus_id = "synthetic-" + std::to_string(seed) + "-" + std::to_string(n_clips);
    manifest.keyframe_rate = options.keyframe_rate;
    std::size_t max_objects = std::min(options.max_objects_per_clip, vocab.objects.size());

    for (std::size_t i = 0; i < n_clips; ++i) {
        Clip clip = make_clip(i, options.clip_duration, options.keyframe_rate);

        std::vector<ObjectFact> objects;
        std::vector<bool> used(vocab.objects.size(), false);
        auto add_object = [&](std::size_t o, std::size_t c) {
            ObjectFact fact;
            fact.object_class = vocab.objects[o];
            fact.color = vocab.colors[c];
            if (!vocab.text_labels.empty() && rng.unit() < options.label_probability) {
                fact.text_label = vocab.text_labels[rng.below(vocab.text_labels.size())];
            }
            used[o] = true;
            objects.push_back(std::move(fact));
        };
        const auto& [first_obj, first_color] = pairs[i % pairs.size()];
        add_object(first_obj, first_color);
        std::size_t n_objects = 1 + rng.below(max_objects);
        while (objects.size() < n_objects) {
            std::size_t o = rng.below(vocab.objects.size());
            if (used[o]) continue;
            add_object(o, rng.below(vocab.colors.size()));
        }

        // Visibility per keyframe; every object shows at least once.
        std::size_t n_frames = clip.frames.size();
        std::vector<std::vector<bool>> visible(n_frames, std::vector<bool>(objects.size(), false));
        for (std::size_t k = 0; k < objects.size(); ++k) {
            bool any = false;
            for (std::size_t j = 0; j < n_frames; ++j) {
                visible[j][k] = rng.unit() < options.visibility;
                any = any || visible[j][k];
            }
            if (!any) visible[rng.below(n_frames)][k] = true;
        }
        for (std::size_t j = 0; j < n_frames; ++j) {
            GroundTruth gt;
            for (std::size_t k = 0; k < objects.size(); ++k) {
                if (visible[j][k]) gt.objects.push_back(objects[k]);
            }
            gt.caption = compose_caption(gt.objects);
            clip.frames[j].facts = std::move(gt);
        }
        manifest.clips.push_back(std::move(clip));
    }
    return manifest;
}

CorpusManifest gen_signature_corpus(std::uint64_t seed, std::size_t clips_per_pair, const Vocabulary& vocab) {
    vocab.validate();
    if (clips_per_pair == 0) throw Error(ErrorCode::kInvalidArgument, "clips_per_pair must be >= 1");
    if (vocab.companions.size() < vocab.colors.size()) {
        throw Error(ErrorCode::kInvalidArgument, "signature corpus needs one companion per color");
    }
    std::vector<std::pair<std::size_t, std::size_t>> layout;
    for (std::size_t o = 0; o < vocab.objects.size(); ++o) {
        for (std::size_t c = 0; c < vocab.colors.size(); ++c) {
            for (std::size_t r = 0; r < clips_per_pair; ++r) layout.emplace_back(o, c);
        }
    }
    detail::Rng rng(seed);
    detail::shuffle(layout, rng);

    CorpusManifest manifest;
    manifest.corpus_id = "signature-" + std::to_string(seed) + "-" + std::to_string(clips_per_pair);
    manifest.keyframe_rate = 0.2;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        auto [o, c] = layout[i];
        Clip clip = make_clip(i, 5.0, 0.2);
        GroundTruth gt;
        gt.objects.push_back(ObjectFact{vocab.objects[o], vocab.colors[c], std::nullopt});
        gt.objects.push_back(ObjectFact{vocab.companions[c], std::nullopt, std::nullopt});
        gt.caption = compose_caption(gt.objects);
        for (auto& f : clip.frames) f.facts = gt;
        manifest.clips.push_back(std::move(clip));
    }
    return manifest;
}

CorpusManifest build_manifest(const std::string& corpus_id, std::vector<ExternalFrame> frames,
                              double clip_duration, double keyframe_rate) {
    if (!(clip_duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clip_duration must be positive");
    std::stable_sort(frames.begin(), frames.end(),
                     [](const ExternalFrame& a, const ExternalFrame& b) { return a.timestamp < b.timestamp; });
    CorpusManifest manifest;
    manifest.corpus_id = corpus_id;
    manifest.keyframe_rate = keyframe_rate;
    for (auto& ef : frames) {
        if (ef.timestamp < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative frame timestamp");
        auto window = static_cast<std::size_t>(std::floor(ef.timestamp / clip_duration));
        std::string id = clip_name(window);
        if (manifest.clips.empty() || manifest.clips.back().clip_id != id) {
            Clip clip;
            clip.clip_id = id;
            clip.start = static_cast<double>(window) * clip_duration;
            clip.end = clip.start + clip_duration;
            manifest.clips.push_back(std::move(clip));
        }
        manifest.clips.back().frames.push_back(Frame{std::move(ef.frame_id), ef.timestamp, std::move(ef.facts)});
    }
    manifest.validate();
    return manifest;
}

}  // namespace incrag
