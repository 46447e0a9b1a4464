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

#include "incrag/models.hpp"

#include <algorithm>
#include <set>

#include "incrag/error.hpp"
#include "incrag/prompt.hpp"

namespace incrag {

std::string_view to_string(ModelRole role) {
    switch (role) {
        case ModelRole::kDetector: return "detector";
        case ModelRole::kCaptioner: return "captioner";
        case ModelRole::kFrameEmbedder: return "frame_embedder";
        case ModelRole::kLlm: return "llm";
    }
    return "unknown";
}

std::string_view to_string(WeightClass weight) {
    return weight == WeightClass::kLightweight ? "lightweight" : "heavyweight";
}

ModelRole parse_role(std::string_view name) {
    for (auto r : {ModelRole::kDetector, ModelRole::kCaptioner, ModelRole::kFrameEmbedder, ModelRole::kLlm}) {
        if (to_string(r) == name) return r;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown model role '" + std::string(name) + "'");
}

void ModelDescriptor::validate() const {
    if (model_id.empty()) throw Error(ErrorCode::kInvalidArgument, "model_id is empty");
    if (per_frame_cost <= 0) {
        throw Error(ErrorCode::kInvalidArgument, "model '" + model_id + "': per_frame_cost must be > 0");
    }
}

namespace {

const GroundTruth& facts_of(const Frame& frame, const std::string& clip_id) {
    if (!frame.facts) {
        throw Error(ErrorCode::kMissingGroundTruth,
                    "clip '" + clip_id + "' frame '" + frame.frame_id + "' carries no ground truth");
    }
    return *frame.facts;
}

}  // namespace

// ---------------------------------------------------------------------------

SyntheticDetector::SyntheticDetector(ModelDescriptor descriptor) : descriptor_(std::move(descriptor)) {
    descriptor_.validate();
}

ModelDescriptor SyntheticDetector::default_descriptor() {
    return {"detector", ModelRole::kDetector, 70, WeightClass::kLightweight};
}

ModelOutput SyntheticDetector::run(const Clip& clip) const {
    std::set<std::string> classes;
    for (const auto& f : clip.frames) {
        for (const auto& o : facts_of(f, clip.clip_id).objects) classes.insert(o.object_class);
    }
    std::string text = "objects: ";
    bool first = true;
    for (const auto& c : classes) {
        if (!first) text += ", ";
        text += c;
        first = false;
    }
    return {clip.clip_id, descriptor_.model_id, std::move(text), clip.frames.size()};
}

SyntheticCaptioner::SyntheticCaptioner(ModelDescriptor descriptor) : descriptor_(std::move(descriptor)) {
    descriptor_.validate();
}

ModelDescriptor SyntheticCaptioner::default_descriptor() {
    return {"captioner", ModelRole::kCaptioner, 1500, WeightClass::kHeavyweight};
}

ModelOutput SyntheticCaptioner::run(const Clip& clip) const {
    std::string text;
    for (const auto& f : clip.frames) {
        const auto& caption = facts_of(f, clip.clip_id).caption;
        if (caption.empty()) continue;
        if (!text.empty()) text += "; ";
        text += caption;
    }
    return {clip.clip_id, descriptor_.model_id, std::move(text), clip.frames.size()};
}

SyntheticFrameEmbedder::SyntheticFrameEmbedder(EmbeddingConfig config, ModelDescriptor descriptor)
    : embedder_(config), descriptor_(std::move(descriptor)) {
    descriptor_.validate();
}

ModelDescriptor SyntheticFrameEmbedder::default_descriptor() {
    return {"frame_embedder", ModelRole::kFrameEmbedder, 10, WeightClass::kLightweight};
}

Vector SyntheticFrameEmbedder::embed(const Frame& frame) const {
    if (!frame.facts) {
        throw Error(ErrorCode::kMissingGroundTruth, "frame '" + frame.frame_id + "' carries no ground truth");
    }
    return embedder_.embed(frame.facts->caption);
}

// ---------------------------------------------------------------------------
// Synthetic LLM

namespace {

struct ContextLine {
    std::vector<std::string> tokens;
    bool detailed;
};

// Start of the first run of `needle` inside `hay`, searching from `from`.
std::optional<std::size_t> find_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle,
                                     std::size_t from = 0) {
    if (needle.empty() || needle.size() > hay.size()) return std::nullopt;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return i;
    }
    return std::nullopt;
}

bool mentions(const ContextLine& line, const std::string& token) {
    return std::find(line.tokens.begin(), line.tokens.end(), token) != line.tokens.end();
}

bool is_article(const std::string& t) { return t == "a" || t == "an"; }

}  // namespace

SyntheticLlm::SyntheticLlm(const Vocabulary& vocab, ModelDescriptor descriptor) : descriptor_(std::move(descriptor)) {
    descriptor_.validate();
    for (const auto* list : {&vocab.objects, &vocab.companions}) {
        for (const auto& w : *list) {
            for (auto& t : tokenize(w)) classes_.insert(std::move(t));
        }
    }
    for (const auto& w : vocab.colors) {
        for (auto& t : tokenize(w)) colors_.insert(std::move(t));
    }
}

ModelDescriptor SyntheticLlm::default_descriptor() { return {"llm", ModelRole::kLlm, 1, WeightClass::kLightweight}; }

std::string SyntheticLlm::complete(std::string_view prompt) const {
    auto parsed = parse_prompt(prompt);
    if (parsed.kind == ParsedPrompt::Kind::kSynthesis) return invert(parsed.synthesis_context);
    return answer(parsed.context_lines, parsed.query);
}

std::string SyntheticLlm::answer(const std::vector<std::string>& context_lines, std::string_view query) const {
    const std::string sentinel(kSentinel);
    std::vector<ContextLine> lines;
    for (const auto& text : context_lines) {
        auto tokens = tokenize(text);
        bool detailed = !(text.starts_with("objects:"));
        lines.push_back({std::move(tokens), detailed});
    }

    auto q = tokenize(query);
    // "is there [a|an] X"
    if (q.size() >= 3 && q[0] == "is" && q[1] == "there") {
        std::size_t at = 2;
        if (at < q.size() && is_article(q[at]) && q.size() > at + 1) ++at;
        std::vector<std::string> phrase(q.begin() + static_cast<std::ptrdiff_t>(at), q.end());
        for (const auto& line : lines) {
            if (find_run(line.tokens, phrase)) return "Yes";
        }
        auto cls = std::find_if(phrase.begin(), phrase.end(), [&](const auto& t) { return classes_.count(t) != 0; });
        if (cls == phrase.end()) return "No";
        bool present = std::any_of(lines.begin(), lines.end(), [&](const auto& l) { return mentions(l, *cls); });
        if (!present) return sentinel;
        // An index line only proves the class is there; its attributes are
        // unknown until the clip gets a detailed description.
        if (phrase.size() > 1) {
            bool undescribed = std::any_of(lines.begin(), lines.end(),
                                           [&](const auto& l) { return !l.detailed && mentions(l, *cls); });
            if (undescribed) return sentinel;
        }
        return "No";
    }
    // "what is the color of [the] X"
    if (q.size() >= 6 && q[0] == "what" && q[1] == "is" && q[2] == "the" && q[3] == "color" && q[4] == "of") {
        std::size_t at = 5;
        if (q[at] == "the" && q.size() > at + 1) ++at;
        std::vector<std::string> phrase(q.begin() + static_cast<std::ptrdiff_t>(at), q.end());
        for (const auto& line : lines) {
            if (!line.detailed) continue;
            for (auto pos = find_run(line.tokens, phrase); pos; pos = find_run(line.tokens, phrase, *pos + 1)) {
                for (std::size_t i = *pos; i-- > 0;) {
                    const auto& t = line.tokens[i];
                    if (colors_.count(t)) return t;
                    if (is_article(t)) break;
                }
            }
        }
        return sentinel;
    }
    return sentinel;
}

std::string SyntheticLlm::invert(std::string_view context) const {
    std::string_view phrase = context;
    auto cut = phrase.find_first_of(";,");
    if (cut != std::string_view::npos) phrase = phrase.substr(0, cut);
    while (!phrase.empty() && (phrase.front() == ' ' || phrase.front() == '\t')) phrase.remove_prefix(1);
    while (!phrase.empty() && (phrase.back() == ' ' || phrase.back() == '.' || phrase.back() == '\t')) {
        phrase.remove_suffix(1);
    }
    if (phrase.empty()) return std::string(kSentinel);
    std::string out = "Is there ";
    if (!(phrase.starts_with("a ") || phrase.starts_with("an "))) out += "a ";
    out += phrase;
    out += "?";
    return out;
}

// ---------------------------------------------------------------------------

void ModelRegistry::claim_id(const std::string& id) {
    if (contains(id)) throw Error(ErrorCode::kInvalidArgument, "model id '" + id + "' registered twice");
}

void ModelRegistry::add(std::shared_ptr<const ClipModel> model) {
    const auto& d = model->descriptor();
    d.validate();
    if (d.role != ModelRole::kDetector && d.role != ModelRole::kCaptioner) {
        throw Error(ErrorCode::kInvalidArgument, "model '" + d.model_id + "' is not a clip model");
    }
    claim_id(d.model_id);
    clip_models_.push_back(std::move(model));
}

void ModelRegistry::set_frame_embedder(std::shared_ptr<const FrameEmbedderModel> model) {
    if (model) {
        model->descriptor().validate();
        if (!frame_embedder_ || frame_embedder_->descriptor().model_id != model->descriptor().model_id) {
            claim_id(model->descriptor().model_id);
        }
    }
    frame_embedder_ = std::move(model);
}

void ModelRegistry::set_llm(std::shared_ptr<const LanguageModel> model) {
    if (model) {
        model->descriptor().validate();
        if (!llm_ || llm_->descriptor().model_id != model->descriptor().model_id) {
            claim_id(model->descriptor().model_id);
        }
    }
    llm_ = std::move(model);
}

const ClipModel& ModelRegistry::clip_model(std::string_view model_id) const {
    for (const auto& m : clip_models_) {
        if (m->descriptor().model_id == model_id) return *m;
    }
    throw Error(ErrorCode::kUnknownModel, "no clip model '" + std::string(model_id) + "'");
}

const ModelDescriptor& ModelRegistry::descriptor(std::string_view model_id) const {
    for (const auto& m : clip_models_) {
        if (m->descriptor().model_id == model_id) return m->descriptor();
    }
    if (frame_embedder_ && frame_embedder_->descriptor().model_id == model_id) return frame_embedder_->descriptor();
    if (llm_ && llm_->descriptor().model_id == model_id) return llm_->descriptor();
    throw Error(ErrorCode::kUnknownModel, "no model '" + std::string(model_id) + "'");
}

bool ModelRegistry::contains(std::string_view model_id) const {
    try {
        descriptor(model_id);
        return true;
    } catch (const Error&) {
        return false;
    }
}

std::vector<const ClipModel*> ModelRegistry::clip_models(WeightClass weight) const {
    std::vector<const ClipModel*> out;
    for (const auto& m : clip_models_) {
        if (m->descriptor().weight_class == weight) out.push_back(m.get());
    }
    return out;
}

const LanguageModel& ModelRegistry::llm() const {
    if (!llm_) throw Error(ErrorCode::kUnknownModel, "no language model registered");
    return *llm_;
}

std::vector<ModelDescriptor> ModelRegistry::descriptors() const {
    std::vector<ModelDescriptor> out;
    for (const auto& m : clip_models_) out.push_back(m->descriptor());
    if (frame_embedder_) out.push_back(frame_embedder_->descriptor());
    if (llm_) out.push_back(llm_->descriptor());
    return out;
}

ModelRegistry make_synthetic_registry(const Vocabulary& vocab, const EmbeddingConfig& embedding,
                                      const CostConfig& costs) {
    ModelRegistry reg;
    auto det = SyntheticDetector::default_descriptor();
    det.per_frame_cost = costs.detector;
    auto cap = SyntheticCaptioner::default_descriptor();
    cap.per_frame_cost = costs.captioner;
    auto emb = SyntheticFrameEmbedder::default_descriptor();
    emb.per_frame_cost = costs.frame_embedder;
    auto llm = SyntheticLlm::default_descriptor();
    llm.per_frame_cost = costs.llm;
    reg.add(std::make_shared<SyntheticDetector>(det));
    reg.add(std::make_shared<SyntheticCaptioner>(cap));
    reg.set_frame_embedder(std::make_shared<SyntheticFrameEmbedder>(embedding, emb));
    reg.set_llm(std::make_shared<SyntheticLlm>(vocab, llm));
    return reg;
}

ModelOutput run_clip_model(const ClipModel& model, const Clip& clip, CostLedger* ledger) {
    auto out = model.run(clip);
    if (ledger) {
        const auto& d = model.descriptor();
        ledger->charge(d.role, d.per_frame_cost * static_cast<std::int64_t>(clip.frames.size()));
    }
    return out;
}

Vector run_frame_embedder(const FrameEmbedderModel& model, const Frame& frame, CostLedger* ledger) {
    auto v = model.embed(frame);
    if (ledger) ledger->charge(model.descriptor().role, model.descriptor().per_frame_cost);
    return v;
}

std::string run_llm(const LanguageModel& model, std::string_view prompt, CostLedger* ledger) {
    auto out = model.complete(prompt);
    if (ledger) ledger->charge(ModelRole::kLlm, model.descriptor().per_frame_cost);
    return out;
}

}  // namespace incrag
