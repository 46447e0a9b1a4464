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

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "incrag/corpus.hpp"
#include "incrag/embedding.hpp"

namespace incrag {

/// The exact LLM reply that triggers incremental extraction.
inline constexpr std::string_view kSentinel = "Unable to answer query. Please run additional models";

enum class ModelRole : std::uint8_t { kDetector, kCaptioner, kFrameEmbedder, kLlm };
enum class WeightClass : std::uint8_t { kLightweight, kHeavyweight };

std::string_view to_string(ModelRole role);
std::string_view to_string(WeightClass weight);
ModelRole parse_role(std::string_view name);

struct ModelDescriptor {
    std::string model_id;
    ModelRole role = ModelRole::kDetector;
    // Simulated time units per keyframe (per call for the LLM role).
    std::int64_t per_frame_cost = 1;
    WeightClass weight_class = WeightClass::kLightweight;

    void validate() const;
};

struct ModelOutput {
    std::string clip_id;
    std::string model_id;
    std::string text;
    std::size_t frames_processed = 0;
};

/// Clip-to-text models: the detector (index) and captioner (detailed) roles.
class ClipModel {
public:
    virtual ~ClipModel() = default;
    virtual const ModelDescriptor& descriptor() const = 0;
    virtual ModelOutput run(const Clip& clip) const = 0;
};

class FrameEmbedderModel {
public:
    virtual ~FrameEmbedderModel() = default;
    virtual const ModelDescriptor& descriptor() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual Vector embed(const Frame& frame) const = 0;
};

class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    virtual const ModelDescriptor& descriptor() const = 0;
    virtual std::string complete(std::string_view prompt) const = 0;
};

/// Simulated cost accumulator, safe to charge from concurrent provider calls.
class CostLedger {
public:
    void charge(ModelRole role, std::int64_t units) {
        by_role_[static_cast<std::size_t>(role)].fetch_add(units, std::memory_order_relaxed);
    }
    std::int64_t of(ModelRole role) const {
        return by_role_[static_cast<std::size_t>(role)].load(std::memory_order_relaxed);
    }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& v : by_role_) t += v.load(std::memory_order_relaxed);
        return t;
    }

private:
    std::array<std::atomic<std::int64_t>, 4> by_role_{};
};

// ---------------------------------------------------------------------------
// Synthetic providers, driven by frame GroundTruth.

/// "objects: " + sorted distinct classes over all keyframes.
class SyntheticDetector final : public ClipModel {
public:
    explicit SyntheticDetector(ModelDescriptor descriptor = default_descriptor());
    static ModelDescriptor default_descriptor();

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    ModelOutput run(const Clip& clip) const override;

private:
    ModelDescriptor descriptor_;
};

/// Keyframe captions in frame order, empty captions skipped, joined by "; ".
class SyntheticCaptioner final : public ClipModel {
public:
    explicit SyntheticCaptioner(ModelDescriptor descriptor = default_descriptor());
    static ModelDescriptor default_descriptor();

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    ModelOutput run(const Clip& clip) const override;

private:
    ModelDescriptor descriptor_;
};

/// Embeds a keyframe's caption with the shared text embedder.
class SyntheticFrameEmbedder final : public FrameEmbedderModel {
public:
    explicit SyntheticFrameEmbedder(EmbeddingConfig config = {}, ModelDescriptor descriptor = default_descriptor());
    static ModelDescriptor default_descriptor();

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    std::size_t dimension() const override { return embedder_.dimension(); }
    Vector embed(const Frame& frame) const override;

private:
    TextEmbedder embedder_;
    ModelDescriptor descriptor_;
};

/// Rule-based responder for the two prompt templates. Question answering:
///   "Is there a <X>?"  Yes when X occurs as a contiguous token run in one
///       context line. Otherwise the sentinel when X names a known class that
///       is absent from the context, or when X carries attributes and an index
///       line mentions the class. Otherwise "No".
///   "What is the color of the <X>?"  The color word preceding X in the first
///       detailed line that mentions X, else the sentinel.
/// Any other question form gets the sentinel. Index lines are those starting
/// with "objects:"; every other line counts as detailed.
/// Query synthesis: turns the first object phrase of the context into
/// "Is there <phrase>?".
class SyntheticLlm final : public LanguageModel {
public:
    explicit SyntheticLlm(const Vocabulary& vocab, ModelDescriptor descriptor = default_descriptor());
    static ModelDescriptor default_descriptor();

    const ModelDescriptor& descriptor() const override { return descriptor_; }
    std::string complete(std::string_view prompt) const override;

    std::string answer(const std::vector<std::string>& context_lines, std::string_view query) const;
    std::string invert(std::string_view context) const;

private:
    std::unordered_set<std::string> classes_;
    std::unordered_set<std::string> colors_;
    ModelDescriptor descriptor_;
};

// ---------------------------------------------------------------------------

class ModelRegistry {
public:
    void add(std::shared_ptr<const ClipModel> model);
    void set_frame_embedder(std::shared_ptr<const FrameEmbedderModel> model);
    void set_llm(std::shared_ptr<const LanguageModel> model);

    const ClipModel& clip_model(std::string_view model_id) const;
    const ModelDescriptor& descriptor(std::string_view model_id) const;
    bool contains(std::string_view model_id) const;

    std::vector<const ClipModel*> clip_models(WeightClass weight) const;
    const FrameEmbedderModel* frame_embedder() const { return frame_embedder_.get(); }
    const LanguageModel& llm() const;
    std::vector<ModelDescriptor> descriptors() const;

private:
    void claim_id(const std::string& id);

    std::vector<std::shared_ptr<const ClipModel>> clip_models_;
    std::shared_ptr<const FrameEmbedderModel> frame_embedder_;
    std::shared_ptr<const LanguageModel> llm_;
};

struct CostConfig {
    std::int64_t detector = 70;
    std::int64_t captioner = 1500;
    std::int64_t frame_embedder = 10;
    std::int64_t llm = 1;
};

/// Detector + captioner + frame embedder + LLM, all synthetic.
ModelRegistry make_synthetic_registry(const Vocabulary& vocab, const EmbeddingConfig& embedding = {},
                                      const CostConfig& costs = {});

// Cost-charging call helpers. A clip model costs per_frame_cost x keyframes.
ModelOutput run_clip_model(const ClipModel& model, const Clip& clip, CostLedger* ledger);
Vector run_frame_embedder(const FrameEmbedderModel& model, const Frame& frame, CostLedger* ledger);
std::string run_llm(const LanguageModel& model, std::string_view prompt, CostLedger* ledger);

}  // namespace incrag
