#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrk/metrics.hpp"
#include "rrk/remote.hpp"
#include "rrk/rng.hpp"
#include "rrk/taxonomy.hpp"

namespace rrk {

enum class RecordSource { generated, augmented, human };
std::string_view to_string(RecordSource source);
RecordSource parse_record_source(std::string_view text);

struct CorpusRecord {
    std::string text;
    std::vector<EmotionLabel> labels;  // 1 or 2 distinct labels, dominant first
    RecordSource source = RecordSource::generated;

    // InvariantViolation unless 1-2 distinct taxonomy labels and nonempty text.
    void validate(const Taxonomy& taxonomy) const;
};

std::string render_pseudo_label_prompt(std::string_view description, const Taxonomy& taxonomy,
                                       std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Comma/newline separated reply -> up to two distinct labels in order of
// mention. Tokens outside the taxonomy are skipped.
std::vector<EmotionLabel> parse_label_reply(std::string_view reply, const Taxonomy& taxonomy);

// Asks the judge for up to two dominant labels. A reply without any usable
// label is retried once, then AllLabelsUnparseable. EmptyInput for blank text.
CorpusRecord label_description(std::string_view text, const Taxonomy& taxonomy, const JudgeBackend& judge,
                               std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct ClassHistogram {
    std::vector<EmotionLabel> labels;  // taxonomy order
    std::vector<std::size_t> counts;

    std::size_t count(const EmotionLabel& label) const;
    std::size_t total() const;
    friend ClassHistogram operator+(const ClassHistogram& a, const ClassHistogram& b);
    friend bool operator==(const ClassHistogram&, const ClassHistogram&) = default;
};

// One increment per label occurrence, so two-label records count twice.
ClassHistogram class_histogram(std::span<const CorpusRecord> records, const Taxonomy& taxonomy);

struct AugmentationRequest {
    EmotionLabel label;
    std::size_t deficit = 0;
    std::vector<std::string> seed_examples;
    std::string rendered_prompt;
};

std::string render_augmentation_prompt(const EmotionLabel& label, std::span<const std::string> examples);

// Floors keyed by label. One request per label (taxonomy order) whose count is
// below its floor, with up to two seed examples drawn without replacement from
// pool records carrying that label.
std::vector<AugmentationRequest> plan_augmentation(const ClassHistogram& histogram,
                                                   const std::map<EmotionLabel, std::size_t>& floors,
                                                   std::span<const CorpusRecord> pool, SeededRng& rng);

// Parses {"label": floor, ...}; UnknownLabel for labels outside the taxonomy.
std::map<EmotionLabel, std::size_t> parse_floors(const nlohmann::json& doc, const Taxonomy& taxonomy);

class DescriptionGenerator {
public:
    virtual ~DescriptionGenerator() = default;
    virtual std::string id() const = 0;
    // `index` counts from 0 to request.deficit - 1.
    virtual std::string generate(const AugmentationRequest& request, std::size_t index) const = 0;
    virtual std::size_t max_in_flight() const { return 1; }
};

// Deterministic offline stand-in for a generator model.
class TemplateGenerator final : public DescriptionGenerator {
public:
    std::string id() const override { return "template"; }
    std::string generate(const AugmentationRequest& request, std::size_t index) const override;
    std::size_t max_in_flight() const override { return 8; }
};

// Sends the rendered prompt; {"prompt": ...} -> {"reply": ...}
class RemoteGenerator final : public DescriptionGenerator {
public:
    explicit RemoteGenerator(RemoteOptions options) : client_(std::move(options), ErrorCode::JudgeUnavailable) {}

    std::string id() const override { return "remote:" + client_.url(); }
    std::string generate(const AugmentationRequest& request, std::size_t index) const override;
    std::size_t max_in_flight() const override { return client_.max_in_flight(); }

private:
    ChatClient client_;
};

// Generates `deficit` augmented single-label records per request.
std::vector<CorpusRecord> execute_plan(std::span<const AugmentationRequest> plan, const DescriptionGenerator& generator,
                                       std::size_t jobs);

}  // namespace rrk
