#include "rrk/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "rrk/error.hpp"
#include "rrk/parallel.hpp"
#include "rrk/resources.hpp"
#include "rrk/text.hpp"

namespace rrk {

std::string_view to_string(RecordSource source) {
    switch (source) {
        case RecordSource::generated: return "generated";
        case RecordSource::augmented: return "augmented";
        case RecordSource::human: return "human";
    }
    return "generated";
}

RecordSource parse_record_source(std::string_view text) {
    if (text == "generated") return RecordSource::generated;
    if (text == "augmented") return RecordSource::augmented;
    if (text == "human") return RecordSource::human;
    throw Error(ErrorCode::InvalidValue, "unknown record source '" + std::string(text) + "'");
}

void CorpusRecord::validate(const Taxonomy& taxonomy) const {
    if (trim(text).empty()) throw Error(ErrorCode::InvariantViolation, "corpus record has empty text");
    if (labels.empty() || labels.size() > 2) {
        throw Error(ErrorCode::InvariantViolation, "corpus record must carry one or two labels");
    }
    if (labels.size() == 2 && labels[0] == labels[1]) {
        throw Error(ErrorCode::InvariantViolation, "corpus record labels must be distinct");
    }
    for (const auto& l : labels) {
        if (!taxonomy.contains(l)) throw Error(ErrorCode::UnknownLabel, "'" + l.value() + "' not in " + taxonomy.name());
    }
}

std::string render_pseudo_label_prompt(std::string_view description, const Taxonomy& taxonomy,
                                       std::optional<std::uint64_t> shuffle_seed) {
    std::string prompt(resources::kPseudoLabelPrompt);
    prompt = replace_all(std::move(prompt), "{Emotion List}", render_emotion_list(taxonomy, shuffle_seed));
    return replace_all(std::move(prompt), "{Explanation}", description);
}

std::vector<EmotionLabel> parse_label_reply(std::string_view reply, const Taxonomy& taxonomy) {
    std::vector<EmotionLabel> labels;
    std::size_t start = 0;
    while (start <= reply.size() && labels.size() < 2) {
        auto end = reply.find_first_of(",\n", start);
        if (end == std::string_view::npos) end = reply.size();
        if (auto label = try_normalize_label(reply.substr(start, end - start), taxonomy)) {
            if (std::find(labels.begin(), labels.end(), *label) == labels.end()) labels.push_back(*label);
        }
        start = end + 1;
    }
    return labels;
}

CorpusRecord label_description(std::string_view text, const Taxonomy& taxonomy, const JudgeBackend& judge,
                               std::optional<std::uint64_t> shuffle_seed) {
    const auto description = trim(text);
    if (description.empty()) throw Error(ErrorCode::EmptyInput, "cannot label an empty description");
    const JudgeQuery query{render_pseudo_label_prompt(description, taxonomy, shuffle_seed), std::string(description), 2};
    std::string reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        reply = judge.reply(query);
        auto labels = parse_label_reply(reply, taxonomy);
        if (!labels.empty()) return {std::string(description), std::move(labels), RecordSource::generated};
    }
    throw Error(ErrorCode::AllLabelsUnparseable, "no label in reply '" + reply + "'");
}

std::size_t ClassHistogram::count(const EmotionLabel& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return counts[i];
    }
    throw Error(ErrorCode::UnknownLabel, "'" + label.value() + "' is not in the histogram");
}

std::size_t ClassHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

ClassHistogram operator+(const ClassHistogram& a, const ClassHistogram& b) {
    if (a.labels != b.labels) throw Error(ErrorCode::LengthMismatch, "histograms over different label sets");
    ClassHistogram sum = a;
    for (std::size_t i = 0; i < sum.counts.size(); ++i) sum.counts[i] += b.counts[i];
    return sum;
}

ClassHistogram class_histogram(std::span<const CorpusRecord> records, const Taxonomy& taxonomy) {
    ClassHistogram h{taxonomy.labels(), std::vector<std::size_t>(taxonomy.size(), 0)};
    for (const auto& r : records) {
        for (const auto& l : r.labels) {
            const auto idx = taxonomy.index_of(l);
            if (!idx) throw Error(ErrorCode::UnknownLabel, "'" + l.value() + "' not in " + taxonomy.name());
            ++h.counts[*idx];
        }
    }
    return h;
}

std::string render_augmentation_prompt(const EmotionLabel& label, std::span<const std::string> examples) {
    static constexpr std::string_view kMissing = "(no example available)";
    std::string prompt(resources::kAugmentDescriptionPrompt);
    prompt = replace_all(std::move(prompt), "{Example Description 1}", examples.size() > 0 ? examples[0] : kMissing);
    prompt = replace_all(std::move(prompt), "{Example Description 2}", examples.size() > 1 ? examples[1] : kMissing);
    return replace_all(std::move(prompt), "{Specific Emotion}", label.value());
}

std::vector<AugmentationRequest> plan_augmentation(const ClassHistogram& histogram,
                                                   const std::map<EmotionLabel, std::size_t>& floors,
                                                   std::span<const CorpusRecord> pool, SeededRng& rng) {
    for (const auto& [label, floor] : floors) {
        if (std::find(histogram.labels.begin(), histogram.labels.end(), label) == histogram.labels.end()) {
            throw Error(ErrorCode::UnknownLabel, "floor given for '" + label.value() + "', which is not in the histogram");
        }
    }
    std::vector<AugmentationRequest> plan;
    for (std::size_t i = 0; i < histogram.labels.size(); ++i) {
        const auto& label = histogram.labels[i];
        const auto floor = floors.find(label);
        if (floor == floors.end() || histogram.counts[i] >= floor->second) continue;

        std::vector<std::size_t> candidates;
        for (std::size_t r = 0; r < pool.size(); ++r) {
            if (std::find(pool[r].labels.begin(), pool[r].labels.end(), label) != pool[r].labels.end()) {
                candidates.push_back(r);
            }
        }
        // partial Fisher-Yates
        const std::size_t take = std::min<std::size_t>(2, candidates.size());
        for (std::size_t k = 0; k < take; ++k) {
            std::swap(candidates[k], candidates[k + rng.uniform_index(candidates.size() - k)]);
        }

        AugmentationRequest request;
        request.label = label;
        request.deficit = floor->second - histogram.counts[i];
        for (std::size_t k = 0; k < take; ++k) request.seed_examples.push_back(pool[candidates[k]].text);
        request.rendered_prompt = render_augmentation_prompt(label, request.seed_examples);
        plan.push_back(std::move(request));
    }
    return plan;
}

std::map<EmotionLabel, std::size_t> parse_floors(const nlohmann::json& doc, const Taxonomy& taxonomy) {
    if (!doc.is_object()) throw Error(ErrorCode::InvalidValue, "floors must be a JSON object");
    std::map<EmotionLabel, std::size_t> floors;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
            throw Error(ErrorCode::InvalidValue, "floor for '" + key + "' must be a non-negative integer");
        }
        floors[normalize_label(key, taxonomy)] = value.get<std::size_t>();
    }
    return floors;
}

std::string TemplateGenerator::generate(const AugmentationRequest& request, std::size_t index) const {
    std::string text = "Portrayal " + std::to_string(index + 1) + " of " + request.label.value() + ": ";
    if (request.seed_examples.empty()) {
        text += "the person's face, voice and posture all convey " + request.label.value() + ".";
    } else {
        text += request.seed_examples[index % request.seed_examples.size()];
    }
    return text;
}

std::string RemoteGenerator::generate(const AugmentationRequest& request, std::size_t) const {
    auto reply = std::string(trim(client_.ask(request.rendered_prompt)));
    if (reply.empty()) throw Error(ErrorCode::JudgeUnavailable, "generator returned an empty description");
    return reply;
}

std::vector<CorpusRecord> execute_plan(std::span<const AugmentationRequest> plan, const DescriptionGenerator& generator,
                                       std::size_t jobs) {
    std::vector<std::pair<std::size_t, std::size_t>> work;
    for (std::size_t r = 0; r < plan.size(); ++r) {
        for (std::size_t i = 0; i < plan[r].deficit; ++i) work.emplace_back(r, i);
    }
    return parallel_map(work.size(), std::min(jobs, generator.max_in_flight()), [&](std::size_t w) {
        const auto& [r, i] = work[w];
        return CorpusRecord{generator.generate(plan[r], i), {plan[r].label}, RecordSource::augmented};
    });
}

}  // namespace rrk
