#include "rrk/reward.hpp"

#include <algorithm>
#include <cctype>

#include "rrk/error.hpp"
#include "rrk/text.hpp"

namespace rrk {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void push_fragment(std::vector<std::string>& out, std::string_view fragment) {
    fragment = trim(fragment);
    const bool has_word = std::any_of(fragment.begin(), fragment.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
    });
    if (has_word) out.emplace_back(fragment);
}

}  // namespace

ModelOutput parse_output(std::string_view raw) {
    ModelOutput out;
    out.raw = std::string(raw);

    const auto think_open = raw.find(kThinkOpen);
    if (think_open == std::string_view::npos) return out;
    const auto think_body = think_open + kThinkOpen.size();
    const auto think_close = raw.find(kThinkClose, think_body);
    if (think_close == std::string_view::npos) return out;
    const auto answer_open = raw.find(kAnswerOpen, think_close + kThinkClose.size());
    if (answer_open == std::string_view::npos) return out;
    const auto answer_body = answer_open + kAnswerOpen.size();
    const auto answer_close = raw.find(kAnswerClose, answer_body);
    if (answer_close == std::string_view::npos) return out;

    out.explanation = std::string(trim(raw.substr(think_body, think_close - think_body)));
    out.answer = std::string(trim(raw.substr(answer_body, answer_close - answer_body)));
    return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t run_end = i;
        while (run_end < text.size() && is_terminator(text[run_end])) ++run_end;
        if (run_end == text.size() || is_space(text[run_end])) {
            push_fragment(out, text.substr(start, run_end - start));
            start = run_end;
        }
        i = run_end;
    }
    if (start < text.size()) push_fragment(out, text.substr(start));
    return out;
}

Rational explanation_reward_from_counts(std::size_t c, std::size_t n_total, std::size_t n_neutral,
                                        bool target_is_neutral) {
    const auto denominator = static_cast<std::int64_t>(target_is_neutral ? n_total : n_total - n_neutral);
    const auto matches = static_cast<std::int64_t>(c);
    if (denominator <= 0) return Rational(matches > 0 ? 1 : 0);
    return std::min(Rational(matches, denominator), Rational(1));
}

ExplanationScore tally_judgments(std::vector<SentenceJudgment> judgments, const EmotionLabel& target) {
    ExplanationScore score;
    score.n_total = judgments.size();
    for (const auto& j : judgments) {
        if (j.is_neutral) ++score.n_neutral;
        if (j.matches_target) ++score.c;
    }
    score.judgments = std::move(judgments);
    score.exact = explanation_reward_from_counts(score.c, score.n_total, score.n_neutral, target.is_neutral());
    score.r_explanation = score.exact.to_double();
    return score;
}

ExplanationScore explanation_reward(const std::optional<std::string>& explanation, const EmotionLabel& target,
                                    const VerifierBackend& backend, const Taxonomy& taxonomy,
                                    const VerifierConfig& config) {
    if (!taxonomy.contains(target)) {
        throw Error(ErrorCode::UnknownLabel, "target '" + target.value() + "' is not in " + taxonomy.name());
    }
    if (!explanation) return tally_judgments({}, target);
    const auto sentences = split_sentences(*explanation);
    if (sentences.empty()) return tally_judgments({}, target);

    auto scores = backend.score_all(sentences, taxonomy);
    std::vector<SentenceJudgment> judgments;
    judgments.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (scores[i].size() != taxonomy.size()) {
            throw Error(ErrorCode::LabelMismatch, backend.id() + " returned a score vector of the wrong size");
        }
        judgments.push_back(make_judgment(sentences[i], std::move(scores[i]), target, taxonomy, config));
    }
    return tally_judgments(std::move(judgments), target);
}

int format_reward(const ModelOutput& output) { return output.well_formed() ? 1 : 0; }

int answer_reward(const ModelOutput& output, const EmotionLabel& target, const Taxonomy& taxonomy) {
    if (!output.well_formed()) return 0;
    auto label = try_normalize_label(*output.answer, taxonomy);
    return label && *label == target ? 1 : 0;
}

ScoredOutput score_output(std::string_view raw, const EmotionLabel& target, const VerifierBackend& backend,
                          const Taxonomy& taxonomy, const VerifierConfig& config) {
    ScoredOutput scored;
    scored.output = parse_output(raw);
    scored.explanation = explanation_reward(scored.output.explanation, target, backend, taxonomy, config);
    scored.reward = RewardBreakdown::combine(scored.explanation.r_explanation, format_reward(scored.output),
                                             answer_reward(scored.output, target, taxonomy));
    return scored;
}

RewardBreakdown total_reward(std::string_view raw, const EmotionLabel& target, const VerifierBackend& backend,
                             const Taxonomy& taxonomy, const VerifierConfig& config) {
    return score_output(raw, target, backend, taxonomy, config).reward;
}

}  // namespace rrk
