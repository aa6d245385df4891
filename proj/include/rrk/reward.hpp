#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rrk/rational.hpp"
#include "rrk/taxonomy.hpp"
#include "rrk/verifier.hpp"

namespace rrk {

struct ModelOutput {
    std::string raw;
    std::optional<std::string> explanation;  // trimmed <think> content
    std::optional<std::string> answer;       // trimmed <answer> content

    bool well_formed() const noexcept { return explanation.has_value() && answer.has_value(); }
};

// First <think>...</think> block followed by the first later <answer>...</answer>
// block. Any missing, unclosed or out-of-order tag leaves both fields empty.
// Text around the blocks is ignored.
ModelOutput parse_output(std::string_view raw);

// Splits after each run of '.', '!' or '?' that is followed by whitespace or
// the end of the text. Fragments are trimmed; fragments with no letters or
// digits are dropped.
std::vector<std::string> split_sentences(std::string_view text);

struct ExplanationScore {
    std::vector<SentenceJudgment> judgments;
    std::size_t c = 0;          // sentences whose labels include the target
    std::size_t n_total = 0;
    std::size_t n_neutral = 0;  // sentences whose labels include neutral
    Rational exact;             // reward as an exact fraction
    double r_explanation = 0.0;
};

// Explanation reward from sentence counts.
//   target != neutral : c / (n_total - n_neutral)
//   target == neutral : c / n_total
// A zero denominator gives 1 if c > 0 and 0 otherwise; the result is clamped
// to [0, 1] because a sentence labelled {neutral, target} counts on both sides.
Rational explanation_reward_from_counts(std::size_t c, std::size_t n_total, std::size_t n_neutral,
                                        bool target_is_neutral);

// Tallies already-made judgments.
ExplanationScore tally_judgments(std::vector<SentenceJudgment> judgments, const EmotionLabel& target);

// Splits, verifies each sentence and tallies. A missing or blank explanation
// scores 0 with no judgments.
ExplanationScore explanation_reward(const std::optional<std::string>& explanation, const EmotionLabel& target,
                                    const VerifierBackend& backend, const Taxonomy& taxonomy,
                                    const VerifierConfig& config);

int format_reward(const ModelOutput& output);
int answer_reward(const ModelOutput& output, const EmotionLabel& target, const Taxonomy& taxonomy);

struct RewardBreakdown {
    double r_explanation = 0.0;
    int r_format = 0;
    int r_answer = 0;
    double r_total = 0.0;  // r_explanation + r_format + r_answer

    static RewardBreakdown combine(double r_explanation, int r_format, int r_answer) {
        return {r_explanation, r_format, r_answer, r_explanation + r_format + r_answer};
    }
};

struct ScoredOutput {
    ModelOutput output;
    ExplanationScore explanation;
    RewardBreakdown reward;
};

ScoredOutput score_output(std::string_view raw, const EmotionLabel& target, const VerifierBackend& backend,
                          const Taxonomy& taxonomy, const VerifierConfig& config);

RewardBreakdown total_reward(std::string_view raw, const EmotionLabel& target, const VerifierBackend& backend,
                             const Taxonomy& taxonomy, const VerifierConfig& config);

}  // namespace rrk
