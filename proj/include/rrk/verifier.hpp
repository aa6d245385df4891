#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rrk/taxonomy.hpp"

namespace rrk {

// Per-label probabilities in taxonomy order, each finite and in [0, 1].
class ScoreVector {
public:
    ScoreVector() = default;
    explicit ScoreVector(std::vector<double> scores);
    static ScoreVector zeros(std::size_t n) { return ScoreVector(std::vector<double>(n, 0.0)); }

    std::size_t size() const noexcept { return scores_.size(); }
    double operator[](std::size_t i) const { return scores_.at(i); }
    std::span<const double> values() const noexcept { return scores_; }

    friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

private:
    std::vector<double> scores_;
};

struct VerifierConfig {
    double tau = 0.5;         // selection threshold
    std::size_t k_max = 2;    // labels kept per sentence

    // InvalidValue unless 0 < tau < 1 and k_max >= 1.
    void validate() const;
};

struct SentenceJudgment {
    std::string sentence;
    ScoreVector scores;
    std::vector<EmotionLabel> selected;  // highest score first
    bool is_neutral = false;
    bool matches_target = false;
};

// Emotion classifier over single sentences. Implementations must tolerate
// concurrent calls.
class VerifierBackend {
public:
    virtual ~VerifierBackend() = default;

    virtual std::string id() const = 0;

    // `sentence` is trimmed and nonempty. Returns one score per taxonomy label.
    virtual ScoreVector score(std::string_view sentence, const Taxonomy& taxonomy) const = 0;

    // Results are returned in input order. The default scores sequentially.
    virtual std::vector<ScoreVector> score_all(std::span<const std::string> sentences,
                                               const Taxonomy& taxonomy) const;
};

// Exact sentence -> {label: score} fixtures. Unlisted sentences and labels
// score 0.
class TableBackend final : public VerifierBackend {
public:
    using Row = std::map<std::string, double>;

    TableBackend() = default;
    explicit TableBackend(std::map<std::string, Row> rows);
    static TableBackend from_json(const nlohmann::json& doc);
    static TableBackend from_file(const std::filesystem::path& path);

    void set(std::string sentence, Row row);

    std::string id() const override { return "table"; }
    ScoreVector score(std::string_view sentence, const Taxonomy& taxonomy) const override;

private:
    std::map<std::string, Row, std::less<>> rows_;
};

// Keyword lists per label. A label with n keyword hits scores
// 1 - (1 - weight)^n. Lexicon labels outside the active taxonomy are ignored.
class LexiconBackend final : public VerifierBackend {
public:
    static constexpr double kDefaultWeight = 0.4;

    explicit LexiconBackend(std::map<std::string, std::vector<std::string>> keywords,
                            double weight = kDefaultWeight);
    static LexiconBackend from_json(const nlohmann::json& doc, double weight = kDefaultWeight);
    static LexiconBackend from_file(const std::filesystem::path& path, double weight = kDefaultWeight);
    // Small English lexicon covering the EMER, DFEW and MAFW labels.
    static LexiconBackend builtin(double weight = kDefaultWeight);

    std::string id() const override { return "lexicon"; }
    ScoreVector score(std::string_view sentence, const Taxonomy& taxonomy) const override;

    // Number of keyword occurrences of `label` in `sentence`.
    std::size_t hits(std::string_view sentence, std::string_view label) const;

private:
    // label -> keyword phrases, each phrase a token sequence
    std::map<std::string, std::vector<std::vector<std::string>>, std::less<>> phrases_;
    double weight_;
};

// Lowercased alphanumeric tokens; apostrophes inside words are kept.
std::vector<std::string> word_tokens(std::string_view text);

// EmptySentence for blank input; otherwise the backend's scores, checked
// against the taxonomy size.
ScoreVector score_sentence(std::string_view sentence, const VerifierBackend& backend,
                           const Taxonomy& taxonomy);

// Taxonomy indices chosen from a score vector, highest score first, ties to the
// earlier label. Never empty, never more than k_max.
std::vector<std::size_t> select_label_indices(const ScoreVector& scores, const VerifierConfig& config);
std::vector<EmotionLabel> select_labels(const ScoreVector& scores, const Taxonomy& taxonomy,
                                        const VerifierConfig& config);

// Flags a scored sentence against the target label.
SentenceJudgment make_judgment(std::string sentence, ScoreVector scores, const EmotionLabel& target,
                               const Taxonomy& taxonomy, const VerifierConfig& config);

SentenceJudgment judge_sentence(std::string_view sentence, const EmotionLabel& target,
                                const VerifierBackend& backend, const Taxonomy& taxonomy,
                                const VerifierConfig& config);

}  // namespace rrk
