#include "rrk/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rrk/error.hpp"
#include "rrk/resources.hpp"
#include "rrk/text.hpp"

namespace rrk {

ScoreVector::ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {
    for (double s : scores_) {
        if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
            throw Error(ErrorCode::InvalidValue, "score " + std::to_string(s) + " outside [0, 1]");
        }
    }
}

void VerifierConfig::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidValue, "tau must lie in (0, 1)");
    if (k_max < 1) throw Error(ErrorCode::InvalidValue, "k_max must be positive");
}

std::vector<ScoreVector> VerifierBackend::score_all(std::span<const std::string> sentences,
                                                    const Taxonomy& taxonomy) const {
    std::vector<ScoreVector> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(score(s, taxonomy));
    return out;
}

// ---- table ----------------------------------------------------------------

TableBackend::TableBackend(std::map<std::string, Row> rows) {
    for (auto& [sentence, row] : rows) set(sentence, std::move(row));
}

void TableBackend::set(std::string sentence, Row row) {
    rows_[std::string(trim(sentence))] = std::move(row);
}

TableBackend TableBackend::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::InvalidValue, "table fixture must be a JSON object");
    TableBackend table;
    for (const auto& [sentence, row] : doc.items()) {
        if (!row.is_object()) {
            throw Error(ErrorCode::InvalidValue, "table row for '" + sentence + "' must be an object");
        }
        Row parsed;
        for (const auto& [label, value] : row.items()) {
            if (!value.is_number()) throw Error(ErrorCode::InvalidValue, "non-numeric score for " + label);
            parsed[label] = value.get<double>();
        }
        table.set(sentence, std::move(parsed));
    }
    return table;
}

TableBackend TableBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open table fixture " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidValue, path.string() + ": " + e.what());
    }
}

ScoreVector TableBackend::score(std::string_view sentence, const Taxonomy& taxonomy) const {
    std::vector<double> scores(taxonomy.size(), 0.0);
    auto it = rows_.find(trim(sentence));
    if (it == rows_.end()) return ScoreVector(std::move(scores));
    for (const auto& [label, value] : it->second) {
        auto normalized = try_normalize_label(label, taxonomy);
        if (!normalized) {
            throw Error(ErrorCode::LabelMismatch,
                        "fixture label '" + label + "' is not in taxonomy " + taxonomy.name());
        }
        scores[*taxonomy.index_of(*normalized)] = value;
    }
    return ScoreVector(std::move(scores));
}

// ---- lexicon --------------------------------------------------------------

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        while (!current.empty() && current.back() == '\'') current.pop_back();
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c) || c >= 0x80 || raw == '-') {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (raw == '\'' && !current.empty()) {
            current.push_back(raw);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

LexiconBackend::LexiconBackend(std::map<std::string, std::vector<std::string>> keywords, double weight)
    : weight_(weight) {
    if (!(weight > 0.0 && weight <= 1.0)) {
        throw Error(ErrorCode::InvalidValue, "lexicon weight must lie in (0, 1]");
    }
    for (auto& [label, words] : keywords) {
        auto& phrases = phrases_[canonical_token(label)];
        for (const auto& w : words) {
            auto tokens = word_tokens(w);
            if (!tokens.empty()) phrases.push_back(std::move(tokens));
        }
    }
}

LexiconBackend LexiconBackend::from_json(const nlohmann::json& doc, double weight) {
    try {
        return LexiconBackend(doc.get<std::map<std::string, std::vector<std::string>>>(), weight);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidValue, std::string("lexicon must map label -> keyword list: ") + e.what());
    }
}

LexiconBackend LexiconBackend::from_file(const std::filesystem::path& path, double weight) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open lexicon " + path.string());
    try {
        return from_json(nlohmann::json::parse(in), weight);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidValue, path.string() + ": " + e.what());
    }
}

LexiconBackend LexiconBackend::builtin(double weight) {
    return from_json(nlohmann::json::parse(resources::kDefaultLexicon), weight);
}

std::size_t LexiconBackend::hits(std::string_view sentence, std::string_view label) const {
    auto it = phrases_.find(label);
    if (it == phrases_.end()) return 0;
    const auto tokens = word_tokens(sentence);
    std::size_t count = 0;
    for (const auto& phrase : it->second) {
        if (phrase.size() > tokens.size()) continue;
        for (std::size_t start = 0; start + phrase.size() <= tokens.size(); ++start) {
            if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(start))) {
                ++count;
            }
        }
    }
    return count;
}

ScoreVector LexiconBackend::score(std::string_view sentence, const Taxonomy& taxonomy) const {
    std::vector<double> scores(taxonomy.size(), 0.0);
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        const std::size_t n = hits(sentence, taxonomy[i].value());
        scores[i] = 1.0 - std::pow(1.0 - weight_, static_cast<double>(n));
    }
    return ScoreVector(std::move(scores));
}

// ---- selection ------------------------------------------------------------

ScoreVector score_sentence(std::string_view sentence, const VerifierBackend& backend,
                           const Taxonomy& taxonomy) {
    const auto trimmed = trim(sentence);
    if (trimmed.empty()) throw Error(ErrorCode::EmptySentence, "cannot score an empty sentence");
    ScoreVector scores = backend.score(trimmed, taxonomy);
    if (scores.size() != taxonomy.size()) {
        throw Error(ErrorCode::LabelMismatch, backend.id() + " returned " + std::to_string(scores.size()) +
                                                  " scores for " + std::to_string(taxonomy.size()) + " labels");
    }
    return scores;
}

std::vector<std::size_t> select_label_indices(const ScoreVector& scores, const VerifierConfig& config) {
    if (scores.size() == 0) throw Error(ErrorCode::InvalidValue, "empty score vector");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable sort keeps taxonomy order among equal scores.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    const auto above = static_cast<std::size_t>(
        std::count_if(order.begin(), order.end(), [&](std::size_t i) { return scores[i] > config.tau; }));
    if (above <= 1) {
        order.resize(1);
    } else {
        order.resize(std::min(above, config.k_max));
    }
    return order;
}

std::vector<EmotionLabel> select_labels(const ScoreVector& scores, const Taxonomy& taxonomy,
                                        const VerifierConfig& config) {
    std::vector<EmotionLabel> out;
    for (auto i : select_label_indices(scores, config)) out.push_back(taxonomy[i]);
    return out;
}

SentenceJudgment make_judgment(std::string sentence, ScoreVector scores, const EmotionLabel& target,
                               const Taxonomy& taxonomy, const VerifierConfig& config) {
    SentenceJudgment j;
    j.sentence = std::move(sentence);
    j.selected = select_labels(scores, taxonomy, config);
    j.scores = std::move(scores);
    for (const auto& label : j.selected) {
        if (label.is_neutral()) j.is_neutral = true;
        if (label == target) j.matches_target = true;
    }
    return j;
}

SentenceJudgment judge_sentence(std::string_view sentence, const EmotionLabel& target,
                                const VerifierBackend& backend, const Taxonomy& taxonomy,
                                const VerifierConfig& config) {
    if (!taxonomy.contains(target)) {
        throw Error(ErrorCode::UnknownLabel, "target '" + target.value() + "' is not in " + taxonomy.name());
    }
    ScoreVector scores = score_sentence(sentence, backend, taxonomy);
    return make_judgment(std::string(trim(sentence)), std::move(scores), target, taxonomy, config);
}

}  // namespace rrk
