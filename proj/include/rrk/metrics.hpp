#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrk/rational.hpp"
#include "rrk/remote.hpp"
#include "rrk/taxonomy.hpp"
#include "rrk/verifier.hpp"

namespace rrk {

struct JudgeQuery {
    std::string prompt;       // rendered template sent to remote judges
    std::string explanation;  // raw explanation, used by the stub
    std::size_t max_labels = 1;
};

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual std::string id() const = 0;
    virtual std::string reply(const JudgeQuery& query) const = 0;
    // Concurrency the backend tolerates.
    virtual std::size_t max_in_flight() const { return 1; }
};

// Runs the verifier over the whole explanation. For single-label queries it
// replies with the top-scoring label; otherwise with the thresholded selection,
// comma separated.
class StubJudge final : public JudgeBackend {
public:
    StubJudge(std::shared_ptr<const VerifierBackend> verifier, Taxonomy taxonomy, VerifierConfig config = {});

    std::string id() const override { return "stub:" + verifier_->id(); }
    std::string reply(const JudgeQuery& query) const override;
    std::size_t max_in_flight() const override { return 8; }

private:
    std::shared_ptr<const VerifierBackend> verifier_;
    Taxonomy taxonomy_;
    VerifierConfig config_;
};

// {"prompt": ...} -> {"reply": ...}
class RemoteJudge final : public JudgeBackend {
public:
    explicit RemoteJudge(RemoteOptions options) : client_(std::move(options), ErrorCode::JudgeUnavailable) {}

    std::string id() const override { return "remote:" + client_.url(); }
    std::string reply(const JudgeQuery& query) const override { return client_.ask(query.prompt); }
    std::size_t max_in_flight() const override { return client_.max_in_flight(); }

private:
    ChatClient client_;
};

struct JudgeVerdict {
    std::string raw_reply;
    std::optional<EmotionLabel> label;  // empty when the reply did not parse

    bool parseable() const noexcept { return label.has_value(); }
};

// Comma-separated label list in taxonomy order, or a seeded permutation.
std::string render_emotion_list(const Taxonomy& taxonomy, std::optional<std::uint64_t> shuffle_seed);
std::string render_judge_prompt(std::string_view explanation, const Taxonomy& taxonomy,
                                std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Queries the judge; an unparseable reply is retried once and then recorded as
// unparseable. EmptyInput for a blank explanation.
JudgeVerdict judge_emotion(std::string_view explanation, const Taxonomy& taxonomy, const JudgeBackend& judge,
                           std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct EvalRecord {
    std::string id;
    EmotionLabel y;      // ground truth
    EmotionLabel y_hat;  // prediction from the answer block
    std::string explanation;
    std::optional<JudgeVerdict> verdict;  // set once judged

    // Judged explanation label; empty if unjudged or unparseable.
    std::optional<EmotionLabel> e() const { return verdict ? verdict->label : std::nullopt; }
};

// Judges every record, up to `jobs` at a time. Blank explanations get an
// unparseable verdict without a query.
std::vector<JudgeVerdict> judge_records(std::span<EvalRecord> records, const Taxonomy& taxonomy,
                                        const JudgeBackend& judge, std::size_t jobs,
                                        std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct CoherenceMetrics {
    Rational eea;  // mean 1[e = y]
    Rational fcr;  // mean 1[e = y and y_hat = y]
    Rational epc;  // mean 1[e = y_hat]
};

// EmptyInput for no records, UnjudgedRecord if any verdict is missing.
// Unparseable verdicts never match.
CoherenceMetrics coherence_metrics(std::span<const EvalRecord> records);

struct RecognitionMetrics {
    Rational war;
    double uar = 0.0;
    std::vector<std::optional<double>> per_class_recall;  // taxonomy order, empty without support
    std::vector<std::vector<std::size_t>> confusion;      // [truth][prediction]
};

RecognitionMetrics recognition_metrics(std::span<const EvalRecord> records, const Taxonomy& taxonomy);

// Percentages of samples per (explanation correct, answer correct) cell.
struct QuadrantDistribution {
    Rational explanation_and_answer;
    Rational explanation_only;
    Rational answer_only;
    Rational neither;
};

QuadrantDistribution quadrant_distribution(std::span<const EvalRecord> records);

// Fraction of positions with the same parsed label. Unparseable verdicts match
// nothing. LengthMismatch for unequal or empty lists.
double judge_agreement(std::span<const JudgeVerdict> a, std::span<const JudgeVerdict> b);

struct MetricsReport {
    std::string taxonomy;
    std::vector<EmotionLabel> labels;
    std::size_t n = 0;
    Rational eea, fcr, epc, war;
    double uar = 0.0;
    std::map<std::string, double> per_class_recall;
    std::vector<std::vector<std::size_t>> confusion;
    QuadrantDistribution quadrants;
    std::size_t unparseable_verdicts = 0;
    std::string judge;
    std::optional<std::string> second_judge;
    std::optional<double> agreement;
};

MetricsReport build_report(std::span<const EvalRecord> records, const Taxonomy& taxonomy, std::string judge_id);

// InvariantViolation naming the first broken identity.
void check_report(const MetricsReport& report);

}  // namespace rrk
