#include "rrk/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rrk/error.hpp"
#include "rrk/parallel.hpp"
#include "rrk/resources.hpp"
#include "rrk/text.hpp"

namespace rrk {

namespace {

void require_nonempty(std::span<const EvalRecord> records) {
    if (records.empty()) throw Error(ErrorCode::EmptyInput, "no evaluation records");
}

void require_judged(std::span<const EvalRecord> records) {
    for (const auto& r : records) {
        if (!r.verdict) throw Error(ErrorCode::UnjudgedRecord, "record '" + r.id + "' has not been judged");
    }
}

Rational ratio(std::size_t k, std::size_t n) {
    return {static_cast<std::int64_t>(k), static_cast<std::int64_t>(n)};
}

}  // namespace

StubJudge::StubJudge(std::shared_ptr<const VerifierBackend> verifier, Taxonomy taxonomy, VerifierConfig config)
    : verifier_(std::move(verifier)), taxonomy_(std::move(taxonomy)), config_(config) {}

std::string StubJudge::reply(const JudgeQuery& query) const {
    const auto scores = score_sentence(query.explanation, *verifier_, taxonomy_);
    if (query.max_labels <= 1) {
        const auto values = scores.values();
        const auto top = std::max_element(values.begin(), values.end()) - values.begin();
        return taxonomy_[static_cast<std::size_t>(top)].value();
    }
    VerifierConfig cfg = config_;
    cfg.k_max = query.max_labels;
    std::vector<std::string> names;
    for (auto i : select_label_indices(scores, cfg)) names.push_back(taxonomy_[i].value());
    return join(names, ", ");
}

std::string render_emotion_list(const Taxonomy& taxonomy, std::optional<std::uint64_t> shuffle_seed) {
    std::vector<std::string> names;
    for (const auto& l : taxonomy.ordered_for_prompt(shuffle_seed)) names.push_back(l.value());
    return join(names, ", ");
}

std::string render_judge_prompt(std::string_view explanation, const Taxonomy& taxonomy,
                                std::optional<std::uint64_t> shuffle_seed) {
    std::string prompt(resources::kJudgeEmotionPrompt);
    prompt = replace_all(std::move(prompt), "{Emotion List}", render_emotion_list(taxonomy, shuffle_seed));
    return replace_all(std::move(prompt), "{Explanation}", explanation);
}

JudgeVerdict judge_emotion(std::string_view explanation, const Taxonomy& taxonomy, const JudgeBackend& judge,
                           std::optional<std::uint64_t> shuffle_seed) {
    const auto text = trim(explanation);
    if (text.empty()) throw Error(ErrorCode::EmptyInput, "cannot judge an empty explanation");
    const JudgeQuery query{render_judge_prompt(text, taxonomy, shuffle_seed), std::string(text), 1};

    JudgeVerdict verdict;
    for (int attempt = 0; attempt < 2; ++attempt) {
        verdict.raw_reply = judge.reply(query);
        verdict.label = try_normalize_label(verdict.raw_reply, taxonomy);
        if (verdict.label) break;
    }
    return verdict;
}

std::vector<JudgeVerdict> judge_records(std::span<EvalRecord> records, const Taxonomy& taxonomy,
                                        const JudgeBackend& judge, std::size_t jobs,
                                        std::optional<std::uint64_t> shuffle_seed) {
    auto verdicts = parallel_map(records.size(), std::min(jobs, judge.max_in_flight()), [&](std::size_t i) {
        if (trim(records[i].explanation).empty()) return JudgeVerdict{};
        return judge_emotion(records[i].explanation, taxonomy, judge, shuffle_seed);
    });
    for (std::size_t i = 0; i < records.size(); ++i) records[i].verdict = verdicts[i];
    return verdicts;
}

CoherenceMetrics coherence_metrics(std::span<const EvalRecord> records) {
    require_nonempty(records);
    require_judged(records);
    std::size_t ee = 0, fc = 0, ep = 0;
    for (const auto& r : records) {
        const auto e = r.e();
        if (!e) continue;
        if (*e == r.y) ++ee;
        if (*e == r.y && r.y_hat == r.y) ++fc;
        if (*e == r.y_hat) ++ep;
    }
    const auto n = records.size();
    return {ratio(ee, n), ratio(fc, n), ratio(ep, n)};
}

RecognitionMetrics recognition_metrics(std::span<const EvalRecord> records, const Taxonomy& taxonomy) {
    require_nonempty(records);
    const auto size = taxonomy.size();
    RecognitionMetrics m;
    m.confusion.assign(size, std::vector<std::size_t>(size, 0));
    std::size_t correct = 0;
    for (const auto& r : records) {
        const auto truth = taxonomy.index_of(r.y);
        const auto pred = taxonomy.index_of(r.y_hat);
        if (!truth || !pred) throw Error(ErrorCode::UnknownLabel, "record '" + r.id + "' has labels outside the taxonomy");
        ++m.confusion[*truth][*pred];
        if (*truth == *pred) ++correct;
    }
    m.war = ratio(correct, records.size());

    m.per_class_recall.assign(size, std::nullopt);
    double recall_sum = 0.0;
    std::size_t classes = 0;
    for (std::size_t c = 0; c < size; ++c) {
        std::size_t support = 0;
        for (auto v : m.confusion[c]) support += v;
        if (support == 0) continue;
        const double recall = static_cast<double>(m.confusion[c][c]) / static_cast<double>(support);
        m.per_class_recall[c] = recall;
        recall_sum += recall;
        ++classes;
    }
    m.uar = recall_sum / static_cast<double>(classes);
    return m;
}

QuadrantDistribution quadrant_distribution(std::span<const EvalRecord> records) {
    require_nonempty(records);
    require_judged(records);
    std::size_t both = 0, expl = 0, ans = 0, none = 0;
    for (const auto& r : records) {
        const auto e = r.e();
        const bool e_ok = e && *e == r.y;
        const bool a_ok = r.y_hat == r.y;
        if (e_ok && a_ok) ++both;
        else if (e_ok) ++expl;
        else if (a_ok) ++ans;
        else ++none;
    }
    const auto n = static_cast<std::int64_t>(records.size());
    auto pct = [&](std::size_t k) { return Rational(100 * static_cast<std::int64_t>(k), n); };
    return {pct(both), pct(expl), pct(ans), pct(none)};
}

double judge_agreement(std::span<const JudgeVerdict> a, std::span<const JudgeVerdict> b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error(ErrorCode::LengthMismatch, "agreement needs two equally long, nonempty verdict lists");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].label && b[i].label && *a[i].label == *b[i].label) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(a.size());
}

MetricsReport build_report(std::span<const EvalRecord> records, const Taxonomy& taxonomy, std::string judge_id) {
    const auto coherence = coherence_metrics(records);
    auto recognition = recognition_metrics(records, taxonomy);

    MetricsReport report;
    report.taxonomy = taxonomy.name();
    report.labels = taxonomy.labels();
    report.n = records.size();
    report.eea = coherence.eea;
    report.fcr = coherence.fcr;
    report.epc = coherence.epc;
    report.war = recognition.war;
    report.uar = recognition.uar;
    for (std::size_t c = 0; c < taxonomy.size(); ++c) {
        if (recognition.per_class_recall[c]) report.per_class_recall[taxonomy[c].value()] = *recognition.per_class_recall[c];
    }
    report.confusion = std::move(recognition.confusion);
    report.quadrants = quadrant_distribution(records);
    report.unparseable_verdicts = static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const EvalRecord& r) { return !r.e(); }));
    report.judge = std::move(judge_id);
    return report;
}

void check_report(const MetricsReport& r) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); };
    if (r.n == 0) fail("report covers no samples");
    const Rational zero(0), one(1), hundred(100);
    for (const auto& [name, v] : {std::pair{"eea", r.eea}, {"fcr", r.fcr}, {"epc", r.epc}, {"war", r.war}}) {
        if (v < zero || v > one) fail(std::string(name) + " outside [0, 1]");
    }
    if (!(r.uar >= 0.0 && r.uar <= 1.0)) fail("uar outside [0, 1]");
    if (r.fcr > std::min(r.eea, r.war)) fail("fcr exceeds min(eea, war)");
    if (r.fcr < r.eea + r.war - one) fail("fcr below eea + war - 1");

    const auto& q = r.quadrants;
    if (q.explanation_and_answer + q.explanation_only + q.answer_only + q.neither != hundred) {
        fail("quadrant percentages do not sum to 100");
    }
    if (q.explanation_and_answer / hundred != r.fcr) fail("explanation-and-answer quadrant differs from fcr");
    if ((q.explanation_and_answer + q.explanation_only) / hundred != r.eea) fail("explanation quadrants differ from eea");
    if ((q.explanation_and_answer + q.answer_only) / hundred != r.war) fail("answer quadrants differ from war");

    if (!r.confusion.empty()) {
        if (r.confusion.size() != r.labels.size()) fail("confusion matrix size differs from label count");
        std::size_t total = 0, diagonal = 0;
        for (std::size_t i = 0; i < r.confusion.size(); ++i) {
            if (r.confusion[i].size() != r.labels.size()) fail("confusion matrix is not square");
            for (std::size_t j = 0; j < r.confusion[i].size(); ++j) total += r.confusion[i][j];
            diagonal += r.confusion[i][i];
        }
        if (total != r.n) fail("confusion matrix total differs from n");
        if (Rational(static_cast<std::int64_t>(diagonal), static_cast<std::int64_t>(r.n)) != r.war) {
            fail("war differs from confusion-matrix accuracy");
        }
    }
    if (!r.per_class_recall.empty()) {
        double sum = 0.0;
        for (const auto& [label, recall] : r.per_class_recall) sum += recall;
        if (std::abs(sum / static_cast<double>(r.per_class_recall.size()) - r.uar) > 1e-12) {
            fail("uar differs from mean per-class recall");
        }
    }
    if (r.agreement && !(*r.agreement >= 0.0 && *r.agreement <= 1.0)) fail("agreement outside [0, 1]");
}

}  // namespace rrk
