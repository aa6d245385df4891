#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrk/reward.hpp"
#include "rrk/rng.hpp"
#include "rrk/taxonomy.hpp"
#include "rrk/verifier.hpp"

namespace rrk {

struct PoolSentence {
    std::string text;          // a single sentence, terminator included
    TableBackend::Row scores;  // verifier fixture for this sentence
};

struct Candidate {
    std::vector<std::size_t> sentences;  // indices into the pool, ascending
    std::size_t answer = 0;              // index into answers()
    std::string rendered;                // <think>...</think><answer>...</answer>
};

// Finite output space: every size-m subset of the sentence pool paired with
// every answer label.
class CandidateGrammar {
public:
    CandidateGrammar(Taxonomy taxonomy, std::vector<PoolSentence> pool, std::vector<EmotionLabel> answers,
                     std::size_t subset_size);

    const Taxonomy& taxonomy() const noexcept { return taxonomy_; }
    const std::vector<PoolSentence>& sentence_pool() const noexcept { return pool_; }
    const std::vector<EmotionLabel>& answers() const noexcept { return answers_; }
    std::size_t subset_size() const noexcept { return subset_size_; }
    const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
    std::size_t size() const noexcept { return candidates_.size(); }
    // Table verifier built from the pool's fixture scores.
    const TableBackend& fixtures() const noexcept { return fixtures_; }

private:
    Taxonomy taxonomy_;
    std::vector<PoolSentence> pool_;
    std::vector<EmotionLabel> answers_;
    std::size_t subset_size_;
    std::vector<Candidate> candidates_;
    TableBackend fixtures_;
};

struct TrainingSample {
    std::string id;
    EmotionLabel target;
};

struct GrammarFile {
    CandidateGrammar grammar;
    std::vector<TrainingSample> samples;
};

// {"taxonomy", "subset_size", "sentences": [{"text", "scores"}], "answers",
//  "samples": [{"id", "gt"}]}
GrammarFile load_grammar(const std::filesystem::path& path);
GrammarFile parse_grammar(const nlohmann::json& doc);

struct ToyPolicy {
    std::vector<double> logits;

    static ToyPolicy uniform(std::size_t n) { return {std::vector<double>(n, 0.0)}; }
};

// Softmax; NonFiniteLogit on any non-finite logit. Outputs are floored at the
// smallest normal double so every candidate keeps positive mass.
std::vector<double> policy_probs(const ToyPolicy& policy);

// sum p_i ln(p_i / q_i) with 0 ln 0 = 0; LengthMismatch on size mismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// (r - mean) / (population std + 1e-8); all zeros when the rewards are equal.
// GroupTooSmall below two rewards.
std::vector<double> compute_advantages(std::span<const double> rewards);

inline constexpr double kAdvantageEpsilon = 1e-8;

enum class RewardMode { answer_only, answer_plus_explanation };
std::string_view to_string(RewardMode mode);
RewardMode parse_reward_mode(std::string_view text);

struct TrainConfig {
    std::size_t group_size = 16;
    double beta = 0.04;
    double learning_rate = 0.1;
    std::size_t steps = 1000;
    std::uint64_t seed = 0;

    // InvalidValue unless G >= 2, beta >= 0 and learning_rate > 0.
    void validate() const;
};

struct CandidateOutcome {
    RewardBreakdown reward;
    bool explanation_matches = false;  // judged explanation label == target
    bool answer_matches = false;

    double training_reward(RewardMode mode) const {
        return mode == RewardMode::answer_only ? reward.r_format + reward.r_answer : reward.r_total;
    }
};

// Per-sample outcomes of every candidate, computed once because the grammar's
// verifier is a fixed table.
struct RewardTable {
    std::vector<std::string> sample_ids;
    std::vector<std::vector<CandidateOutcome>> outcomes;  // [sample][candidate]

    std::size_t candidates() const { return outcomes.empty() ? 0 : outcomes.front().size(); }
};

// Scores every candidate through total_reward. The explanation counts as
// matching when the element-wise mean of its sentence score vectors has the
// target as top label (ties to the earlier label).
RewardTable build_reward_table(const CandidateGrammar& grammar, std::span<const TrainingSample> samples,
                               const VerifierConfig& verifier_config = {});

struct GroupRollout {
    std::string sample_id;
    std::vector<std::size_t> candidate_indices;
    std::vector<RewardBreakdown> rewards;
    std::vector<double> advantages;
};

GroupRollout sample_group(const ToyPolicy& policy, std::span<const CandidateOutcome> outcomes,
                          std::string sample_id, const TrainConfig& config, RewardMode mode, SeededRng& rng);

// Same as above, scoring each draw through total_reward on the grammar.
GroupRollout sample_group(const ToyPolicy& policy, const CandidateGrammar& grammar, const TrainingSample& sample,
                          const TrainConfig& config, RewardMode mode, SeededRng& rng,
                          const VerifierConfig& verifier_config = {});

// Surrogate maximised by one GRPO step, averaged over all draws:
//   J = (1/M) sum_i A_i ln pi(c_i) - beta KL(pi || pi_ref)
double surrogate_objective(const ToyPolicy& policy, std::span<const double> ref_probs,
                           std::span<const GroupRollout> rollouts, double beta);
std::vector<double> surrogate_gradient(const ToyPolicy& policy, std::span<const double> ref_probs,
                                       std::span<const GroupRollout> rollouts, double beta);

// One ascent step on the surrogate.
ToyPolicy grpo_step(const ToyPolicy& policy, const ToyPolicy& ref_policy, std::span<const GroupRollout> rollouts,
                    const TrainConfig& config);

// Full-support analogue of the sampled gradient: advantages are standardised
// under the policy itself, giving pi_k * A_k - beta * dKL/dtheta_k.
std::vector<double> exact_gradient(const ToyPolicy& policy, std::span<const double> ref_probs,
                                   std::span<const double> rewards, double beta);

struct HistoryRow {
    std::size_t step = 0;
    double expected_total_reward = 0.0;
    double expected_r_explanation = 0.0;
    double kl_to_ref = 0.0;
    double mass_EA = 0.0;  // explanation and answer match
    double mass_Ea = 0.0;  // explanation only
    double mass_eA = 0.0;  // answer only
    double mass_ea = 0.0;  // neither
};

struct TrainingHistory {
    std::vector<HistoryRow> rows;  // steps + 1 rows; row 0 is the reference policy
    ToyPolicy final_policy;
};

// Exact statistics of a policy against the reward table, averaged over samples.
HistoryRow policy_statistics(std::size_t step, std::span<const double> probs, std::span<const double> ref_probs,
                             const RewardTable& table);

// Sampled GRPO from a uniform reference policy.
TrainingHistory train(const RewardTable& table, const TrainConfig& config, RewardMode mode);
TrainingHistory train(const CandidateGrammar& grammar, std::span<const TrainingSample> samples,
                      const TrainConfig& config, RewardMode mode, const VerifierConfig& verifier_config = {});

// Deterministic variant driven by exact_gradient; config.seed and group_size
// are unused.
TrainingHistory train_exact(const RewardTable& table, const TrainConfig& config, RewardMode mode);

}  // namespace rrk
