#include "rrk/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "rrk/error.hpp"

namespace rrk {

namespace {

void enumerate_subsets(std::size_t n, std::size_t m, std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> current(m);
    std::iota(current.begin(), current.end(), std::size_t{0});
    while (true) {
        out.push_back(current);
        std::size_t i = m;
        while (i > 0 && current[i - 1] == n - m + (i - 1)) --i;
        if (i == 0) return;
        ++current[i - 1];
        for (std::size_t j = i; j < m; ++j) current[j] = current[j - 1] + 1;
    }
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw Error(ErrorCode::LengthMismatch,
                    std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

// d KL(pi || q) / d theta_k = pi_k (ln pi_k - ln q_k - KL)
std::vector<double> kl_gradient(std::span<const double> probs, std::span<const double> ref_probs) {
    const double kl = kl_divergence(probs, ref_probs);
    std::vector<double> grad(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) {
        grad[k] = probs[k] * (std::log(probs[k]) - std::log(ref_probs[k]) - kl);
    }
    return grad;
}

std::vector<double> training_rewards(std::span<const CandidateOutcome> outcomes, RewardMode mode) {
    std::vector<double> out;
    out.reserve(outcomes.size());
    for (const auto& o : outcomes) out.push_back(o.training_reward(mode));
    return out;
}

}  // namespace

// ---- grammar --------------------------------------------------------------

CandidateGrammar::CandidateGrammar(Taxonomy taxonomy, std::vector<PoolSentence> pool,
                                   std::vector<EmotionLabel> answers, std::size_t subset_size)
    : taxonomy_(std::move(taxonomy)), pool_(std::move(pool)), answers_(std::move(answers)),
      subset_size_(subset_size) {
    if (pool_.empty()) throw Error(ErrorCode::InvalidValue, "grammar needs at least one sentence");
    if (answers_.empty()) throw Error(ErrorCode::InvalidValue, "grammar needs at least one answer");
    if (subset_size_ < 1 || subset_size_ > pool_.size()) {
        throw Error(ErrorCode::InvalidValue, "subset_size must lie in [1, pool size]");
    }
    for (const auto& s : pool_) {
        const auto split = split_sentences(s.text);
        if (split.size() != 1 || split.front() != s.text) {
            throw Error(ErrorCode::InvalidValue, "pool entry '" + s.text + "' is not a single trimmed sentence");
        }
        fixtures_.set(s.text, s.scores);
    }
    for (const auto& a : answers_) {
        if (!taxonomy_.contains(a)) throw Error(ErrorCode::UnknownLabel, "answer '" + a.value() + "' not in taxonomy");
    }

    std::vector<std::vector<std::size_t>> subsets;
    enumerate_subsets(pool_.size(), subset_size_, subsets);
    for (const auto& subset : subsets) {
        std::string think;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            if (i) think += ' ';
            think += pool_[subset[i]].text;
        }
        for (std::size_t a = 0; a < answers_.size(); ++a) {
            candidates_.push_back(
                {subset, a, "<think>" + think + "</think><answer>" + answers_[a].value() + "</answer>"});
        }
    }
    if (candidates_.size() < 2) throw Error(ErrorCode::InvalidValue, "grammar must yield at least 2 candidates");
}

GrammarFile parse_grammar(const nlohmann::json& doc) {
    try {
        Taxonomy taxonomy = resolve_taxonomy(doc.at("taxonomy").get<std::string>());
        std::vector<PoolSentence> pool;
        for (const auto& s : doc.at("sentences")) {
            pool.push_back({s.at("text").get<std::string>(), s.value("scores", TableBackend::Row{})});
        }
        std::vector<EmotionLabel> answers;
        for (const auto& a : doc.at("answers")) answers.push_back(normalize_label(a.get<std::string>(), taxonomy));
        std::vector<TrainingSample> samples;
        for (const auto& s : doc.at("samples")) {
            samples.push_back({s.at("id").get<std::string>(), normalize_label(s.at("gt").get<std::string>(), taxonomy)});
        }
        if (samples.empty()) throw Error(ErrorCode::InvalidValue, "grammar file lists no samples");
        const auto m = doc.value("subset_size", std::size_t{1});
        return {CandidateGrammar(std::move(taxonomy), std::move(pool), std::move(answers), m), std::move(samples)};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidValue, std::string("grammar: ") + e.what());
    }
}

GrammarFile load_grammar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open grammar " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::InvalidValue, path.string() + " is not valid JSON");
    return parse_grammar(doc);
}

// ---- policy math ----------------------------------------------------------

std::vector<double> policy_probs(const ToyPolicy& policy) {
    if (policy.logits.empty()) throw Error(ErrorCode::InvalidValue, "policy has no candidates");
    for (double l : policy.logits) {
        if (!std::isfinite(l)) throw Error(ErrorCode::NonFiniteLogit, "policy logit is not finite");
    }
    const double top = *std::max_element(policy.logits.begin(), policy.logits.end());
    std::vector<double> probs(policy.logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = std::exp(policy.logits[i] - top);
        total += probs[i];
    }
    for (auto& p : probs) p = std::max(p / total, std::numeric_limits<double>::min());
    return probs;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    require_same_size(p.size(), q.size(), "kl_divergence");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "advantages need at least two rewards");
    std::vector<double> out(rewards.size(), 0.0);
    if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) return out;

    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double std_dev = std::sqrt(var / n);
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (std_dev + kAdvantageEpsilon);
    return out;
}

std::string_view to_string(RewardMode mode) {
    return mode == RewardMode::answer_only ? "answer_only" : "answer_plus_explanation";
}

RewardMode parse_reward_mode(std::string_view text) {
    if (text == "answer_only") return RewardMode::answer_only;
    if (text == "answer_plus_explanation") return RewardMode::answer_plus_explanation;
    throw Error(ErrorCode::InvalidValue, "unknown reward mode '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
    if (group_size < 2) throw Error(ErrorCode::InvalidValue, "group_size must be at least 2");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidValue, "beta must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorCode::InvalidValue, "learning_rate must be > 0");
    }
}

// ---- rewards --------------------------------------------------------------

RewardTable build_reward_table(const CandidateGrammar& grammar, std::span<const TrainingSample> samples,
                               const VerifierConfig& verifier_config) {
    const auto& taxonomy = grammar.taxonomy();
    const auto& fixtures = grammar.fixtures();

    std::vector<ScoreVector> sentence_scores;
    for (const auto& s : grammar.sentence_pool()) sentence_scores.push_back(score_sentence(s.text, fixtures, taxonomy));

    RewardTable table;
    for (const auto& sample : samples) {
        const auto target_index = taxonomy.index_of(sample.target);
        if (!target_index) throw Error(ErrorCode::UnknownLabel, "sample target not in taxonomy");
        std::vector<CandidateOutcome> outcomes;
        outcomes.reserve(grammar.size());
        for (const auto& cand : grammar.candidates()) {
            CandidateOutcome o;
            o.reward = total_reward(cand.rendered, sample.target, fixtures, taxonomy, verifier_config);
            o.answer_matches = grammar.answers()[cand.answer] == sample.target;

            std::vector<double> mean(taxonomy.size(), 0.0);
            for (auto s : cand.sentences) {
                for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += sentence_scores[s][k];
            }
            const auto top = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
            o.explanation_matches = top == *target_index;
            outcomes.push_back(o);
        }
        table.sample_ids.push_back(sample.id);
        table.outcomes.push_back(std::move(outcomes));
    }
    return table;
}

// ---- sampling and updates -------------------------------------------------

GroupRollout sample_group(const ToyPolicy& policy, std::span<const CandidateOutcome> outcomes,
                          std::string sample_id, const TrainConfig& config, RewardMode mode, SeededRng& rng) {
    const auto probs = policy_probs(policy);
    require_same_size(probs.size(), outcomes.size(), "sample_group");
    GroupRollout rollout;
    rollout.sample_id = std::move(sample_id);
    std::vector<double> rewards;
    for (std::size_t g = 0; g < config.group_size; ++g) {
        const auto idx = rng.categorical(probs);
        rollout.candidate_indices.push_back(idx);
        rollout.rewards.push_back(outcomes[idx].reward);
        rewards.push_back(outcomes[idx].training_reward(mode));
    }
    rollout.advantages = compute_advantages(rewards);
    return rollout;
}

GroupRollout sample_group(const ToyPolicy& policy, const CandidateGrammar& grammar, const TrainingSample& sample,
                          const TrainConfig& config, RewardMode mode, SeededRng& rng,
                          const VerifierConfig& verifier_config) {
    const auto probs = policy_probs(policy);
    require_same_size(probs.size(), grammar.size(), "sample_group");
    GroupRollout rollout;
    rollout.sample_id = sample.id;
    std::vector<double> rewards;
    for (std::size_t g = 0; g < config.group_size; ++g) {
        const auto idx = rng.categorical(probs);
        const auto reward = total_reward(grammar.candidates()[idx].rendered, sample.target, grammar.fixtures(),
                                         grammar.taxonomy(), verifier_config);
        rollout.candidate_indices.push_back(idx);
        rollout.rewards.push_back(reward);
        rewards.push_back(mode == RewardMode::answer_only ? reward.r_format + reward.r_answer : reward.r_total);
    }
    rollout.advantages = compute_advantages(rewards);
    return rollout;
}

double surrogate_objective(const ToyPolicy& policy, std::span<const double> ref_probs,
                           std::span<const GroupRollout> rollouts, double beta) {
    const auto probs = policy_probs(policy);
    // log-softmax computed directly to stay accurate for tiny probabilities
    const double top = *std::max_element(policy.logits.begin(), policy.logits.end());
    double log_z = 0.0;
    for (double l : policy.logits) log_z += std::exp(l - top);
    log_z = top + std::log(log_z);

    double sum = 0.0;
    std::size_t draws = 0;
    for (const auto& r : rollouts) {
        for (std::size_t i = 0; i < r.candidate_indices.size(); ++i) {
            sum += r.advantages[i] * (policy.logits[r.candidate_indices[i]] - log_z);
            ++draws;
        }
    }
    const double pg = draws ? sum / static_cast<double>(draws) : 0.0;
    return pg - beta * kl_divergence(probs, ref_probs);
}

std::vector<double> surrogate_gradient(const ToyPolicy& policy, std::span<const double> ref_probs,
                                       std::span<const GroupRollout> rollouts, double beta) {
    const auto probs = policy_probs(policy);
    require_same_size(probs.size(), ref_probs.size(), "surrogate_gradient");
    std::vector<double> grad(probs.size(), 0.0);

    std::size_t draws = 0;
    double advantage_sum = 0.0;
    for (const auto& r : rollouts) {
        require_same_size(r.candidate_indices.size(), r.advantages.size(), "rollout");
        for (std::size_t i = 0; i < r.candidate_indices.size(); ++i) {
            grad.at(r.candidate_indices[i]) += r.advantages[i];
            advantage_sum += r.advantages[i];
            ++draws;
        }
    }
    if (draws > 0) {
        const double scale = 1.0 / static_cast<double>(draws);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = (grad[k] - advantage_sum * probs[k]) * scale;
    }
    if (beta != 0.0) {
        const auto kl_grad = kl_gradient(probs, ref_probs);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= beta * kl_grad[k];
    }
    return grad;
}

ToyPolicy grpo_step(const ToyPolicy& policy, const ToyPolicy& ref_policy, std::span<const GroupRollout> rollouts,
                    const TrainConfig& config) {
    if (rollouts.empty()) throw Error(ErrorCode::EmptyInput, "grpo_step needs at least one rollout");
    const auto ref_probs = policy_probs(ref_policy);
    const auto grad = surrogate_gradient(policy, ref_probs, rollouts, config.beta);
    ToyPolicy next = policy;
    for (std::size_t k = 0; k < grad.size(); ++k) next.logits[k] += config.learning_rate * grad[k];
    return next;
}

std::vector<double> exact_gradient(const ToyPolicy& policy, std::span<const double> ref_probs,
                                   std::span<const double> rewards, double beta) {
    const auto probs = policy_probs(policy);
    require_same_size(probs.size(), rewards.size(), "exact_gradient");
    std::vector<double> grad(probs.size(), 0.0);

    const bool constant = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
    if (!constant) {
        double mean = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) mean += probs[k] * rewards[k];
        double var = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) var += probs[k] * (rewards[k] - mean) * (rewards[k] - mean);
        const double denom = std::sqrt(var) + kAdvantageEpsilon;
        for (std::size_t k = 0; k < probs.size(); ++k) grad[k] = probs[k] * (rewards[k] - mean) / denom;
    }
    if (beta != 0.0) {
        const auto kl_grad = kl_gradient(probs, ref_probs);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= beta * kl_grad[k];
    }
    return grad;
}

// ---- training loops -------------------------------------------------------

HistoryRow policy_statistics(std::size_t step, std::span<const double> probs, std::span<const double> ref_probs,
                             const RewardTable& table) {
    HistoryRow row;
    row.step = step;
    row.kl_to_ref = kl_divergence(probs, ref_probs);
    if (table.outcomes.empty()) return row;
    for (const auto& outcomes : table.outcomes) {
        require_same_size(probs.size(), outcomes.size(), "policy_statistics");
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const auto& o = outcomes[k];
            row.expected_total_reward += probs[k] * o.reward.r_total;
            row.expected_r_explanation += probs[k] * o.reward.r_explanation;
            double& mass = o.explanation_matches ? (o.answer_matches ? row.mass_EA : row.mass_Ea)
                                                 : (o.answer_matches ? row.mass_eA : row.mass_ea);
            mass += probs[k];
        }
    }
    const double n = static_cast<double>(table.outcomes.size());
    row.expected_total_reward /= n;
    row.expected_r_explanation /= n;
    row.mass_EA /= n;
    row.mass_Ea /= n;
    row.mass_eA /= n;
    row.mass_ea /= n;
    return row;
}

TrainingHistory train(const RewardTable& table, const TrainConfig& config, RewardMode mode) {
    config.validate();
    if (table.outcomes.empty()) throw Error(ErrorCode::EmptyInput, "training needs at least one sample");
    const ToyPolicy reference = ToyPolicy::uniform(table.candidates());
    const auto ref_probs = policy_probs(reference);

    TrainingHistory history;
    history.final_policy = reference;
    history.rows.push_back(policy_statistics(0, ref_probs, ref_probs, table));

    SeededRng rng(config.seed);
    std::vector<GroupRollout> rollouts;
    for (std::size_t step = 1; step <= config.steps; ++step) {
        rollouts.clear();
        for (std::size_t s = 0; s < table.outcomes.size(); ++s) {
            rollouts.push_back(
                sample_group(history.final_policy, table.outcomes[s], table.sample_ids[s], config, mode, rng));
        }
        history.final_policy = grpo_step(history.final_policy, reference, rollouts, config);
        history.rows.push_back(policy_statistics(step, policy_probs(history.final_policy), ref_probs, table));
    }
    return history;
}

TrainingHistory train(const CandidateGrammar& grammar, std::span<const TrainingSample> samples,
                      const TrainConfig& config, RewardMode mode, const VerifierConfig& verifier_config) {
    return train(build_reward_table(grammar, samples, verifier_config), config, mode);
}

TrainingHistory train_exact(const RewardTable& table, const TrainConfig& config, RewardMode mode) {
    config.validate();
    if (table.outcomes.empty()) throw Error(ErrorCode::EmptyInput, "training needs at least one sample");
    const ToyPolicy reference = ToyPolicy::uniform(table.candidates());
    const auto ref_probs = policy_probs(reference);

    std::vector<std::vector<double>> rewards;
    for (const auto& outcomes : table.outcomes) rewards.push_back(training_rewards(outcomes, mode));

    TrainingHistory history;
    history.final_policy = reference;
    history.rows.push_back(policy_statistics(0, ref_probs, ref_probs, table));
    const double n = static_cast<double>(rewards.size());
    for (std::size_t step = 1; step <= config.steps; ++step) {
        std::vector<double> grad(table.candidates(), 0.0);
        for (const auto& r : rewards) {
            // beta is applied once below rather than per sample
            const auto g = exact_gradient(history.final_policy, ref_probs, r, 0.0);
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k] / n;
        }
        if (config.beta != 0.0) {
            const auto kl_grad = kl_gradient(policy_probs(history.final_policy), ref_probs);
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= config.beta * kl_grad[k];
        }
        for (std::size_t k = 0; k < grad.size(); ++k) history.final_policy.logits[k] += config.learning_rate * grad[k];
        history.rows.push_back(policy_statistics(step, policy_probs(history.final_policy), ref_probs, table));
    }
    return history;
}

}  // namespace rrk
