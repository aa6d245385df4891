#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrk/corpus.hpp"
#include "rrk/grpo.hpp"
#include "rrk/metrics.hpp"
#include "rrk/reward.hpp"
#include "rrk/taxonomy.hpp"
#include "rrk/verifier.hpp"

namespace rrk {

// JSON with keys sorted and every float printed with 17 significant digits, so
// equal documents serialize to equal bytes.
std::string canonical_dump(const nlohmann::json& value);

// Writes to a sibling temporary file and renames it into place. IoFailure on
// any error, including an empty path.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Parsed JSON Lines; blank lines are skipped, anything else that fails to parse
// raises MalformedLine with its 1-based line number.
struct JsonLine {
    std::size_t line_no;
    nlohmann::json value;
};
std::vector<JsonLine> read_json_lines(const std::filesystem::path& path);

// ---- samples ----

struct Sample {
    std::string id;
    EmotionLabel gt;
    std::vector<std::string> outputs;
};

// {"id", "gt", "outputs": [...]} per line.
std::vector<Sample> read_samples(const std::filesystem::path& path, const Taxonomy& taxonomy);
void write_samples(const std::filesystem::path& path, std::span<const Sample> samples);

// ---- scored outputs ----

nlohmann::json scored_record_json(const std::string& id, std::size_t gen_index, const ScoredOutput& scored);

// ---- evaluation ----

// {"id", "gt", "prediction", "explanation"} per line.
std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path, const Taxonomy& taxonomy);

nlohmann::json report_to_json(const MetricsReport& report);
// Validates with check_report first, then writes canonical JSON atomically.
void write_report(const MetricsReport& report, const std::filesystem::path& path);

// ---- corpus ----

// {"text", "labels"?, "source"?} per line. Records without labels come back
// with an empty label list and are meant to be pseudo-labelled.
std::vector<CorpusRecord> read_descriptions(const std::filesystem::path& path, const Taxonomy& taxonomy);
nlohmann::json corpus_record_json(const CorpusRecord& record);
void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> records);
nlohmann::json plan_to_json(std::span<const AugmentationRequest> plan);

// ---- training history ----

std::string history_csv(const TrainingHistory& history);
void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path);

// ---- configuration ----

struct RunConfig {
    std::string taxonomy = "MAFW";
    double tau = 0.5;
    std::size_t k_max = 2;
    std::size_t group_size = 16;
    double beta = 0.04;
    double learning_rate = 0.1;
    std::size_t steps = 1000;
    std::uint64_t seed = 0;
    std::string verifier_url;
    std::string judge_url;
    std::size_t jobs = 8;
    double lexicon_weight = 0.4;

    VerifierConfig verifier() const { return {tau, k_max}; }
    TrainConfig train() const { return {group_size, beta, learning_rate, steps, seed}; }
    // InvalidValue naming the first out-of-range field.
    void validate() const;
};

// Recognized keys, also the names accepted in config files and overrides.
const std::vector<std::string>& config_keys();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// Precedence, lowest first: defaults, RRK_<KEY> environment variables, the
// config file (`key = value` lines, '#' comments), then `overrides`.
// A missing file leaves the defaults in place.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::map<std::string, std::string>& overrides = {},
                      const EnvLookup& env = process_env);

}  // namespace rrk
