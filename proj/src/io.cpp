#include "rrk/io.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "rrk/error.hpp"
#include "rrk/text.hpp"

namespace rrk {

namespace {

std::string format_double(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidValue, "cannot serialize a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

void dump_into(const nlohmann::json& v, std::string& out) {
    using value_t = nlohmann::json::value_t;
    switch (v.type()) {
        case value_t::null: out += "null"; break;
        case value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
        case value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); break;
        case value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); break;
        case value_t::number_float: out += format_double(v.get<double>()); break;
        case value_t::string:
            out += v.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
            break;
        case value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : v) {
                if (!first) out += ',';
                first = false;
                dump_into(item, out);
            }
            out += ']';
            break;
        }
        case value_t::object: {
            // nlohmann::json objects are std::map-backed, so keys iterate sorted
            out += '{';
            bool first = true;
            for (const auto& [key, item] : v.items()) {
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(key).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
                out += ':';
                dump_into(item, out);
            }
            out += '}';
            break;
        }
        default: throw Error(ErrorCode::InvalidValue, "unsupported JSON value");
    }
}

std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::MalformedLine, std::string("field '") + key + "' must be a string", line);
    }
    return it->get<std::string>();
}

EmotionLabel require_label(const std::string& text, const Taxonomy& taxonomy, std::size_t line) {
    auto label = try_normalize_label(text, taxonomy);
    if (!label) throw Error(ErrorCode::UnknownLabel, "'" + text + "' is not a label of " + taxonomy.name(), line);
    return *label;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    T value{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw Error(ErrorCode::InvalidValue, key + ": cannot parse '" + text + "'");
    }
    return value;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "taxonomy") cfg.taxonomy = std::string(trim(value));
    else if (key == "tau") cfg.tau = parse_number<double>(key, value);
    else if (key == "k_max") cfg.k_max = parse_number<std::size_t>(key, value);
    else if (key == "group_size") cfg.group_size = parse_number<std::size_t>(key, value);
    else if (key == "beta") cfg.beta = parse_number<double>(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
    else if (key == "steps") cfg.steps = parse_number<std::size_t>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "verifier_url") cfg.verifier_url = std::string(trim(value));
    else if (key == "judge_url") cfg.judge_url = std::string(trim(value));
    else if (key == "jobs") cfg.jobs = parse_number<std::size_t>(key, value);
    else if (key == "lexicon_weight") cfg.lexicon_weight = parse_number<double>(key, value);
    else throw Error(ErrorCode::InvalidValue, "unknown configuration key '" + key + "'");
}

}  // namespace

std::string canonical_dump(const nlohmann::json& value) {
    std::string out;
    dump_into(value, out);
    return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.empty()) throw Error(ErrorCode::IoFailure, "output path is empty");
    // Devices and pipes (e.g. /dev/stdout) cannot be replaced by a rename.
    std::error_code status_ec;
    const auto status = std::filesystem::status(path, status_ec);
    if (!status_ec && std::filesystem::exists(status) && !std::filesystem::is_regular_file(status)) {
        std::ofstream out(path, std::ios::binary);
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoFailure, "write to " + path.string() + " failed");
        return;
    }
    static std::atomic<unsigned> counter{0};
    auto tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error(ErrorCode::IoFailure, "write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw Error(ErrorCode::IoFailure, "cannot move output into " + path.string() + ": " + ec.message());
    }
}

std::vector<JsonLine> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<JsonLine> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto value = nlohmann::json::parse(line, nullptr, false);
        if (value.is_discarded()) throw Error(ErrorCode::MalformedLine, "invalid JSON", line_no);
        if (!value.is_object()) throw Error(ErrorCode::MalformedLine, "expected a JSON object", line_no);
        out.push_back({line_no, std::move(value)});
    }
    return out;
}

// ---- samples ----

std::vector<Sample> read_samples(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    std::vector<Sample> samples;
    std::set<std::string> ids;
    for (const auto& [line, obj] : read_json_lines(path)) {
        Sample s;
        s.id = require_string(obj, "id", line);
        if (s.id.empty()) throw Error(ErrorCode::MalformedLine, "empty id", line);
        s.gt = require_label(require_string(obj, "gt", line), taxonomy, line);
        auto outputs = obj.find("outputs");
        if (outputs == obj.end() || !outputs->is_array() || outputs->empty()) {
            throw Error(ErrorCode::MalformedLine, "'outputs' must be a nonempty array", line);
        }
        for (const auto& o : *outputs) {
            if (!o.is_string()) throw Error(ErrorCode::MalformedLine, "outputs must be strings", line);
            s.outputs.push_back(o.get<std::string>());
        }
        if (!ids.insert(s.id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + s.id + "'", line);
        samples.push_back(std::move(s));
    }
    return samples;
}

void write_samples(const std::filesystem::path& path, std::span<const Sample> samples) {
    std::string content;
    for (const auto& s : samples) {
        content += canonical_dump({{"id", s.id}, {"gt", s.gt.value()}, {"outputs", s.outputs}});
        content += '\n';
    }
    atomic_write(path, content);
}

// ---- scored outputs ----

nlohmann::json scored_record_json(const std::string& id, std::size_t gen_index, const ScoredOutput& scored) {
    nlohmann::json sentences = nlohmann::json::array();
    for (const auto& j : scored.explanation.judgments) {
        nlohmann::json labels = nlohmann::json::array();
        for (const auto& l : j.selected) labels.push_back(l.value());
        sentences.push_back({{"text", j.sentence}, {"labels", labels}, {"neutral", j.is_neutral},
                             {"match", j.matches_target}});
    }
    return {{"id", id},
            {"gen_index", gen_index},
            {"r_explanation", scored.reward.r_explanation},
            {"r_format", scored.reward.r_format},
            {"r_answer", scored.reward.r_answer},
            {"r_total", scored.reward.r_total},
            {"sentences", sentences}};
}

// ---- evaluation ----

std::vector<EvalRecord> read_eval_records(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    std::vector<EvalRecord> records;
    std::set<std::string> ids;
    for (const auto& [line, obj] : read_json_lines(path)) {
        EvalRecord r;
        r.id = require_string(obj, "id", line);
        r.y = require_label(require_string(obj, "gt", line), taxonomy, line);
        r.y_hat = require_label(require_string(obj, "prediction", line), taxonomy, line);
        r.explanation = require_string(obj, "explanation", line);
        if (!ids.insert(r.id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + r.id + "'", line);
        records.push_back(std::move(r));
    }
    return records;
}

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : r.labels) labels.push_back(l.value());
    nlohmann::json doc = {
        {"taxonomy", r.taxonomy},
        {"labels", labels},
        {"n", r.n},
        {"eea", r.eea.to_double()},
        {"fcr", r.fcr.to_double()},
        {"epc", r.epc.to_double()},
        {"war", r.war.to_double()},
        {"uar", r.uar},
        {"per_class_recall", r.per_class_recall},
        {"confusion", r.confusion},
        {"quadrants",
         {{"explanation_correct_answer_correct", r.quadrants.explanation_and_answer.to_double()},
          {"explanation_correct_answer_wrong", r.quadrants.explanation_only.to_double()},
          {"explanation_wrong_answer_correct", r.quadrants.answer_only.to_double()},
          {"explanation_wrong_answer_wrong", r.quadrants.neither.to_double()}}},
        {"exact",
         {{"eea", r.eea.str()}, {"fcr", r.fcr.str()}, {"epc", r.epc.str()}, {"war", r.war.str()}}},
        {"unparseable_verdicts", r.unparseable_verdicts},
        {"judge", r.judge},
    };
    if (r.second_judge) doc["second_judge"] = *r.second_judge;
    if (r.agreement) doc["agreement"] = *r.agreement;
    return doc;
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
    check_report(report);
    atomic_write(path, canonical_dump(report_to_json(report)) + "\n");
}

// ---- corpus ----

std::vector<CorpusRecord> read_descriptions(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    std::vector<CorpusRecord> records;
    for (const auto& [line, obj] : read_json_lines(path)) {
        CorpusRecord r;
        r.text = require_string(obj, "text", line);
        if (trim(r.text).empty()) throw Error(ErrorCode::MalformedLine, "empty text", line);
        if (auto labels = obj.find("labels"); labels != obj.end()) {
            if (!labels->is_array()) throw Error(ErrorCode::MalformedLine, "'labels' must be an array", line);
            for (const auto& l : *labels) {
                if (!l.is_string()) throw Error(ErrorCode::MalformedLine, "labels must be strings", line);
                r.labels.push_back(require_label(l.get<std::string>(), taxonomy, line));
            }
        }
        r.source = r.labels.empty() ? RecordSource::generated : RecordSource::human;
        if (obj.contains("source")) {
            try {
                r.source = parse_record_source(require_string(obj, "source", line));
            } catch (const Error& e) {
                throw Error(ErrorCode::MalformedLine, e.what(), line);
            }
        }
        if (!r.labels.empty()) {
            try {
                r.validate(taxonomy);
            } catch (const Error& e) {
                throw Error(ErrorCode::MalformedLine, e.what(), line);
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

nlohmann::json corpus_record_json(const CorpusRecord& record) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : record.labels) labels.push_back(l.value());
    return {{"text", record.text}, {"labels", labels}, {"source", std::string(to_string(record.source))}};
}

void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> records) {
    std::string content;
    for (const auto& r : records) content += canonical_dump(corpus_record_json(r)) + "\n";
    atomic_write(path, content);
}

nlohmann::json plan_to_json(std::span<const AugmentationRequest> plan) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : plan) {
        doc.push_back({{"label", r.label.value()},
                       {"deficit", r.deficit},
                       {"seed_examples", r.seed_examples},
                       {"rendered_prompt", r.rendered_prompt}});
    }
    return doc;
}

// ---- training history ----

std::string history_csv(const TrainingHistory& history) {
    std::ostringstream out;
    out << "step,expected_total_reward,expected_r_explanation,kl_to_ref,"
           "mass_quadrant_EA,mass_quadrant_Ea,mass_quadrant_eA,mass_quadrant_ea\n";
    for (const auto& row : history.rows) {
        out << row.step;
        for (double v : {row.expected_total_reward, row.expected_r_explanation, row.kl_to_ref, row.mass_EA,
                         row.mass_Ea, row.mass_eA, row.mass_ea}) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    return out.str();
}

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path) {
    atomic_write(path, history_csv(history));
}

// ---- configuration ----

void RunConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::InvalidValue, field + ": " + why);
    };
    if (taxonomy.empty()) bad("taxonomy", "must not be empty");
    if (!(tau > 0.0 && tau < 1.0)) bad("tau", "must lie in (0, 1)");
    if (k_max < 1) bad("k_max", "must be at least 1");
    if (group_size < 2) bad("group_size", "must be at least 2");
    if (!(beta >= 0.0) || !std::isfinite(beta)) bad("beta", "must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate", "must be > 0");
    if (jobs < 1 || jobs > 4096) bad("jobs", "must lie in [1, 4096]");
    if (!(lexicon_weight > 0.0 && lexicon_weight <= 1.0)) bad("lexicon_weight", "must lie in (0, 1]");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{"taxonomy", "tau",  "k_max",        "group_size",
                                               "beta",     "learning_rate", "steps", "seed",
                                               "verifier_url", "judge_url", "jobs", "lexicon_weight"};
    return keys;
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::map<std::string, std::string>& overrides, const EnvLookup& env) {
    RunConfig cfg;
    for (const auto& key : config_keys()) {
        std::string var = "RRK_";
        for (char c : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (auto v = env(var)) apply_setting(cfg, key, *v);
    }

    if (path && std::filesystem::exists(*path)) {
        std::ifstream in(*path);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot open config " + path->string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto content = trim(line);
            if (content.empty() || content.front() == '#') continue;
            const auto eq = content.find('=');
            if (eq == std::string_view::npos) {
                throw Error(ErrorCode::InvalidValue, path->string() + ":" + std::to_string(line_no) + ": expected key = value");
            }
            apply_setting(cfg, std::string(trim(content.substr(0, eq))), std::string(trim(content.substr(eq + 1))));
        }
    }

    for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);
    cfg.validate();
    return cfg;
}

}  // namespace rrk
