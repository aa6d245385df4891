// rrk: score, evaluate, train-toy, build-corpus and verify from the command line.
//
// Exit codes: 0 success, 2 invalid input or arguments, 3 backend failure.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrk/corpus.hpp"
#include "rrk/error.hpp"
#include "rrk/grpo.hpp"
#include "rrk/io.hpp"
#include "rrk/metrics.hpp"
#include "rrk/parallel.hpp"
#include "rrk/remote.hpp"
#include "rrk/reward.hpp"
#include "rrk/taxonomy.hpp"
#include "rrk/verifier.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitBackend = 3;

std::string fmt_default(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

// Flags that map onto RunConfig keys are collected as overrides so that the
// flag > file > env > default precedence is resolved in one place.
struct Settings {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    std::string verifier_kind = "lexicon";
    std::string table_path;
    std::string lexicon_path;

    rrk::RunConfig resolve() const {
        std::optional<std::filesystem::path> path;
        if (!config_path.empty()) path = config_path;
        return rrk::load_config(path, overrides);
    }
};

void add_config_flag(CLI::App* cmd, Settings& s, const std::string& flag, const std::string& key,
                     const std::string& description, const std::string& default_value) {
    cmd->add_option_function<std::string>(
           flag, [&s, key](const std::string& v) { s.overrides[key] = v; }, description)
        ->default_str(default_value);
}

void add_common(CLI::App* cmd, Settings& s) {
    const rrk::RunConfig defaults;
    cmd->add_option("--config", s.config_path, "Key = value configuration file")->default_str("none");
    add_config_flag(cmd, s, "--taxonomy", "taxonomy", "EMER, DFEW, MAFW or a label file", defaults.taxonomy);
    add_config_flag(cmd, s, "--jobs", "jobs", "Parallel backend requests", std::to_string(defaults.jobs));
}

void add_verifier(CLI::App* cmd, Settings& s) {
    const rrk::RunConfig defaults;
    cmd->add_option("--verifier", s.verifier_kind, "Verifier backend")
        ->check(CLI::IsMember({"lexicon", "table", "remote"}))
        ->capture_default_str();
    cmd->add_option("--table", s.table_path, "Sentence -> {label: score} JSON fixture (table verifier)")
        ->default_str("none");
    cmd->add_option("--lexicon", s.lexicon_path, "Label -> keyword list JSON (lexicon verifier)")
        ->default_str("builtin");
    add_config_flag(cmd, s, "--lexicon-weight", "lexicon_weight", "Per-keyword weight w in 1-(1-w)^n",
                    fmt_default(defaults.lexicon_weight));
    add_config_flag(cmd, s, "--verifier-url", "verifier_url", "Remote verifier endpoint (env RRK_VERIFIER_URL)",
                    "none");
    add_config_flag(cmd, s, "--tau", "tau", "Label selection threshold", fmt_default(defaults.tau));
    add_config_flag(cmd, s, "--k-max", "k_max", "Maximum labels per sentence", std::to_string(defaults.k_max));
}

rrk::RemoteOptions remote_options(const std::string& url, const rrk::RunConfig& cfg) {
    rrk::RemoteOptions o;
    o.url = url;
    o.max_in_flight = cfg.jobs;
    return o;
}

std::shared_ptr<const rrk::VerifierBackend> make_verifier(const Settings& s, const rrk::RunConfig& cfg) {
    if (s.verifier_kind == "table") {
        if (s.table_path.empty()) throw rrk::Error(rrk::ErrorCode::InvalidValue, "--verifier table needs --table");
        return std::make_shared<rrk::TableBackend>(rrk::TableBackend::from_file(s.table_path));
    }
    if (s.verifier_kind == "remote") {
        if (cfg.verifier_url.empty()) {
            throw rrk::Error(rrk::ErrorCode::InvalidValue, "--verifier remote needs --verifier-url or RRK_VERIFIER_URL");
        }
        return std::make_shared<rrk::RemoteVerifier>(remote_options(cfg.verifier_url, cfg));
    }
    if (!s.lexicon_path.empty()) {
        return std::make_shared<rrk::LexiconBackend>(rrk::LexiconBackend::from_file(s.lexicon_path, cfg.lexicon_weight));
    }
    return std::make_shared<rrk::LexiconBackend>(rrk::LexiconBackend::builtin(cfg.lexicon_weight));
}

// "stub", "remote" (configured judge_url) or an explicit http:// URL.
std::unique_ptr<rrk::JudgeBackend> make_judge(const std::string& choice, const Settings& s, const rrk::RunConfig& cfg,
                                              const rrk::Taxonomy& taxonomy) {
    if (choice == "stub") return std::make_unique<rrk::StubJudge>(make_verifier(s, cfg), taxonomy, cfg.verifier());
    std::string url = choice == "remote" ? cfg.judge_url : choice;
    if (url.empty()) throw rrk::Error(rrk::ErrorCode::InvalidValue, "remote judge needs --judge-url or RRK_JUDGE_URL");
    return std::make_unique<rrk::RemoteJudge>(remote_options(url, cfg));
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw rrk::Error(rrk::ErrorCode::IoFailure, "cannot open " + path);
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw rrk::Error(rrk::ErrorCode::InvalidValue, path + " is not valid JSON");
    return doc;
}

std::string histogram_line(const rrk::ClassHistogram& h) {
    std::string out;
    for (std::size_t i = 0; i < h.labels.size(); ++i) {
        if (i) out += ' ';
        out += h.labels[i].value() + "=" + std::to_string(h.counts[i]);
    }
    return out;
}

// ---- subcommands ----

struct ScoreArgs {
    std::string in, out;
};

int run_score(const Settings& s, const ScoreArgs& a) {
    const auto cfg = s.resolve();
    const auto taxonomy = rrk::resolve_taxonomy(cfg.taxonomy);
    const auto samples = rrk::read_samples(a.in, taxonomy);
    const auto verifier = make_verifier(s, cfg);

    std::vector<std::pair<std::size_t, std::size_t>> work;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t g = 0; g < samples[i].outputs.size(); ++g) work.emplace_back(i, g);
    }
    const auto lines = rrk::parallel_map(work.size(), cfg.jobs, [&](std::size_t w) {
        const auto& [i, g] = work[w];
        const auto& sample = samples[i];
        const auto scored = rrk::score_output(sample.outputs[g], sample.gt, *verifier, taxonomy, cfg.verifier());
        return rrk::canonical_dump(rrk::scored_record_json(sample.id, g, scored));
    });
    std::string content;
    for (const auto& l : lines) content += l + "\n";
    rrk::atomic_write(a.out, content);
    std::cerr << "rrk score: " << lines.size() << " generations from " << samples.size() << " samples -> " << a.out
              << "\n";
    return kExitOk;
}

struct EvaluateArgs {
    std::string in, out;
    std::string judge = "stub";
    std::string second_judge;
    std::optional<std::uint64_t> shuffle_seed;
};

int run_evaluate(const Settings& s, const EvaluateArgs& a) {
    const auto cfg = s.resolve();
    const auto taxonomy = rrk::resolve_taxonomy(cfg.taxonomy);
    auto records = rrk::read_eval_records(a.in, taxonomy);
    if (records.empty()) throw rrk::Error(rrk::ErrorCode::EmptyInput, a.in + " holds no records");

    const auto judge = make_judge(a.judge, s, cfg, taxonomy);
    const auto verdicts = rrk::judge_records(records, taxonomy, *judge, cfg.jobs, a.shuffle_seed);
    auto report = rrk::build_report(records, taxonomy, judge->id());

    if (!a.second_judge.empty()) {
        auto second_records = records;
        const auto second = make_judge(a.second_judge, s, cfg, taxonomy);
        const auto second_verdicts = rrk::judge_records(second_records, taxonomy, *second, cfg.jobs, a.shuffle_seed);
        report.second_judge = second->id();
        report.agreement = rrk::judge_agreement(verdicts, second_verdicts);
    }
    rrk::write_report(report, a.out);
    std::cerr << "rrk evaluate: n=" << report.n << " eea=" << report.eea.to_double() << " fcr="
              << report.fcr.to_double() << " epc=" << report.epc.to_double() << " war=" << report.war.to_double()
              << " uar=" << report.uar << " -> " << a.out << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string grammar, out;
    std::string reward_mode = "answer_plus_explanation";
    bool exact = false;
};

int run_train(const Settings& s, const TrainArgs& a) {
    const auto cfg = s.resolve();
    const auto file = rrk::load_grammar(a.grammar);
    const auto mode = rrk::parse_reward_mode(a.reward_mode);
    const auto table = rrk::build_reward_table(file.grammar, file.samples, cfg.verifier());
    const auto history = a.exact ? rrk::train_exact(table, cfg.train(), mode) : rrk::train(table, cfg.train(), mode);
    rrk::write_history_csv(history, a.out);
    const auto& last = history.rows.back();
    std::cerr << "rrk train-toy: " << file.grammar.size() << " candidates, " << cfg.steps << " steps, mode "
              << a.reward_mode << ": E[R]=" << last.expected_total_reward << " KL=" << last.kl_to_ref
              << " EA=" << last.mass_EA << " eA=" << last.mass_eA << " -> " << a.out << "\n";
    return kExitOk;
}

struct CorpusArgs {
    std::string in, out, floors, plan_out;
    std::string judge = "stub";
    std::string generator = "template";
};

int run_build_corpus(const Settings& s, const CorpusArgs& a) {
    const auto cfg = s.resolve();
    const auto taxonomy = rrk::resolve_taxonomy(cfg.taxonomy);
    auto records = rrk::read_descriptions(a.in, taxonomy);
    const auto floors = rrk::parse_floors(read_json_file(a.floors), taxonomy);

    const auto judge = make_judge(a.judge, s, cfg, taxonomy);
    const auto labelled = rrk::parallel_map(records.size(), std::min(cfg.jobs, judge->max_in_flight()),
                                            [&](std::size_t i) {
                                                if (!records[i].labels.empty()) return records[i];
                                                auto r = rrk::label_description(records[i].text, taxonomy, *judge);
                                                r.source = records[i].source;
                                                return r;
                                            });

    const auto before = rrk::class_histogram(labelled, taxonomy);
    rrk::SeededRng rng(cfg.seed);
    const auto plan = rrk::plan_augmentation(before, floors, labelled, rng);

    std::unique_ptr<rrk::DescriptionGenerator> generator;
    if (a.generator == "template") {
        generator = std::make_unique<rrk::TemplateGenerator>();
    } else {
        generator = std::make_unique<rrk::RemoteGenerator>(remote_options(a.generator, cfg));
    }
    auto corpus = labelled;
    for (auto& r : rrk::execute_plan(plan, *generator, cfg.jobs)) corpus.push_back(std::move(r));
    for (const auto& r : corpus) r.validate(taxonomy);

    if (!a.plan_out.empty()) rrk::atomic_write(a.plan_out, rrk::canonical_dump(rrk::plan_to_json(plan)) + "\n");
    rrk::write_corpus(a.out, corpus);
    std::cerr << "rrk build-corpus: before " << histogram_line(before) << "\n"
              << "rrk build-corpus: after  " << histogram_line(rrk::class_histogram(corpus, taxonomy)) << "\n"
              << "rrk build-corpus: " << plan.size() << " augmentation requests, " << corpus.size()
              << " records -> " << a.out << "\n";
    return kExitOk;
}

int run_verify(const Settings& s, const std::string& text) {
    const auto cfg = s.resolve();
    const auto taxonomy = rrk::resolve_taxonomy(cfg.taxonomy);
    const auto verifier = make_verifier(s, cfg);
    const auto scores = rrk::score_sentence(text, *verifier, taxonomy);
    const auto labels = rrk::select_labels(scores, taxonomy, cfg.verifier());

    nlohmann::json out;
    out["labels"] = nlohmann::json::array();
    bool neutral = false;
    for (const auto& l : labels) {
        out["labels"].push_back(l.value());
        neutral = neutral || l.is_neutral();
    }
    out["neutral"] = neutral;
    out["scores"] = nlohmann::json::object();
    for (std::size_t i = 0; i < taxonomy.size(); ++i) out["scores"][taxonomy[i].value()] = scores[i];
    std::cout << rrk::canonical_dump(out) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explanation-reward scoring, coherence evaluation and toy GRPO training"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    const rrk::RunConfig defaults;

    Settings settings;

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "Compute rewards for every generation of every sample");
    score->add_option("--in", score_args.in, "Samples JSON Lines")->required();
    score->add_option("--out", score_args.out, "Scored records JSON Lines")->required();
    add_common(score, settings);
    add_verifier(score, settings);

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Judge explanations and report coherence and recognition metrics");
    evaluate->add_option("--in", eval_args.in, "Evaluation records JSON Lines")->required();
    evaluate->add_option("--out", eval_args.out, "Report JSON")->required();
    evaluate->add_option("--judge", eval_args.judge, "stub, remote or an http:// URL")->capture_default_str();
    evaluate->add_option("--second-judge", eval_args.second_judge, "Optional second judge for agreement")
        ->default_str("none");
    evaluate->add_option("--shuffle-seed", eval_args.shuffle_seed, "Permute the prompt's emotion list")
        ->default_str("none");
    add_config_flag(evaluate, settings, "--judge-url", "judge_url", "Remote judge endpoint (env RRK_JUDGE_URL)",
                    "none");
    add_common(evaluate, settings);
    add_verifier(evaluate, settings);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train-toy", "GRPO on a finite candidate grammar");
    train->add_option("--grammar", train_args.grammar, "Grammar JSON")->required();
    train->add_option("--out", train_args.out, "History CSV")->required();
    train->add_option("--reward-mode", train_args.reward_mode, "Training reward")
        ->check(CLI::IsMember({"answer_only", "answer_plus_explanation"}))
        ->capture_default_str();
    train->add_flag("--exact", train_args.exact, "Use full-support expected gradients instead of sampled groups");
    add_config_flag(train, settings, "--steps", "steps", "Update steps", std::to_string(defaults.steps));
    add_config_flag(train, settings, "--beta", "beta", "KL coefficient", fmt_default(defaults.beta));
    add_config_flag(train, settings, "--group-size", "group_size", "Draws per group", std::to_string(defaults.group_size));
    add_config_flag(train, settings, "--lr", "learning_rate", "Learning rate", fmt_default(defaults.learning_rate));
    add_config_flag(train, settings, "--seed", "seed", "Sampling seed", std::to_string(defaults.seed));
    add_config_flag(train, settings, "--tau", "tau", "Label selection threshold", fmt_default(defaults.tau));
    add_config_flag(train, settings, "--k-max", "k_max", "Maximum labels per sentence", std::to_string(defaults.k_max));
    train->add_option("--config", settings.config_path, "Key = value configuration file")->default_str("none");

    CorpusArgs corpus_args;
    auto* corpus = app.add_subcommand("build-corpus", "Pseudo-label descriptions and plan class augmentation");
    corpus->add_option("--in", corpus_args.in, "Descriptions JSON Lines")->required();
    corpus->add_option("--floors", corpus_args.floors, "JSON object label -> minimum count")->required();
    corpus->add_option("--out", corpus_args.out, "Corpus JSON Lines")->required();
    corpus->add_option("--plan-out", corpus_args.plan_out, "Augmentation plan JSON")->default_str("none");
    corpus->add_option("--judge", corpus_args.judge, "stub, remote or an http:// URL")->capture_default_str();
    corpus->add_option("--generator", corpus_args.generator, "template or an http:// URL")->capture_default_str();
    add_config_flag(corpus, settings, "--judge-url", "judge_url", "Remote judge endpoint (env RRK_JUDGE_URL)", "none");
    add_config_flag(corpus, settings, "--seed", "seed", "Seed for example selection", std::to_string(defaults.seed));
    add_common(corpus, settings);
    add_verifier(corpus, settings);

    std::string verify_text;
    auto* verify = app.add_subcommand("verify", "Score one sentence and print the selected labels");
    verify->add_option("--text", verify_text, "Sentence to verify")->required();
    add_common(verify, settings);
    add_verifier(verify, settings);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*score) return run_score(settings, score_args);
        if (*evaluate) return run_evaluate(settings, eval_args);
        if (*train) return run_train(settings, train_args);
        if (*corpus) return run_build_corpus(settings, corpus_args);
        if (*verify) return run_verify(settings, verify_text);
    } catch (const rrk::Error& e) {
        std::cerr << "rrk: " << e.what() << "\n";
        return rrk::is_backend_error(e.code()) ? kExitBackend : kExitInvalid;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "rrk: invalid JSON: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "rrk: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}
