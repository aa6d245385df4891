// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rrk/error.hpp"
#include "rrk/grpo.hpp"
#include "rrk/io.hpp"
#include "rrk/metrics.hpp"
#include "rrk/reward.hpp"
#include "support.hpp"

using namespace rrk;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---- 1: explanation reward vs the pseudo-code transcription ----------------

Outcome reward_oracle() {
    Outcome out;
    const auto start = Clock::now();
    const auto mafw = builtin_taxonomy("MAFW");
    rrk_test::Gen gen(1);
    std::size_t multi = 0, degenerate = 0;
    for (int trial = 0; trial < 1000 && out.pass; ++trial) {
        TableBackend table;
        std::vector<std::vector<double>> scores;
        std::string text;
        for (std::size_t i = 0, n = gen.range(1, 12); i < n; ++i) {
            std::vector<double> u(mafw.size());
            TableBackend::Row row;
            // sparse rows make the neutral and multi-label branches common
            for (std::size_t k = 0; k < u.size(); ++k) {
                u[k] = gen.coin(0.3) ? gen.grid() : 0.0;
                row[mafw[k].value()] = u[k];
            }
            std::size_t above = 0;
            for (double x : u) above += x > 0.5;
            multi += above >= 2;
            const auto sentence = "Sentence " + std::to_string(i) + " of case " + std::to_string(trial) + ".";
            table.set(sentence, row);
            scores.push_back(std::move(u));
            text += sentence + " ";
        }
        const auto target = gen.index(mafw.size());
        const auto want = oracle::explanation_reward(scores, target, *mafw.neutral_index(), true);
        const auto got = explanation_reward(text, mafw[target], table, mafw, {});
        const Rational expected(want.num, want.den);
        degenerate += target != *mafw.neutral_index() && got.n_total == got.n_neutral;
        out.require(got.exact == expected, "case " + std::to_string(trial) + ": got " + got.exact.str() +
                                               ", oracle " + expected.str());
        out.require(std::abs(got.r_explanation - expected.to_double()) <= 1e-12, "float mismatch");
    }
    const double t = seconds_since(start);
    out.require(t < 1.0, "runtime " + fmt("%.3f s", t));
    if (out.pass) {
        out.detail = "1000 cases exact, " + std::to_string(multi) + " multi-label sentences, " +
                     std::to_string(degenerate) + " zero-denominator cases, " + fmt("%.3f s", t);
    }
    return out;
}

// ---- 2: metric identities --------------------------------------------------

EvalRecord eval_record(std::size_t id, const Taxonomy& t, const oracle::Triple& tr) {
    EvalRecord r{std::to_string(id), t[static_cast<std::size_t>(tr.y)], t[static_cast<std::size_t>(tr.y_hat)], "x", {}};
    JudgeVerdict v;
    v.raw_reply = tr.e < 0 ? "unsure" : t[static_cast<std::size_t>(tr.e)].value();
    if (tr.e >= 0) v.label = t[static_cast<std::size_t>(tr.e)];
    r.verdict = v;
    return r;
}

Outcome metric_identities() {
    Outcome out;
    const auto start = Clock::now();
    const auto dfew = builtin_taxonomy("DFEW");
    rrk_test::Gen gen(2);
    std::vector<oracle::Triple> triples;
    for (int i = 0; i < 500; ++i) {
        const int y = static_cast<int>(gen.index(7));
        const int y_hat = gen.coin(0.5) ? y : static_cast<int>(gen.index(7));
        const int e = gen.coin(0.05) ? -1 : (gen.coin(0.5) ? y : static_cast<int>(gen.index(7)));
        triples.push_back({e, y_hat, y});
    }

    // every prefix is a record set; each is checked as drawn and with e := y_hat
    std::vector<EvalRecord> records, tied_records;
    std::vector<oracle::Triple> prefix, tied_prefix;
    for (std::size_t i = 0; i < triples.size() && out.pass; ++i) {
        prefix.push_back(triples[i]);
        tied_prefix.push_back({triples[i].y_hat, triples[i].y_hat, triples[i].y});
        records.push_back(eval_record(i, dfew, prefix.back()));
        tied_records.push_back(eval_record(i, dfew, tied_prefix.back()));

        for (bool tied : {false, true}) {
            const auto& recs = tied ? tied_records : records;
            const auto k = oracle::count(tied ? tied_prefix : prefix);
            const auto rep = build_report(recs, dfew, "acceptance");
            const auto at = " at n=" + std::to_string(i + 1) + (tied ? " (e=y_hat)" : "");
            out.require(rep.fcr <= std::min(rep.eea, rep.war), "FCR > min(EEA, WAR)" + at);
            out.require(rep.fcr >= rep.eea + rep.war - Rational(1), "FCR < EEA + WAR - 1" + at);
            out.require(rep.eea == Rational(k.eea, k.n) && rep.fcr == Rational(k.fcr, k.n) &&
                            rep.epc == Rational(k.epc, k.n) && rep.war == Rational(k.war, k.n),
                        "counting oracle mismatch" + at);
            out.require(rep.quadrants.explanation_and_answer / Rational(100) == rep.fcr, "quadrant/100 != FCR" + at);
            out.require(rep.quadrants.explanation_and_answer + rep.quadrants.explanation_only ==
                            rep.eea * Rational(100),
                        "quadrant EEA identity" + at);
            out.require(std::abs(rep.uar - oracle::uar(tied ? tied_prefix : prefix, 7)) <= 1e-12, "UAR mismatch" + at);
            if (tied) out.require(rep.epc == Rational(1), "EPC != 1 with e = y_hat" + at);
        }
    }
    const double t = seconds_since(start);
    out.require(t < 1.0, "runtime " + fmt("%.3f s", t));
    if (out.pass) out.detail = "500 triples, 1000 record sets, " + fmt("%.3f s", t);
    return out;
}

// ---- 3: WAR / UAR ----------------------------------------------------------

Outcome war_uar() {
    Outcome out;
    const auto dfew = builtin_taxonomy("DFEW");
    const int a = 0, s = 4;
    const std::vector<EvalRecord> hand = {eval_record(0, dfew, {a, a, a}), eval_record(1, dfew, {s, s, a}),
                                          eval_record(2, dfew, {s, s, s})};
    const auto m = recognition_metrics(hand, dfew);
    out.require(m.war == Rational(2, 3), "hand case WAR " + m.war.str());
    out.require(m.uar == 0.75, "hand case UAR " + fmt("%.17g", m.uar));

    rrk_test::Gen gen(3);
    double worst = 0.0;
    for (int trial = 0; trial < 200 && out.pass; ++trial) {
        // equal support per class; predictions either class-symmetric (same hit
        // count everywhere, errors rotated) or arbitrary
        const int support = static_cast<int>(gen.range(1, 12));
        const bool symmetric = trial % 2 == 0;
        const int hits = static_cast<int>(gen.range(0, static_cast<std::size_t>(support)));
        const int shift = static_cast<int>(gen.range(1, 6));
        std::vector<oracle::Triple> triples;
        for (int c = 0; c < 7; ++c) {
            for (int j = 0; j < support; ++j) {
                int pred = symmetric ? (j < hits ? c : (c + shift) % 7) : static_cast<int>(gen.index(7));
                triples.push_back({pred, pred, c});
            }
        }
        std::vector<EvalRecord> recs;
        for (std::size_t i = 0; i < triples.size(); ++i) recs.push_back(eval_record(i, dfew, triples[i]));
        const auto r = recognition_metrics(recs, dfew);
        const double gap = std::abs(r.war.to_double() - r.uar);
        worst = std::max(worst, gap);
        out.require(gap <= 1e-12, "balanced case WAR != UAR by " + fmt("%.3g", gap));
        out.require(std::abs(r.uar - oracle::uar(triples, 7)) <= 1e-12, "UAR oracle mismatch");
    }
    if (out.pass) out.detail = "hand case 2/3 and 3/4 exact; 200 balanced cases, max |WAR-UAR| " + fmt("%.1e", worst);
    return out;
}

// ---- 4: gradient check -----------------------------------------------------

Outcome gradient_check() {
    Outcome out;
    const auto start = Clock::now();
    rrk_test::Gen gen(4);
    SeededRng rng(4);
    double worst = 0.0;
    constexpr double h = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
        ToyPolicy policy;
        for (int k = 0; k < 8; ++k) policy.logits.push_back(gen.real(-2.0, 2.0));
        ToyPolicy ref;
        for (int k = 0; k < 8; ++k) ref.logits.push_back(gen.real(-1.0, 1.0));
        const auto ref_probs = policy_probs(ref);

        std::vector<CandidateOutcome> outcomes(8);
        for (auto& o : outcomes) o.reward = RewardBreakdown::combine(gen.grid(), 1, gen.coin() ? 1 : 0);
        TrainConfig cfg;
        cfg.group_size = 16;
        cfg.beta = trial < 10 ? 0.0 : gen.real(0.0, 2.0);
        const std::vector<GroupRollout> rollouts = {
            sample_group(policy, outcomes, "g", cfg, RewardMode::answer_plus_explanation, rng)};

        const auto grad = surrogate_gradient(policy, ref_probs, rollouts, cfg.beta);
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < 8; ++k) {
            auto up = policy, down = policy;
            up.logits[k] += h;
            down.logits[k] -= h;
            const double fd = (surrogate_objective(up, ref_probs, rollouts, cfg.beta) -
                               surrogate_objective(down, ref_probs, rollouts, cfg.beta)) / (2 * h);
            diff = std::max(diff, std::abs(fd - grad[k]));
            scale = std::max({scale, std::abs(fd), std::abs(grad[k])});
        }
        const double rel = scale > 0.0 ? diff / scale : diff;
        worst = std::max(worst, rel);
    }
    const double t = seconds_since(start);
    out.require(worst < 1e-4, "max relative error " + fmt("%.3g", worst));
    out.require(t < 5.0, "runtime " + fmt("%.3f s", t));
    if (out.pass) out.detail = "50 policies, max relative error " + fmt("%.2e", worst) + ", " + fmt("%.3f s", t);
    return out;
}

// ---- 5: optimisation behaviour ---------------------------------------------

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
    return tv / 2.0;
}

Outcome optimisation() {
    Outcome out;
    const auto file = load_grammar(rrk_test::fixture("grammar_64.json"));
    const auto table = build_reward_table(file.grammar, file.samples);
    out.require(table.candidates() == 64, "grammar has " + std::to_string(table.candidates()) + " candidates");

    std::size_t best = 0, best_count = 0;
    for (std::size_t k = 0; k < table.candidates(); ++k) {
        const double r = table.outcomes[0][k].reward.r_total;
        if (r > table.outcomes[0][best].reward.r_total) best = k;
    }
    for (const auto& o : table.outcomes[0]) best_count += o.reward.r_total == table.outcomes[0][best].reward.r_total;
    out.require(best_count == 1, "best candidate is not unique");

    TrainConfig cfg;
    cfg.steps = 1000;
    cfg.learning_rate = 0.1;
    cfg.group_size = 16;
    cfg.seed = 2025;

    double slowest = 0.0;
    auto timed = [&](const TrainConfig& c) {
        const auto start = Clock::now();
        auto h = train(table, c, RewardMode::answer_plus_explanation);
        slowest = std::max(slowest, seconds_since(start));
        return h;
    };

    cfg.beta = 0.0;
    const auto greedy = timed(cfg);
    const double p_best = policy_probs(greedy.final_policy)[best];
    out.require(p_best > 0.99, "(a) final probability on the best candidate " + fmt("%.4f", p_best));

    cfg.beta = 100.0;
    const auto anchored = timed(cfg);
    const double tv = total_variation(policy_probs(anchored.final_policy), policy_probs(ToyPolicy::uniform(64)));
    out.require(tv < 0.02, "(b) total variation to the reference " + fmt("%.4f", tv));

    cfg.beta = 0.04;
    const auto first = history_csv(timed(cfg));
    const auto second = history_csv(timed(cfg));
    out.require(first == second, "(c) histories differ between identical seeds");
    rrk_test::TempDir dir;
    write_history_csv(timed(cfg), dir / "a.csv");
    write_history_csv(timed(cfg), dir / "b.csv");
    out.require(rrk_test::slurp(dir / "a.csv") == rrk_test::slurp(dir / "b.csv"), "(c) CSV files differ");

    out.require(slowest < 10.0, "slowest run " + fmt("%.3f s", slowest));
    if (out.pass) {
        out.detail = "(a) p_best " + fmt("%.4f", p_best) + ", (b) TV " + fmt("%.4f", tv) +
                     ", (c) identical CSVs; slowest run " + fmt("%.3f s", slowest);
    }
    return out;
}

// ---- 6: reward shaping direction -------------------------------------------

Outcome shaping() {
    Outcome out;
    const auto file = load_grammar(rrk_test::fixture("grammar_shaping.json"));
    const auto table = build_reward_table(file.grammar, file.samples);
    std::size_t ea_candidates = 0;
    for (const auto& o : table.outcomes[0]) ea_candidates += o.answer_matches && !o.explanation_matches;
    out.require(ea_candidates > 0, "grammar has no answer-correct, explanation-mismatched candidates");

    TrainConfig cfg;  // defaults: G 16, beta 0.04
    cfg.seed = 17;
    const auto answer_only = train(table, cfg, RewardMode::answer_only).rows.back();
    const auto with_expl = train(table, cfg, RewardMode::answer_plus_explanation).rows.back();
    out.require(with_expl.mass_eA < 0.5 * answer_only.mass_eA,
                "eA mass " + fmt("%.4f", with_expl.mass_eA) + " vs " + fmt("%.4f", answer_only.mass_eA));
    if (out.pass) {
        out.detail = "explanation-wrong/answer-right mass " + fmt("%.2f%%", 100 * answer_only.mass_eA) + " -> " +
                     fmt("%.2f%%", 100 * with_expl.mass_eA) + " (" + std::to_string(ea_candidates) + " such candidates)";
    }
    return out;
}

// ---- 7: format / answer fixtures -------------------------------------------

Outcome format_answer() {
    Outcome out;
    const auto dfew = builtin_taxonomy("DFEW");
    struct Case {
        const char* raw;
        const char* target;
        int r_format;
        int r_answer;
    };
    const Case cases[] = {
        {"<think>He frowns deeply.</think><answer>angry</answer>", "angry", 1, 1},
        {"<think>He frowns deeply.</think><answer>sad</answer>", "angry", 1, 0},
        {"<think>He frowns.", "angry", 0, 0},
        {"<think>He frowns.</think>", "angry", 0, 0},
        {"<answer>angry</answer>", "angry", 0, 0},
        {"<answer>angry</answer><think>He frowns.</think>", "angry", 0, 0},
        {"<think>He frowns.</think><answer>angry", "angry", 0, 0},
        {"intro <think>Sad tone.</think>\n<answer>sad</answer> outro", "sad", 1, 1},
        {"<think></think><answer>happy</answer>", "happy", 1, 1},
        {"<think>x</think><answer>Angry</answer>", "angry", 1, 1},
        {"<think>x</think><answer>ANGER</answer>", "angry", 1, 1},
        {"<think>x</think><answer> Sadness. </answer>", "sad", 1, 1},
        {"<think>x</think><answer>fearful</answer>", "fear", 1, 1},
        {"<think>x</think><answer>surprised!</answer>", "surprise", 1, 1},
        {"<think>x</think><answer>joyful</answer>", "happy", 1, 0},
        {"<think>x</think><answer>contempt</answer>", "angry", 1, 0},
        {"<think>x</think><answer></answer>", "neutral", 1, 0},
        {"<think>x</think><answer>angry and sad</answer>", "angry", 1, 0},
        {"<Think>x</Think><answer>angry</answer>", "angry", 0, 0},
        {"<think>a</think> <think>b</think> <answer>neutral</answer>", "neutral", 1, 1},
    };
    int i = 0;
    for (const auto& c : cases) {
        ++i;
        const auto parsed = parse_output(c.raw);
        const int f = format_reward(parsed);
        const int a = answer_reward(parsed, EmotionLabel(c.target), dfew);
        out.require(f == c.r_format && a == c.r_answer,
                    "case " + std::to_string(i) + " gave (" + std::to_string(f) + ", " + std::to_string(a) + ")");
    }
    if (out.pass) out.detail = std::to_string(i) + " fixtures match";
    return out;
}

// ---- 8: degenerate denominators and fuzzing --------------------------------

Outcome degenerate() {
    Outcome out;
    const auto mafw = builtin_taxonomy("MAFW");
    TableBackend table;
    table.set("He wears a coat.", {{"neutral", 0.9}});
    table.set("The wall is white.", {{"neutral", 0.7}, {"sad", 0.2}});
    table.set("A lamp glows.", {{"neutral", 0.3}});
    table.set("He stands rigid, jaw set.", {{"neutral", 0.8}, {"angry", 0.7}});

    for (const char* target : {"angry", "sad", "happy", "contempt"}) {
        const auto r = explanation_reward(std::string("He wears a coat. The wall is white. A lamp glows."),
                                          EmotionLabel(target), table, mafw, {});
        out.require(r.n_neutral == r.n_total && r.r_explanation == 0.0, std::string("all-neutral case for ") + target);
    }
    const auto both = explanation_reward(std::string("He stands rigid, jaw set."), EmotionLabel("angry"), table, mafw, {});
    out.require(both.c == 1 && both.n_neutral == 1 && both.r_explanation == 1.0, "{neutral, target} case");
    const auto two = explanation_reward(std::string("He stands rigid, jaw set. He stands rigid, jaw set. A lamp glows."),
                                        EmotionLabel("angry"), table, mafw, {});
    out.require(two.r_explanation == 1.0, "clamped above 1");

    // fuzz: random tag soup around random sentences with random fixture scores
    rrk_test::Gen gen(8);
    TableBackend fuzz_table;
    std::vector<std::string> pool;
    for (int i = 0; i < 60; ++i) {
        const auto s = "Fuzz sentence " + std::to_string(i) + (gen.coin() ? "." : "!");
        TableBackend::Row row;
        for (std::size_t k = 0; k < mafw.size(); ++k) {
            if (gen.coin(0.25)) row[mafw[k].value()] = gen.coin(0.5) ? gen.grid() : gen.unit();
        }
        fuzz_table.set(s, row);
        pool.push_back(s);
    }
    const std::vector<std::string> pieces = {"<think>", "</think>", "<answer>", "</answer>", " ", "...", "?!",
                                             "\n", "angry", "neutral", "Sadness", "<", ">", "think"};
    double lo = 1.0, hi = 0.0;
    for (int trial = 0; trial < 10000 && out.pass; ++trial) {
        std::string raw;
        if (gen.coin(0.6)) {
            raw = "<think>";
            for (std::size_t i = 0, n = gen.range(0, 8); i < n; ++i) raw += gen.pick(pool) + " ";
            raw += "</think><answer>" + mafw[gen.index(mafw.size())].value() + "</answer>";
        }
        for (std::size_t i = 0, n = gen.range(0, 10); i < n; ++i) {
            const auto where = gen.index(raw.size() + 1);
            raw.insert(where, gen.coin(0.5) ? gen.pick(pieces) : gen.pick(pool));
        }
        const EmotionLabel target = mafw[gen.index(mafw.size())];
        const auto r = total_reward(raw, target, fuzz_table, mafw, {});
        lo = std::min(lo, r.r_explanation);
        hi = std::max(hi, r.r_explanation);
        out.require(r.r_explanation >= 0.0 && r.r_explanation <= 1.0, "R_E out of range on fuzz case " +
                                                                          std::to_string(trial));
        out.require(r.r_total >= 0.0 && r.r_total <= 3.0, "r_total out of range");
    }
    if (out.pass) out.detail = "degenerate cases hold; 10000 fuzzed R_E in [" + fmt("%.3g", lo) + ", " + fmt("%.3g", hi) + "]";
    return out;
}

// ---- 9: end-to-end offline run ---------------------------------------------

bool scored_line_valid(const nlohmann::json& j) {
    if (!j.is_object() || j.size() != 7) return false;
    if (!j.contains("id") || !j["id"].is_string()) return false;
    if (!j.contains("gen_index") || !j["gen_index"].is_number_unsigned()) return false;
    for (const char* k : {"r_explanation", "r_total"}) {
        if (!j.contains(k) || !j[k].is_number_float()) return false;
    }
    for (const char* k : {"r_format", "r_answer"}) {
        if (!j.contains(k) || !j[k].is_number_integer()) return false;
    }
    const double total = j["r_explanation"].get<double>() + j["r_format"].get<int>() + j["r_answer"].get<int>();
    if (j["r_total"].get<double>() != total) return false;
    if (!j.contains("sentences") || !j["sentences"].is_array()) return false;
    for (const auto& s : j["sentences"]) {
        if (!s.contains("text") || !s["text"].is_string() || !s.contains("labels") || !s["labels"].is_array() ||
            s["labels"].empty() || !s.contains("neutral") || !s["neutral"].is_boolean() || !s.contains("match") ||
            !s["match"].is_boolean()) {
            return false;
        }
    }
    return true;
}

Rational parse_fraction(const std::string& s) {
    const auto slash = s.find('/');
    return {std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
}

Outcome end_to_end() {
    Outcome out;
    const auto start = Clock::now();
    rrk_test::TempDir dir;
    const auto q = [](const std::filesystem::path& p) { return rrk_test::shell_quote(p.string()); };
    const auto samples = rrk_test::fixture("samples_50.jsonl");
    const auto evals = rrk_test::fixture("eval_50.jsonl");
    const auto table = rrk_test::fixture("verifier_table.json");

    struct Run {
        std::string name, args, output;
    };
    const std::vector<Run> runs = {
        {"score/table", "score --verifier table --table " + q(table) + " --in " + q(samples), "table"},
        {"score/lexicon", "score --verifier lexicon --in " + q(samples), "lexicon"},
        {"evaluate/stub", "evaluate --judge stub --second-judge stub --in " + q(evals), "report"},
    };
    for (const auto& r : runs) {
        for (int rep = 0; rep < 2; ++rep) {
            const auto path = dir / (r.output + std::to_string(rep));
            const int code = rrk_test::run(rrk_test::cli() + " " + r.args + " --out " + q(path) + " 2>/dev/null");
            out.require(code == 0, r.name + " exited " + std::to_string(code));
        }
        out.require(out.pass && rrk_test::slurp(dir / (r.output + "0")) == rrk_test::slurp(dir / (r.output + "1")),
                    r.name + " output is not byte-deterministic");
    }
    if (!out.pass) return out;

    for (const char* name : {"table0", "lexicon0"}) {
        std::istringstream in(rrk_test::slurp(dir / name));
        std::size_t lines = 0;
        for (std::string line; std::getline(in, line); ++lines) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            out.require(!j.is_discarded() && scored_line_valid(j), std::string(name) + " line " + std::to_string(lines + 1));
        }
        out.require(lines == 100, std::string(name) + " has " + std::to_string(lines) + " records");
    }

    const auto doc = nlohmann::json::parse(rrk_test::slurp(dir / "report0"), nullptr, false);
    out.require(!doc.is_discarded(), "report is not JSON");
    if (!out.pass) return out;
    for (const char* key : {"taxonomy", "labels", "n", "eea", "fcr", "epc", "war", "uar", "per_class_recall", "confusion",
                            "quadrants", "exact", "judge", "agreement", "unparseable_verdicts"}) {
        out.require(doc.contains(key), std::string("report lacks ") + key);
    }
    if (!out.pass) return out;
    const auto eea = parse_fraction(doc["exact"]["eea"]), fcr = parse_fraction(doc["exact"]["fcr"]),
               war = parse_fraction(doc["exact"]["war"]);
    out.require(doc["n"] == 50, "n != 50");
    out.require(fcr <= std::min(eea, war) && fcr >= eea + war - Rational(1), "FCR bounds");
    double quad_sum = 0.0;
    for (const auto& [k, v] : doc["quadrants"].items()) quad_sum += v.get<double>();
    out.require(std::abs(quad_sum - 100.0) <= 1e-9, "quadrants sum to " + fmt("%.12g", quad_sum));
    out.require(std::abs(doc["quadrants"]["explanation_correct_answer_correct"].get<double>() / 100 - fcr.to_double()) <= 1e-15,
                "quadrant/FCR");
    std::size_t correct = 0, total = 0;
    const auto& confusion = doc["confusion"];
    double recall_sum = 0.0;
    int present = 0;
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < confusion[i].size(); ++j) row += confusion[i][j].get<std::size_t>();
        correct += confusion[i][i].get<std::size_t>();
        total += row;
        if (row) {
            recall_sum += static_cast<double>(confusion[i][i].get<std::size_t>()) / static_cast<double>(row);
            ++present;
        }
    }
    out.require(total == 50 && war == Rational(static_cast<std::int64_t>(correct), 50), "WAR vs confusion");
    out.require(std::abs(doc["uar"].get<double>() - recall_sum / present) <= 1e-12, "UAR vs per-class recall");
    out.require(doc["agreement"] == 1.0, "identical judges disagree");

    // same records through the library must pass every report check
    const auto mafw = builtin_taxonomy("MAFW");
    auto records = read_eval_records(evals, mafw);
    StubJudge stub(std::make_shared<LexiconBackend>(LexiconBackend::builtin()), mafw);
    judge_records(records, mafw, stub, 8);
    try {
        check_report(build_report(records, mafw, stub.id()));
    } catch (const Error& e) {
        out.require(false, e.what());
    }

    const double t = seconds_since(start);
    out.require(t < 5.0, "runtime " + fmt("%.3f s", t));
    if (out.pass) {
        out.detail = "3 commands x2 deterministic, 200 scored records valid, report invariants hold, EEA " +
                     fmt("%.3f", eea.to_double()) + " FCR " + fmt("%.3f", fcr.to_double()) + ", " + fmt("%.3f s", t);
    }
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"explanation reward equals the pseudo-code oracle", reward_oracle},
        {"metric identities and counting oracle", metric_identities},
        {"WAR/UAR hand case and balanced supports", war_uar},
        {"surrogate gradient vs central differences", gradient_check},
        {"optimisation: convergence, KL anchoring, reproducibility", optimisation},
        {"explanation reward shifts mass off explanation-wrong answers", shaping},
        {"format/answer fixtures", format_answer},
        {"degenerate denominators and fuzzed bounds", degenerate},
        {"end-to-end offline score + evaluate", end_to_end},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::printf("criterion %d: %s  %s  [%s]\n", index, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", index - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
