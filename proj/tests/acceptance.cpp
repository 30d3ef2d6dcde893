// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Usage: mtod_acceptance [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "cli_util.hpp"
#include "fixtures.hpp"
#include "mtod/corpus.hpp"
#include "mtod/delocalize.hpp"
#include "mtod/grammar.hpp"
#include "mtod/metrics.hpp"
#include "mtod/salience.hpp"
#include "mtod/serialize.hpp"
#include "mtod/tasks.hpp"
#include "mtod/train.hpp"
#include "mtod/vocab.hpp"
#include "oracles.hpp"

using namespace mtod;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<CatalogueItem> catalogue(int n) {
    std::vector<CatalogueItem> out;
    for (int i = 1; i <= n; ++i) out.push_back(fixture::item(i, "red", "coat"));
    return out;
}

BoundingBox random_box(Rng& rng, int w, int h) {
    const int bw = rng.between(4, 60), bh = rng.between(4, 60);
    return BoundingBox{rng.between(0, w - bw), rng.between(0, h - bh), bw, bh};
}

// --- 1 -------------------------------------------------------------------------

Outcome delocalization_round_trip() {
    Rng rng(1);
    const auto cat = catalogue(30);
    long long objects = 0, identity = 0, ties = 0, largest = 0;
    for (int n = 0; n < 1000; ++n) {
        Scene s;
        s.scene_id = "s" + std::to_string(n);
        s.width = 960;
        s.height = 720;
        std::set<std::pair<int, int>> used;
        for (int id = 0; s.objects.size() < 8 && id < 40; ++id) {
            SceneObject o{id, rng.between(1, 30), random_box(rng, s.width, s.height)};
            if (used.insert({o.catalogue_id, region_of(o.bbox, s.width, s.height).index()}).second) {
                s.objects.push_back(o);
            }
        }
        for (const auto& o : s.objects) {
            ++objects;
            identity += relocalize(delocalize_refs({o.canonical_id}, s, cat)[0], s) == o.canonical_id;
        }

        // Forced duplicate: same catalogue item, same region, different area.
        const SceneObject base = s.objects[rng.below(s.objects.size())];
        SceneObject twin = base;
        twin.canonical_id = 100;
        const int grow = rng.chance(0.5) ? 1 : -1;
        twin.bbox.w = std::max(2, base.bbox.w + 2 * grow);
        twin.bbox.h = std::max(2, base.bbox.h + 2 * grow);
        twin.bbox.x = base.bbox.x + (base.bbox.w - twin.bbox.w) / 2;
        twin.bbox.y = base.bbox.y + (base.bbox.h - twin.bbox.h) / 2;
        if (twin.bbox.area() == base.bbox.area() ||
            !(region_of(twin.bbox, s.width, s.height) == region_of(base.bbox, s.width, s.height))) {
            continue;
        }
        s.objects.push_back(twin);
        const int want = twin.bbox.area() > base.bbox.area() ? twin.canonical_id : base.canonical_id;
        ++ties;
        largest += relocalize(delocalize_refs({base.canonical_id}, s, cat)[0], s) == want;
    }
    return {objects > 0 && identity == objects && ties > 900 && largest == ties,
            fmt("identity %lld/%lld objects, largest-area %lld/%lld ties", identity, objects, largest,
                ties)};
}

// --- 2 -------------------------------------------------------------------------

Outcome region_grid() {
    // Centers on a 10-pixel lattice; a 2x2 box at (c-1, c-1) has center c.
    int counts[9] = {};
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 30; ++j) {
            ++counts[region_of(BoundingBox{i * 10 - 1, j * 10 - 1, 2, 2}, 300, 300).index()];
        }
    }
    bool even = true;
    for (int c : counts) even = even && c == 100;

    int boundary_ok = 0, boundary_checks = 0;
    auto label = [](int cx, int cy) { return region_of(BoundingBox{cx - 1, cy - 1, 2, 2}, 300, 300); };
    for (int line : {100, 200}) {
        for (int other : {50, 150, 250}) {
            // Points on the line belong to the cell after it.
            boundary_checks += 4;
            boundary_ok += label(line, other).col_index() == line / 100;
            boundary_ok += label(line - 1, other).col_index() == line / 100 - 1;
            boundary_ok += label(other, line).row_index() == line / 100;
            boundary_ok += label(other, line - 1).row_index() == line / 100 - 1;
        }
    }
    return {even && boundary_ok == boundary_checks,
            fmt("900 centers, 100 per label: %s; boundary checks %d/%d", even ? "yes" : "no",
                boundary_ok, boundary_checks)};
}

// --- 3 -------------------------------------------------------------------------

std::string word(Rng& rng) {
    static const std::string chars = "abcdefghijklmnopqrstuvwxyz0123456789._-";
    std::string w(1, static_cast<char>('a' + rng.below(26)));
    for (int i = rng.between(0, 7); i > 0; --i) w += chars[rng.below(chars.size())];
    return w;
}

template <typename Frame>
void random_frame(Frame& f, Rng& rng) {
    static const std::vector<std::string> intents{"REQUEST:GET", "ASK:GET", "REQUEST:COMPARE",
                                                  "INFORM:DISAMBIGUATE", "INFORM:GET",
                                                  "INFORM:COMPARE"};
    f.intent = rng.pick(intents);
    for (int i = rng.between(0, 4); i > 0; --i) {
        f.slots[word(rng)] = rng.chance(0.3) ? word(rng) + " " + word(rng) : word(rng);
    }
    for (int i = rng.between(0, 3); i > 0; --i) f.request_slots.insert(word(rng));
}

Outcome grammar_round_trip() {
    Rng rng(3);
    int ok = 0;
    for (int i = 0; i < 10000; ++i) {
        if (i % 2 == 0) {
            DelocalizedBelief b;
            random_frame(b, rng);
            for (int k = rng.between(0, 4); k > 0; --k) {
                DelocalizedObject o{rng.between(0, 9999), RegionLabel::from_index(rng.between(0, 8))};
                if (std::find(b.mref.begin(), b.mref.end(), o) == b.mref.end()) b.mref.push_back(o);
            }
            const auto p = parse_belief(format_belief(b));
            ok += !p.failed && p.belief == b;
        } else {
            Action a;
            random_frame(a, rng);
            const auto p = parse_action(format_action(a));
            ok += !p.failed && p.action == a;
        }
    }
    int survived = 0;
    const std::string noise = "[]()<>=;@: _INV0";
    for (int i = 0; i < 1000; ++i) {
        DelocalizedBelief b;
        random_frame(b, rng);
        b.mref.push_back(DelocalizedObject{rng.between(0, 99), RegionLabel::from_index(rng.between(0, 8))});
        std::string s = format_belief(b);
        for (int e = rng.between(1, 5); e > 0 && !s.empty(); --e) {
            const std::size_t pos = rng.below(s.size());
            switch (rng.below(4)) {
                case 0: s.erase(pos, 1); break;
                case 1: s.insert(pos, 1, noise[rng.below(noise.size())]); break;
                case 2: s[pos] = static_cast<char>(rng.below(256)); break;
                default: s.resize(pos); break;
            }
        }
        try {
            parse_belief(s);
            parse_action(s);
            ++survived;
        } catch (...) {
        }
    }
    return {ok == 10000 && survived == 1000,
            fmt("round trips %d/10000, mutated strings parsed without exception %d/1000", ok, survived)};
}

// --- 4 -------------------------------------------------------------------------

Outcome tokenizer_atomicity() {
    const Corpus corpus = generate_synthetic(SynthConfig{}, 1);
    const Vocab vocab = Vocab::build(corpus, 500);
    std::vector<std::string> atoms;
    for (int id = 0; id < static_cast<int>(vocab.size()); ++id) {
        const auto& t = vocab.info(id);
        if (t.atomic() && !t.spaced) atoms.push_back(t.surface);
    }
    std::vector<std::string> texts;
    for (const auto& d : corpus.dialogues) {
        for (int t = 0; t < static_cast<int>(d.turns.size()); ++t) {
            const auto& turn = d.turns[static_cast<std::size_t>(t)];
            texts.push_back(turn.user_utterance);
            texts.push_back(turn.system_utterance);
            texts.push_back(format_belief(delocalized_belief(corpus, d, t)));
            texts.push_back(format_action(turn.action));
        }
    }
    auto occurrences = [&](const std::vector<int>& ids, const std::string& atom) {
        int n = 0;
        for (int id : ids) n += vocab.info(id).atomic() && vocab.info(id).base() == atom;
        return n;
    };
    Rng rng(4);
    static const std::vector<std::string> right_edges{" ", ",", "?", ".", "!", " ("};
    int single = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::string& atom = atoms[static_cast<std::size_t>(i) % atoms.size()];
        const std::string& l = rng.pick(texts);
        const std::string& r = rng.pick(texts);
        const std::string left = l.substr(0, rng.below(l.size() + 1));
        const std::string right = rng.pick(right_edges) + r.substr(rng.below(r.size() + 1));
        const std::string text = left + " " + atom + right;
        // The inserted atom adds exactly one id and leaves both contexts
        // tokenized as they were on their own.
        const auto ids = vocab.encode(text);
        const int want = occurrences(vocab.encode(left), atom) + 1 + occurrences(vocab.encode(right), atom);
        single += occurrences(ids, atom) == want && vocab.decode(ids) == text;
    }
    long long round = 0;
    for (const auto& t : texts) round += vocab.decode(vocab.encode(t)) == t;
    return {single == 10000 && round == static_cast<long long>(texts.size()),
            fmt("%zu atomic tokens, single-id contexts %d/10000, decode(encode) identity %lld/%zu texts",
                atoms.size(), single, round, texts.size())};
}

// --- 5 -------------------------------------------------------------------------

Outcome loss_mask() {
    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 32;
    cfg.d_ff = 64;
    cfg.max_positions = 64;
    cfg.vocab_size = 50;
    const auto model = Transformer<float>::init(cfg);
    Rng rng(5);
    int unchanged = 0, zero_grad = 0;
    for (int n = 0; n < 100; ++n) {
        const int len = rng.between(3, 64);
        std::vector<int> ids(static_cast<std::size_t>(len));
        for (auto& id : ids) id = static_cast<int>(rng.below(50));
        const int prefix = rng.between(2, len - 1);
        auto logits = model.forward(ids);
        std::vector<float> grad(logits.size());
        const auto base = masked_nll<float>(logits, 50, ids, prefix, grad, 1.0 / 7);
        // Rows 0 .. prefix-2 score targets inside the scene span.
        const std::size_t masked = static_cast<std::size_t>(prefix - 1) * 50;
        bool zero = true;
        for (std::size_t k = 0; k < masked; ++k) {
            zero = zero && grad[k] == 0.0f && !std::signbit(grad[k]);
            logits[k] += static_cast<float>(100 * rng.normal());
        }
        const auto perturbed = masked_nll<float>(logits, 50, ids, prefix);
        unchanged += perturbed.sum == base.sum && perturbed.count == base.count;
        zero_grad += zero;
    }
    return {unchanged == 100 && zero_grad == 100,
            fmt("loss unchanged %d/100, masked gradients exactly zero %d/100", unchanged, zero_grad)};
}

// --- 6 -------------------------------------------------------------------------

Outcome gradient_check() {
    auto model = oracle::toy_model(16, 1, 20, 6);
    Rng rng(6);
    std::vector<TrainingSequence> seqs(4);
    for (auto& s : seqs) {
        for (int i = rng.between(6, 16); i > 0; --i) s.ids.push_back(static_cast<int>(rng.below(20)));
        s.scene_prefix_len = rng.between(1, 4);
    }
    std::vector<const TrainingSequence*> batch;
    for (const auto& s : seqs) batch.push_back(&s);
    const auto check = oracle::check_gradients(model, batch, 25, rng);
    return {check.max_rel_error < 1e-4,
            fmt("max relative error %.3e over %d coordinates (limit 1e-4)", check.max_rel_error,
                check.coordinates)};
}

// --- 7 -------------------------------------------------------------------------

Outcome causality() {
    ModelConfig cfg;
    cfg.vocab_size = 560;
    const auto model = Transformer<float>::init(cfg);
    Rng rng(7);
    int identical = 0;
    for (int n = 0; n < 100; ++n) {
        const int len = rng.between(2, 96);
        std::vector<int> ids(static_cast<std::size_t>(len));
        for (auto& id : ids) id = static_cast<int>(rng.below(560));
        const auto a = model.forward(ids);
        const int i = rng.between(0, len - 2);
        for (int j = i + 1; j < len; ++j) ids[static_cast<std::size_t>(j)] = static_cast<int>(rng.below(560));
        const auto b = model.forward(ids);
        identical += std::memcmp(a.data(), b.data(), static_cast<std::size_t>(i + 1) * 560 * sizeof(float)) == 0;
    }
    return {identical == 100, fmt("rows bit-identical under later-token changes %d/100", identical)};
}

// --- 8 -------------------------------------------------------------------------

constexpr int kOverfitEpochs = 50;

Outcome overfit() {
    const auto t0 = std::chrono::steady_clock::now();
    const Corpus corpus = generate_synthetic(SynthConfig{}, 1);
    const Vocab vocab = Vocab::build(corpus, 500);
    std::vector<const Dialogue*> dialogues;
    for (const auto& d : corpus.dialogues) dialogues.push_back(&d);
    const ContextSpec spec;
    const auto data = build_dataset(corpus, dialogues, spec, vocab, Objective::LanguageModel);

    ModelConfig cfg;
    cfg.vocab_size = static_cast<int>(vocab.size());
    auto model = Transformer<float>::init(cfg);
    OptimizerConfig opt;
    opt.epochs = kOverfitEpochs;
    const auto log = train(model, data, opt, [](const EpochLog& e) {
        if (e.epoch == 1 || e.epoch % 10 == 0) {
            std::fprintf(stderr, "  overfit epoch %d mean loss %.5f\n", e.epoch, e.mean_loss);
        }
    });
    const double train_s = seconds_since(t0);

    const LanguageModel lm{model, vocab};
    BenchmarkOptions bench;
    bench.spec.context = spec;
    const auto rows = run_benchmark(lm, corpus, dialogues, bench);
    const auto report = score(align_with_gold(rows, corpus));
    const double elapsed = seconds_since(t0);
    const double ratio = log.front().mean_loss / log.back().mean_loss;

    const bool pass = report.joint.value() >= 0.95 && report.object.f1() >= 0.95 &&
                      report.disambiguation.value() >= 0.95 && report.bleu4() >= 0.90 &&
                      ratio >= 10 && elapsed < 15 * 60;
    return {pass, fmt("%zu turns: joint %.4f, object-F1 %.4f, disambiguation %.4f, BLEU-4 %.4f, "
                      "loss %.4f -> %.4f (%.1fx) over %d epochs; train %.0f s, total %.0f s",
                      rows.size(), report.joint.value(), report.object.f1(),
                      report.disambiguation.value(), report.bleu4(), log.front().mean_loss,
                      log.back().mean_loss, ratio, kOverfitEpochs, train_s, elapsed)};
}

// --- 9 -------------------------------------------------------------------------

constexpr int kHeldoutScenes = 40;
constexpr int kGeneralizationEpochs = 30;

double heldout_object_f1(const CorpusSplit& split, bool scenes, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const Vocab vocab = Vocab::build(split.train, 500);
    ContextSpec spec;
    spec.scene_descriptions = scenes;
    std::vector<const Dialogue*> train_d;
    for (const auto& d : split.train.dialogues) train_d.push_back(&d);
    const auto data = build_dataset(split.train, train_d, spec, vocab, Objective::LanguageModel);

    ModelConfig cfg;
    cfg.vocab_size = static_cast<int>(vocab.size());
    cfg.seed = seed;
    auto model = Transformer<float>::init(cfg);
    OptimizerConfig opt;
    opt.epochs = kGeneralizationEpochs;
    opt.seed = seed;
    train(model, data, opt);
    const double train_s = seconds_since(t0);

    const LanguageModel lm{model, vocab};
    TaskSpec task;
    task.context = spec;
    MicroF1 f1;
    for (const auto& d : split.heldout.dialogues) {
        for (int t = 0; t < static_cast<int>(d.turns.size()); ++t) {
            const auto b = predict_belief(lm, split.heldout, d, t, task);
            f1.add(object_items(b.belief.mref), object_items(d.turns[static_cast<std::size_t>(t)].belief.mref));
        }
    }
    std::fprintf(stderr, "  generalization seed %llu scenes %s: %zu sequences, train %.0f s, predict %.0f s\n",
                 static_cast<unsigned long long>(seed), scenes ? "on" : "off", data.size(), train_s,
                 seconds_since(t0) - train_s);
    return f1.f1();
}

Outcome generalization() {
    const auto t0 = std::chrono::steady_clock::now();
    const Corpus corpus = generate_synthetic(SynthConfig{}, 1);
    const auto split = split_by_scene(corpus, kHeldoutScenes);
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        const double with = heldout_object_f1(split, true, seed);
        const double without = heldout_object_f1(split, false, seed);
        wins += with > without;
        detail += fmt("seed %llu: %.4f vs %.4f; ", static_cast<unsigned long long>(seed), with, without);
        std::fprintf(stderr, "  generalization seed %llu: object-F1 %.4f with scenes, %.4f without\n",
                     static_cast<unsigned long long>(seed), with, without);
    }
    const double elapsed = seconds_since(t0);
    return {wins >= 2 && elapsed < 45 * 60,
            fmt("%zu train / %zu held-out dialogues, object-F1 with vs without scenes: %s"
                "%d/3 seeds favour scenes; %.0f s",
                split.train.dialogues.size(), split.heldout.dialogues.size(), detail.c_str(), wins,
                elapsed)};
}

// --- 10 ------------------------------------------------------------------------

Outcome metrics_oracle() {
    const Corpus corpus = generate_synthetic(SynthConfig{}, 10);
    std::vector<std::string> sentences;
    for (const auto& d : corpus.dialogues) {
        for (const auto& t : d.turns) {
            sentences.push_back(t.system_utterance);
            sentences.push_back(t.user_utterance);
        }
    }
    Rng rng(10);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        std::string c = rng.pick(sentences);
        const std::string r = rng.pick(sentences);
        if (rng.chance(0.3)) c = r.substr(0, rng.below(r.size() + 1)) + " " + rng.pick(sentences);
        worst = std::max(worst, std::abs(bleu4(c, {r}) - oracle::bleu4(c, r)));
    }

    std::vector<BeliefState> pred, gold;
    std::vector<ScoredTurn> turns;
    for (int i = 0; i < 1000; ++i) {
        gold.push_back(oracle::random_belief(rng));
        pred.push_back(oracle::perturb(gold.back(), rng, 0.25));
        turns.push_back(ScoredTurn{pred.back(), gold.back(), std::nullopt, std::nullopt, std::nullopt, ""});
    }
    const auto want = oracle::brute_force(pred, gold);
    const auto got = score(turns);
    auto same = [](const MicroF1& a, const oracle::Confusion& b) {
        return a.tp == b.tp && a.fp == b.fp && a.fn == b.fn && std::abs(a.f1() - b.f1()) < 1e-12;
    };
    const bool f1_ok = same(got.intent, want.intent) && same(got.slot, want.slot) &&
                       same(got.request_slot, want.request) && same(got.object, want.object);
    const bool joint_ok = got.joint.numerator == want.joint_hits && got.joint.denominator == want.turns &&
                          joint_accuracy(pred, gold).numerator == want.joint_hits;
    return {worst < 1e-9 && f1_ok && joint_ok,
            fmt("BLEU max deviation %.2e on 100 pairs; F1 counts match: %s; joint %lld/%lld matches: %s",
                worst, f1_ok ? "yes" : "no", got.joint.numerator, got.joint.denominator,
                joint_ok ? "yes" : "no")};
}

// --- 11 ------------------------------------------------------------------------

Outcome salience() {
    const auto model = oracle::toy_model(32, 2, 50, 11, 4);
    Rng rng(11);
    int normalized = 0;
    for (int n = 0; n < 100; ++n) {
        const int len = rng.between(2, 30);
        std::vector<int> ids(static_cast<std::size_t>(len));
        for (auto& id : ids) id = static_cast<int>(rng.below(50));
        const int target = rng.between(1, len - 1);
        const auto map = input_x_gradient(model, ids, target);
        double sum = 0;
        bool nonneg = map.scores.size() == static_cast<std::size_t>(target);
        for (double s : map.scores) {
            nonneg = nonneg && s >= 0;
            sum += s;
        }
        normalized += nonneg && std::abs(sum - 1) <= 1e-6;
    }
    const auto single = input_x_gradient(model, std::vector<int>{7}, 1);
    const bool single_ok = single.scores == std::vector<double>{1.0};

    double worst_raw = 0, worst_score = 0;
    for (int n = 0; n < 5; ++n) {
        const auto toy = oracle::toy_model(8, 1, 12, 40 + static_cast<std::uint64_t>(n));
        std::vector<int> ids(8);
        for (auto& id : ids) id = static_cast<int>(rng.below(12));
        const int target = rng.between(2, 7);
        int token = 0;
        const auto raw = raw_attributions(toy, ids, target, SalienceTarget::Logit, &token);
        const auto fd = oracle::fd_attributions(toy, ids, target, token);
        const auto map = input_x_gradient(toy, ids, target);
        double fd_sum = 0;
        for (double a : fd) fd_sum += a;
        for (int i = 0; i < target; ++i) {
            const double a = raw[static_cast<std::size_t>(i)], b = fd[static_cast<std::size_t>(i)];
            worst_raw = std::max(worst_raw, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}));
            const double s = map.scores[static_cast<std::size_t>(i)], t = b / fd_sum;
            worst_score = std::max(worst_score, std::abs(s - t) / std::max(t, 1e-12));
        }
    }
    return {normalized == 100 && single_ok && worst_raw < 1e-4 && worst_score < 1e-3,
            fmt("normalized and non-negative %d/100, single token [1.0]: %s, finite-difference "
                "rel. error %.2e on attributions, %.2e on scores",
                normalized, single_ok ? "yes" : "no", worst_raw, worst_score)};
}

// --- 12 ------------------------------------------------------------------------

Outcome determinism() {
    fixture::TempDir dir("acceptance_determinism");
    const auto p = [&](const std::string& name) { return (dir.path() / name).string(); };
    struct Stage {
        std::string name, args;
    };
    const std::vector<Stage> stages{
        {"synth", "synth --seed 12 --dialogues 16 --scenes 8 --out " + p("synth")},
        {"preprocess", "preprocess --corpus " + p("synth") + " --merges 100 --out " + p("preprocess")},
        {"train", "train --data " + p("preprocess") + " --seed 3 --epochs 2 --layers 1 --d-model 32 "
                  "--d-ff 64 --heads 2 --out " + p("train")},
        {"infer", "infer --checkpoint " + p("train") + "/checkpoint.bin --corpus " + p("synth") +
                      " --max-new 16 --out " + p("infer")},
        {"evaluate", "evaluate --predictions " + p("infer") + "/predictions.jsonl --corpus " +
                         p("synth") + " --out " + p("evaluate")},
    };
    int reproduced = 0;
    std::string failed;
    for (const auto& s : stages) {
        if (cli::run(s.args) != 0) {
            failed += s.name + "(run) ";
            continue;
        }
        const auto first = cli::tree(p(s.name));
        if (cli::run("rerun --manifest " + p(s.name) + "/manifest.json") != 0) {
            failed += s.name + "(rerun) ";
            continue;
        }
        if (cli::tree(p(s.name)) == first && first.size() > 1) {
            ++reproduced;
        } else {
            failed += s.name + " ";
        }
    }
    return {reproduced == 5,
            fmt("byte-identical reruns from manifests %d/5%s%s", reproduced,
                failed.empty() ? "" : ", failed: ", failed.c_str())};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "de-localization round trip", 5, delocalization_round_trip},
        {2, "region grid", 1, region_grid},
        {3, "grammar round trip", 10, grammar_round_trip},
        {4, "tokenizer atomicity", 10, tokenizer_atomicity},
        {5, "loss mask", 30, loss_mask},
        {6, "gradient check", 60, gradient_check},
        {7, "causality", 30, causality},
        {8, "overfit end to end", 15 * 60, overfit},
        {9, "generalization with scene descriptions", 45 * 60, generalization},
        {10, "metrics oracle", 30, metrics_oracle},
        {11, "salience", 60, salience},
        {12, "determinism", 0, determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = seconds_since(t0);
        const bool in_time = c.limit_s == 0 || s < c.limit_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("criterion %2d %s  %s: %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), s, in_time ? "" : fmt(", over the %.0f s limit", c.limit_s).c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
