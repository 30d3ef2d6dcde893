// mtod: synth -> preprocess -> train -> infer -> evaluate, plus salience.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 runtime failure.
// Every subcommand writes <out>/manifest.json; `mtod rerun --manifest m`
// replays the recorded argv.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtod/checkpoint.hpp"
#include "mtod/corpus.hpp"
#include "mtod/corpus_json.hpp"
#include "mtod/error.hpp"
#include "mtod/metrics.hpp"
#include "mtod/salience.hpp"
#include "mtod/serialize.hpp"
#include "mtod/tasks.hpp"
#include "mtod/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtod;

namespace {

constexpr const char* kVersion = "0.1.0";

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

Level log_level() {
    const char* env = std::getenv("MTOD_LOG");
    if (env == nullptr) return Level::Info;
    const std::string v = env;
    if (v == "quiet" || v == "0") return Level::Quiet;
    if (v == "debug" || v == "2") return Level::Debug;
    return Level::Info;
}

void log(Level level, const std::string& msg) {
    static const Level threshold = log_level();
    if (level <= threshold && threshold != Level::Quiet) std::cerr << "mtod: " << msg << '\n';
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

void write_manifest(const fs::path& out, const std::string& subcommand,
                    const std::vector<std::string>& argv, const json& config,
                    std::optional<std::uint64_t> seed) {
    const std::string text = config.dump();
    json m{{"tool", "mtod"},
           {"version", kVersion},
           {"subcommand", subcommand},
           {"argv", argv},
           {"config", config},
           {"config_hash",
            hex64(fnv1a64(reinterpret_cast<const unsigned char*>(text.data()), text.size()))},
           {"seed", seed ? json(*seed) : json(nullptr)}};
    write_json_file(out / "manifest.json", m);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << text;
}

json context_json(const ContextSpec& c, const std::string& objective) {
    return json{{"window_n", c.window_n},
                {"max_len", c.max_len},
                {"scene_descriptions", c.scene_descriptions},
                {"objective", objective}};
}

ContextSpec context_from_json(const json& j) {
    try {
        ContextSpec c;
        c.window_n = j.at("window_n").get<int>();
        c.max_len = j.at("max_len").get<int>();
        c.scene_descriptions = j.at("scene_descriptions").get<bool>();
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("context settings: ") + e.what());
    }
}

std::vector<const Dialogue*> pointers(const Corpus& c) {
    std::vector<const Dialogue*> out;
    for (const auto& d : c.dialogues) out.push_back(&d);
    return out;
}

// Dialogues of the requested split; `split` is train, heldout or all.
Corpus select_split(const Corpus& corpus, const std::string& split, int heldout_scenes) {
    if (split == "all") return corpus;
    auto parts = split_by_scene(corpus, heldout_scenes);
    return split == "train" ? std::move(parts.train) : std::move(parts.heldout);
}

// --- options ----------------------------------------------------------------

struct SynthOpts {
    std::uint64_t seed = 0;
    fs::path out;
    SynthConfig config;
};

struct PreprocessOpts {
    fs::path corpus, out, vocab;
    int merges = 500;
    ContextSpec context;
    bool no_scene = false;
    std::string objective = "lm";
    std::string split = "all";
    int heldout_scenes = 0;
};

struct TrainOpts {
    fs::path data, out;
    ModelConfig model;
    OptimizerConfig opt;
};

struct InferOpts {
    fs::path checkpoint, yesno_checkpoint, corpus, out;
    std::string split = "all";
    int heldout_scenes = 0;
    std::string mode = "end_to_end";
    bool oracle_action = false;
    bool self_conditioned = false;
    TaskSpec spec;
};

struct EvaluateOpts {
    fs::path predictions, corpus, out;
    std::string format = "json";
    bool pooled_bleu = false;
};

struct SalienceOpts {
    fs::path checkpoint, prompt_file, out;
    int target_pos = -1;
    bool probability = false;
};

// --- subcommands --------------------------------------------------------------

int run_synth(const SynthOpts& o, const std::vector<std::string>& argv) {
    const auto corpus = generate_synthetic(o.config, o.seed);
    fs::create_directories(o.out);
    save_corpus(corpus, o.out);
    const json config{{"catalogue_size", o.config.catalogue_size},
                      {"scenes", o.config.scenes},
                      {"dialogues", o.config.dialogues},
                      {"min_turns", o.config.min_turns},
                      {"max_turns", o.config.max_turns},
                      {"disambiguation_rate", o.config.disambiguation_rate}};
    write_manifest(o.out, "synth", argv, config, o.seed);
    log(Level::Info, "wrote " + std::to_string(corpus.dialogues.size()) + " dialogues to " +
                         o.out.string());
    return 0;
}

int run_preprocess(PreprocessOpts o, const std::vector<std::string>& argv) {
    if (o.objective != "lm" && o.objective != "yesno") {
        throw UsageError("--objective must be lm or yesno");
    }
    o.context.scene_descriptions = !o.no_scene;
    const auto full = load_corpus(o.corpus);
    const auto corpus = select_split(full, o.split, o.heldout_scenes);
    // A fresh vocabulary only sees the training part of the corpus.
    const Vocab vocab = o.vocab.empty()
                            ? Vocab::build(select_split(full, o.split == "all" ? "all" : "train",
                                                        o.heldout_scenes),
                                           o.merges)
                            : Vocab::load(o.vocab);
    const auto data = build_dataset(corpus, pointers(corpus), o.context, vocab,
                                    o.objective == "lm" ? Objective::LanguageModel
                                                        : Objective::Disambiguation);
    fs::create_directories(o.out);
    vocab.save(o.out / "vocab.json");
    write_dataset(o.out / "sequences.jsonl", data);
    write_json_file(o.out / "context.json", context_json(o.context, o.objective));
    json config = context_json(o.context, o.objective);
    config["merges"] = o.merges;
    config["split"] = o.split;
    config["heldout_scenes"] = o.heldout_scenes;
    write_manifest(o.out, "preprocess", argv, config, std::nullopt);
    log(Level::Info, std::to_string(data.size()) + " sequences, vocabulary of " +
                         std::to_string(vocab.size()));
    return 0;
}

int run_train(TrainOpts o, const std::vector<std::string>& argv) {
    const Vocab vocab = Vocab::load(o.data / "vocab.json");
    const auto data = read_dataset(o.data / "sequences.jsonl");
    const json context = read_json_file(o.data / "context.json");
    o.model.vocab_size = vocab.size();
    o.model.seed = o.opt.seed;
    for (const auto& s : data) {
        if (s.total_len() > o.model.max_positions) {
            throw DataError("sequence " + s.dialogue_id + "/" + std::to_string(s.turn) +
                            " longer than max_positions");
        }
        for (int id : s.ids) {
            if (id < 0 || id >= vocab.size()) {
                throw DataError("sequence " + s.dialogue_id + " holds an id outside the vocabulary");
            }
        }
    }
    auto model = Transformer<float>::init(o.model);
    fs::create_directories(o.out);
    std::ofstream log_file(o.out / "train_log.jsonl", std::ios::binary);
    if (!log_file) throw RuntimeFailure("cannot write train_log.jsonl");
    train(model, data, o.opt, [&](const EpochLog& e) {
        log_file << to_json(e).dump() << '\n';
        log_file.flush();
        log(Level::Info, "epoch " + std::to_string(e.epoch) + " mean loss " +
                             std::to_string(e.mean_loss) + " (sum " + std::to_string(e.sum_loss) +
                             ")");
    });
    save_checkpoint(o.out / "checkpoint.bin", model, vocab, json{{"context", context}});
    json config{{"model", to_json(o.model)}, {"optimizer", to_json(o.opt)}, {"context", context}};
    write_manifest(o.out, "train", argv, config, o.opt.seed);
    return 0;
}

int run_infer(const InferOpts& o, const std::vector<std::string>& argv) {
    const auto ckpt = load_checkpoint(o.checkpoint);
    const auto full = load_corpus(o.corpus);
    const auto corpus = select_split(full, o.split, o.heldout_scenes);
    TaskSpec spec = o.spec;
    spec.context = context_from_json(ckpt.meta.at("context"));
    const LanguageModel lm{ckpt.model, ckpt.vocab};

    BenchmarkOptions opts;
    opts.spec = spec;
    opts.disambiguation_mode = parse_task_mode(o.mode);
    opts.oracle_action = o.oracle_action;
    opts.self_conditioned = o.self_conditioned;
    std::optional<Checkpoint> yesno;
    std::optional<LanguageModel> yesno_lm;
    if (opts.disambiguation_mode == TaskMode::TaskSpecific) {
        if (o.yesno_checkpoint.empty()) {
            throw UsageError("--mode task_specific needs --yesno-checkpoint");
        }
        yesno.emplace(load_checkpoint(o.yesno_checkpoint));
        yesno_lm.emplace(LanguageModel{yesno->model, yesno->vocab});
        opts.yesno = &*yesno_lm;
    }
    const auto rows = run_benchmark(lm, corpus, pointers(corpus), opts);
    fs::create_directories(o.out);
    write_predictions(o.out / "predictions.jsonl", rows);
    json config{{"split", o.split},
                {"heldout_scenes", o.heldout_scenes},
                {"mode", o.mode},
                {"oracle_action", o.oracle_action},
                {"self_conditioned", o.self_conditioned},
                {"max_new_belief", spec.max_new_belief},
                {"max_new_action", spec.max_new_action},
                {"max_new_response", spec.max_new_response}};
    write_manifest(o.out, "infer", argv, config, std::nullopt);
    log(Level::Info, "predicted " + std::to_string(rows.size()) + " turns");
    return 0;
}

int run_evaluate(const EvaluateOpts& o, const std::vector<std::string>& argv) {
    if (o.format != "json" && o.format != "tsv") throw UsageError("--format must be json or tsv");
    const auto rows = read_predictions(o.predictions);
    const auto corpus = load_corpus(o.corpus);
    const auto report = score(align_with_gold(rows, corpus), o.pooled_bleu);
    fs::create_directories(o.out);
    if (o.format == "json") {
        const auto text = report.to_json().dump(2) + "\n";
        write_text(o.out / "report.json", text);
        std::cout << text;
    } else {
        const auto text = report.to_tsv();
        write_text(o.out / "report.tsv", text);
        std::cout << text;
    }
    write_manifest(o.out, "evaluate", argv,
                   json{{"format", o.format}, {"pooled_bleu", o.pooled_bleu}}, std::nullopt);
    return 0;
}

int run_salience(const SalienceOpts& o, const std::vector<std::string>& argv) {
    const auto ckpt = load_checkpoint(o.checkpoint);
    std::ifstream in(o.prompt_file, std::ios::binary);
    if (!in) throw DataError("cannot read " + o.prompt_file.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    const auto ids = ckpt.vocab.encode(text);
    if (ids.empty()) throw DataError("empty prompt");
    const int target = o.target_pos < 0 ? static_cast<int>(ids.size()) : o.target_pos;
    const auto model = ckpt.model.cast<double>();
    const auto map = input_x_gradient(
        model, ids, target, o.probability ? SalienceTarget::Probability : SalienceTarget::Logit);
    std::vector<std::string> tokens;
    for (int id : ids) tokens.push_back(ckpt.vocab.info(id).surface);
    if (target == static_cast<int>(ids.size())) tokens.push_back(ckpt.vocab.info(map.target_token).surface);
    fs::create_directories(o.out);
    render_heatmap(map, tokens, o.out / "salience.html");
    write_manifest(o.out, "salience", argv,
                   json{{"target_pos", target}, {"probability", o.probability}}, std::nullopt);
    return 0;
}

// --- entry ---------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args);

int run_rerun(const fs::path& manifest) {
    const json m = read_json_file(manifest);
    std::vector<std::string> argv;
    try {
        argv = m.at("argv").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError("manifest " + manifest.string() + ": " + e.what());
    }
    if (argv.size() < 2 || argv[1] == "rerun") throw DataError("manifest has no replayable argv");
    log(Level::Info, "replaying " + m.value("subcommand", std::string("?")));
    return dispatch(argv);
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"multimodal task-oriented dialogue toolkit", "mtod"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SynthOpts synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic corpus");
    s->add_option("--seed", synth.seed, "random seed")->required();
    s->add_option("--out", synth.out, "output corpus directory")->required();
    s->add_option("--dialogues", synth.config.dialogues)->capture_default_str();
    s->add_option("--scenes", synth.config.scenes)->capture_default_str();
    s->add_option("--catalogue", synth.config.catalogue_size)->capture_default_str();
    s->add_option("--min-turns", synth.config.min_turns)->capture_default_str();
    s->add_option("--max-turns", synth.config.max_turns)->capture_default_str();
    s->add_option("--disambiguation-rate", synth.config.disambiguation_rate)->capture_default_str();

    PreprocessOpts pre;
    auto* p = app.add_subcommand("preprocess", "build the vocabulary and training sequences");
    p->add_option("--corpus", pre.corpus)->required()->check(CLI::ExistingDirectory);
    p->add_option("--out", pre.out)->required();
    p->add_option("--vocab", pre.vocab, "reuse an existing vocab.json")->check(CLI::ExistingFile);
    p->add_option("--merges", pre.merges)->capture_default_str();
    p->add_option("--window", pre.context.window_n)->capture_default_str();
    p->add_option("--max-len", pre.context.max_len)->capture_default_str();
    p->add_flag("--no-scene", pre.no_scene, "describe every scene as empty");
    p->add_option("--objective", pre.objective, "lm or yesno")->capture_default_str();
    p->add_option("--split", pre.split, "all, train or heldout")
        ->check(CLI::IsMember({"all", "train", "heldout"}))
        ->capture_default_str();
    p->add_option("--holdout-scenes", pre.heldout_scenes)->capture_default_str();

    TrainOpts tr;
    auto* t = app.add_subcommand("train", "train a model on preprocessed sequences");
    t->add_option("--data", tr.data, "preprocess output directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    t->add_option("--out", tr.out)->required();
    t->add_option("--seed", tr.opt.seed)->required();
    t->add_option("--epochs", tr.opt.epochs)->capture_default_str();
    t->add_option("--batch-size", tr.opt.batch_size)->capture_default_str();
    t->add_option("--lr", tr.opt.learning_rate)->capture_default_str();
    t->add_option("--clip", tr.opt.clip_norm)->capture_default_str();
    t->add_option("--layers", tr.model.n_layers)->capture_default_str();
    t->add_option("--heads", tr.model.n_heads)->capture_default_str();
    t->add_option("--d-model", tr.model.d_model)->capture_default_str();
    t->add_option("--d-ff", tr.model.d_ff)->capture_default_str();
    t->add_option("--max-positions", tr.model.max_positions)->capture_default_str();
    t->add_option("--dropout", tr.model.dropout_rate)->capture_default_str();

    InferOpts inf;
    auto* i = app.add_subcommand("infer", "run the benchmark tasks and write predictions");
    i->add_option("--checkpoint", inf.checkpoint)->required()->check(CLI::ExistingFile);
    i->add_option("--corpus", inf.corpus)->required()->check(CLI::ExistingDirectory);
    i->add_option("--out", inf.out)->required();
    i->add_option("--split", inf.split)
        ->check(CLI::IsMember({"all", "train", "heldout"}))
        ->capture_default_str();
    i->add_option("--holdout-scenes", inf.heldout_scenes)->capture_default_str();
    i->add_option("--mode", inf.mode, "disambiguation mode: end_to_end or task_specific")
        ->check(CLI::IsMember({"end_to_end", "task_specific"}))
        ->capture_default_str();
    i->add_option("--yesno-checkpoint", inf.yesno_checkpoint)->check(CLI::ExistingFile);
    i->add_flag("--oracle-action", inf.oracle_action, "generate responses from gold belief and action");
    i->add_flag("--self-conditioned", inf.self_conditioned,
                "condition on the model's own previous responses");
    i->add_option("--max-new", inf.spec.max_new_response, "token budget per generated response")
        ->capture_default_str();

    EvaluateOpts ev;
    auto* e = app.add_subcommand("evaluate", "score predictions against gold annotations");
    e->add_option("--predictions", ev.predictions)->required()->check(CLI::ExistingFile);
    e->add_option("--corpus", ev.corpus)->required()->check(CLI::ExistingDirectory);
    e->add_option("--out", ev.out)->required();
    e->add_option("--format", ev.format)
        ->check(CLI::IsMember({"json", "tsv"}))
        ->capture_default_str();
    e->add_flag("--pooled-bleu", ev.pooled_bleu, "pool n-gram counts instead of averaging sentences");

    SalienceOpts sal;
    auto* g = app.add_subcommand("salience", "input x gradient heat-map for a prompt");
    g->add_option("--checkpoint", sal.checkpoint)->required()->check(CLI::ExistingFile);
    g->add_option("--prompt-file", sal.prompt_file)->required()->check(CLI::ExistingFile);
    g->add_option("--target-pos", sal.target_pos, "defaults to the next generated token");
    g->add_option("--out", sal.out)->required();
    g->add_flag("--probability", sal.probability, "attribute the probability instead of the logit");

    fs::path manifest;
    auto* r = app.add_subcommand("rerun", "replay a run from its manifest");
    r->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);

    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& err) {
        std::cerr << "mtod: " << err.what() << '\n';
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return 1;
    }

    if (s->parsed()) return run_synth(synth, args);
    if (p->parsed()) return run_preprocess(pre, args);
    if (t->parsed()) return run_train(tr, args);
    if (i->parsed()) return run_infer(inf, args);
    if (e->parsed()) return run_evaluate(ev, args);
    if (g->parsed()) return run_salience(sal, args);
    return run_rerun(manifest);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    args[0] = "mtod";
    try {
        return dispatch(args);
    } catch (const UsageError& e) {
        std::cerr << "mtod: usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "mtod: data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mtod: runtime failure: " << e.what() << '\n';
        return 3;
    }
}
