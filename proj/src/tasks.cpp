#include "mtod/tasks.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>

#include "mtod/corpus_json.hpp"
#include "mtod/grammar.hpp"

namespace mtod {

using nlohmann::json;

namespace {

constexpr std::string_view kDisambiguateIntent = "INFORM:DISAMBIGUATE";

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(' ');
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(' ');
    return s.substr(b, e - b + 1);
}

// Byte-level tokens can split or invent multi-byte sequences; invalid bytes
// become U+FFFD so that predictions always serialize as JSON.
std::string valid_utf8(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        const std::size_t len = c < 0x80           ? 1
                                : (c >> 5) == 0x6  ? 2
                                : (c >> 4) == 0xE  ? 3
                                : (c >> 3) == 0x1E ? 4
                                                   : 0;
        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            ok = (static_cast<unsigned char>(s[i + k]) >> 6) == 0x2;
        }
        if (ok && len > 1) {
            // Reject overlong forms, surrogates and code points past U+10FFFF.
            std::uint32_t cp = c & (0x7F >> len);
            for (std::size_t k = 1; k < len; ++k) {
                cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3Fu);
            }
            static const std::uint32_t min_cp[] = {0, 0, 0x80, 0x800, 0x10000};
            ok = cp >= min_cp[len] && cp <= 0x10FFFF && (cp < 0xD800 || cp > 0xDFFF);
        }
        if (ok) {
            out.append(s, i, len);
            i += len;
        } else {
            out += "\xEF\xBF\xBD";
            ++i;
        }
    }
    return out;
}

struct Generated {
    std::string text;
    bool truncated = false;
};

// Context followed by `suffix`, then greedy generation up to `stop`.
Generated generate_after(const LanguageModel& lm, const Corpus& corpus, const Dialogue& dialogue,
                         int t, const TaskSpec& spec, const std::string& suffix,
                         std::string_view stop, int max_new) {
    const auto tail = lm.vocab.encode(suffix);
    const auto desc = describe_scene(corpus, dialogue, spec.context);
    auto prompt = serialize_context(corpus, dialogue, t, spec.context, desc, lm.vocab,
                                    static_cast<int>(tail.size()));
    prompt.insert(prompt.end(), tail.begin(), tail.end());
    const int stop_id = lm.vocab.atomic_id(stop, true);
    auto ids = generate_greedy(lm.model, prompt, stop_id, max_new);
    Generated g;
    g.truncated = ids.empty() || ids.back() != stop_id;
    if (!g.truncated) ids.pop_back();
    g.text = valid_utf8(trim(lm.vocab.decode(ids)));
    return g;
}

std::string prefix_through(std::string_view open) { return " " + std::string(open); }

}  // namespace

std::string task_mode_name(TaskMode m) {
    return m == TaskMode::TaskSpecific ? "task_specific" : "end_to_end";
}

TaskMode parse_task_mode(std::string_view s) {
    if (s == "task_specific") return TaskMode::TaskSpecific;
    if (s == "end_to_end") return TaskMode::EndToEnd;
    throw UsageError("unknown task mode " + std::string(s));
}

BeliefPrediction predict_belief(const LanguageModel& lm, const Corpus& corpus,
                                const Dialogue& dialogue, int t, const TaskSpec& spec) {
    const auto g = generate_after(lm, corpus, dialogue, t, spec, prefix_through(special::kBelief),
                                  special::kBeliefEnd, spec.max_new_belief);
    BeliefPrediction out;
    out.text = g.text;
    out.truncated = g.truncated;
    const auto parsed = parse_belief(g.text);
    out.parse_failed = parsed.failed;
    out.belief.intent = parsed.belief.intent;
    out.belief.slots = parsed.belief.slots;
    out.belief.request_slots = parsed.belief.request_slots;
    const Scene& scene = corpus.scene_of(dialogue);
    for (const auto& obj : parsed.belief.mref) {
        const auto id = relocalize(obj, scene);
        if (!id) {
            ++out.mref_dropped;
            continue;
        }
        ++out.mref_resolved;
        if (std::find(out.belief.mref.begin(), out.belief.mref.end(), *id) == out.belief.mref.end()) {
            out.belief.mref.push_back(*id);
        }
    }
    return out;
}

ActionPrediction predict_action(const LanguageModel& lm, const Corpus& corpus,
                                const Dialogue& dialogue, int t, const TaskSpec& spec,
                                const std::string& belief_text) {
    const auto g = generate_after(lm, corpus, dialogue, t, spec,
                                  belief_segment(belief_text) + prefix_through(special::kAction),
                                  special::kActionEnd, spec.max_new_action);
    ActionPrediction out;
    out.text = g.text;
    out.truncated = g.truncated;
    const auto parsed = parse_action(g.text);
    out.action = parsed.action;
    out.parse_failed = parsed.failed;
    return out;
}

ResponsePrediction predict_response(const LanguageModel& lm, const Corpus& corpus,
                                    const Dialogue& dialogue, int t, const TaskSpec& spec,
                                    const std::string& belief_text,
                                    const std::string& action_text) {
    const auto g = generate_after(lm, corpus, dialogue, t, spec,
                                  belief_segment(belief_text) + action_segment(action_text) +
                                      prefix_through(special::kResponse),
                                  special::kResponseEnd, spec.max_new_response);
    return ResponsePrediction{g.text, g.truncated};
}

bool predict_disambiguation_task_specific(const LanguageModel& lm, const Corpus& corpus,
                                          const Dialogue& dialogue, int t, const TaskSpec& spec) {
    const auto desc = describe_scene(corpus, dialogue, spec.context);
    const auto prompt = serialize_context(corpus, dialogue, t, spec.context, desc, lm.vocab, 1);
    const auto logits = lm.model.forward(prompt);
    const std::size_t last = (prompt.size() - 1) * static_cast<std::size_t>(lm.vocab.size());
    const float yes = logits[last + static_cast<std::size_t>(lm.vocab.atomic_id(special::kYes, true))];
    const float no = logits[last + static_cast<std::size_t>(lm.vocab.atomic_id(special::kNo, true))];
    // Ties go to the lower id, matching greedy decoding.
    const bool yes_first = lm.vocab.atomic_id(special::kYes, true) < lm.vocab.atomic_id(special::kNo, true);
    return yes > no || (yes == no && yes_first);
}

bool disambiguation_from_action(const Action& action) {
    return action.intent == kDisambiguateIntent;
}

json to_json(const TurnPrediction& p) {
    json j{{"dialogue_id", p.dialogue_id},
           {"turn", p.turn},
           {"belief", to_json(p.belief)},
           {"action", to_json(p.action)},
           {"response", p.response},
           {"disambiguation", p.disambiguation ? json(*p.disambiguation) : json(nullptr)},
           {"disambiguation_mode", task_mode_name(p.disambiguation_mode)},
           {"oracle_action", p.oracle_action},
           {"flags",
            {{"belief_parse_failed", p.belief_parse_failed},
             {"belief_truncated", p.belief_truncated},
             {"action_parse_failed", p.action_parse_failed},
             {"action_truncated", p.action_truncated},
             {"response_truncated", p.response_truncated},
             {"mref_resolved", p.mref_resolved},
             {"mref_dropped", p.mref_dropped}}}};
    return j;
}

TurnPrediction turn_prediction_from_json(const json& j) {
    try {
        TurnPrediction p;
        p.dialogue_id = j.at("dialogue_id").get<std::string>();
        p.turn = j.at("turn").get<int>();
        const std::string where = "prediction " + p.dialogue_id + " turn " + std::to_string(p.turn);
        p.belief = belief_from_json(j.at("belief"), where + ".belief");
        p.action = action_from_json(j.at("action"), where + ".action");
        p.response = j.at("response").get<std::string>();
        if (!j.at("disambiguation").is_null()) p.disambiguation = j.at("disambiguation").get<bool>();
        p.disambiguation_mode = parse_task_mode(j.at("disambiguation_mode").get<std::string>());
        p.oracle_action = j.at("oracle_action").get<bool>();
        const json& f = j.at("flags");
        p.belief_parse_failed = f.at("belief_parse_failed").get<bool>();
        p.belief_truncated = f.at("belief_truncated").get<bool>();
        p.action_parse_failed = f.at("action_parse_failed").get<bool>();
        p.action_truncated = f.at("action_truncated").get<bool>();
        p.response_truncated = f.at("response_truncated").get<bool>();
        p.mref_resolved = f.at("mref_resolved").get<int>();
        p.mref_dropped = f.at("mref_dropped").get<int>();
        return p;
    } catch (const json::exception& e) {
        throw DataError(std::string("prediction record: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("prediction record: ") + e.what());
    }
}

void write_predictions(const std::filesystem::path& path, const std::vector<TurnPrediction>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    for (const auto& r : rows) out << to_json(r).dump() << '\n';
}

std::vector<TurnPrediction> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file " + path.string());
    std::vector<TurnPrediction> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            rows.push_back(turn_prediction_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw DataError("malformed JSON line in " + path.string() + ": " + e.what());
        }
    }
    return rows;
}

std::vector<TurnPrediction> run_benchmark(const LanguageModel& lm, const Corpus& corpus,
                                          const std::vector<const Dialogue*>& dialogues,
                                          const BenchmarkOptions& options) {
    if (options.disambiguation_mode == TaskMode::TaskSpecific && options.yesno == nullptr) {
        throw UsageError("task-specific disambiguation needs a yes/no model");
    }
    const TaskSpec& spec = options.spec;
    std::vector<TurnPrediction> rows;
    for (const Dialogue* source : dialogues) {
        // Self-conditioned runs overwrite system turns as they go.
        Dialogue d = *source;
        for (int t = 0; t < static_cast<int>(d.turns.size()); ++t) {
            const auto& gold = source->turns[static_cast<std::size_t>(t)];
            TurnPrediction row;
            row.dialogue_id = d.dialogue_id;
            row.turn = t;
            row.disambiguation_mode = options.disambiguation_mode;
            row.oracle_action = options.oracle_action;

            const auto belief = predict_belief(lm, corpus, d, t, spec);
            row.belief = belief.belief;
            row.belief_parse_failed = belief.parse_failed;
            row.belief_truncated = belief.truncated;
            row.mref_resolved = belief.mref_resolved;
            row.mref_dropped = belief.mref_dropped;

            const auto action = predict_action(lm, corpus, d, t, spec, belief.text);
            row.action = action.action;
            row.action_parse_failed = action.parse_failed;
            row.action_truncated = action.truncated;

            const auto response =
                options.oracle_action
                    ? predict_response(lm, corpus, d, t, spec,
                                       format_belief(delocalized_belief(corpus, *source, t)),
                                       format_action(gold.action))
                    : predict_response(lm, corpus, d, t, spec, belief.text, action.text);
            row.response = response.text;
            row.response_truncated = response.truncated;

            row.disambiguation =
                options.disambiguation_mode == TaskMode::EndToEnd
                    ? disambiguation_from_action(row.action)
                    : predict_disambiguation_task_specific(*options.yesno, corpus, d, t, spec);

            if (options.self_conditioned) {
                auto& own = d.turns[static_cast<std::size_t>(t)];
                own.system_utterance = row.response;
                own.system_mentions = row.belief.mref;
            }
            rows.push_back(std::move(row));
        }
    }
    std::sort(rows.begin(), rows.end(), [](const TurnPrediction& a, const TurnPrediction& b) {
        return std::tie(a.dialogue_id, a.turn) < std::tie(b.dialogue_id, b.turn);
    });
    return rows;
}

std::vector<ScoredTurn> align_with_gold(const std::vector<TurnPrediction>& rows,
                                        const Corpus& corpus) {
    std::map<std::string, const Dialogue*> by_id;
    for (const auto& d : corpus.dialogues) by_id[d.dialogue_id] = &d;
    std::vector<ScoredTurn> out;
    for (const auto& r : rows) {
        auto it = by_id.find(r.dialogue_id);
        if (it == by_id.end()) throw DataError("prediction for unknown dialogue " + r.dialogue_id);
        const auto& turns = it->second->turns;
        if (r.turn < 0 || r.turn >= static_cast<int>(turns.size())) {
            throw DataError("prediction for unknown turn " + std::to_string(r.turn) + " of " +
                            r.dialogue_id);
        }
        const auto& gold = turns[static_cast<std::size_t>(r.turn)];
        out.push_back(ScoredTurn{r.belief, gold.belief, r.disambiguation,
                                 gold.disambiguation_label, r.response, gold.system_utterance});
    }
    return out;
}

}  // namespace mtod
