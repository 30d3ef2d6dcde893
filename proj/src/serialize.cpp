#include "mtod/serialize.hpp"

#include <fstream>

#include "mtod/corpus_json.hpp"

namespace mtod {

using nlohmann::json;

namespace {

std::string sp(std::string_view token) { return " " + std::string(token); }

std::string objects_text(const std::vector<DelocalizedObject>& objs) {
    std::string out;
    for (const auto& o : objs) out += " " + o.rendered();
    return out;
}

void append(std::vector<int>& out, const std::vector<int>& more) {
    out.insert(out.end(), more.begin(), more.end());
}

const DialogueTurn& turn_at(const Dialogue& dialogue, int t) {
    if (t < 0 || t >= static_cast<int>(dialogue.turns.size())) {
        throw UsageError("turn index " + std::to_string(t) + " out of range for dialogue " +
                         dialogue.dialogue_id);
    }
    return dialogue.turns[static_cast<std::size_t>(t)];
}

}  // namespace

SceneDescription describe_scene(const Corpus& corpus, const Dialogue& dialogue,
                                const ContextSpec& spec) {
    if (!spec.scene_descriptions) return {};
    return scene_description(corpus.scene_of(dialogue), corpus.catalogue);
}

DelocalizedBelief delocalized_belief(const Corpus& corpus, const Dialogue& dialogue, int t) {
    const auto& turn = turn_at(dialogue, t);
    return DelocalizedBelief{turn.belief.intent, turn.belief.slots, turn.belief.request_slots,
                             delocalize_refs(turn.belief.mref, corpus.scene_of(dialogue),
                                             corpus.catalogue)};
}

std::string belief_segment(const std::string& belief_text) {
    return sp(special::kBelief) + " " + belief_text + sp(special::kBeliefEnd);
}

std::string action_segment(const std::string& action_text) {
    return sp(special::kAction) + " " + action_text + sp(special::kActionEnd);
}

std::string response_segment(const std::string& utterance) {
    return sp(special::kResponse) + " " + utterance + sp(special::kResponseEnd) + sp(special::kEos);
}

std::vector<int> serialize_context(const Corpus& corpus, const Dialogue& dialogue, int t,
                                   const ContextSpec& spec, const SceneDescription& scene_desc,
                                   const Vocab& vocab, int reserve, int* scene_prefix_len) {
    const auto& current = turn_at(dialogue, t);
    if (spec.window_n < 0) throw UsageError("window_n must be non-negative");

    std::vector<std::vector<int>> objects;
    for (const auto& o : scene_desc.objects) objects.push_back(vocab.encode(" " + o.rendered()));

    const Scene& scene = corpus.scene_of(dialogue);
    std::vector<std::vector<int>> history;  // oldest first
    for (int k = std::max(0, t - spec.window_n); k < t; ++k) {
        const auto& prev = dialogue.turns[static_cast<std::size_t>(k)];
        const auto mentions = delocalize_refs(prev.system_mentions, scene, corpus.catalogue);
        history.push_back(vocab.encode(sp(special::kUser) + " " + prev.user_utterance +
                                       sp(special::kSystem) + " " + prev.system_utterance +
                                       sp(special::kMentions) + objects_text(mentions) +
                                       sp(special::kMentionsEnd)));
    }
    const auto user = vocab.encode(sp(special::kUser) + " " + current.user_utterance);
    const auto open = vocab.encode(special::kScene);
    const auto close = vocab.encode(sp(special::kSceneEnd));

    auto total = [&] {
        std::size_t n = open.size() + close.size() + user.size() + static_cast<std::size_t>(reserve);
        for (const auto& o : objects) n += o.size();
        for (const auto& h : history) n += h.size();
        return n;
    };
    const auto limit = static_cast<std::size_t>(spec.max_len);
    std::size_t drop_history = 0;
    while (total() > limit && drop_history < history.size()) {
        history[drop_history++].clear();
    }
    while (total() > limit && !objects.empty()) objects.pop_back();
    if (total() > limit) {
        throw DataError("dialogue " + dialogue.dialogue_id + " turn " + std::to_string(t) +
                        " does not fit in max_len " + std::to_string(spec.max_len));
    }

    std::vector<int> ids = open;
    for (const auto& o : objects) append(ids, o);
    append(ids, close);
    if (scene_prefix_len) *scene_prefix_len = static_cast<int>(ids.size());
    for (const auto& h : history) append(ids, h);
    append(ids, user);
    return ids;
}

TrainingSequence serialize_turn(const Corpus& corpus, const Dialogue& dialogue, int t,
                                const ContextSpec& spec, const SceneDescription& scene_desc,
                                const Vocab& vocab) {
    const auto& turn = turn_at(dialogue, t);
    const auto belief = format_belief(delocalized_belief(corpus, dialogue, t));
    std::vector<int> target = vocab.encode(belief_segment(belief));
    append(target, vocab.encode(action_segment(format_action(turn.action))));
    append(target, vocab.encode(response_segment(turn.system_utterance)));

    TrainingSequence seq;
    seq.ids = serialize_context(corpus, dialogue, t, spec, scene_desc, vocab,
                                static_cast<int>(target.size()), &seq.scene_prefix_len);
    append(seq.ids, target);
    seq.dialogue_id = dialogue.dialogue_id;
    seq.turn = t;
    return seq;
}

TrainingSequence serialize_disambiguation(const Corpus& corpus, const Dialogue& dialogue, int t,
                                          const ContextSpec& spec,
                                          const SceneDescription& scene_desc, const Vocab& vocab) {
    const auto& turn = turn_at(dialogue, t);
    if (!turn.disambiguation_label) {
        throw UsageError("turn has no disambiguation label");
    }
    TrainingSequence seq;
    seq.ids = serialize_context(corpus, dialogue, t, spec, scene_desc, vocab, 1,
                                &seq.scene_prefix_len);
    seq.ids.push_back(
        vocab.atomic_id(*turn.disambiguation_label ? special::kYes : special::kNo, true));
    seq.dialogue_id = dialogue.dialogue_id;
    seq.turn = t;
    return seq;
}

std::vector<TrainingSequence> build_dataset(const Corpus& corpus,
                                            const std::vector<const Dialogue*>& dialogues,
                                            const ContextSpec& spec, const Vocab& vocab,
                                            Objective objective) {
    std::vector<TrainingSequence> out;
    for (const Dialogue* d : dialogues) {
        const auto desc = describe_scene(corpus, *d, spec);
        for (int t = 0; t < static_cast<int>(d->turns.size()); ++t) {
            if (objective == Objective::LanguageModel) {
                out.push_back(serialize_turn(corpus, *d, t, spec, desc, vocab));
            } else if (d->turns[static_cast<std::size_t>(t)].disambiguation_label) {
                out.push_back(serialize_disambiguation(corpus, *d, t, spec, desc, vocab));
            }
        }
    }
    return out;
}

json to_json(const TrainingSequence& s) {
    return json{{"ids", s.ids},
                {"scene_prefix_len", s.scene_prefix_len},
                {"dialogue_id", s.dialogue_id},
                {"turn", s.turn}};
}

TrainingSequence sequence_from_json(const json& j) {
    try {
        TrainingSequence s;
        for (const auto& [key, _] : j.items()) {
            if (key != "ids" && key != "scene_prefix_len" && key != "dialogue_id" && key != "turn") {
                throw DataError("dataset record: unknown field \"" + key + "\"");
            }
        }
        s.ids = j.at("ids").get<std::vector<int>>();
        s.scene_prefix_len = j.at("scene_prefix_len").get<int>();
        s.dialogue_id = j.at("dialogue_id").get<std::string>();
        s.turn = j.at("turn").get<int>();
        if (s.scene_prefix_len < 1 || s.scene_prefix_len > s.total_len()) {
            throw DataError("dataset record: scene_prefix_len out of range");
        }
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("dataset record: ") + e.what());
    }
}

void write_dataset(const std::filesystem::path& path, const std::vector<TrainingSequence>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    for (const auto& s : data) out << to_json(s).dump() << '\n';
}

std::vector<TrainingSequence> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file " + path.string());
    std::vector<TrainingSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(sequence_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw DataError("malformed JSON line in " + path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mtod
