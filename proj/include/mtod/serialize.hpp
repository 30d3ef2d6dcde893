#pragma once

// Turn serialization.
//
//   context:  <SCENE> v1 .. vk </SCENE> { <USR> u <SYS> s <MM> objs </MM> }* <USR> u_t
//   turn:     context <USB> belief </USB> <ACT> action </ACT> <RES> s_t </RES> <EOS>
//
// Only the current scene is described, once, at the front. Previous turns
// are limited to ContextSpec::window_n; when the result exceeds max_len the
// oldest turns go first, then scene objects from the end.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtod/corpus.hpp"
#include "mtod/delocalize.hpp"
#include "mtod/grammar.hpp"
#include "mtod/vocab.hpp"

namespace mtod {

struct ContextSpec {
    int window_n = 2;
    int max_len = 512;
    // Ablation switch: when false every scene is described as empty.
    bool scene_descriptions = true;
};

struct TrainingSequence {
    std::vector<int> ids;
    int scene_prefix_len = 0;  // ids[0, scene_prefix_len) is the <SCENE> ... </SCENE> span
    std::string dialogue_id;
    int turn = 0;

    int total_len() const { return static_cast<int>(ids.size()); }
    bool operator==(const TrainingSequence&) const = default;
};

// Scene description honouring spec.scene_descriptions.
SceneDescription describe_scene(const Corpus& corpus, const Dialogue& dialogue,
                                const ContextSpec& spec);

// Gold belief of turn t with references de-localized.
DelocalizedBelief delocalized_belief(const Corpus& corpus, const Dialogue& dialogue, int t);

// Context ids with room left for `reserve` more ids under spec.max_len.
// Sets *scene_prefix_len when given. Throws UsageError for a bad t and
// DataError when even the bare current utterance does not fit.
std::vector<int> serialize_context(const Corpus& corpus, const Dialogue& dialogue, int t,
                                   const ContextSpec& spec, const SceneDescription& scene_desc,
                                   const Vocab& vocab, int reserve = 0,
                                   int* scene_prefix_len = nullptr);

TrainingSequence serialize_turn(const Corpus& corpus, const Dialogue& dialogue, int t,
                                const ContextSpec& spec, const SceneDescription& scene_desc,
                                const Vocab& vocab);

// Disambiguation-objective variant: context followed by a single <YES> or
// <NO> target. Requires the turn's disambiguation label.
TrainingSequence serialize_disambiguation(const Corpus& corpus, const Dialogue& dialogue, int t,
                                          const ContextSpec& spec,
                                          const SceneDescription& scene_desc, const Vocab& vocab);

// Text pieces appended after the context.
std::string belief_segment(const std::string& belief_text);   // " <USB> ... </USB>"
std::string action_segment(const std::string& action_text);   // " <ACT> ... </ACT>"
std::string response_segment(const std::string& utterance);   // " <RES> ... </RES> <EOS>"

enum class Objective { LanguageModel, Disambiguation };

// Every annotated turn of `dialogues` under the objective.
std::vector<TrainingSequence> build_dataset(const Corpus& corpus,
                                            const std::vector<const Dialogue*>& dialogues,
                                            const ContextSpec& spec, const Vocab& vocab,
                                            Objective objective);

// Line-delimited records {"ids", "scene_prefix_len", "dialogue_id", "turn"}.
nlohmann::json to_json(const TrainingSequence& s);
TrainingSequence sequence_from_json(const nlohmann::json& j);
void write_dataset(const std::filesystem::path& path, const std::vector<TrainingSequence>& data);
std::vector<TrainingSequence> read_dataset(const std::filesystem::path& path);

}  // namespace mtod
