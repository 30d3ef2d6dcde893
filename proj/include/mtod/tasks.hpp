#pragma once

// Benchmark tasks on top of greedy generation. Prompts are built from gold
// history; generated text is parsed and object references are mapped back
// to canonical ids of the turn's scene.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtod/corpus.hpp"
#include "mtod/metrics.hpp"
#include "mtod/model.hpp"
#include "mtod/serialize.hpp"
#include "mtod/vocab.hpp"

namespace mtod {

enum class TaskMode { TaskSpecific, EndToEnd };

std::string task_mode_name(TaskMode m);
TaskMode parse_task_mode(std::string_view s);  // "task_specific" | "end_to_end"

struct LanguageModel {
    const Transformer<float>& model;
    const Vocab& vocab;
};

struct TaskSpec {
    ContextSpec context;
    int max_new_belief = 96;
    int max_new_action = 64;
    int max_new_response = 96;
};

struct BeliefPrediction {
    BeliefState belief;
    std::string text;  // generated belief text, as decoded
    bool parse_failed = false;
    bool truncated = false;
    int mref_resolved = 0;
    int mref_dropped = 0;
};

struct ActionPrediction {
    Action action;
    std::string text;
    bool parse_failed = false;
    bool truncated = false;
};

struct ResponsePrediction {
    std::string text;
    bool truncated = false;
};

BeliefPrediction predict_belief(const LanguageModel& lm, const Corpus& corpus,
                                const Dialogue& dialogue, int t, const TaskSpec& spec);

// belief_text is the delocalized belief placed between <USB> and </USB>.
ActionPrediction predict_action(const LanguageModel& lm, const Corpus& corpus,
                                const Dialogue& dialogue, int t, const TaskSpec& spec,
                                const std::string& belief_text);

ResponsePrediction predict_response(const LanguageModel& lm, const Corpus& corpus,
                                    const Dialogue& dialogue, int t, const TaskSpec& spec,
                                    const std::string& belief_text,
                                    const std::string& action_text);

// Restricted two-way argmax over <YES>/<NO> after the context; `lm` must be
// trained on the disambiguation objective.
bool predict_disambiguation_task_specific(const LanguageModel& lm, const Corpus& corpus,
                                          const Dialogue& dialogue, int t, const TaskSpec& spec);

// End-to-end rule: an INFORM:DISAMBIGUATE action counts as YES.
bool disambiguation_from_action(const Action& action);

struct TurnPrediction {
    std::string dialogue_id;
    int turn = 0;
    BeliefState belief;
    Action action;
    std::string response;
    std::optional<bool> disambiguation;
    TaskMode disambiguation_mode = TaskMode::EndToEnd;
    bool oracle_action = false;
    bool belief_parse_failed = false;
    bool belief_truncated = false;
    bool action_parse_failed = false;
    bool action_truncated = false;
    bool response_truncated = false;
    int mref_resolved = 0;
    int mref_dropped = 0;

    bool operator==(const TurnPrediction&) const = default;
};

nlohmann::json to_json(const TurnPrediction& p);
TurnPrediction turn_prediction_from_json(const nlohmann::json& j);
void write_predictions(const std::filesystem::path& path, const std::vector<TurnPrediction>& rows);
std::vector<TurnPrediction> read_predictions(const std::filesystem::path& path);

struct BenchmarkOptions {
    TaskSpec spec;
    TaskMode disambiguation_mode = TaskMode::EndToEnd;
    // Required for TaskMode::TaskSpecific disambiguation.
    const LanguageModel* yesno = nullptr;
    // Response generation from gold belief and action instead of predicted ones.
    bool oracle_action = false;
    // Previous system turns come from the model's own responses instead of
    // gold. Not part of the standard per-turn protocol.
    bool self_conditioned = false;
};

// One row per turn of `dialogues`, sorted by (dialogue_id, turn).
std::vector<TurnPrediction> run_benchmark(const LanguageModel& lm, const Corpus& corpus,
                                          const std::vector<const Dialogue*>& dialogues,
                                          const BenchmarkOptions& options);

// Pairs predictions with gold turns of `corpus`. Throws DataError for a row
// whose dialogue or turn is unknown.
std::vector<ScoredTurn> align_with_gold(const std::vector<TurnPrediction>& rows,
                                        const Corpus& corpus);

}  // namespace mtod
