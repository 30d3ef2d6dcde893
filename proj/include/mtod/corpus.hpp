#pragma once

// Data model for scenes, catalogues and annotated dialogues, plus the
// on-disk corpus layout:
//
//   <dir>/catalogue.json
//   <dir>/scenes/<scene_id>.json
//   <dir>/dialogues.json
//
// Loading is fail-fast: the first invariant violation is reported as a
// DataError. validate() is the lenient variant used by tooling.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtod/error.hpp"

namespace mtod {

struct BoundingBox {
    int x = 0;  // left
    int y = 0;  // top
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    bool operator==(const BoundingBox&) const = default;
};

struct Attribute {
    std::string value;
    bool visual = false;
    bool operator==(const Attribute&) const = default;
};

struct CatalogueItem {
    int catalogue_id = 0;
    std::map<std::string, Attribute> attributes;

    std::string token() const { return "INV_" + std::to_string(catalogue_id); }
    // Empty string when the attribute is absent.
    std::string attribute(const std::string& name) const;
    bool operator==(const CatalogueItem&) const = default;
};

struct SceneObject {
    int canonical_id = 0;
    int catalogue_id = 0;
    BoundingBox bbox;
    bool operator==(const SceneObject&) const = default;
};

struct Scene {
    std::string scene_id;
    int width = 0;
    int height = 0;
    std::vector<SceneObject> objects;

    const SceneObject* find(int canonical_id) const;
    bool operator==(const Scene&) const = default;
};

using SlotMap = std::map<std::string, std::string>;
using RequestSet = std::set<std::string>;

struct Action {
    std::string intent;
    SlotMap slots;
    RequestSet request_slots;
    bool operator==(const Action&) const = default;
};

// User-side semantics with object references as scene canonical ids.
struct BeliefState {
    std::string intent;
    SlotMap slots;
    RequestSet request_slots;
    std::vector<int> mref;
    bool operator==(const BeliefState&) const = default;
};

struct DialogueTurn {
    std::string user_utterance;
    std::string system_utterance;
    BeliefState belief;
    Action action;
    std::vector<int> system_mentions;
    std::optional<bool> disambiguation_label;
    bool operator==(const DialogueTurn&) const = default;
};

struct Dialogue {
    std::string dialogue_id;
    std::string scene_id;
    std::vector<DialogueTurn> turns;
    bool operator==(const Dialogue&) const = default;
};

struct Corpus {
    std::vector<CatalogueItem> catalogue;
    std::map<std::string, Scene> scenes;
    std::vector<Dialogue> dialogues;

    const CatalogueItem* find_item(int catalogue_id) const;
    const Scene& scene_of(const Dialogue& d) const;
    bool operator==(const Corpus&) const = default;
};

struct Violation {
    std::string code;  // e.g. BBOX_DEGENERATE, DUP_CATALOGUE_ID
    std::string dialogue_id;
    std::string scene_id;
    std::optional<int> id;
    std::string message;
};

std::vector<Violation> validate(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& dir);
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Training and held-out parts of a corpus. The held-out part holds every
// dialogue whose scene is among the last `heldout_scenes` scene ids in use,
// so its scenes are never seen in training. Both parts keep the full
// catalogue and scene table.
struct CorpusSplit {
    Corpus train;
    Corpus heldout;
};
CorpusSplit split_by_scene(const Corpus& corpus, int heldout_scenes);

// Synthetic corpora with oracle annotations.
struct SynthConfig {
    int catalogue_size = 30;
    std::vector<std::string> colors{"yellow", "pink", "blue", "black", "red"};
    std::vector<std::string> types{"shirt", "coat", "trousers"};
    std::vector<std::string> brands{"acme", "nordic", "urban", "vintage"};
    std::vector<std::string> prices{"19.99", "29.99", "39.99", "49.99", "59.99", "149.99"};
    int scenes = 200;
    int min_objects = 4;
    int max_objects = 7;
    int dialogues = 200;
    int min_turns = 1;
    int max_turns = 4;
    std::vector<std::string> intents{"REQUEST:GET",  "ASK:GET",     "REQUEST:COMPARE",
                                     "INFORM:DISAMBIGUATE", "INFORM:GET", "INFORM:COMPARE"};
    double disambiguation_rate = 0.2;
    int scene_width = 960;
    int scene_height = 720;
};

// Pure function of (config, seed). Throws UsageError for infeasible configs.
Corpus generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace mtod
