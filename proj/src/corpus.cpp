#include "mtod/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "mtod/corpus_json.hpp"

namespace mtod {

using nlohmann::json;
namespace fs = std::filesystem;

std::string CatalogueItem::attribute(const std::string& name) const {
    auto it = attributes.find(name);
    return it == attributes.end() ? std::string{} : it->second.value;
}

const SceneObject* Scene::find(int canonical_id) const {
    for (const auto& o : objects) {
        if (o.canonical_id == canonical_id) return &o;
    }
    return nullptr;
}

const CatalogueItem* Corpus::find_item(int catalogue_id) const {
    for (const auto& c : catalogue) {
        if (c.catalogue_id == catalogue_id) return &c;
    }
    return nullptr;
}

const Scene& Corpus::scene_of(const Dialogue& d) const {
    auto it = scenes.find(d.scene_id);
    if (it == scenes.end()) {
        throw DataError("dialogue " + d.dialogue_id + " references unknown scene_id \"" +
                        d.scene_id + "\"");
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void require_object(const json& j, std::initializer_list<const char*> allowed,
                    std::initializer_list<const char*> required, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw DataError(where + ": unknown field \"" + key + "\"");
    }
    for (const char* r : required) {
        if (!j.contains(r)) throw DataError(where + ": missing field \"" + std::string(r) + "\"");
    }
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw DataError(where + ": field \"" + key + "\" has the wrong type");
    }
}

int get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw DataError(where + ": expected an integer");
    return j.get<int>();
}

std::vector<int> int_list(const json& j, const char* key, const std::string& where) {
    const json& a = j.at(key);
    if (!a.is_array()) throw DataError(where + ": field \"" + key + "\" must be an array");
    std::vector<int> out;
    for (const auto& v : a) out.push_back(get_int(v, where + "." + key));
    return out;
}

SlotMap slot_map(const json& j, const std::string& where) {
    if (!j.is_object()) throw DataError(where + ": slots must be an object");
    SlotMap out;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw DataError(where + ": slot \"" + k + "\" must be a string");
        out.emplace(k, v.get<std::string>());
    }
    return out;
}

RequestSet request_set(const json& j, const std::string& where) {
    if (!j.is_array()) throw DataError(where + ": request_slots must be an array");
    RequestSet out;
    for (const auto& v : j) {
        if (!v.is_string()) throw DataError(where + ": request slot must be a string");
        if (!out.insert(v.get<std::string>()).second) {
            throw DataError(where + ": duplicate request slot \"" + v.get<std::string>() + "\"");
        }
    }
    return out;
}

}  // namespace

json to_json(const BeliefState& b) {
    return json{{"intent", b.intent},
                {"slots", json(b.slots)},
                {"request_slots", json(b.request_slots)},
                {"mref", json(b.mref)}};
}

json to_json(const Action& a) {
    return json{{"intent", a.intent},
                {"slots", json(a.slots)},
                {"request_slots", json(a.request_slots)}};
}

json to_json(const DialogueTurn& t) {
    json j{{"user_utterance", t.user_utterance},
           {"system_utterance", t.system_utterance},
           {"belief", to_json(t.belief)},
           {"action", to_json(t.action)},
           {"system_mentions", json(t.system_mentions)}};
    if (t.disambiguation_label) j["disambiguation_label"] = *t.disambiguation_label;
    return j;
}

json to_json(const Dialogue& d) {
    json turns = json::array();
    for (const auto& t : d.turns) turns.push_back(to_json(t));
    return json{{"dialogue_id", d.dialogue_id}, {"scene_id", d.scene_id}, {"turns", turns}};
}

json to_json(const Scene& s) {
    json objs = json::array();
    for (const auto& o : s.objects) {
        objs.push_back(json{{"canonical_id", o.canonical_id},
                            {"catalogue_id", o.catalogue_id},
                            {"bbox", json::array({o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h})}});
    }
    return json{{"scene_id", s.scene_id},
                {"width", s.width},
                {"height", s.height},
                {"objects", objs}};
}

json to_json(const CatalogueItem& c) {
    json attrs = json::object();
    for (const auto& [name, a] : c.attributes) {
        attrs[name] = json{{"value", a.value}, {"visual", a.visual}};
    }
    return json{{"catalogue_id", c.catalogue_id}, {"attributes", attrs}};
}

BeliefState belief_from_json(const json& j, const std::string& where) {
    require_object(j, {"intent", "slots", "request_slots", "mref"},
                   {"intent", "slots", "request_slots", "mref"}, where);
    BeliefState b;
    b.intent = get_as<std::string>(j, "intent", where);
    b.slots = slot_map(j.at("slots"), where);
    b.request_slots = request_set(j.at("request_slots"), where);
    b.mref = int_list(j, "mref", where);
    return b;
}

Action action_from_json(const json& j, const std::string& where) {
    require_object(j, {"intent", "slots", "request_slots"}, {"intent", "slots", "request_slots"},
                   where);
    Action a;
    a.intent = get_as<std::string>(j, "intent", where);
    a.slots = slot_map(j.at("slots"), where);
    a.request_slots = request_set(j.at("request_slots"), where);
    return a;
}

DialogueTurn turn_from_json(const json& j, const std::string& where) {
    require_object(j,
                   {"user_utterance", "system_utterance", "belief", "action", "system_mentions",
                    "disambiguation_label"},
                   {"user_utterance", "system_utterance", "belief", "action", "system_mentions"},
                   where);
    DialogueTurn t;
    t.user_utterance = get_as<std::string>(j, "user_utterance", where);
    t.system_utterance = get_as<std::string>(j, "system_utterance", where);
    t.belief = belief_from_json(j.at("belief"), where + ".belief");
    t.action = action_from_json(j.at("action"), where + ".action");
    t.system_mentions = int_list(j, "system_mentions", where);
    if (j.contains("disambiguation_label")) {
        t.disambiguation_label = get_as<bool>(j, "disambiguation_label", where);
    }
    return t;
}

Dialogue dialogue_from_json(const json& j) {
    require_object(j, {"dialogue_id", "scene_id", "turns"}, {"dialogue_id", "scene_id", "turns"},
                   "dialogue");
    Dialogue d;
    d.dialogue_id = get_as<std::string>(j, "dialogue_id", "dialogue");
    const std::string where = "dialogue " + d.dialogue_id;
    d.scene_id = get_as<std::string>(j, "scene_id", where);
    const json& turns = j.at("turns");
    if (!turns.is_array()) throw DataError(where + ": turns must be an array");
    for (std::size_t i = 0; i < turns.size(); ++i) {
        d.turns.push_back(turn_from_json(turns[i], where + " turn " + std::to_string(i)));
    }
    return d;
}

Scene scene_from_json(const json& j, const std::string& where) {
    require_object(j, {"scene_id", "width", "height", "objects"},
                   {"scene_id", "width", "height", "objects"}, where);
    Scene s;
    s.scene_id = get_as<std::string>(j, "scene_id", where);
    s.width = get_int(j.at("width"), where + ".width");
    s.height = get_int(j.at("height"), where + ".height");
    const json& objs = j.at("objects");
    if (!objs.is_array()) throw DataError(where + ": objects must be an array");
    for (const auto& o : objs) {
        require_object(o, {"canonical_id", "catalogue_id", "bbox"},
                       {"canonical_id", "catalogue_id", "bbox"}, where + " object");
        SceneObject so;
        so.canonical_id = get_int(o.at("canonical_id"), where + ".canonical_id");
        so.catalogue_id = get_int(o.at("catalogue_id"), where + ".catalogue_id");
        const json& bb = o.at("bbox");
        if (!bb.is_array() || bb.size() != 4) {
            throw DataError(where + ": bbox must be [x, y, w, h]");
        }
        so.bbox = {get_int(bb[0], where + ".bbox"), get_int(bb[1], where + ".bbox"),
                   get_int(bb[2], where + ".bbox"), get_int(bb[3], where + ".bbox")};
        s.objects.push_back(so);
    }
    return s;
}

CatalogueItem catalogue_item_from_json(const json& j) {
    require_object(j, {"catalogue_id", "attributes"}, {"catalogue_id", "attributes"},
                   "catalogue item");
    CatalogueItem c;
    c.catalogue_id = get_int(j.at("catalogue_id"), "catalogue item");
    const std::string where = "catalogue item " + std::to_string(c.catalogue_id);
    const json& attrs = j.at("attributes");
    if (!attrs.is_object()) throw DataError(where + ": attributes must be an object");
    for (const auto& [name, a] : attrs.items()) {
        require_object(a, {"value", "visual"}, {"value", "visual"}, where + " attribute " + name);
        c.attributes[name] = Attribute{get_as<std::string>(a, "value", where),
                                       get_as<bool>(a, "visual", where)};
    }
    return c;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const Corpus& corpus) {
    std::vector<Violation> out;
    auto report = [&](std::string code, std::string dialogue, std::string scene,
                      std::optional<int> id, std::string msg) {
        out.push_back({std::move(code), std::move(dialogue), std::move(scene), id, std::move(msg)});
    };

    std::set<int> catalogue_ids;
    for (const auto& c : corpus.catalogue) {
        if (!catalogue_ids.insert(c.catalogue_id).second) {
            report("DUP_CATALOGUE_ID", "", "", c.catalogue_id,
                   "catalogue_id " + std::to_string(c.catalogue_id) + " appears more than once");
        }
    }

    for (const auto& [key, s] : corpus.scenes) {
        if (key != s.scene_id) {
            report("SCENE_ID_MISMATCH", "", key, std::nullopt,
                   "scene stored under \"" + key + "\" declares scene_id \"" + s.scene_id + "\"");
        }
        if (s.width <= 0 || s.height <= 0) {
            report("SCENE_DEGENERATE", "", s.scene_id, std::nullopt,
                   "scene " + s.scene_id + " has non-positive dimensions");
        }
        std::set<int> canon;
        for (const auto& o : s.objects) {
            const std::string oid = std::to_string(o.canonical_id);
            if (!canon.insert(o.canonical_id).second) {
                report("DUP_CANONICAL_ID", "", s.scene_id, o.canonical_id,
                       "scene " + s.scene_id + " repeats canonical_id " + oid);
            }
            if (!catalogue_ids.count(o.catalogue_id)) {
                report("UNKNOWN_CATALOGUE_ID", "", s.scene_id, o.catalogue_id,
                       "scene " + s.scene_id + " object " + oid + " references unknown catalogue_id " +
                           std::to_string(o.catalogue_id));
            }
            const auto& b = o.bbox;
            if (b.w <= 0 || b.h <= 0) {
                report("BBOX_DEGENERATE", "", s.scene_id, o.canonical_id,
                       "scene " + s.scene_id + " object " + oid + " has a degenerate bbox");
            } else if (b.x < 0 || b.y < 0 || b.x + b.w > s.width || b.y + b.h > s.height) {
                report("BBOX_OUT_OF_BOUNDS", "", s.scene_id, o.canonical_id,
                       "scene " + s.scene_id + " object " + oid + " bbox leaves the scene");
            }
        }
    }

    std::set<std::string> dialogue_ids;
    for (const auto& d : corpus.dialogues) {
        if (!dialogue_ids.insert(d.dialogue_id).second) {
            report("DUP_DIALOGUE_ID", d.dialogue_id, d.scene_id, std::nullopt,
                   "dialogue_id " + d.dialogue_id + " appears more than once");
        }
        if (d.turns.empty()) {
            report("EMPTY_DIALOGUE", d.dialogue_id, d.scene_id, std::nullopt,
                   "dialogue " + d.dialogue_id + " has no turns");
        }
        auto sit = corpus.scenes.find(d.scene_id);
        if (sit == corpus.scenes.end()) {
            report("UNKNOWN_SCENE", d.dialogue_id, d.scene_id, std::nullopt,
                   "dialogue " + d.dialogue_id + " references unknown scene_id \"" + d.scene_id +
                       "\"");
            continue;
        }
        const Scene& scene = sit->second;
        for (std::size_t t = 0; t < d.turns.size(); ++t) {
            const auto& turn = d.turns[t];
            const std::string where = "dialogue " + d.dialogue_id + " turn " + std::to_string(t);
            std::set<int> seen;
            for (int id : turn.belief.mref) {
                if (!seen.insert(id).second) {
                    report("DUP_MREF", d.dialogue_id, d.scene_id, id,
                           where + " repeats mref canonical_id " + std::to_string(id));
                }
                if (!scene.find(id)) {
                    report("UNKNOWN_OBJECT", d.dialogue_id, d.scene_id, id,
                           where + " belief mref references canonical_id " + std::to_string(id) +
                               " absent from scene " + d.scene_id);
                }
            }
            for (int id : turn.system_mentions) {
                if (!scene.find(id)) {
                    report("UNKNOWN_OBJECT", d.dialogue_id, d.scene_id, id,
                           where + " system_mentions references canonical_id " +
                               std::to_string(id) + " absent from scene " + d.scene_id);
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

CorpusSplit split_by_scene(const Corpus& corpus, int heldout_scenes) {
    if (heldout_scenes < 0) throw UsageError("heldout_scenes must be non-negative");
    std::set<std::string> used;
    for (const auto& d : corpus.dialogues) used.insert(d.scene_id);
    std::set<std::string> held;
    for (auto it = used.rbegin(); it != used.rend() && static_cast<int>(held.size()) < heldout_scenes;
         ++it) {
        held.insert(*it);
    }
    CorpusSplit split{Corpus{corpus.catalogue, corpus.scenes, {}},
                      Corpus{corpus.catalogue, corpus.scenes, {}}};
    for (const auto& d : corpus.dialogues) {
        (held.count(d.scene_id) ? split.heldout : split.train).dialogues.push_back(d);
    }
    return split;
}

Corpus load_corpus(const fs::path& dir) {
    Corpus corpus;

    const json cat = read_json_file(dir / "catalogue.json");
    if (!cat.is_array()) throw DataError("catalogue.json must be an array");
    for (const auto& c : cat) corpus.catalogue.push_back(catalogue_item_from_json(c));

    const fs::path scene_dir = dir / "scenes";
    if (!fs::is_directory(scene_dir)) throw DataError("missing directory " + scene_dir.string());
    std::vector<fs::path> scene_files;
    for (const auto& entry : fs::directory_iterator(scene_dir)) {
        if (entry.path().extension() == ".json") scene_files.push_back(entry.path());
    }
    std::sort(scene_files.begin(), scene_files.end());
    for (const auto& f : scene_files) {
        Scene s = scene_from_json(read_json_file(f), f.filename().string());
        const std::string key = f.stem().string();
        if (!corpus.scenes.emplace(key, std::move(s)).second) {
            throw DataError("duplicate scene file for \"" + key + "\"");
        }
    }

    const json dials = read_json_file(dir / "dialogues.json");
    if (!dials.is_array()) throw DataError("dialogues.json must be an array");
    for (const auto& d : dials) corpus.dialogues.push_back(dialogue_from_json(d));

    auto violations = validate(corpus);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw DataError(v.code + ": " + v.message);
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
    fs::create_directories(dir / "scenes");
    json cat = json::array();
    for (const auto& c : corpus.catalogue) cat.push_back(to_json(c));
    write_json_file(dir / "catalogue.json", cat);
    for (const auto& [id, s] : corpus.scenes) {
        write_json_file(dir / "scenes" / (id + ".json"), to_json(s));
    }
    json dials = json::array();
    for (const auto& d : corpus.dialogues) dials.push_back(to_json(d));
    write_json_file(dir / "dialogues.json", dials);
}

}  // namespace mtod
