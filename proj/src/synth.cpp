#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "mtod/corpus.hpp"
#include "mtod/delocalize.hpp"
#include "mtod/rng.hpp"

namespace mtod {

namespace {

const std::vector<std::string> kRequiredIntents{"REQUEST:GET",        "ASK:GET",
                                                "REQUEST:COMPARE",    "INFORM:DISAMBIGUATE",
                                                "INFORM:GET",         "INFORM:COMPARE"};

std::string padded(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04d", prefix, i);
    return buf;
}

void check_feasible(const SynthConfig& c) {
    auto fail = [](const std::string& why) { throw UsageError("infeasible synth config: " + why); };
    if (c.catalogue_size < 1) fail("catalogue_size must be positive");
    if (c.colors.empty() || c.types.empty() || c.brands.empty() || c.prices.empty()) {
        fail("attribute vocabularies must be non-empty");
    }
    if (c.min_objects < 1 || c.min_objects > c.max_objects) fail("bad objects-per-scene range");
    if (c.max_objects > c.catalogue_size) {
        fail("max_objects exceeds the catalogue size (items are unique within a scene)");
    }
    if (c.max_objects > 9) fail("max_objects exceeds the 9 scene regions (one object per region)");
    if (c.min_turns < 1 || c.min_turns > c.max_turns) fail("bad turns-per-dialogue range");
    if (c.dialogues < 0) fail("dialogues must be non-negative");
    if (c.dialogues > 0 && c.scenes < 1) fail("dialogues need at least one scene");
    if (c.disambiguation_rate < 0.0 || c.disambiguation_rate > 1.0) {
        fail("disambiguation_rate must lie in [0, 1]");
    }
    if (c.scene_width < 30 || c.scene_height < 30) fail("scene too small");
    for (const auto& need : kRequiredIntents) {
        if (std::find(c.intents.begin(), c.intents.end(), need) == c.intents.end()) {
            fail("intent inventory lacks " + need);
        }
    }
}

struct Generator {
    const SynthConfig& cfg;
    Rng rng;
    Corpus corpus;

    const CatalogueItem& item(int catalogue_id) const { return *corpus.find_item(catalogue_id); }

    std::string combo(int catalogue_id) const {
        const auto& it = item(catalogue_id);
        return it.attribute("color") + " " + it.attribute("type");
    }

    void make_catalogue() {
        std::vector<std::pair<std::string, std::string>> combos;
        for (const auto& c : cfg.colors) {
            for (const auto& t : cfg.types) combos.emplace_back(c, t);
        }
        rng.shuffle(combos);
        std::set<int> ids;
        while (static_cast<int>(ids.size()) < cfg.catalogue_size) {
            ids.insert(rng.between(1, 10 * cfg.catalogue_size + 10));
        }
        std::vector<int> id_list(ids.begin(), ids.end());
        rng.shuffle(id_list);
        for (int i = 0; i < cfg.catalogue_size; ++i) {
            CatalogueItem it;
            it.catalogue_id = id_list[i];
            const auto& [color, type] = combos[i % combos.size()];
            it.attributes["color"] = {color, true};
            it.attributes["type"] = {type, true};
            it.attributes["brand"] = {rng.pick(cfg.brands), false};
            it.attributes["price"] = {rng.pick(cfg.prices), false};
            corpus.catalogue.push_back(std::move(it));
        }
    }

    // Items whose (color, type) pair occurs exactly once among `items`.
    std::vector<int> unique_combo_items(const std::vector<int>& items) const {
        std::map<std::string, int> count;
        for (int id : items) ++count[combo(id)];
        std::vector<int> out;
        for (int id : items) {
            if (count[combo(id)] == 1) out.push_back(id);
        }
        return out;
    }

    std::vector<int> pick_items(int k, bool want_duplicate_pair) {
        std::vector<int> all;
        for (const auto& c : corpus.catalogue) all.push_back(c.catalogue_id);
        for (int attempt = 0; attempt < 200; ++attempt) {
            std::vector<int> pool = all;
            rng.shuffle(pool);
            std::vector<int> items(pool.begin(), pool.begin() + k);
            if (want_duplicate_pair && k >= 2) {
                // Replace the second item by an unused item sharing the first's combo.
                for (std::size_t j = k; j < pool.size(); ++j) {
                    if (combo(pool[j]) == combo(items[0])) {
                        items[1] = pool[j];
                        break;
                    }
                }
            }
            if (!unique_combo_items(items).empty()) return items;
        }
        throw UsageError("infeasible synth config: cannot place an unambiguous object");
    }

    BoundingBox place(RegionLabel region) {
        const int W = cfg.scene_width;
        const int H = cfg.scene_height;
        const int cell_w = W / 3;
        const int cell_h = H / 3;
        const int w = rng.between(std::max(4, cell_w / 8), std::max(4, cell_w * 5 / 8));
        const int h = rng.between(std::max(4, cell_h / 8), std::max(4, cell_h * 5 / 8));
        const int x0 = region.col_index() * W / 3;
        const int y0 = region.row_index() * H / 3;
        const int cx = x0 + rng.between(cell_w / 16 + 1, cell_w - cell_w / 16 - 1);
        const int cy = y0 + rng.between(cell_h / 16 + 1, cell_h - cell_h / 16 - 1);
        BoundingBox b{cx - w / 2, cy - h / 2, w, h};
        b.x = std::clamp(b.x, 0, W - w);
        b.y = std::clamp(b.y, 0, H - h);
        return b;
    }

    void make_scenes() {
        for (int s = 0; s < cfg.scenes; ++s) {
            Scene scene;
            scene.scene_id = padded("s", s);
            scene.width = cfg.scene_width;
            scene.height = cfg.scene_height;
            const int k = rng.between(cfg.min_objects, cfg.max_objects);
            const bool dup = cfg.disambiguation_rate > 0.0 && rng.chance(0.5);
            const auto items = pick_items(k, dup);
            std::vector<int> regions{0, 1, 2, 3, 4, 5, 6, 7, 8};
            rng.shuffle(regions);
            std::set<int> canon;
            while (static_cast<int>(canon.size()) < k) canon.insert(rng.between(0, 3 * k));
            std::vector<int> canon_ids(canon.begin(), canon.end());
            rng.shuffle(canon_ids);
            for (int i = 0; i < k; ++i) {
                SceneObject o;
                o.canonical_id = canon_ids[i];
                o.catalogue_id = items[i];
                o.bbox = place(RegionLabel::from_index(regions[i]));
                scene.objects.push_back(o);
            }
            corpus.scenes.emplace(scene.scene_id, std::move(scene));
        }
    }

    // ---- dialogue templates -------------------------------------------------

    struct TurnState {
        std::vector<int> last_mentions;
        std::vector<int> pending_candidates;  // objects of an unresolved ambiguous request
    };

    const CatalogueItem& item_of(const Scene& scene, int canonical_id) const {
        return item(scene.find(canonical_id)->catalogue_id);
    }

    std::vector<int> objects_with_combo_count(const Scene& scene, bool ambiguous) const {
        std::map<std::string, int> count;
        for (const auto& o : scene.objects) ++count[combo(o.catalogue_id)];
        std::vector<int> out;
        for (const auto& o : scene.objects) {
            if ((count[combo(o.catalogue_id)] >= 2) == ambiguous) out.push_back(o.canonical_id);
        }
        return out;
    }

    DialogueTurn request_get(const Scene& scene, TurnState& st) {
        DialogueTurn t;
        const auto ambiguous = objects_with_combo_count(scene, true);
        const auto unique = objects_with_combo_count(scene, false);
        const bool make_ambiguous = !ambiguous.empty() && rng.chance(cfg.disambiguation_rate);
        const int target = make_ambiguous ? rng.pick(ambiguous) : rng.pick(unique);
        const auto& it = item_of(scene, target);
        const std::string color = it.attribute("color");
        const std::string type = it.attribute("type");

        static const std::vector<std::string> openers{"i need a", "show me a", "do you have a",
                                                      "i am looking for a"};
        t.user_utterance = rng.pick(openers) + " " + color + " " + type;
        if (rng.chance(0.3)) {
            t.user_utterance += " , how much is it ?";
            t.belief.request_slots.insert("price");
        }
        t.belief.intent = "REQUEST:GET";
        t.belief.slots = {{"color", color}, {"type", type}};
        t.disambiguation_label = make_ambiguous;

        if (make_ambiguous) {
            t.action.intent = "INFORM:DISAMBIGUATE";
            t.system_utterance = "which " + color + " " + type + " do you mean ?";
            for (const auto& o : scene.objects) {
                if (combo(o.catalogue_id) == combo(it.catalogue_id)) {
                    st.pending_candidates.push_back(o.canonical_id);
                }
            }
            st.last_mentions.clear();
        } else {
            t.belief.mref = {target};
            const std::string brand = it.attribute("brand");
            const std::string price = it.attribute("price");
            t.action.intent = "INFORM:GET";
            t.action.slots = {{"brand", brand}, {"price", price}};
            t.system_utterance = "how about this " + type + " from " + brand + " ? it is " + price + " .";
            t.system_mentions = {target};
            st.last_mentions = {target};
        }
        return t;
    }

    DialogueTurn clarify(const Scene& scene, TurnState& st) {
        DialogueTurn t;
        const int target = rng.pick(st.pending_candidates);
        st.pending_candidates.clear();
        const SceneObject& o = *scene.find(target);
        const RegionLabel region = region_of(o.bbox, scene.width, scene.height);
        static const std::vector<std::string> openers{"i mean the one at the", "the one at the"};
        t.user_utterance = rng.pick(openers) + " " + region.phrase();
        t.belief.intent = "INFORM:DISAMBIGUATE";
        t.belief.mref = {target};
        const auto& it = item(o.catalogue_id);
        const std::string brand = it.attribute("brand");
        const std::string price = it.attribute("price");
        t.action.intent = "INFORM:GET";
        t.action.slots = {{"brand", brand}, {"price", price}};
        t.system_utterance = "this " + it.attribute("type") + " from " + brand + " is " + price + " .";
        t.system_mentions = {target};
        st.last_mentions = {target};
        return t;
    }

    DialogueTurn ask_get(const Scene& scene, TurnState& st) {
        DialogueTurn t;
        const int target = st.last_mentions.front();
        const auto& it = item_of(scene, target);
        const bool price = rng.chance(0.5);
        static const std::vector<std::string> price_q{"how much is it ?", "what does it cost ?"};
        static const std::vector<std::string> brand_q{"who makes it ?", "what brand is it ?"};
        t.user_utterance = rng.pick(price ? price_q : brand_q);
        t.belief.intent = "ASK:GET";
        t.belief.request_slots = {price ? "price" : "brand"};
        t.belief.mref = {target};
        t.action.intent = "INFORM:GET";
        if (price) {
            t.action.slots = {{"price", it.attribute("price")}};
            t.system_utterance = "it is " + it.attribute("price") + " .";
        } else {
            t.action.slots = {{"brand", it.attribute("brand")}};
            t.system_utterance = "it is made by " + it.attribute("brand") + " .";
        }
        t.system_mentions = {target};
        st.last_mentions = {target};
        return t;
    }

    DialogueTurn compare(const Scene& scene, TurnState& st, std::vector<int> unique) {
        DialogueTurn t;
        rng.shuffle(unique);
        const int a = unique[0];
        const int b = unique[1];
        const auto& ia = item_of(scene, a);
        const auto& ib = item_of(scene, b);
        const std::string na = ia.attribute("color") + " " + ia.attribute("type");
        const std::string nb = ib.attribute("color") + " " + ib.attribute("type");
        if (rng.chance(0.5)) {
            t.user_utterance = "compare the " + na + " and the " + nb;
        } else {
            t.user_utterance = "what about the " + na + " and the " + nb + " ?";
        }
        t.belief.intent = "REQUEST:COMPARE";
        t.belief.mref = {a, b};
        t.action.intent = "INFORM:COMPARE";
        t.action.slots = {};
        t.system_utterance = "the " + na + " is " + ia.attribute("price") + " and the " + nb +
                             " is " + ib.attribute("price") + " .";
        t.system_mentions = {a, b};
        st.last_mentions = {a, b};
        return t;
    }

    void make_dialogues() {
        for (int d = 0; d < cfg.dialogues; ++d) {
            Dialogue dlg;
            dlg.dialogue_id = padded("d", d);
            dlg.scene_id = padded("s", d % cfg.scenes);
            const Scene& scene = corpus.scenes.at(dlg.scene_id);
            const int turns = rng.between(cfg.min_turns, cfg.max_turns);
            TurnState st;
            for (int t = 0; t < turns; ++t) {
                if (!st.pending_candidates.empty()) {
                    dlg.turns.push_back(clarify(scene, st));
                    continue;
                }
                const auto unique = objects_with_combo_count(scene, false);
                const double r = rng.uniform();
                if (st.last_mentions.size() == 1 && r < 0.35) {
                    dlg.turns.push_back(ask_get(scene, st));
                } else if (unique.size() >= 2 && r > 0.75) {
                    dlg.turns.push_back(compare(scene, st, unique));
                } else {
                    dlg.turns.push_back(request_get(scene, st));
                }
            }
            corpus.dialogues.push_back(std::move(dlg));
        }
    }
};

}  // namespace

Corpus generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
    check_feasible(config);
    Generator g{config, Rng(seed), {}};
    g.make_catalogue();
    g.make_scenes();
    g.make_dialogues();
    return std::move(g.corpus);
}

}  // namespace mtod
