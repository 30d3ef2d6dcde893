#pragma once

// Small hand-built corpora shared by the unit tests.

#include <filesystem>
#include <string>

#include <unistd.h>

#include "mtod/corpus.hpp"

namespace fixture {

inline mtod::CatalogueItem item(int id, const std::string& color, const std::string& type) {
    mtod::CatalogueItem c;
    c.catalogue_id = id;
    c.attributes["color"] = {color, true};
    c.attributes["type"] = {type, true};
    c.attributes["price"] = {"19.99", false};
    return c;
}

inline mtod::SceneObject object(int canonical, int catalogue, int x, int y, int w, int h) {
    return mtod::SceneObject{canonical, catalogue, mtod::BoundingBox{x, y, w, h}};
}

// Scene "s1" (300x300): INV_247 at canonical 4 (area 400) and 7 (area 900),
// both MIDDLE:CENTER, plus INV_12 at canonical 2 in TOP:LEFT.
inline mtod::Corpus tiny_corpus() {
    mtod::Corpus c;
    c.catalogue = {item(12, "blue", "coat"), item(247, "yellow", "shirt")};
    mtod::Scene s;
    s.scene_id = "s1";
    s.width = 300;
    s.height = 300;
    s.objects = {object(2, 12, 10, 10, 40, 40), object(4, 247, 140, 140, 20, 20),
                 object(7, 247, 135, 135, 30, 30)};
    c.scenes[s.scene_id] = s;

    mtod::Dialogue d;
    d.dialogue_id = "d1";
    d.scene_id = "s1";
    mtod::DialogueTurn t0;
    t0.user_utterance = "do you have a yellow shirt?";
    t0.system_utterance = "which one do you mean?";
    t0.belief.intent = "REQUEST:GET";
    t0.belief.slots = {{"color", "yellow"}, {"type", "shirt"}};
    t0.action.intent = "INFORM:DISAMBIGUATE";
    t0.disambiguation_label = true;
    mtod::DialogueTurn t1;
    t1.user_utterance = "the big one in the middle, how much is it?";
    t1.system_utterance = "that one is 19.99.";
    t1.belief.intent = "ASK:GET";
    t1.belief.request_slots = {"price"};
    t1.belief.mref = {7};
    t1.action.intent = "INFORM:GET";
    t1.action.request_slots = {"price"};
    t1.system_mentions = {7};
    t1.disambiguation_label = false;
    d.turns = {t0, t1};
    c.dialogues = {d};
    return c;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() /
                ("mtod_test_" + tag + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace fixture
