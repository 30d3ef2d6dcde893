#include "doctest.h"
#include "fixtures.hpp"
#include "mtod/serialize.hpp"

using namespace mtod;

namespace {

struct Setup {
    Corpus corpus = fixture::tiny_corpus();
    Vocab vocab = Vocab::build(corpus, 60);
    const Dialogue& dialogue() const { return corpus.dialogues[0]; }
};

}  // namespace

TEST_CASE("scene prefix spans the described objects") {
    Setup s;
    ContextSpec spec;
    Scene& scene = s.corpus.scenes["s1"];
    scene.objects.pop_back();  // two objects left
    s.corpus.dialogues[0].turns[1].belief.mref = {4};
    s.corpus.dialogues[0].turns[1].system_mentions = {4};
    const auto desc = describe_scene(s.corpus, s.dialogue(), spec);
    int prefix = 0;
    const auto ids = serialize_context(s.corpus, s.dialogue(), 0, spec, desc, s.vocab, 0, &prefix);
    CHECK(prefix == 6);
    CHECK(s.vocab.is(ids[0], "<SCENE>"));
    CHECK(s.vocab.is(ids[5], "</SCENE>"));
    CHECK(s.vocab.decode(ids) ==
          "<SCENE> INV_12@TOP:LEFT INV_247@MIDDLE:CENTER </SCENE> <USR> do you have a yellow shirt?");
}

TEST_CASE("full turn layout") {
    Setup s;
    ContextSpec spec;
    const auto desc = describe_scene(s.corpus, s.dialogue(), spec);
    const auto seq = serialize_turn(s.corpus, s.dialogue(), 1, spec, desc, s.vocab);
    CHECK(seq.dialogue_id == "d1");
    CHECK(seq.turn == 1);
    CHECK(seq.scene_prefix_len == 8);
    CHECK(s.vocab.decode(seq.ids) ==
          "<SCENE> INV_12@TOP:LEFT INV_247@MIDDLE:CENTER INV_247@MIDDLE:CENTER </SCENE>"
          " <USR> do you have a yellow shirt? <SYS> which one do you mean? <MM> </MM>"
          " <USR> the big one in the middle, how much is it?"
          " <USB> ASK:GET [ ] ( price ) < INV_247@MIDDLE:CENTER > </USB>"
          " <ACT> INFORM:GET [ ] ( price ) </ACT>"
          " <RES> that one is 19.99. </RES> <EOS>");
}

TEST_CASE("window_n limits the history") {
    Setup s;
    ContextSpec spec;
    spec.window_n = 0;
    const auto desc = describe_scene(s.corpus, s.dialogue(), spec);
    const auto ids = serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab);
    CHECK(s.vocab.decode(ids).find("<SYS>") == std::string::npos);
    spec.window_n = -1;
    CHECK_THROWS_AS(serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab), UsageError);
}

TEST_CASE("ablated scene descriptions leave an empty scene span") {
    Setup s;
    ContextSpec spec;
    spec.scene_descriptions = false;
    const auto desc = describe_scene(s.corpus, s.dialogue(), spec);
    CHECK(desc.objects.empty());
    const auto seq = serialize_turn(s.corpus, s.dialogue(), 0, spec, desc, s.vocab);
    CHECK(seq.scene_prefix_len == 2);
}

TEST_CASE("over-long contexts drop history first, then scene objects") {
    Setup s;
    ContextSpec spec;
    const auto desc = describe_scene(s.corpus, s.dialogue(), spec);
    const auto full = serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab);
    int prefix_full = 0;
    serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab, 0, &prefix_full);

    spec.max_len = static_cast<int>(full.size()) - 1;
    int prefix = 0;
    const auto cut = serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab, 0, &prefix);
    CHECK(cut.size() <= static_cast<std::size_t>(spec.max_len));
    CHECK(prefix == prefix_full);
    CHECK(s.vocab.decode(cut).find("<SYS>") == std::string::npos);

    spec.max_len = static_cast<int>(cut.size()) - 2;
    const auto tight = serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab, 0, &prefix);
    CHECK(tight.size() <= static_cast<std::size_t>(spec.max_len));
    CHECK(prefix < prefix_full);

    spec.max_len = 3;
    CHECK_THROWS_AS(serialize_context(s.corpus, s.dialogue(), 1, spec, desc, s.vocab), DataError);
    CHECK_THROWS_AS(serialize_context(s.corpus, s.dialogue(), 5, spec, desc, s.vocab), UsageError);
}

TEST_CASE("disambiguation objective ends in a single YES/NO target") {
    Setup s;
    ContextSpec spec;
    const auto data = build_dataset(s.corpus, {&s.corpus.dialogues[0]}, spec, s.vocab,
                                    Objective::Disambiguation);
    REQUIRE(data.size() == 2);
    CHECK(s.vocab.is(data[0].ids.back(), "<YES>"));
    CHECK(s.vocab.is(data[1].ids.back(), "<NO>"));
    s.corpus.dialogues[0].turns[0].disambiguation_label.reset();
    const auto fewer = build_dataset(s.corpus, {&s.corpus.dialogues[0]}, spec, s.vocab,
                                     Objective::Disambiguation);
    CHECK(fewer.size() == 1);
}

TEST_CASE("dataset records round trip through JSON lines") {
    Setup s;
    const auto data = build_dataset(s.corpus, {&s.corpus.dialogues[0]}, ContextSpec{}, s.vocab,
                                    Objective::LanguageModel);
    fixture::TempDir dir("dataset");
    write_dataset(dir.path() / "seq.jsonl", data);
    CHECK(read_dataset(dir.path() / "seq.jsonl") == data);

    auto j = to_json(data[0]);
    j["scene_prefix_len"] = 0;
    CHECK_THROWS_AS(sequence_from_json(j), DataError);
    j = to_json(data[0]);
    j["extra"] = true;
    CHECK_THROWS_AS(sequence_from_json(j), DataError);
}
