#include "doctest.h"
#include "fixtures.hpp"
#include "mtod/rng.hpp"
#include "mtod/vocab.hpp"

using namespace mtod;

namespace {

Vocab small_vocab(int merges = 50) {
    return Vocab::build({12, 247, 278}, {"REQUEST:GET", "ASK:GET", "INFORM:DISAMBIGUATE"},
                        {"do you have a yellow shirt", "the yellow one please", "yes the shirt"},
                        merges);
}

}  // namespace

TEST_CASE("atomic tokens occupy their own partitions") {
    const Vocab v = small_vocab();
    for (const auto& s : special::all()) {
        REQUIRE(v.contains(s));
        CHECK(v.info(v.id(s)).partition == Partition::Special);
    }
    CHECK(v.info(v.id("INV_247")).partition == Partition::Catalogue);
    CHECK(v.info(v.id("@TOP:LEFT")).partition == Partition::Region);
    CHECK(v.info(v.id("ASK:GET")).partition == Partition::Intent);
    CHECK_THROWS_AS(v.id("INV_999"), DataError);
}

TEST_CASE("spaced twins carry the leading space") {
    const Vocab v = small_vocab();
    const int plain = v.atomic_id("<USB>", false);
    const int spaced = v.atomic_id("<USB>", true);
    CHECK(plain != spaced);
    CHECK(v.info(spaced).surface == " <USB>");
    CHECK(v.info(spaced).spaced);
    CHECK(v.is(spaced, "<USB>"));
    CHECK(v.is(plain, "<USB>"));
    CHECK(v.encode(" <USB>") == std::vector<int>{spaced});
}

TEST_CASE("delocalized objects and specials encode atomically") {
    const Vocab v = small_vocab();
    const auto obj = v.encode("INV_278@TOP:LEFT");
    REQUIRE(obj.size() == 2);
    CHECK(v.is(obj[0], "INV_278"));
    CHECK(v.is(obj[1], "@TOP:LEFT"));
    CHECK(v.encode("<USB>").size() == 1);
    CHECK(v.encode("REQUEST:GET").size() == 1);
}

TEST_CASE("atomic tokens stay single ids inside random text") {
    const Vocab v = small_vocab(200);
    Rng rng(3);
    std::vector<std::string> atoms;
    for (const auto& t : v.tokens()) {
        if (t.atomic() && !t.spaced) atoms.push_back(t.surface);
    }
    const std::string alphabet = "abcdefgh yz.,?!'";
    for (int trial = 0; trial < 500; ++trial) {
        const std::string& atom = rng.pick(atoms);
        std::string left, right;
        for (int i = rng.between(0, 12); i > 0; --i) left += alphabet[rng.below(alphabet.size())];
        for (int i = rng.between(0, 12); i > 0; --i) right += alphabet[rng.below(alphabet.size())];
        const std::string sep = rng.chance(0.5) ? " " : "";
        const std::string text = left + sep + atom + " " + right;
        const auto ids = v.encode(text);
        CHECK(v.decode(ids) == text);
        int hits = 0;
        for (int id : ids) hits += v.is(id, atom) ? 1 : 0;
        CHECK(hits == 1);
    }
}

TEST_CASE("decode inverts encode on arbitrary bytes") {
    const Vocab v = small_vocab(100);
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        for (int i = rng.between(0, 40); i > 0; --i) s += static_cast<char>(rng.below(256));
        CHECK(v.decode(v.encode(s)) == s);
    }
    CHECK(v.encode("").empty());
}

TEST_CASE("merges are learned and shorten frequent words") {
    const Vocab none = small_vocab(0);
    const Vocab some = small_vocab(50);
    CHECK(none.merges().empty());
    CHECK_FALSE(some.merges().empty());
    CHECK(some.merges().size() <= 50);
    CHECK(some.encode(" yellow").size() < none.encode(" yellow").size());
}

TEST_CASE("vocabulary construction is deterministic and serializable") {
    const Corpus c = fixture::tiny_corpus();
    const Vocab a = Vocab::build(c, 80);
    const Vocab b = Vocab::build(c, 80);
    CHECK(a == b);
    CHECK(Vocab::from_json(a.to_json()) == a);
    fixture::TempDir dir("vocab");
    a.save(dir.path() / "vocab.json");
    const Vocab loaded = Vocab::load(dir.path() / "vocab.json");
    CHECK(loaded == a);
    const std::string text = "do you have INV_247@MIDDLE:CENTER in yellow?";
    CHECK(loaded.encode(text) == a.encode(text));
}

TEST_CASE("pretokenize splits words and whitespace runs") {
    const auto chunks = pretokenize("hi  there, you");
    std::string joined;
    for (auto c : chunks) joined += c;
    CHECK(joined == "hi  there, you");
    CHECK(chunks.front() == "hi");
}
