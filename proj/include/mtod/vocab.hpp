#pragma once

// Token inventory and encoder.
//
// Atomic tokens (structural specials, catalogue tokens, region tokens and
// intent labels) each occupy exactly one id and are never split by the
// subword merges. Every atomic token except the region tokens also has a
// space-prefixed twin (" <USB>", " INV_12", ...) so that grammar text like
// "<SCENE> INV_3@TOP:LEFT </SCENE>" encodes without stray space ids; region
// tokens always follow their catalogue token directly.
//
// Everything else is encoded with byte-level pair merges learned on corpus
// text. All 256 byte values are in the vocabulary, so decode(encode(s)) == s
// for any input.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mtod/corpus.hpp"

namespace mtod {

enum class Partition { Special, Catalogue, Region, Intent, Byte, Merge };

const char* partition_name(Partition p);

struct TokenInfo {
    std::string surface;  // exact bytes the id decodes to
    Partition partition = Partition::Byte;
    bool spaced = false;  // atomic twin carrying a leading space

    bool atomic() const { return partition != Partition::Byte && partition != Partition::Merge; }
    // Surface without the twin's leading space.
    std::string_view base() const {
        return spaced ? std::string_view(surface).substr(1) : std::string_view(surface);
    }
};

namespace special {
inline constexpr std::string_view kScene = "<SCENE>";
inline constexpr std::string_view kSceneEnd = "</SCENE>";
inline constexpr std::string_view kUser = "<USR>";
inline constexpr std::string_view kSystem = "<SYS>";
inline constexpr std::string_view kMentions = "<MM>";
inline constexpr std::string_view kMentionsEnd = "</MM>";
inline constexpr std::string_view kBelief = "<USB>";
inline constexpr std::string_view kBeliefEnd = "</USB>";
inline constexpr std::string_view kAction = "<ACT>";
inline constexpr std::string_view kActionEnd = "</ACT>";
inline constexpr std::string_view kResponse = "<RES>";
inline constexpr std::string_view kResponseEnd = "</RES>";
inline constexpr std::string_view kEos = "<EOS>";
inline constexpr std::string_view kPad = "<PAD>";
inline constexpr std::string_view kYes = "<YES>";
inline constexpr std::string_view kNo = "<NO>";

// Closed inventory, in vocabulary order.
const std::vector<std::string>& all();
}  // namespace special

class Vocab {
public:
    // Atomic partitions first, then the 256 bytes, then at most `merges`
    // learned merges. Deterministic in (corpus, merges); frequency ties are
    // broken by the lexicographically smallest (left, right) pair.
    static Vocab build(const Corpus& corpus, int merges);

    // Same construction from explicit inventories and training text.
    static Vocab build(const std::vector<int>& catalogue_ids, const std::vector<std::string>& intents,
                       const std::vector<std::string>& training_text, int merges);

    std::vector<int> encode(std::string_view text) const;
    std::string decode(const std::vector<int>& ids) const;

    std::size_t size() const { return tokens_.size(); }
    const TokenInfo& info(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<TokenInfo>& tokens() const { return tokens_; }
    const std::vector<std::pair<int, int>>& merges() const { return merges_; }

    // Exact surface lookup; throws DataError when absent.
    int id(std::string_view surface) const;
    bool contains(std::string_view surface) const;
    // The atomic id for `token`, preferring the space-prefixed twin when
    // `spaced` is set and one exists.
    int atomic_id(std::string_view token, bool spaced) const;
    // True when `id` is atomic and its base surface equals `token`.
    bool is(int id, std::string_view token) const;

    nlohmann::json to_json() const;
    static Vocab from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

    bool operator==(const Vocab& o) const {
        return merges_ == o.merges_ && surfaces() == o.surfaces();
    }

private:
    void add(std::string surface, Partition p, bool spaced);
    void index();
    std::vector<std::string> surfaces() const;
    void encode_chunk(std::string_view chunk, std::vector<int>& out) const;
    void encode_plain(std::string_view text, std::vector<int>& out) const;

    std::vector<TokenInfo> tokens_;
    std::vector<std::pair<int, int>> merges_;
    std::unordered_map<std::string, int> by_surface_;
    std::unordered_map<std::uint64_t, int> merge_rank_;  // packed (left, right) -> rank
    // First byte -> atomic ids starting with it, longest surface first.
    std::vector<std::vector<int>> atomic_by_first_;
    int first_byte_ = -1;
};

// Splits non-atomic text into merge domains: an optional single leading
// space followed by a run of letters, digits or other symbols; whitespace
// runs form their own chunks.
std::vector<std::string_view> pretokenize(std::string_view text);

}  // namespace mtod
