#include "mtod/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "mtod/corpus_json.hpp"
#include "mtod/delocalize.hpp"
#include "mtod/grammar.hpp"

namespace mtod {

using nlohmann::json;

const char* partition_name(Partition p) {
    switch (p) {
        case Partition::Special: return "special";
        case Partition::Catalogue: return "catalogue";
        case Partition::Region: return "region";
        case Partition::Intent: return "intent";
        case Partition::Byte: return "byte";
        case Partition::Merge: return "merge";
    }
    return "?";
}

namespace {

Partition partition_from_name(const std::string& s) {
    for (Partition p : {Partition::Special, Partition::Catalogue, Partition::Region,
                        Partition::Intent, Partition::Byte, Partition::Merge}) {
        if (s == partition_name(p)) return p;
    }
    throw DataError("vocab: unknown partition \"" + s + "\"");
}

std::uint64_t pack(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

enum class CharClass { Space, Letter, Digit, Other };

CharClass classify(unsigned char c) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        return CharClass::Space;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80) return CharClass::Letter;
    if (c >= '0' && c <= '9') return CharClass::Digit;
    return CharClass::Other;
}

std::string to_hex(std::string_view s) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned char c : s) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

std::string from_hex(const std::string& h) {
    if (h.size() % 2) throw DataError("vocab: odd-length hex token");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw DataError("vocab: bad hex digit");
    };
    std::string out;
    for (std::size_t i = 0; i < h.size(); i += 2) {
        out.push_back(static_cast<char>(nibble(h[i]) * 16 + nibble(h[i + 1])));
    }
    return out;
}

}  // namespace

const std::vector<std::string>& special::all() {
    static const std::vector<std::string> tokens{
        std::string(kScene),   std::string(kSceneEnd),    std::string(kUser),
        std::string(kSystem),  std::string(kMentions),    std::string(kMentionsEnd),
        std::string(kBelief),  std::string(kBeliefEnd),   std::string(kAction),
        std::string(kActionEnd), std::string(kResponse),  std::string(kResponseEnd),
        std::string(kEos),     std::string(kPad),         std::string(kYes),
        std::string(kNo),      "[", "]", "(", ")", "<", ">", "=", ";"};
    return tokens;
}

std::vector<std::string_view> pretokenize(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const std::size_t start = i;
        CharClass cls = classify(static_cast<unsigned char>(text[i]));
        if (cls == CharClass::Space) {
            if (text[i] == ' ' && i + 1 < n &&
                classify(static_cast<unsigned char>(text[i + 1])) != CharClass::Space) {
                ++i;  // single leading space joins the following run
                cls = classify(static_cast<unsigned char>(text[i]));
            } else {
                std::size_t j = i;
                while (j < n && classify(static_cast<unsigned char>(text[j])) == CharClass::Space) ++j;
                // Leave a final ' ' to lead the next run.
                if (j < n && j - i > 1 && text[j - 1] == ' ') --j;
                out.push_back(text.substr(i, j - i));
                i = j;
                continue;
            }
        }
        while (i < n && classify(static_cast<unsigned char>(text[i])) == cls) ++i;
        out.push_back(text.substr(start, i - start));
    }
    return out;
}

void Vocab::add(std::string surface, Partition p, bool spaced) {
    if (by_surface_.count(surface)) return;
    by_surface_.emplace(surface, static_cast<int>(tokens_.size()));
    tokens_.push_back(TokenInfo{std::move(surface), p, spaced});
}

void Vocab::index() {
    by_surface_.clear();
    merge_rank_.clear();
    atomic_by_first_.assign(256, {});
    first_byte_ = -1;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        const auto& t = tokens_[i];
        if (t.partition == Partition::Byte) {
            if (first_byte_ < 0) first_byte_ = static_cast<int>(i);
            // Single-byte atomics such as "[" shadow their byte unit.
            by_surface_.emplace(t.surface, static_cast<int>(i));
            continue;
        }
        if (!by_surface_.emplace(t.surface, static_cast<int>(i)).second) {
            throw DataError("vocab: duplicate token surface");
        }
        if (t.atomic()) {
            atomic_by_first_[static_cast<unsigned char>(t.surface[0])].push_back(static_cast<int>(i));
        }
    }
    for (auto& ids : atomic_by_first_) {
        std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
            return tokens_[a].surface.size() > tokens_[b].surface.size();
        });
    }
    for (std::size_t r = 0; r < merges_.size(); ++r) {
        merge_rank_.emplace(pack(merges_[r].first, merges_[r].second), static_cast<int>(r));
    }
}

std::vector<std::string> Vocab::surfaces() const {
    std::vector<std::string> out;
    for (const auto& t : tokens_) out.push_back(t.surface);
    return out;
}

Vocab Vocab::build(const Corpus& corpus, int merges) {
    std::vector<int> cat_ids;
    for (const auto& c : corpus.catalogue) cat_ids.push_back(c.catalogue_id);
    std::set<std::string> intents;
    std::vector<std::string> text;
    for (const auto& d : corpus.dialogues) {
        for (const auto& t : d.turns) {
            intents.insert(t.belief.intent);
            intents.insert(t.action.intent);
            text.push_back(t.user_utterance);
            text.push_back(t.system_utterance);
            // Slot names and values appear in the serialized frames too.
            text.push_back(format_action(t.action));
            text.push_back(format_action(Action{t.belief.intent, t.belief.slots,
                                                t.belief.request_slots}));
        }
    }
    intents.erase("");
    return build(cat_ids, std::vector<std::string>(intents.begin(), intents.end()), text, merges);
}

Vocab Vocab::build(const std::vector<int>& catalogue_ids, const std::vector<std::string>& intents,
                   const std::vector<std::string>& training_text, int merges) {
    Vocab v;
    for (const auto& s : special::all()) v.add(s, Partition::Special, false);
    std::vector<int> cat = catalogue_ids;
    std::sort(cat.begin(), cat.end());
    for (int id : cat) v.add("INV_" + std::to_string(id), Partition::Catalogue, false);
    for (const auto& r : RegionLabel::all()) v.add(r.token(), Partition::Region, false);
    std::vector<std::string> sorted_intents = intents;
    std::sort(sorted_intents.begin(), sorted_intents.end());
    for (const auto& i : sorted_intents) v.add(i, Partition::Intent, false);
    // Space-prefixed twins, in the same order.
    const std::size_t n_atomic = v.tokens_.size();
    for (std::size_t i = 0; i < n_atomic; ++i) {
        const TokenInfo t = v.tokens_[i];
        if (t.partition != Partition::Region) v.add(" " + t.surface, t.partition, true);
    }
    const int first_byte = static_cast<int>(v.tokens_.size());
    for (int b = 0; b < 256; ++b) {
        v.tokens_.push_back(TokenInfo{std::string(1, static_cast<char>(b)), Partition::Byte, false});
    }
    v.index();

    // Word frequencies over the non-atomic parts of the training text.
    std::map<std::string, long long> freq;
    for (const auto& line : training_text) {
        std::size_t i = 0;
        std::size_t plain_start = 0;
        auto flush = [&](std::size_t end) {
            for (auto chunk : pretokenize(std::string_view(line).substr(plain_start, end - plain_start))) {
                ++freq[std::string(chunk)];
            }
        };
        while (i < line.size()) {
            int best = -1;
            for (int id : v.atomic_by_first_[static_cast<unsigned char>(line[i])]) {
                const auto& s = v.tokens_[id].surface;
                if (line.compare(i, s.size(), s) == 0) {
                    best = id;
                    break;
                }
            }
            if (best >= 0) {
                flush(i);
                i += v.tokens_[best].surface.size();
                plain_start = i;
            } else {
                ++i;
            }
        }
        flush(line.size());
    }

    std::vector<std::pair<std::vector<int>, long long>> words;
    for (const auto& [w, c] : freq) {
        std::vector<int> ids;
        for (unsigned char ch : w) ids.push_back(first_byte + ch);
        words.emplace_back(std::move(ids), c);
    }

    for (int m = 0; m < merges; ++m) {
        std::map<std::pair<int, int>, long long> pair_count;
        for (const auto& [ids, c] : words) {
            for (std::size_t k = 0; k + 1 < ids.size(); ++k) pair_count[{ids[k], ids[k + 1]}] += c;
        }
        if (pair_count.empty()) break;
        // A pair whose concatenation already has an id (reachable through a
        // different split) is not eligible: ids map to unique surfaces.
        const std::pair<int, int>* best = nullptr;
        long long best_count = 0;
        for (const auto& [p, c] : pair_count) {
            if (v.by_surface_.count(v.tokens_[p.first].surface + v.tokens_[p.second].surface)) {
                continue;
            }
            if (!best || c > best_count) {
                best = &p;
                best_count = c;
            } else if (c == best_count) {
                const auto& bl = v.tokens_[best->first].surface;
                const auto& br = v.tokens_[best->second].surface;
                const auto& pl = v.tokens_[p.first].surface;
                const auto& pr = v.tokens_[p.second].surface;
                if (std::tie(pl, pr) < std::tie(bl, br)) best = &p;
            }
        }
        if (!best) break;
        const auto [a, b] = *best;
        std::string merged = v.tokens_[a].surface + v.tokens_[b].surface;
        const int new_id = static_cast<int>(v.tokens_.size());
        v.tokens_.push_back(TokenInfo{merged, Partition::Merge, false});
        v.by_surface_.emplace(std::move(merged), new_id);
        v.merges_.emplace_back(a, b);
        for (auto& [ids, c] : words) {
            std::vector<int> next;
            next.reserve(ids.size());
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (k + 1 < ids.size() && ids[k] == a && ids[k + 1] == b) {
                    next.push_back(new_id);
                    ++k;
                } else {
                    next.push_back(ids[k]);
                }
            }
            ids = std::move(next);
        }
    }
    v.index();
    return v;
}

void Vocab::encode_chunk(std::string_view chunk, std::vector<int>& out) const {
    std::vector<int> ids;
    ids.reserve(chunk.size());
    const int first_byte = first_byte_;
    for (unsigned char c : chunk) ids.push_back(first_byte + c);
    while (ids.size() > 1) {
        int best_rank = -1;
        for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
            auto it = merge_rank_.find(pack(ids[k], ids[k + 1]));
            if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) {
                best_rank = it->second;
            }
        }
        if (best_rank < 0) break;
        const auto [a, b] = merges_[best_rank];
        const int merged = first_byte + 256 + best_rank;
        // Apply the merge at every non-overlapping occurrence, left to right.
        std::vector<int> next;
        next.reserve(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (k + 1 < ids.size() && ids[k] == a && ids[k + 1] == b) {
                next.push_back(merged);
                ++k;
            } else {
                next.push_back(ids[k]);
            }
        }
        ids = std::move(next);
    }
    out.insert(out.end(), ids.begin(), ids.end());
}

void Vocab::encode_plain(std::string_view text, std::vector<int>& out) const {
    for (auto chunk : pretokenize(text)) encode_chunk(chunk, out);
}

std::vector<int> Vocab::encode(std::string_view text) const {
    std::vector<int> out;
    std::size_t i = 0;
    std::size_t plain_start = 0;
    while (i < text.size()) {
        int best = -1;
        for (int id : atomic_by_first_[static_cast<unsigned char>(text[i])]) {
            const auto& s = tokens_[id].surface;
            if (text.compare(i, s.size(), s) == 0) {
                best = id;
                break;
            }
        }
        if (best < 0) {
            ++i;
            continue;
        }
        encode_plain(text.substr(plain_start, i - plain_start), out);
        out.push_back(best);
        i += tokens_[best].surface.size();
        plain_start = i;
    }
    encode_plain(text.substr(plain_start), out);
    return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) out += info(id).surface;
    return out;
}

int Vocab::id(std::string_view surface) const {
    auto it = by_surface_.find(std::string(surface));
    if (it == by_surface_.end()) throw DataError("vocab has no token \"" + std::string(surface) + "\"");
    return it->second;
}

bool Vocab::contains(std::string_view surface) const {
    return by_surface_.count(std::string(surface)) > 0;
}

int Vocab::atomic_id(std::string_view token, bool spaced) const {
    if (spaced) {
        auto it = by_surface_.find(" " + std::string(token));
        if (it != by_surface_.end() && tokens_[it->second].atomic()) return it->second;
    }
    const int i = id(token);
    if (!tokens_[i].atomic()) throw DataError("token \"" + std::string(token) + "\" is not atomic");
    return i;
}

bool Vocab::is(int id, std::string_view token) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return false;
    const auto& t = tokens_[id];
    return t.atomic() && t.base() == token;
}

json Vocab::to_json() const {
    json toks = json::array();
    for (const auto& t : tokens_) {
        json e{{"partition", partition_name(t.partition)}};
        if (t.atomic()) {
            e["text"] = t.surface;
            if (t.spaced) e["spaced"] = true;
        } else {
            e["hex"] = to_hex(t.surface);
        }
        toks.push_back(std::move(e));
    }
    json merges = json::array();
    for (const auto& [a, b] : merges_) merges.push_back(json::array({a, b}));
    return json{{"tokens", toks}, {"merges", merges}};
}

Vocab Vocab::from_json(const json& j) {
    if (!j.is_object() || !j.contains("tokens") || !j.contains("merges")) {
        throw DataError("vocab: expected {tokens, merges}");
    }
    Vocab v;
    try {
        for (const auto& e : j.at("tokens")) {
            TokenInfo t;
            t.partition = partition_from_name(e.at("partition").get<std::string>());
            if (e.contains("text")) {
                t.surface = e.at("text").get<std::string>();
            } else {
                t.surface = from_hex(e.at("hex").get<std::string>());
            }
            t.spaced = e.value("spaced", false);
            if (t.surface.empty()) throw DataError("vocab: empty token");
            v.tokens_.push_back(std::move(t));
        }
        for (const auto& m : j.at("merges")) v.merges_.emplace_back(m.at(0).get<int>(), m.at(1).get<int>());
    } catch (const json::exception& e) {
        throw DataError(std::string("vocab: malformed entry: ") + e.what());
    }
    // Bytes must be contiguous and merges must follow them.
    int first_byte = -1;
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
        if (v.tokens_[i].partition == Partition::Byte) {
            first_byte = static_cast<int>(i);
            break;
        }
    }
    if (first_byte < 0 || first_byte + 256 + v.merges_.size() != v.tokens_.size()) {
        throw DataError("vocab: byte and merge partitions are inconsistent");
    }
    for (int b = 0; b < 256; ++b) {
        if (v.tokens_[first_byte + b].surface != std::string(1, static_cast<char>(b))) {
            throw DataError("vocab: byte partition out of order");
        }
    }
    v.index();
    return v;
}

void Vocab::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

Vocab Vocab::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

}  // namespace mtod
