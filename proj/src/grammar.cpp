#include "mtod/grammar.hpp"

#include <optional>

namespace mtod {

namespace {

bool is_delim(char c) {
    return c == '[' || c == ']' || c == '(' || c == ')' || c == '<' || c == '>' || c == '=' ||
           c == ';';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::vector<std::string_view> lex(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i])) {
            ++i;
        } else if (is_delim(s[i])) {
            out.push_back(s.substr(i, 1));
            ++i;
        } else {
            const std::size_t start = i;
            while (i < s.size() && !is_space(s[i]) && !is_delim(s[i])) ++i;
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

bool is_word(std::string_view lexeme) { return !lexeme.empty() && !is_delim(lexeme[0]); }

class Cursor {
public:
    explicit Cursor(std::vector<std::string_view> lexemes) : lx_(std::move(lexemes)) {}

    bool done() const { return pos_ >= lx_.size(); }
    std::string_view peek() const { return done() ? std::string_view{} : lx_[pos_]; }
    std::string_view take() { return lx_[pos_++]; }
    bool accept(std::string_view d) {
        if (peek() != d || done()) return false;
        ++pos_;
        return true;
    }
    std::size_t mark() const { return pos_; }
    void reset(std::size_t m) { pos_ = m; }

private:
    std::vector<std::string_view> lx_;
    std::size_t pos_ = 0;
};

std::optional<SlotMap> slots_group(Cursor& c) {
    if (!c.accept("[")) return std::nullopt;
    SlotMap slots;
    if (c.accept("]")) return slots;
    while (true) {
        if (!is_word(c.peek())) return std::nullopt;
        std::string name(c.take());
        if (!c.accept("=")) return std::nullopt;
        std::string value;
        while (is_word(c.peek())) {
            if (!value.empty()) value += ' ';
            value += c.take();
        }
        if (value.empty()) return std::nullopt;
        slots.emplace(std::move(name), std::move(value));  // first occurrence wins
        if (c.accept("]")) return slots;
        if (!c.accept(";")) return std::nullopt;
    }
}

std::optional<RequestSet> request_group(Cursor& c) {
    if (!c.accept("(")) return std::nullopt;
    RequestSet req;
    if (c.accept(")")) return req;
    while (true) {
        if (!is_word(c.peek())) return std::nullopt;
        req.emplace(c.take());
        if (c.accept(")")) return req;
        if (!c.accept(";")) return std::nullopt;
    }
}

std::optional<std::vector<DelocalizedObject>> mref_group(Cursor& c) {
    if (!c.accept("<")) return std::nullopt;
    std::vector<DelocalizedObject> refs;
    if (c.accept(">")) return refs;
    while (true) {
        if (!is_word(c.peek())) return std::nullopt;
        auto obj = DelocalizedObject::parse(c.take());
        if (!obj) return std::nullopt;
        bool dup = false;
        for (const auto& r : refs) dup = dup || r == *obj;
        if (!dup) refs.push_back(*obj);
        if (c.accept(">")) return refs;
        if (!c.accept(";")) return std::nullopt;
    }
}

void append_frame(std::string& out, const std::string& intent, const SlotMap& slots,
                  const RequestSet& req) {
    out += intent;
    out += " [";
    bool first = true;
    for (const auto& [k, v] : slots) {
        out += first ? " " : " ; ";
        out += k + " = " + v;
        first = false;
    }
    out += " ] (";
    first = true;
    for (const auto& r : req) {
        out += first ? " " : " ; ";
        out += r;
        first = false;
    }
    out += " )";
}

// Parses intent, slots and request slots; returns how many of those three
// parts succeeded.
template <typename Frame>
int parse_frame(Cursor& c, Frame& f) {
    if (!is_word(c.peek())) return 0;
    f.intent = std::string(c.take());
    auto m = c.mark();
    auto slots = slots_group(c);
    if (!slots) {
        c.reset(m);
        return 1;
    }
    f.slots = std::move(*slots);
    m = c.mark();
    auto req = request_group(c);
    if (!req) {
        c.reset(m);
        return 2;
    }
    f.request_slots = std::move(*req);
    return 3;
}

}  // namespace

std::string format_belief(const DelocalizedBelief& b) {
    std::string out;
    append_frame(out, b.intent, b.slots, b.request_slots);
    out += " <";
    bool first = true;
    for (const auto& o : b.mref) {
        out += first ? " " : " ; ";
        out += o.rendered();
        first = false;
    }
    out += " >";
    return out;
}

std::string format_action(const Action& a) {
    std::string out;
    append_frame(out, a.intent, a.slots, a.request_slots);
    return out;
}

ParsedBelief parse_belief(std::string_view text) {
    ParsedBelief r;
    Cursor c(lex(text));
    const int parts = parse_frame(c, r.belief);
    if (parts < 3) {
        r.failed = true;
        return r;
    }
    auto mref = mref_group(c);
    if (!mref) {
        r.failed = true;
        return r;
    }
    r.belief.mref = std::move(*mref);
    r.failed = !c.done();
    return r;
}

ParsedAction parse_action(std::string_view text) {
    ParsedAction r;
    Cursor c(lex(text));
    const int parts = parse_frame(c, r.action);
    r.failed = parts < 3 || !c.done();
    return r;
}

}  // namespace mtod
