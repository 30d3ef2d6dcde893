#pragma once

// Surface grammar for belief states and actions:
//
//   belief:  INTENT [ slot = value ; ... ] ( req ; ... ) < INV_n@ROW:COL ; ... >
//   action:  INTENT [ slot = value ; ... ] ( req ; ... )
//
// Slots and request slots are emitted in sorted order, object references in
// their given order. Parsing never throws: a malformed group ends the parse,
// groups before it are kept, and `failed` is set.

#include <string>
#include <string_view>
#include <vector>

#include "mtod/corpus.hpp"
#include "mtod/delocalize.hpp"

namespace mtod {

// Belief state with object references in de-localized (model) space.
struct DelocalizedBelief {
    std::string intent;
    SlotMap slots;
    RequestSet request_slots;
    std::vector<DelocalizedObject> mref;
    bool operator==(const DelocalizedBelief&) const = default;
};

struct ParsedBelief {
    DelocalizedBelief belief;
    bool failed = false;
};

struct ParsedAction {
    Action action;
    bool failed = false;
};

std::string format_belief(const DelocalizedBelief& b);
std::string format_action(const Action& a);

ParsedBelief parse_belief(std::string_view text);
ParsedAction parse_action(std::string_view text);

}  // namespace mtod
