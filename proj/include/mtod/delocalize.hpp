#pragma once

// De-localized object tokens: an object instance is rendered as its
// catalogue token plus the 3x3 scene region holding its bbox center,
// e.g. "INV_278@TOP:LEFT". relocalize() maps such a token back to a
// canonical id of a concrete scene.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtod/corpus.hpp"

namespace mtod {

enum class Row { Top = 0, Middle = 1, Bottom = 2 };
enum class Col { Left = 0, Center = 1, Right = 2 };

struct RegionLabel {
    Row row = Row::Top;
    Col col = Col::Left;

    int row_index() const { return static_cast<int>(row); }
    int col_index() const { return static_cast<int>(col); }
    // 0..8, row-major.
    int index() const { return row_index() * 3 + col_index(); }
    // "TOP:LEFT"
    std::string name() const;
    // "@TOP:LEFT" -- the vocabulary form.
    std::string token() const { return "@" + name(); }
    // Lowercase words used in utterances ("top left").
    std::string phrase() const;

    static RegionLabel from_index(int index);
    static std::optional<RegionLabel> parse(std::string_view name);
    static std::array<RegionLabel, 9> all();

    bool operator==(const RegionLabel&) const = default;
};

struct DelocalizedObject {
    int catalogue_id = 0;
    RegionLabel region;

    std::string catalogue_token() const { return "INV_" + std::to_string(catalogue_id); }
    std::string rendered() const { return catalogue_token() + region.token(); }

    // Parses "INV_<id>@<ROW>:<COL>"; nullopt on any deviation.
    static std::optional<DelocalizedObject> parse(std::string_view text);

    bool operator==(const DelocalizedObject&) const = default;
};

// V_t: one entry per scene object.
struct SceneDescription {
    std::vector<DelocalizedObject> objects;

    // Vocabulary ids the description occupies (catalogue + region token each).
    std::size_t token_count() const { return 2 * objects.size(); }
};

enum class OrderPolicy { AscendingCanonicalId, SceneOrder };

// Half-open thirds, last cell closed. Throws UsageError for non-positive
// scene dimensions.
RegionLabel region_of(const BoundingBox& bbox, int scene_w, int scene_h);

// Throws DataError when an object's catalogue_id is unknown.
SceneDescription scene_description(const Scene& scene, const std::vector<CatalogueItem>& catalogue,
                                   OrderPolicy order = OrderPolicy::AscendingCanonicalId);

// Throws DataError for ids absent from the scene.
std::vector<DelocalizedObject> delocalize_refs(const std::vector<int>& ids, const Scene& scene,
                                               const std::vector<CatalogueItem>& catalogue);

// nullopt means NO_MATCH: the catalogue token does not occur in the scene.
//  1. same catalogue token and region: largest bbox area wins;
//  2. same catalogue token elsewhere: smallest grid Manhattan distance,
//     then largest area, then smallest canonical id.
std::optional<int> relocalize(const DelocalizedObject& obj, const Scene& scene);

}  // namespace mtod
