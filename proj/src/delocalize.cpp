#include "mtod/delocalize.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

namespace mtod {

namespace {

constexpr std::array<const char*, 3> kRowNames{"TOP", "MIDDLE", "BOTTOM"};
constexpr std::array<const char*, 3> kColNames{"LEFT", "CENTER", "RIGHT"};
constexpr std::array<const char*, 3> kRowWords{"top", "middle", "bottom"};
constexpr std::array<const char*, 3> kColWords{"left", "center", "right"};

// Index of the third containing `center` (in doubled coordinates, so that
// the center x + w/2 stays integral): floor(3 * c / extent), clamped to 2.
int third(long long doubled_center, long long extent) {
    const long long idx = (3 * doubled_center) / (2 * extent);
    return static_cast<int>(std::min<long long>(idx, 2));
}

}  // namespace

std::string RegionLabel::name() const {
    return std::string(kRowNames[row_index()]) + ":" + kColNames[col_index()];
}

std::string RegionLabel::phrase() const {
    return std::string(kRowWords[row_index()]) + " " + kColWords[col_index()];
}

RegionLabel RegionLabel::from_index(int index) {
    if (index < 0 || index > 8) throw UsageError("region index out of range");
    return RegionLabel{static_cast<Row>(index / 3), static_cast<Col>(index % 3)};
}

std::optional<RegionLabel> RegionLabel::parse(std::string_view name) {
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            RegionLabel l{static_cast<Row>(r), static_cast<Col>(c)};
            if (name == l.name()) return l;
        }
    }
    return std::nullopt;
}

std::array<RegionLabel, 9> RegionLabel::all() {
    std::array<RegionLabel, 9> out;
    for (int i = 0; i < 9; ++i) out[i] = from_index(i);
    return out;
}

std::optional<DelocalizedObject> DelocalizedObject::parse(std::string_view text) {
    constexpr std::string_view prefix = "INV_";
    if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
    const auto at = text.find('@');
    if (at == std::string_view::npos) return std::nullopt;
    const std::string_view digits = text.substr(prefix.size(), at - prefix.size());
    if (digits.empty() || (digits.size() > 1 && digits[0] == '0')) return std::nullopt;
    int id = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
    auto region = RegionLabel::parse(text.substr(at + 1));
    if (!region) return std::nullopt;
    return DelocalizedObject{id, *region};
}

RegionLabel region_of(const BoundingBox& bbox, int scene_w, int scene_h) {
    if (scene_w <= 0 || scene_h <= 0) throw UsageError("degenerate scene dimensions");
    const long long cx2 = 2LL * bbox.x + bbox.w;
    const long long cy2 = 2LL * bbox.y + bbox.h;
    const int col = third(std::max(0LL, cx2), scene_w);
    const int row = third(std::max(0LL, cy2), scene_h);
    return RegionLabel{static_cast<Row>(row), static_cast<Col>(col)};
}

namespace {

const CatalogueItem* lookup(const std::vector<CatalogueItem>& catalogue, int id) {
    for (const auto& c : catalogue) {
        if (c.catalogue_id == id) return &c;
    }
    return nullptr;
}

DelocalizedObject delocalize_object(const SceneObject& o, const Scene& scene,
                                    const std::vector<CatalogueItem>& catalogue) {
    if (!lookup(catalogue, o.catalogue_id)) {
        throw DataError("scene " + scene.scene_id + " object " + std::to_string(o.canonical_id) +
                        " references unknown catalogue_id " + std::to_string(o.catalogue_id));
    }
    return DelocalizedObject{o.catalogue_id, region_of(o.bbox, scene.width, scene.height)};
}

}  // namespace

SceneDescription scene_description(const Scene& scene, const std::vector<CatalogueItem>& catalogue,
                                   OrderPolicy order) {
    std::vector<const SceneObject*> objs;
    for (const auto& o : scene.objects) objs.push_back(&o);
    if (order == OrderPolicy::AscendingCanonicalId) {
        std::stable_sort(objs.begin(), objs.end(), [](const SceneObject* a, const SceneObject* b) {
            return a->canonical_id < b->canonical_id;
        });
    }
    SceneDescription desc;
    for (const auto* o : objs) desc.objects.push_back(delocalize_object(*o, scene, catalogue));
    return desc;
}

std::vector<DelocalizedObject> delocalize_refs(const std::vector<int>& ids, const Scene& scene,
                                               const std::vector<CatalogueItem>& catalogue) {
    std::vector<DelocalizedObject> out;
    out.reserve(ids.size());
    for (int id : ids) {
        const SceneObject* o = scene.find(id);
        if (!o) {
            throw DataError("canonical_id " + std::to_string(id) + " is not in scene " +
                            scene.scene_id);
        }
        out.push_back(delocalize_object(*o, scene, catalogue));
    }
    return out;
}

std::optional<int> relocalize(const DelocalizedObject& obj, const Scene& scene) {
    // Lexicographic key: (distance asc, area desc, canonical id asc).
    const SceneObject* best = nullptr;
    int best_dist = 0;
    for (const auto& o : scene.objects) {
        if (o.catalogue_id != obj.catalogue_id) continue;
        const RegionLabel r = region_of(o.bbox, scene.width, scene.height);
        const int dist = std::abs(r.row_index() - obj.region.row_index()) +
                         std::abs(r.col_index() - obj.region.col_index());
        bool better = best == nullptr;
        if (!better) {
            if (dist != best_dist) {
                better = dist < best_dist;
            } else if (o.bbox.area() != best->bbox.area()) {
                better = o.bbox.area() > best->bbox.area();
            } else {
                better = o.canonical_id < best->canonical_id;
            }
        }
        if (better) {
            best = &o;
            best_dist = dist;
        }
    }
    if (!best) return std::nullopt;
    return best->canonical_id;
}

}  // namespace mtod
