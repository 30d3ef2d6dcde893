#pragma once

// JSON encodings shared by the corpus files and the prediction table.

#include "json.hpp"
#include "mtod/corpus.hpp"

namespace mtod {

nlohmann::json to_json(const BeliefState& b);
nlohmann::json to_json(const Action& a);
nlohmann::json to_json(const DialogueTurn& t);
nlohmann::json to_json(const Dialogue& d);
nlohmann::json to_json(const Scene& s);
nlohmann::json to_json(const CatalogueItem& c);

// All parsers reject unknown fields and wrong types with DataError;
// `where` prefixes the diagnostic.
BeliefState belief_from_json(const nlohmann::json& j, const std::string& where);
Action action_from_json(const nlohmann::json& j, const std::string& where);
DialogueTurn turn_from_json(const nlohmann::json& j, const std::string& where);
Dialogue dialogue_from_json(const nlohmann::json& j);
Scene scene_from_json(const nlohmann::json& j, const std::string& where);
CatalogueItem catalogue_item_from_json(const nlohmann::json& j);

// Writes `j` with two-space indent and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace mtod
