#pragma once

// Input x gradient attribution. For target position p the output y is the
// logit (or probability) of token ids[p] at position p - 1; position
// p == len(ids) means "the token the model would generate next". Scores
// cover positions [0, p) and are normalized to sum to one.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtod/model.hpp"

namespace mtod {

enum class SalienceTarget { Logit, Probability };

struct SalienceMap {
    int target_position = 0;
    int target_token = 0;
    std::vector<double> scores;  // one per position < target_position
    bool degenerate = false;     // all raw attributions were zero; scores are uniform
};

// Raw attributions ||x_i * dy/dx_i||_2 before normalization.
std::vector<double> raw_attributions(const Transformer<double>& model, std::span<const int> ids,
                                     int target_position, SalienceTarget target,
                                     int* target_token = nullptr);

// Throws UsageError unless 0 < target_position <= len(ids).
SalienceMap input_x_gradient(const Transformer<double>& model, std::span<const int> ids,
                             int target_position, SalienceTarget target = SalienceTarget::Logit);

// tokens[i] is the surface of position i; at least target_position entries.
std::string heatmap_html(const SalienceMap& map, const std::vector<std::string>& tokens);
std::string heatmap_text(const SalienceMap& map, const std::vector<std::string>& tokens);
nlohmann::json to_json(const SalienceMap& map, const std::vector<std::string>& tokens);

// Writes <stem>.html, <stem>.txt and <stem>.json next to `path`.
void render_heatmap(const SalienceMap& map, const std::vector<std::string>& tokens,
                    const std::filesystem::path& path);

}  // namespace mtod
