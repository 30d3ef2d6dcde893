#include "mtod/salience.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mtod/error.hpp"

namespace mtod {

using nlohmann::json;

std::vector<double> raw_attributions(const Transformer<double>& model, std::span<const int> ids,
                                     int target_position, SalienceTarget target,
                                     int* target_token) {
    const int len = static_cast<int>(ids.size());
    if (target_position <= 0 || target_position > len) {
        throw UsageError("target position " + std::to_string(target_position) +
                         " outside (0, " + std::to_string(len) + "]");
    }
    const auto prefix = ids.first(static_cast<std::size_t>(target_position));
    const int v = model.config().vocab_size;
    const int d = model.config().d_model;

    const auto x = model.embed(prefix);
    Transformer<double>::Cache cache;
    model.forward(prefix, cache, nullptr, x);
    const std::size_t row = static_cast<std::size_t>(target_position - 1) * v;
    const std::span<const double> last(cache.logits.data() + row, static_cast<std::size_t>(v));
    const int token = target_position < len ? ids[static_cast<std::size_t>(target_position)]
                                            : argmax<double>(last);
    if (target_token) *target_token = token;

    std::vector<double> dlogits(cache.logits.size(), 0.0);
    if (target == SalienceTarget::Logit) {
        dlogits[row + static_cast<std::size_t>(token)] = 1.0;
    } else {
        double m = last[0];
        for (double z : last) m = std::max(m, z);
        double s = 0;
        for (double z : last) s += std::exp(z - m);
        const double pt = std::exp(last[static_cast<std::size_t>(token)] - m) / s;
        for (int j = 0; j < v; ++j) {
            const double pj = std::exp(last[static_cast<std::size_t>(j)] - m) / s;
            dlogits[row + static_cast<std::size_t>(j)] = pt * ((j == token ? 1.0 : 0.0) - pj);
        }
    }

    std::vector<double> grads(model.params().size(), 0.0);
    std::vector<double> dx;
    model.backward(cache, dlogits, grads, &dx);

    std::vector<double> a(static_cast<std::size_t>(target_position), 0.0);
    for (int i = 0; i < target_position; ++i) {
        double s = 0;
        for (int c = 0; c < d; ++c) {
            const std::size_t k = static_cast<std::size_t>(i) * d + c;
            const double t = x[k] * dx[k];
            s += t * t;
        }
        a[static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    return a;
}

SalienceMap input_x_gradient(const Transformer<double>& model, std::span<const int> ids,
                             int target_position, SalienceTarget target) {
    SalienceMap map;
    map.target_position = target_position;
    map.scores = raw_attributions(model, ids, target_position, target, &map.target_token);
    double total = 0;
    for (double a : map.scores) total += a;
    if (total > 0 && std::isfinite(total)) {
        for (double& a : map.scores) a /= total;
    } else {
        map.degenerate = true;
        for (double& a : map.scores) a = 1.0 / static_cast<double>(map.scores.size());
    }
    return map;
}

namespace {

void check_tokens(const SalienceMap& map, const std::vector<std::string>& tokens) {
    if (tokens.size() < map.scores.size()) {
        throw UsageError("salience map has " + std::to_string(map.scores.size()) +
                         " scores but only " + std::to_string(tokens.size()) + " tokens");
    }
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case ' ': out += "&middot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string heatmap_html(const SalienceMap& map, const std::vector<std::string>& tokens) {
    check_tokens(map, tokens);
    double peak = 0;
    for (double s : map.scores) peak = std::max(peak, s);
    std::string out =
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>salience</title>\n"
        "<style>td{font-family:monospace;padding:2px 6px}</style></head><body>\n";
    out += "<p>target position " + std::to_string(map.target_position) + ", token " +
           std::to_string(map.target_token);
    if (map.target_position < static_cast<int>(tokens.size())) {
        out += " <b>" + escape_html(tokens[static_cast<std::size_t>(map.target_position)]) + "</b>";
    }
    if (map.degenerate) out += " (all attributions zero; uniform scores)";
    out += "</p>\n<table>\n<tr><th>pos</th><th>token</th><th>score</th></tr>\n";
    for (std::size_t i = 0; i < map.scores.size(); ++i) {
        // Darker cells for higher scores, relative to the peak.
        const double alpha = peak > 0 ? map.scores[i] / peak : 0.0;
        out += "<tr><td>" + std::to_string(i) + "</td><td style=\"background:rgba(200,30,30," +
               fixed6(alpha) + ")\">" + escape_html(tokens[i]) + "</td><td class=\"score\">" +
               fixed6(map.scores[i]) + "</td></tr>\n";
    }
    out += "</table>\n</body></html>\n";
    return out;
}

std::string heatmap_text(const SalienceMap& map, const std::vector<std::string>& tokens) {
    check_tokens(map, tokens);
    std::string out = "target_position\t" + std::to_string(map.target_position) + "\n" +
                      "target_token\t" + std::to_string(map.target_token) + "\n";
    if (map.degenerate) out += "degenerate\ttrue\n";
    for (std::size_t i = 0; i < map.scores.size(); ++i) {
        const int bar = static_cast<int>(std::lround(map.scores[i] * 40));
        out += std::to_string(i) + "\t" + fixed6(map.scores[i]) + "\t" +
               std::string(static_cast<std::size_t>(bar), '#') + "\t" + tokens[i] + "\n";
    }
    return out;
}

json to_json(const SalienceMap& map, const std::vector<std::string>& tokens) {
    check_tokens(map, tokens);
    return json{{"target_position", map.target_position},
                {"target_token", map.target_token},
                {"degenerate", map.degenerate},
                {"scores", map.scores},
                {"tokens", std::vector<std::string>(tokens.begin(),
                                                    tokens.begin() + static_cast<std::ptrdiff_t>(
                                                                         map.scores.size()))}};
}

void render_heatmap(const SalienceMap& map, const std::vector<std::string>& tokens,
                    const std::filesystem::path& path) {
    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw RuntimeFailure("cannot write " + p.string());
        out << text;
    };
    auto stem = path;
    write(stem.replace_extension(".html"), heatmap_html(map, tokens));
    write(stem.replace_extension(".txt"), heatmap_text(map, tokens));
    // Byte tokens need not be valid UTF-8 on their own.
    write(stem.replace_extension(".json"),
          to_json(map, tokens).dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

}  // namespace mtod
