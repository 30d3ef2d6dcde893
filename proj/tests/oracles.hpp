#pragma once

// Independent oracles shared by the unit tests and the acceptance suite.
// None of them call into the code they check beyond the public model
// forward pass.

#include <algorithm>
#include <set>
#include <cctype>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtod/corpus.hpp"
#include "mtod/model.hpp"
#include "mtod/rng.hpp"
#include "mtod/train.hpp"

namespace oracle {

// --- BLEU-4, single reference ------------------------------------------------

inline std::vector<std::string> words(const std::string& text) {
    std::vector<std::string> out;
    std::string spaced;
    for (unsigned char c : text) {
        if (std::ispunct(c)) {
            spaced += ' ';
            spaced += static_cast<char>(c);
            spaced += ' ';
        } else {
            spaced += static_cast<char>(std::tolower(c));
        }
    }
    std::string cur;
    for (unsigned char c : spaced + " ") {
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += static_cast<char>(c);
        }
    }
    return out;
}

inline std::unordered_map<std::string, int> grams(const std::vector<std::string>& w, int n) {
    std::unordered_map<std::string, int> out;
    for (int i = 0; i + n <= static_cast<int>(w.size()); ++i) {
        std::string key;
        for (int j = i; j < i + n; ++j) key += w[static_cast<std::size_t>(j)] + '\x1f';
        ++out[key];
    }
    return out;
}

inline double bleu4(const std::string& candidate, const std::string& reference) {
    const auto c = words(candidate);
    const auto r = words(reference);
    if (c.empty()) return 0.0;
    double log_p = 0;
    for (int n = 1; n <= 4; ++n) {
        const auto cg = grams(c, n);
        const auto rg = grams(r, n);
        int match = 0, total = 0;
        for (const auto& [g, k] : cg) {
            total += k;
            const auto it = rg.find(g);
            if (it != rg.end()) match += std::min(k, it->second);
        }
        const double p = match > 0 ? static_cast<double>(match) / total : 1e-9;
        log_p += std::log(p) / 4.0;
    }
    const double bp = c.size() < r.size()
                          ? std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()))
                          : 1.0;
    return bp * std::exp(log_p);
}

// --- set-based F1 and joint accuracy ----------------------------------------

struct Confusion {
    long long tp = 0, fp = 0, fn = 0;
    double f1() const { return tp ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn) : 0.0; }
};

template <typename Set>
void tally(Confusion& c, const Set& predicted, const Set& gold) {
    for (const auto& x : predicted) (gold.count(x) ? c.tp : c.fp) += 1;
    for (const auto& x : gold) c.fn += predicted.count(x) ? 0 : 1;
}

struct BruteForce {
    Confusion intent, slot, request, object;
    long long joint_hits = 0, turns = 0;
};

inline BruteForce brute_force(const std::vector<mtod::BeliefState>& predicted,
                              const std::vector<mtod::BeliefState>& gold) {
    BruteForce out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto& p = predicted[i];
        const auto& g = gold[i];
        auto intents = [](const std::string& s) {
            return s.empty() ? std::set<std::string>{} : std::set<std::string>{s};
        };
        auto pairs = [](const mtod::SlotMap& m) {
            return std::set<std::pair<std::string, std::string>>(m.begin(), m.end());
        };
        auto ids = [](const std::vector<int>& v) { return std::set<int>(v.begin(), v.end()); };
        tally(out.intent, intents(p.intent), intents(g.intent));
        tally(out.slot, pairs(p.slots), pairs(g.slots));
        tally(out.request, p.request_slots, g.request_slots);
        tally(out.object, ids(p.mref), ids(g.mref));
        const bool hit = p.intent == g.intent && pairs(p.slots) == pairs(g.slots) &&
                         p.request_slots == g.request_slots && ids(p.mref) == ids(g.mref);
        out.joint_hits += hit ? 1 : 0;
        ++out.turns;
    }
    return out;
}

// Random belief drawn from a small universe so that matches are common.
inline mtod::BeliefState random_belief(mtod::Rng& rng) {
    static const std::vector<std::string> intents{"", "REQUEST:GET", "ASK:GET", "INFORM:DISAMBIGUATE"};
    static const std::vector<std::string> names{"color", "type", "brand"};
    static const std::vector<std::string> values{"red", "blue", "coat"};
    static const std::vector<std::string> requests{"price", "size", "brand"};
    mtod::BeliefState b;
    b.intent = rng.pick(intents);
    for (const auto& n : names) {
        if (rng.chance(0.4)) b.slots[n] = rng.pick(values);
    }
    for (const auto& r : requests) {
        if (rng.chance(0.3)) b.request_slots.insert(r);
    }
    for (int i = rng.between(0, 3); i > 0; --i) b.mref.push_back(rng.between(0, 4));
    return b;
}

// Gold perturbed with probability p per field, so predictions are often right.
inline mtod::BeliefState perturb(const mtod::BeliefState& gold, mtod::Rng& rng, double p) {
    const auto other = random_belief(rng);
    mtod::BeliefState b = gold;
    if (rng.chance(p)) b.intent = other.intent;
    if (rng.chance(p)) b.slots = other.slots;
    if (rng.chance(p)) b.request_slots = other.request_slots;
    if (rng.chance(p)) b.mref = other.mref;
    return b;
}

// --- finite differences -------------------------------------------------------

// Mean masked loss of `batch`, evaluated from scratch.
inline double loss_of(const mtod::Transformer<double>& model,
                      const std::vector<const mtod::TrainingSequence*>& batch) {
    double sum = 0;
    long long count = 0;
    for (const auto* s : batch) {
        const auto logits = model.forward(s->ids);
        const int v = model.config().vocab_size;
        for (int i = std::max(s->scene_prefix_len, 1); i < s->total_len(); ++i) {
            const double* row = logits.data() + static_cast<std::size_t>(i - 1) * v;
            double m = row[0];
            for (int j = 1; j < v; ++j) m = std::max(m, row[j]);
            double z = 0;
            for (int j = 0; j < v; ++j) z += std::exp(row[j] - m);
            sum += m + std::log(z) - row[s->ids[static_cast<std::size_t>(i)]];
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

struct GradCheck {
    double max_rel_error = 0;
    int coordinates = 0;
};

// Analytic gradient of the mean loss against central differences on
// `coords` random parameter coordinates.
inline GradCheck check_gradients(mtod::Transformer<double>& model,
                                 const std::vector<const mtod::TrainingSequence*>& batch, int coords,
                                 mtod::Rng& rng, double h = 1e-5) {
    std::vector<double> grads(model.params().size(), 0.0);
    mtod::loss_and_grad<double>(model, batch, grads, nullptr);
    GradCheck out;
    auto& p = model.params();
    for (int c = 0; c < coords; ++c) {
        const std::size_t k = rng.below(p.size());
        const double saved = p[k];
        p[k] = saved + h;
        const double up = loss_of(model, batch);
        p[k] = saved - h;
        const double down = loss_of(model, batch);
        p[k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(numeric), std::abs(grads[k]), 1e-7});
        out.max_rel_error = std::max(out.max_rel_error, std::abs(numeric - grads[k]) / denom);
        ++out.coordinates;
    }
    return out;
}

// Logit of ids[target] at position target-1 given explicit input embeddings.
inline double target_logit(const mtod::Transformer<double>& model, const std::vector<int>& ids,
                           int target, int token, const std::vector<double>& input) {
    typename mtod::Transformer<double>::Cache cache;
    const std::vector<int> prefix(ids.begin(), ids.begin() + target);
    model.forward(prefix, cache, nullptr, input);
    return cache.logits[static_cast<std::size_t>(target - 1) * model.config().vocab_size +
                        static_cast<std::size_t>(token)];
}

// Input x gradient attributions computed with central differences.
inline std::vector<double> fd_attributions(const mtod::Transformer<double>& model,
                                           const std::vector<int>& ids, int target, int token,
                                           double h = 1e-6) {
    const std::vector<int> prefix(ids.begin(), ids.begin() + target);
    std::vector<double> x = model.embed(prefix);
    const int d = model.config().d_model;
    std::vector<double> a(static_cast<std::size_t>(target), 0.0);
    for (int i = 0; i < target; ++i) {
        double s = 0;
        for (int c = 0; c < d; ++c) {
            const std::size_t k = static_cast<std::size_t>(i) * d + c;
            const double saved = x[k];
            x[k] = saved + h;
            const double up = target_logit(model, ids, target, token, x);
            x[k] = saved - h;
            const double down = target_logit(model, ids, target, token, x);
            x[k] = saved;
            const double t = saved * (up - down) / (2 * h);
            s += t * t;
        }
        a[static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    return a;
}

// Small double-precision model with perturbed parameters so that every
// block contributes non-trivially.
inline mtod::Transformer<double> toy_model(int d_model, int layers, int vocab, std::uint64_t seed,
                                           int heads = 2) {
    mtod::ModelConfig cfg;
    cfg.n_layers = layers;
    cfg.n_heads = heads;
    cfg.d_model = d_model;
    cfg.d_ff = 4 * d_model;
    cfg.max_positions = 32;
    cfg.vocab_size = vocab;
    cfg.dropout_rate = 0.0;
    cfg.seed = seed;
    auto model = mtod::Transformer<double>::init(cfg);
    mtod::Rng rng(seed + 100);
    for (auto& w : model.params()) w += 0.2 * rng.normal();
    return model;
}

}  // namespace oracle
