#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mtod/corpus.hpp"

namespace mtod {

// Micro-averaged F1 over multisets of canonical item strings.
struct MicroF1 {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;

    void add(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);
    void merge(const MicroF1& other);
    double precision() const;
    double recall() const;
    double f1() const;  // 0 when precision + recall is 0
    bool degenerate() const { return tp == 0; }
};

struct Ratio {
    long long numerator = 0;
    long long denominator = 0;

    void add(bool hit) {
        numerator += hit ? 1 : 0;
        ++denominator;
    }
    void merge(const Ratio& o) {
        numerator += o.numerator;
        denominator += o.denominator;
    }
    double value() const {
        return denominator ? static_cast<double>(numerator) / static_cast<double>(denominator) : 0.0;
    }
};

// Canonical items per F1 variant.
std::vector<std::string> intent_items(const std::string& intent);
std::vector<std::string> slot_items(const SlotMap& slots);  // "name=value"
std::vector<std::string> request_items(const RequestSet& req);
std::vector<std::string> object_items(const std::vector<int>& mref);

// Intent, slots, request slots and the set of resolved objects all equal.
bool joint_match(const BeliefState& predicted, const BeliefState& gold);

// Ratio of exact boolean matches. Throws UsageError on misaligned input.
Ratio disambiguation_accuracy(const std::vector<bool>& predicted, const std::vector<bool>& gold);
Ratio joint_accuracy(const std::vector<BeliefState>& predicted, const std::vector<BeliefState>& gold);

// Lowercase, punctuation split from words, whitespace split.
std::vector<std::string> bleu_tokenize(std::string_view text);

inline constexpr double kBleuEpsilon = 1e-9;

struct BleuStats {
    std::array<long long, 4> matches{};  // clipped n-gram matches, n = 1..4
    std::array<long long, 4> totals{};   // candidate n-gram counts
    long long candidate_length = 0;
    long long reference_length = 0;  // closest reference length, ties to the shorter

    void merge(const BleuStats& o);
    double score() const;  // BLEU-4 with epsilon smoothing; 0 for an empty candidate
};

BleuStats bleu_stats(std::string_view candidate, const std::vector<std::string>& references);
double bleu4(std::string_view candidate, const std::vector<std::string>& references);

// Corpus BLEU: mean of sentence scores, or pooled counts when requested.
// Sentence scores are kept and summed in sorted order so that the mean does
// not depend on turn order or on how shards were merged.
struct BleuAccumulator {
    std::vector<double> scores;
    long long sentences = 0;
    BleuStats pooled;

    void add(std::string_view candidate, const std::vector<std::string>& references);
    void merge(const BleuAccumulator& o);
    double mean() const;
    double pooled_score() const { return pooled.score(); }
};

// Prediction for one turn next to its gold annotation.
struct ScoredTurn {
    BeliefState predicted_belief;
    BeliefState gold_belief;
    std::optional<bool> predicted_disambiguation;
    std::optional<bool> gold_disambiguation;
    std::optional<std::string> predicted_response;
    std::string gold_response;
};

struct MetricReport {
    Ratio disambiguation;
    MicroF1 intent;
    MicroF1 slot;
    MicroF1 request_slot;
    MicroF1 object;
    Ratio joint;
    BleuAccumulator bleu;
    bool pooled_bleu = false;

    void add(const ScoredTurn& turn);
    void merge(const MetricReport& o);
    double bleu4() const { return pooled_bleu ? bleu.pooled_score() : bleu.mean(); }

    nlohmann::json to_json() const;
    std::string to_tsv() const;
};

MetricReport score(const std::vector<ScoredTurn>& turns, bool pooled_bleu = false);

}  // namespace mtod
