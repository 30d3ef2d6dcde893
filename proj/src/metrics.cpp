#include "mtod/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mtod/error.hpp"

namespace mtod {

using nlohmann::json;

void MicroF1::add(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
    std::map<std::string, long long> counts;
    for (const auto& g : gold) ++counts[g];
    long long hits = 0;
    for (const auto& p : predicted) {
        auto it = counts.find(p);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++hits;
        }
    }
    tp += hits;
    fp += static_cast<long long>(predicted.size()) - hits;
    fn += static_cast<long long>(gold.size()) - hits;
}

void MicroF1::merge(const MicroF1& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
}

double MicroF1::precision() const {
    return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}

double MicroF1::recall() const {
    return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
}

double MicroF1::f1() const {
    const double p = precision();
    const double r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

std::vector<std::string> intent_items(const std::string& intent) {
    if (intent.empty()) return {};
    return {intent};
}

std::vector<std::string> slot_items(const SlotMap& slots) {
    std::vector<std::string> out;
    for (const auto& [k, v] : slots) out.push_back(k + "=" + v);
    return out;
}

std::vector<std::string> request_items(const RequestSet& req) {
    return std::vector<std::string>(req.begin(), req.end());
}

std::vector<std::string> object_items(const std::vector<int>& mref) {
    std::vector<std::string> out;
    for (int id : std::set<int>(mref.begin(), mref.end())) out.push_back(std::to_string(id));
    return out;
}

bool joint_match(const BeliefState& predicted, const BeliefState& gold) {
    return predicted.intent == gold.intent && predicted.slots == gold.slots &&
           predicted.request_slots == gold.request_slots &&
           std::set<int>(predicted.mref.begin(), predicted.mref.end()) ==
               std::set<int>(gold.mref.begin(), gold.mref.end());
}

Ratio disambiguation_accuracy(const std::vector<bool>& predicted, const std::vector<bool>& gold) {
    if (predicted.size() != gold.size()) throw UsageError("misaligned disambiguation lists");
    Ratio r;
    for (std::size_t i = 0; i < gold.size(); ++i) r.add(predicted[i] == gold[i]);
    return r;
}

Ratio joint_accuracy(const std::vector<BeliefState>& predicted,
                     const std::vector<BeliefState>& gold) {
    if (predicted.size() != gold.size()) throw UsageError("misaligned belief lists");
    Ratio r;
    for (std::size_t i = 0; i < gold.size(); ++i) r.add(joint_match(predicted[i], gold[i]));
    return r;
}

// --- BLEU ------------------------------------------------------------------

std::vector<std::string> bleu_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            out.emplace_back(1, ch);
        } else {
            cur += static_cast<char>(std::tolower(c));
        }
    }
    flush();
    return out;
}

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, long long> ngram_counts(const std::vector<std::string>& toks, int n) {
    std::map<Gram, long long> out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
        ++out[Gram(toks.begin() + static_cast<std::ptrdiff_t>(i),
                   toks.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return out;
}

}  // namespace

void BleuStats::merge(const BleuStats& o) {
    for (int n = 0; n < 4; ++n) {
        matches[n] += o.matches[n];
        totals[n] += o.totals[n];
    }
    candidate_length += o.candidate_length;
    reference_length += o.reference_length;
}

double BleuStats::score() const {
    if (candidate_length == 0) return 0.0;
    double log_sum = 0;
    for (int n = 0; n < 4; ++n) {
        double p = totals[n] ? static_cast<double>(matches[n]) / static_cast<double>(totals[n]) : 0.0;
        if (p == 0.0) p = kBleuEpsilon;
        log_sum += 0.25 * std::log(p);
    }
    const double c = static_cast<double>(candidate_length);
    const double r = static_cast<double>(reference_length);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum);
}

BleuStats bleu_stats(std::string_view candidate, const std::vector<std::string>& references) {
    BleuStats s;
    const auto cand = bleu_tokenize(candidate);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references) refs.push_back(bleu_tokenize(r));
    s.candidate_length = static_cast<long long>(cand.size());

    long long best = -1;
    for (const auto& r : refs) {
        const auto len = static_cast<long long>(r.size());
        const auto diff = std::llabs(len - s.candidate_length);
        const auto best_diff = std::llabs(best - s.candidate_length);
        if (best < 0 || diff < best_diff || (diff == best_diff && len < best)) best = len;
    }
    s.reference_length = std::max(best, 0LL);

    for (int n = 1; n <= 4; ++n) {
        const auto cand_counts = ngram_counts(cand, n);
        std::map<Gram, long long> max_ref;
        for (const auto& r : refs) {
            for (const auto& [g, c] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], c);
        }
        for (const auto& [g, c] : cand_counts) {
            s.totals[n - 1] += c;
            auto it = max_ref.find(g);
            if (it != max_ref.end()) s.matches[n - 1] += std::min(c, it->second);
        }
    }
    return s;
}

double bleu4(std::string_view candidate, const std::vector<std::string>& references) {
    return bleu_stats(candidate, references).score();
}

void BleuAccumulator::add(std::string_view candidate, const std::vector<std::string>& references) {
    const auto s = bleu_stats(candidate, references);
    scores.push_back(s.score());
    ++sentences;
    pooled.merge(s);
}

void BleuAccumulator::merge(const BleuAccumulator& o) {
    scores.insert(scores.end(), o.scores.begin(), o.scores.end());
    sentences += o.sentences;
    pooled.merge(o.pooled);
}

double BleuAccumulator::mean() const {
    if (scores.empty()) return 0.0;
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0;
    for (double x : sorted) sum += x;
    return sum / static_cast<double>(sorted.size());
}

// --- report ----------------------------------------------------------------

void MetricReport::add(const ScoredTurn& t) {
    const auto& p = t.predicted_belief;
    const auto& g = t.gold_belief;
    intent.add(intent_items(p.intent), intent_items(g.intent));
    slot.add(slot_items(p.slots), slot_items(g.slots));
    request_slot.add(request_items(p.request_slots), request_items(g.request_slots));
    object.add(object_items(p.mref), object_items(g.mref));
    joint.add(joint_match(p, g));
    if (t.gold_disambiguation && t.predicted_disambiguation) {
        disambiguation.add(*t.predicted_disambiguation == *t.gold_disambiguation);
    }
    if (t.predicted_response) bleu.add(*t.predicted_response, {t.gold_response});
}

void MetricReport::merge(const MetricReport& o) {
    disambiguation.merge(o.disambiguation);
    intent.merge(o.intent);
    slot.merge(o.slot);
    request_slot.merge(o.request_slot);
    object.merge(o.object);
    joint.merge(o.joint);
    bleu.merge(o.bleu);
}

namespace {

json ratio_json(const Ratio& r) {
    return json{{"value", r.value()}, {"numerator", r.numerator}, {"denominator", r.denominator}};
}

json f1_json(const MicroF1& f) {
    return json{{"value", f.f1()},         {"precision", f.precision()}, {"recall", f.recall()},
                {"tp", f.tp},              {"fp", f.fp},                 {"fn", f.fn},
                {"degenerate", f.degenerate()}};
}

}  // namespace

json MetricReport::to_json() const {
    return json{{"disambiguation_accuracy", ratio_json(disambiguation)},
                {"intent_f1", f1_json(intent)},
                {"slot_f1", f1_json(slot)},
                {"request_slot_f1", f1_json(request_slot)},
                {"object_f1", f1_json(object)},
                {"joint_accuracy", ratio_json(joint)},
                {"bleu4",
                 {{"value", bleu4()},
                  {"aggregation", pooled_bleu ? "pooled" : "sentence_mean"},
                  {"sentence_mean", bleu.mean()},
                  {"pooled", bleu.pooled_score()},
                  {"sentences", bleu.sentences},
                  {"matches", bleu.pooled.matches},
                  {"totals", bleu.pooled.totals},
                  {"candidate_length", bleu.pooled.candidate_length},
                  {"reference_length", bleu.pooled.reference_length}}}};
}

std::string MetricReport::to_tsv() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "metric\tvalue\tnumerator\tdenominator\n";
    auto ratio = [&](const char* name, const Ratio& r) {
        out << name << '\t' << r.value() << '\t' << r.numerator << '\t' << r.denominator << '\n';
    };
    auto f1 = [&](const char* name, const MicroF1& f) {
        out << name << '\t' << f.f1() << '\t' << 2 * f.tp << '\t' << 2 * f.tp + f.fp + f.fn << '\n';
    };
    ratio("disambiguation_accuracy", disambiguation);
    f1("intent_f1", intent);
    f1("slot_f1", slot);
    f1("request_slot_f1", request_slot);
    f1("object_f1", object);
    ratio("joint_accuracy", joint);
    out << "bleu4\t" << bleu4() << "\t\t" << bleu.sentences << '\n';
    return out.str();
}

MetricReport score(const std::vector<ScoredTurn>& turns, bool pooled_bleu) {
    MetricReport r;
    r.pooled_bleu = pooled_bleu;
    for (const auto& t : turns) r.add(t);
    return r;
}

}  // namespace mtod
