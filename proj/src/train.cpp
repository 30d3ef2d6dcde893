#include "mtod/train.hpp"

#include <cmath>
#include <numeric>

#include "mtod/error.hpp"

namespace mtod {

using nlohmann::json;

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0)) throw UsageError("learning_rate must be positive");
    if (!(epsilon > 0)) throw UsageError("epsilon must be positive");
    if (weight_decay < 0) throw UsageError("weight_decay must be non-negative");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
        throw UsageError("betas must be in [0, 1)");
    }
    if (batch_size < 1) throw UsageError("batch_size must be at least 1");
    if (epochs < 0) throw UsageError("epochs must be non-negative");
}

json to_json(const OptimizerConfig& c) {
    return json{{"learning_rate", c.learning_rate}, {"epsilon", c.epsilon},
                {"weight_decay", c.weight_decay},   {"beta1", c.beta1},
                {"beta2", c.beta2},                 {"batch_size", c.batch_size},
                {"epochs", c.epochs},               {"clip_norm", c.clip_norm},
                {"seed", c.seed}};
}

OptimizerConfig optimizer_config_from_json(const json& j) {
    OptimizerConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.clip_norm = j.value("clip_norm", c.clip_norm);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("optimizer config: ") + e.what());
    }
    return c;
}

json to_json(const EpochLog& e) {
    return json{{"epoch", e.epoch},
                {"mean_loss", e.mean_loss},
                {"sum_loss", e.sum_loss},
                {"targets", e.targets},
                {"steps", e.steps}};
}

namespace {

long long unmasked_targets(const TrainingSequence& s) {
    return std::max(0, s.total_len() - std::max(s.scene_prefix_len, 1));
}

}  // namespace

template <typename T>
double batch_loss(const Transformer<T>& model, const std::vector<const TrainingSequence*>& batch) {
    LossStats total;
    for (const auto* s : batch) {
        const auto logits = model.forward(s->ids);
        const auto st = masked_nll<T>(logits, model.config().vocab_size, s->ids, s->scene_prefix_len);
        total.sum += st.sum;
        total.count += st.count;
    }
    if (total.count == 0) throw UsageError("batch has no unmasked target");
    return total.mean();
}

template <typename T>
double loss_and_grad(const Transformer<T>& model, const std::vector<const TrainingSequence*>& batch,
                     std::vector<T>& grads, Rng* dropout_rng) {
    long long count = 0;
    for (const auto* s : batch) count += unmasked_targets(*s);
    if (count == 0) throw UsageError("batch has no unmasked target");
    grads.assign(model.params().size(), T(0));
    const double scale = 1.0 / static_cast<double>(count);
    typename Transformer<T>::Cache cache;
    std::vector<T> dlogits;
    double sum = 0;
    for (const auto* s : batch) {
        if (unmasked_targets(*s) == 0) continue;
        model.forward(s->ids, cache, dropout_rng);
        dlogits.resize(cache.logits.size());
        const auto st = masked_nll<T>(cache.logits, model.config().vocab_size, s->ids,
                                      s->scene_prefix_len, dlogits, scale);
        sum += st.sum;
        model.backward(cache, dlogits, grads);
    }
    return sum / static_cast<double>(count);
}

template <typename T>
std::vector<EpochLog> train(Transformer<T>& model, const std::vector<TrainingSequence>& data,
                            const OptimizerConfig& opt,
                            const std::function<void(const EpochLog&)>& on_epoch) {
    opt.validate();
    auto& params = model.params();
    std::vector<double> m(params.size(), 0.0);
    std::vector<double> v(params.size(), 0.0);
    std::vector<T> grads;
    Rng rng(opt.seed);
    long long step = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<EpochLog> log;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        rng.shuffle(order);
        EpochLog entry;
        entry.epoch = epoch;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(opt.batch_size)) {
            std::vector<const TrainingSequence*> batch;
            for (std::size_t i = start;
                 i < std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size)); ++i) {
                batch.push_back(&data[order[i]]);
            }
            long long count = 0;
            for (const auto* s : batch) count += unmasked_targets(*s);
            if (count == 0) continue;

            const double loss = loss_and_grad(model, batch, grads, &rng);
            if (!std::isfinite(loss)) {
                throw RuntimeFailure("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch) + " step " + std::to_string(step + 1));
            }
            entry.sum_loss += loss * static_cast<double>(count);
            entry.targets += count;

            double norm2 = 0;
            for (T g : grads) norm2 += static_cast<double>(g) * static_cast<double>(g);
            const double norm = std::sqrt(norm2);
            if (!std::isfinite(norm)) {
                throw RuntimeFailure("training diverged: non-finite gradient at epoch " +
                                     std::to_string(epoch));
            }
            const double clip = (opt.clip_norm > 0 && norm > opt.clip_norm) ? opt.clip_norm / norm : 1.0;

            ++step;
            const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double g = static_cast<double>(grads[i]) * clip;
                m[i] = opt.beta1 * m[i] + (1 - opt.beta1) * g;
                v[i] = opt.beta2 * v[i] + (1 - opt.beta2) * g * g;
                double p = static_cast<double>(params[i]);
                p -= opt.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt.epsilon);
                if (opt.weight_decay > 0) p -= opt.learning_rate * opt.weight_decay * p;
                params[i] = static_cast<T>(p);
            }
            ++entry.steps;
        }
        entry.mean_loss = entry.targets ? entry.sum_loss / static_cast<double>(entry.targets) : 0.0;
        log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return log;
}

template double batch_loss<float>(const Transformer<float>&,
                                  const std::vector<const TrainingSequence*>&);
template double batch_loss<double>(const Transformer<double>&,
                                   const std::vector<const TrainingSequence*>&);
template double loss_and_grad<float>(const Transformer<float>&,
                                     const std::vector<const TrainingSequence*>&,
                                     std::vector<float>&, Rng*);
template double loss_and_grad<double>(const Transformer<double>&,
                                      const std::vector<const TrainingSequence*>&,
                                      std::vector<double>&, Rng*);
template std::vector<EpochLog> train<float>(Transformer<float>&,
                                            const std::vector<TrainingSequence>&,
                                            const OptimizerConfig&,
                                            const std::function<void(const EpochLog&)>&);
template std::vector<EpochLog> train<double>(Transformer<double>&,
                                             const std::vector<TrainingSequence>&,
                                             const OptimizerConfig&,
                                             const std::function<void(const EpochLog&)>&);

}  // namespace mtod
