#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "mtod/model.hpp"
#include "mtod/serialize.hpp"

namespace mtod {

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double epsilon = 1e-6;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int batch_size = 8;
    int epochs = 30;
    double clip_norm = 1.0;  // <= 0 disables clipping
    std::uint64_t seed = 1;  // shuffling and dropout

    void validate() const;  // throws UsageError
};

nlohmann::json to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j);

struct EpochLog {
    int epoch = 0;         // 1-based
    double mean_loss = 0;  // summed NLL over the epoch / unmasked targets
    double sum_loss = 0;
    long long targets = 0;
    int steps = 0;
};

nlohmann::json to_json(const EpochLog& e);

// Mean masked NLL of a batch (evaluation mode, no dropout). Throws
// UsageError when the batch has no unmasked target.
template <typename T>
double batch_loss(const Transformer<T>& model, const std::vector<const TrainingSequence*>& batch);

// Mean loss of `batch` and its gradient w.r.t. every parameter.
template <typename T>
double loss_and_grad(const Transformer<T>& model, const std::vector<const TrainingSequence*>& batch,
                     std::vector<T>& grads, Rng* dropout_rng = nullptr);

// Adam over shuffled mini-batches. Calls on_epoch after every epoch and
// throws RuntimeFailure on a non-finite loss.
template <typename T>
std::vector<EpochLog> train(Transformer<T>& model, const std::vector<TrainingSequence>& data,
                            const OptimizerConfig& opt,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

extern template std::vector<EpochLog> train<float>(Transformer<float>&,
                                                   const std::vector<TrainingSequence>&,
                                                   const OptimizerConfig&,
                                                   const std::function<void(const EpochLog&)>&);

}  // namespace mtod
