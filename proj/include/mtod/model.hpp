#pragma once

// GPT-style pre-norm causal decoder with a hand-written backward pass.
//
//   x0 = drop(wte[ids] + wpe[pos])
//   per layer:  x += drop(proj(attn(ln1(x))));  x += drop(fc2(gelu(fc(ln2(x)))))
//   logits = lnf(x) * w_out
//
// All parameters live in one flat buffer described by ParamLayout; the same
// layout is the checkpoint tensor manifest. T is float for training and
// inference and double for gradient checks.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtod/rng.hpp"

namespace mtod {

struct ModelConfig {
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int max_positions = 512;
    int vocab_size = 0;
    double dropout_rate = 0.1;
    std::uint64_t seed = 1;

    void validate() const;  // throws UsageError
    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct TensorSpec {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

class ParamLayout {
public:
    explicit ParamLayout(const ModelConfig& c);

    const std::vector<TensorSpec>& tensors() const { return tensors_; }
    const TensorSpec& at(const std::string& name) const;  // throws UsageError
    std::size_t total() const { return total_; }

private:
    std::vector<TensorSpec> tensors_;
    std::size_t total_ = 0;
};

template <typename T>
class Transformer {
public:
    // Activations kept by a training-mode forward pass for backward().
    struct Cache;

    // Keys and values of every position seen so far, for incremental decoding.
    struct DecodeState {
        int pos = 0;
        std::vector<std::vector<T>> keys;    // per layer, pos x d_model
        std::vector<std::vector<T>> values;  // per layer, pos x d_model
    };

    // Zero parameters; see init() for the random initialization.
    explicit Transformer(const ModelConfig& config);
    static Transformer init(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    const ParamLayout& layout() const { return layout_; }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    std::span<T> tensor(const std::string& name);
    std::span<const T> tensor(const std::string& name) const;

    // Evaluation-mode logits, len(ids) x vocab_size. Throws UsageError when
    // ids is empty, longer than max_positions or holds an out-of-range id.
    std::vector<T> forward(std::span<const int> ids) const;

    // Training-mode forward. With a non-null rng dropout is active.
    // `input` optionally replaces the summed token and position embeddings
    // (len x d_model) and must then outlive the cache.
    void forward(std::span<const int> ids, Cache& cache, Rng* dropout_rng,
                 std::span<const T> input = {}) const;

    // Accumulates parameter gradients into `grads` (size of params()). When
    // d_input is non-null it receives the gradient w.r.t. the summed input
    // embeddings before dropout.
    void backward(const Cache& cache, std::span<const T> dlogits, std::span<T> grads,
                  std::vector<T>* d_input = nullptr) const;

    // Feeds one token and returns the logits of its position.
    std::vector<T> step(DecodeState& state, int token) const;

    // Summed token and position embeddings, len x d_model.
    std::vector<T> embed(std::span<const int> ids) const;

    template <typename U>
    Transformer<U> cast() const;

private:
    void check_ids(std::span<const int> ids) const;

    ModelConfig config_;
    ParamLayout layout_;
    std::vector<T> params_;
};

template <typename T>
struct Transformer<T>::Cache {
    struct Layer {
        std::vector<T> x_in, ln1, ln1_mean, ln1_rstd, qkv, probs, att;
        std::vector<T> x_mid, ln2, ln2_mean, ln2_rstd, fc, fc_act;
        std::vector<T> drop_attn, drop_mlp;  // empty when dropout is off
    };
    std::vector<int> ids;
    int len = 0;
    std::vector<T> drop_emb;
    std::vector<Layer> layers;
    std::vector<T> x_final, lnf, lnf_mean, lnf_rstd;
    std::vector<T> logits;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

// Index of the largest value; ties go to the lowest index.
template <typename T>
int argmax(std::span<const T> row);

struct LossStats {
    double sum = 0;   // raw summed negative log-likelihood
    long long count = 0;
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

// Negative log-likelihood of ids[i] under logits row i-1 for every
// i >= max(prefix_len, 1). When dlogits is non-empty it is overwritten with
// grad_scale times the gradient of the summed loss; masked rows get exact
// zeros.
template <typename T>
LossStats masked_nll(std::span<const T> logits, int vocab_size, std::span<const int> ids,
                     int prefix_len, std::span<T> dlogits = {}, double grad_scale = 1.0);

// Greedy decoding: appends the argmax token until `stop_id` (included) or
// max_new tokens. Throws UsageError for an empty prompt or one longer than
// max_positions; generation also ends once the token predicted from
// position max_positions - 1 has been emitted.
template <typename T>
std::vector<int> generate_greedy(const Transformer<T>& model, std::span<const int> prompt,
                                 int stop_id, int max_new);

}  // namespace mtod
