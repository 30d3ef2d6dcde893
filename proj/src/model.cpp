#include "mtod/model.hpp"

#include <algorithm>
#include <cmath>

#include "mtod/error.hpp"
#include "mtod/kernels.hpp"

namespace mtod {

using nlohmann::json;

void ModelConfig::validate() const {
    if (n_layers < 1) throw UsageError("n_layers must be at least 1");
    if (n_heads < 1) throw UsageError("n_heads must be at least 1");
    if (d_model < 1 || d_model % n_heads != 0) {
        throw UsageError("d_model must be a positive multiple of n_heads");
    }
    if (d_ff < 1) throw UsageError("d_ff must be at least 1");
    if (max_positions < 1) throw UsageError("max_positions must be at least 1");
    if (vocab_size < 1) throw UsageError("vocab_size must be at least 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw UsageError("dropout_rate must be in [0, 1)");
    }
}

json to_json(const ModelConfig& c) {
    return json{{"n_layers", c.n_layers},           {"n_heads", c.n_heads},
                {"d_model", c.d_model},             {"d_ff", c.d_ff},
                {"max_positions", c.max_positions}, {"vocab_size", c.vocab_size},
                {"dropout_rate", c.dropout_rate},   {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
    try {
        ModelConfig c;
        c.n_layers = j.at("n_layers").get<int>();
        c.n_heads = j.at("n_heads").get<int>();
        c.d_model = j.at("d_model").get<int>();
        c.d_ff = j.at("d_ff").get<int>();
        c.max_positions = j.at("max_positions").get<int>();
        c.vocab_size = j.at("vocab_size").get<int>();
        c.dropout_rate = j.at("dropout_rate").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
}

ParamLayout::ParamLayout(const ModelConfig& c) {
    auto add = [&](std::string name, std::vector<int> shape) {
        std::size_t size = 1;
        for (int s : shape) size *= static_cast<std::size_t>(s);
        tensors_.push_back(TensorSpec{std::move(name), std::move(shape), total_, size});
        total_ += size;
    };
    const int d = c.d_model;
    add("wte", {c.vocab_size, d});
    add("wpe", {c.max_positions, d});
    for (int l = 0; l < c.n_layers; ++l) {
        const std::string p = "h" + std::to_string(l) + ".";
        add(p + "ln1_g", {d});
        add(p + "ln1_b", {d});
        add(p + "w_qkv", {d, 3 * d});
        add(p + "b_qkv", {3 * d});
        add(p + "w_proj", {d, d});
        add(p + "b_proj", {d});
        add(p + "ln2_g", {d});
        add(p + "ln2_b", {d});
        add(p + "w_fc", {d, c.d_ff});
        add(p + "b_fc", {c.d_ff});
        add(p + "w_fc2", {c.d_ff, d});
        add(p + "b_fc2", {d});
    }
    add("lnf_g", {d});
    add("lnf_b", {d});
    add("w_out", {d, c.vocab_size});
}

const TensorSpec& ParamLayout::at(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    throw UsageError("no tensor named " + name);
}

namespace {

constexpr double kLayerNormEps = 1e-5;

std::string layer_prefix(int l) { return "h" + std::to_string(l) + "."; }

template <typename T>
void layernorm(T* out, T* mean, T* rstd, const T* x, const T* g, const T* b, int rows, int d) {
    for (int r = 0; r < rows; ++r) {
        const T* xr = x + static_cast<std::size_t>(r) * d;
        T* o = out + static_cast<std::size_t>(r) * d;
        T m = 0;
        for (int i = 0; i < d; ++i) m += xr[i];
        m /= static_cast<T>(d);
        T v = 0;
        for (int i = 0; i < d; ++i) v += (xr[i] - m) * (xr[i] - m);
        v /= static_cast<T>(d);
        const T s = T(1) / std::sqrt(v + static_cast<T>(kLayerNormEps));
        for (int i = 0; i < d; ++i) o[i] = (xr[i] - m) * s * g[i] + b[i];
        mean[r] = m;
        rstd[r] = s;
    }
}

// dx += d(layernorm)/dx * dy;  dg, db accumulate.
template <typename T>
void layernorm_backward(T* dx, T* dg, T* db, const T* dy, const T* x, const T* mean,
                        const T* rstd, const T* g, int rows, int d) {
    for (int r = 0; r < rows; ++r) {
        const T* xr = x + static_cast<std::size_t>(r) * d;
        const T* gy = dy + static_cast<std::size_t>(r) * d;
        T* gx = dx + static_cast<std::size_t>(r) * d;
        const T m = mean[r];
        const T s = rstd[r];
        T sum_dxhat = 0;
        T sum_dxhat_xhat = 0;
        for (int i = 0; i < d; ++i) {
            const T xhat = (xr[i] - m) * s;
            const T dxhat = gy[i] * g[i];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dg[i] += gy[i] * xhat;
            db[i] += gy[i];
        }
        sum_dxhat /= static_cast<T>(d);
        sum_dxhat_xhat /= static_cast<T>(d);
        for (int i = 0; i < d; ++i) {
            const T xhat = (xr[i] - m) * s;
            gx[i] += s * (gy[i] * g[i] - sum_dxhat - xhat * sum_dxhat_xhat);
        }
    }
}

template <typename T>
constexpr T kGeluC = static_cast<T>(0.7978845608028654);  // sqrt(2 / pi)

template <typename T>
void gelu(T* out, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const T v = x[i];
        out[i] = T(0.5) * v * (T(1) + std::tanh(kGeluC<T> * (v + T(0.044715) * v * v * v)));
    }
}

template <typename T>
void gelu_backward(T* dx, const T* dy, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const T v = x[i];
        const T t = std::tanh(kGeluC<T> * (v + T(0.044715) * v * v * v));
        const T dt = kGeluC<T> * (T(1) + T(3) * T(0.044715) * v * v);
        dx[i] = dy[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * dt);
    }
}

template <typename T>
void fill_mask(std::vector<T>& mask, std::size_t n, double rate, Rng& rng) {
    mask.resize(n);
    const T keep = static_cast<T>(1.0 / (1.0 - rate));
    for (auto& m : mask) m = rng.chance(rate) ? T(0) : keep;
}

template <typename T>
void apply_mask(std::vector<T>& v, const std::vector<T>& mask) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= mask[i];
}

template <typename T>
std::span<const T> cspan(const std::vector<T>& v) {
    return std::span<const T>(v.data(), v.size());
}

}  // namespace

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config)
    : config_(config), layout_((config.validate(), config)), params_(layout_.total(), T(0)) {}

template <typename T>
Transformer<T> Transformer<T>::init(const ModelConfig& config) {
    Transformer m(config);
    Rng rng(config.seed);
    const double base = 0.02;
    const double residual = base / std::sqrt(2.0 * config.n_layers);
    for (const auto& t : m.layout_.tensors()) {
        auto dst = std::span<T>(m.params_).subspan(t.offset, t.size);
        const auto suffix = t.name.substr(t.name.find('.') + 1);
        if (suffix == "ln1_g" || suffix == "ln2_g" || t.name == "lnf_g") {
            std::fill(dst.begin(), dst.end(), T(1));
        } else if (t.shape.size() == 2) {
            const double sd = (suffix == "w_proj" || suffix == "w_fc2") ? residual : base;
            for (auto& v : dst) v = static_cast<T>(sd * rng.normal());
        }
    }
    return m;
}

template <typename T>
std::span<T> Transformer<T>::tensor(const std::string& name) {
    const auto& t = layout_.at(name);
    return std::span<T>(params_).subspan(t.offset, t.size);
}

template <typename T>
std::span<const T> Transformer<T>::tensor(const std::string& name) const {
    const auto& t = layout_.at(name);
    return std::span<const T>(params_).subspan(t.offset, t.size);
}

template <typename T>
void Transformer<T>::check_ids(std::span<const int> ids) const {
    if (ids.empty()) throw UsageError("empty input sequence");
    if (static_cast<int>(ids.size()) > config_.max_positions) {
        throw UsageError("sequence too long: " + std::to_string(ids.size()) + " > max_positions " +
                         std::to_string(config_.max_positions));
    }
    for (int id : ids) {
        if (id < 0 || id >= config_.vocab_size) {
            throw UsageError("token id " + std::to_string(id) + " outside vocabulary");
        }
    }
}

template <typename T>
std::vector<T> Transformer<T>::embed(std::span<const int> ids) const {
    check_ids(ids);
    const int d = config_.d_model;
    const auto wte = tensor("wte");
    const auto wpe = tensor("wpe");
    std::vector<T> x(ids.size() * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const T* te = wte.data() + static_cast<std::size_t>(ids[i]) * d;
        const T* pe = wpe.data() + i * d;
        for (int c = 0; c < d; ++c) x[i * d + c] = te[c] + pe[c];
    }
    return x;
}

template <typename T>
std::vector<T> Transformer<T>::forward(std::span<const int> ids) const {
    Cache cache;
    forward(ids, cache, nullptr);
    return std::move(cache.logits);
}

template <typename T>
void Transformer<T>::forward(std::span<const int> ids, Cache& cache, Rng* dropout_rng,
                             std::span<const T> input) const {
    const int len = static_cast<int>(ids.size());
    const int d = config_.d_model;
    const int f = config_.d_ff;
    const int v = config_.vocab_size;
    const int h = config_.n_heads;
    const std::size_t nd = static_cast<std::size_t>(len) * d;
    const std::size_t nf = static_cast<std::size_t>(len) * f;
    const bool dropout = dropout_rng != nullptr && config_.dropout_rate > 0.0;

    std::vector<T> x;
    if (input.empty()) {
        x = embed(ids);
    } else {
        check_ids(ids);
        if (input.size() != nd) throw UsageError("input embedding has the wrong size");
        x.assign(input.begin(), input.end());
    }

    cache.ids.assign(ids.begin(), ids.end());
    cache.len = len;
    cache.drop_emb.clear();
    if (dropout) {
        fill_mask(cache.drop_emb, nd, config_.dropout_rate, *dropout_rng);
        apply_mask(x, cache.drop_emb);
    }

    cache.layers.resize(static_cast<std::size_t>(config_.n_layers));
    std::vector<T> tmp(nd);
    for (int l = 0; l < config_.n_layers; ++l) {
        auto& c = cache.layers[static_cast<std::size_t>(l)];
        const auto p = layer_prefix(l);
        c.x_in = x;
        c.ln1.resize(nd);
        c.ln1_mean.resize(len);
        c.ln1_rstd.resize(len);
        layernorm(c.ln1.data(), c.ln1_mean.data(), c.ln1_rstd.data(), x.data(),
                  tensor(p + "ln1_g").data(), tensor(p + "ln1_b").data(), len, d);
        c.qkv.resize(3 * nd);
        kernels::matmul<T>(c.qkv, cspan(c.ln1), tensor(p + "w_qkv"), tensor(p + "b_qkv"), len, d,
                           3 * d);
        c.probs.resize(static_cast<std::size_t>(h) * len * len);
        c.att.resize(nd);
        kernels::attention<T>(c.att, c.probs, cspan(c.qkv), len, d, h);
        kernels::matmul<T>(tmp, cspan(c.att), tensor(p + "w_proj"), tensor(p + "b_proj"), len, d,
                           d);
        c.drop_attn.clear();
        if (dropout) {
            fill_mask(c.drop_attn, nd, config_.dropout_rate, *dropout_rng);
            apply_mask(tmp, c.drop_attn);
        }
        for (std::size_t i = 0; i < nd; ++i) x[i] += tmp[i];
        c.x_mid = x;

        c.ln2.resize(nd);
        c.ln2_mean.resize(len);
        c.ln2_rstd.resize(len);
        layernorm(c.ln2.data(), c.ln2_mean.data(), c.ln2_rstd.data(), x.data(),
                  tensor(p + "ln2_g").data(), tensor(p + "ln2_b").data(), len, d);
        c.fc.resize(nf);
        kernels::matmul<T>(c.fc, cspan(c.ln2), tensor(p + "w_fc"), tensor(p + "b_fc"), len, d, f);
        c.fc_act.resize(nf);
        gelu(c.fc_act.data(), c.fc.data(), nf);
        kernels::matmul<T>(tmp, cspan(c.fc_act), tensor(p + "w_fc2"), tensor(p + "b_fc2"), len, f,
                           d);
        c.drop_mlp.clear();
        if (dropout) {
            fill_mask(c.drop_mlp, nd, config_.dropout_rate, *dropout_rng);
            apply_mask(tmp, c.drop_mlp);
        }
        for (std::size_t i = 0; i < nd; ++i) x[i] += tmp[i];
    }

    cache.x_final = std::move(x);
    cache.lnf.resize(nd);
    cache.lnf_mean.resize(len);
    cache.lnf_rstd.resize(len);
    layernorm(cache.lnf.data(), cache.lnf_mean.data(), cache.lnf_rstd.data(),
              cache.x_final.data(), tensor("lnf_g").data(), tensor("lnf_b").data(), len, d);
    cache.logits.resize(static_cast<std::size_t>(len) * v);
    kernels::matmul<T>(cache.logits, cspan(cache.lnf), tensor("w_out"), {}, len, d, v);
}

template <typename T>
void Transformer<T>::backward(const Cache& cache, std::span<const T> dlogits, std::span<T> grads,
                              std::vector<T>* d_input) const {
    const int len = cache.len;
    const int d = config_.d_model;
    const int f = config_.d_ff;
    const int v = config_.vocab_size;
    const int h = config_.n_heads;
    const std::size_t nd = static_cast<std::size_t>(len) * d;
    const std::size_t nf = static_cast<std::size_t>(len) * f;
    if (dlogits.size() != static_cast<std::size_t>(len) * v) {
        throw UsageError("dlogits has the wrong size");
    }
    if (grads.size() != params_.size()) throw UsageError("gradient buffer has the wrong size");

    auto g = [&](const std::string& name) {
        const auto& t = layout_.at(name);
        return grads.subspan(t.offset, t.size);
    };

    std::vector<T> dlnf(nd, T(0));
    kernels::matmul_backward_weight<T>(g("w_out"), {}, cspan(cache.lnf), dlogits, len, d, v);
    kernels::matmul_backward_input<T>(dlnf, dlogits, tensor("w_out"), len, d, v);

    std::vector<T> dx(nd, T(0));
    layernorm_backward(dx.data(), g("lnf_g").data(), g("lnf_b").data(), dlnf.data(),
                       cache.x_final.data(), cache.lnf_mean.data(), cache.lnf_rstd.data(),
                       tensor("lnf_g").data(), len, d);

    std::vector<T> dbranch(nd);
    std::vector<T> dact(nf);
    std::vector<T> dfc(nf);
    std::vector<T> dln(nd);
    std::vector<T> datt(nd);
    std::vector<T> dqkv(3 * nd);
    for (int l = config_.n_layers - 1; l >= 0; --l) {
        const auto& c = cache.layers[static_cast<std::size_t>(l)];
        const auto p = layer_prefix(l);

        // MLP branch: x_out = x_mid + drop(fc2(gelu(fc(ln2(x_mid)))))
        dbranch = dx;
        if (!c.drop_mlp.empty()) apply_mask(dbranch, c.drop_mlp);
        kernels::matmul_backward_weight<T>(g(p + "w_fc2"), g(p + "b_fc2"), cspan(c.fc_act),
                                           cspan(dbranch), len, f, d);
        std::fill(dact.begin(), dact.end(), T(0));
        kernels::matmul_backward_input<T>(dact, cspan(dbranch), tensor(p + "w_fc2"), len, f, d);
        gelu_backward(dfc.data(), dact.data(), c.fc.data(), nf);
        kernels::matmul_backward_weight<T>(g(p + "w_fc"), g(p + "b_fc"), cspan(c.ln2), cspan(dfc),
                                           len, d, f);
        std::fill(dln.begin(), dln.end(), T(0));
        kernels::matmul_backward_input<T>(dln, cspan(dfc), tensor(p + "w_fc"), len, d, f);
        layernorm_backward(dx.data(), g(p + "ln2_g").data(), g(p + "ln2_b").data(), dln.data(),
                           c.x_mid.data(), c.ln2_mean.data(), c.ln2_rstd.data(),
                           tensor(p + "ln2_g").data(), len, d);

        // Attention branch: x_mid = x_in + drop(proj(attn(ln1(x_in))))
        dbranch = dx;
        if (!c.drop_attn.empty()) apply_mask(dbranch, c.drop_attn);
        kernels::matmul_backward_weight<T>(g(p + "w_proj"), g(p + "b_proj"), cspan(c.att),
                                           cspan(dbranch), len, d, d);
        std::fill(datt.begin(), datt.end(), T(0));
        kernels::matmul_backward_input<T>(datt, cspan(dbranch), tensor(p + "w_proj"), len, d, d);
        std::fill(dqkv.begin(), dqkv.end(), T(0));
        kernels::attention_backward<T>(dqkv, cspan(datt), cspan(c.probs), cspan(c.qkv), len, d, h);
        kernels::matmul_backward_weight<T>(g(p + "w_qkv"), g(p + "b_qkv"), cspan(c.ln1),
                                           cspan(dqkv), len, d, 3 * d);
        std::fill(dln.begin(), dln.end(), T(0));
        kernels::matmul_backward_input<T>(dln, cspan(dqkv), tensor(p + "w_qkv"), len, d, 3 * d);
        layernorm_backward(dx.data(), g(p + "ln1_g").data(), g(p + "ln1_b").data(), dln.data(),
                           c.x_in.data(), c.ln1_mean.data(), c.ln1_rstd.data(),
                           tensor(p + "ln1_g").data(), len, d);
    }

    if (!cache.drop_emb.empty()) apply_mask(dx, cache.drop_emb);
    auto dwte = g("wte");
    auto dwpe = g("wpe");
    for (int i = 0; i < len; ++i) {
        T* te = dwte.data() + static_cast<std::size_t>(cache.ids[static_cast<std::size_t>(i)]) * d;
        T* pe = dwpe.data() + static_cast<std::size_t>(i) * d;
        for (int k = 0; k < d; ++k) {
            te[k] += dx[static_cast<std::size_t>(i) * d + k];
            pe[k] += dx[static_cast<std::size_t>(i) * d + k];
        }
    }
    if (d_input) *d_input = std::move(dx);
}

template <typename T>
std::vector<T> Transformer<T>::step(DecodeState& state, int token) const {
    const int d = config_.d_model;
    const int f = config_.d_ff;
    const int h = config_.n_heads;
    if (state.pos >= config_.max_positions) {
        throw UsageError("sequence too long: position " + std::to_string(state.pos) +
                         " exceeds max_positions");
    }
    if (token < 0 || token >= config_.vocab_size) {
        throw UsageError("token id " + std::to_string(token) + " outside vocabulary");
    }
    state.keys.resize(static_cast<std::size_t>(config_.n_layers));
    state.values.resize(static_cast<std::size_t>(config_.n_layers));

    std::vector<T> x(static_cast<std::size_t>(d));
    {
        const T* te = tensor("wte").data() + static_cast<std::size_t>(token) * d;
        const T* pe = tensor("wpe").data() + static_cast<std::size_t>(state.pos) * d;
        for (int c = 0; c < d; ++c) x[c] = te[c] + pe[c];
    }
    const int len = state.pos + 1;
    std::vector<T> ln(d), qkv(3 * d), att(d), tmp(d), fc(f), act(f);
    T mean, rstd;
    for (int l = 0; l < config_.n_layers; ++l) {
        const auto p = layer_prefix(l);
        auto& keys = state.keys[static_cast<std::size_t>(l)];
        auto& values = state.values[static_cast<std::size_t>(l)];
        layernorm(ln.data(), &mean, &rstd, x.data(), tensor(p + "ln1_g").data(),
                  tensor(p + "ln1_b").data(), 1, d);
        kernels::matmul<T>(qkv, cspan(ln), tensor(p + "w_qkv"), tensor(p + "b_qkv"), 1, d, 3 * d);
        keys.insert(keys.end(), qkv.begin() + d, qkv.begin() + 2 * d);
        values.insert(values.end(), qkv.begin() + 2 * d, qkv.end());
        kernels::attention_row<T>(att, {}, std::span<const T>(qkv).first(d), keys.data(),
                                  values.data(), d, len, d, h);
        kernels::matmul<T>(tmp, cspan(att), tensor(p + "w_proj"), tensor(p + "b_proj"), 1, d, d);
        for (int c = 0; c < d; ++c) x[c] += tmp[c];
        layernorm(ln.data(), &mean, &rstd, x.data(), tensor(p + "ln2_g").data(),
                  tensor(p + "ln2_b").data(), 1, d);
        kernels::matmul<T>(fc, cspan(ln), tensor(p + "w_fc"), tensor(p + "b_fc"), 1, d, f);
        gelu(act.data(), fc.data(), static_cast<std::size_t>(f));
        kernels::matmul<T>(tmp, cspan(act), tensor(p + "w_fc2"), tensor(p + "b_fc2"), 1, f, d);
        for (int c = 0; c < d; ++c) x[c] += tmp[c];
    }
    layernorm(ln.data(), &mean, &rstd, x.data(), tensor("lnf_g").data(), tensor("lnf_b").data(),
              1, d);
    std::vector<T> logits(static_cast<std::size_t>(config_.vocab_size));
    kernels::matmul<T>(logits, cspan(ln), tensor("w_out"), {}, 1, d, config_.vocab_size);
    ++state.pos;
    return logits;
}

template <typename T>
template <typename U>
Transformer<U> Transformer<T>::cast() const {
    Transformer<U> out(config_);
    std::transform(params_.begin(), params_.end(), out.params().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
}

template class Transformer<float>;
template class Transformer<double>;
template Transformer<double> Transformer<float>::cast<double>() const;
template Transformer<float> Transformer<double>::cast<float>() const;
template Transformer<float> Transformer<float>::cast<float>() const;
template Transformer<double> Transformer<double>::cast<double>() const;

template <typename T>
int argmax(std::span<const T> row) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(row.size()); ++i) {
        if (row[static_cast<std::size_t>(i)] > row[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

template int argmax<float>(std::span<const float>);
template int argmax<double>(std::span<const double>);

template <typename T>
LossStats masked_nll(std::span<const T> logits, int vocab_size, std::span<const int> ids,
                     int prefix_len, std::span<T> dlogits, double grad_scale) {
    const int len = static_cast<int>(ids.size());
    if (logits.size() != static_cast<std::size_t>(len) * vocab_size) {
        throw UsageError("logits do not match the sequence length");
    }
    if (!dlogits.empty()) {
        if (dlogits.size() != logits.size()) throw UsageError("dlogits has the wrong size");
        std::fill(dlogits.begin(), dlogits.end(), T(0));
    }
    LossStats stats;
    for (int i = std::max(prefix_len, 1); i < len; ++i) {
        const T* row = logits.data() + static_cast<std::size_t>(i - 1) * vocab_size;
        const int target = ids[static_cast<std::size_t>(i)];
        double m = row[0];
        for (int j = 1; j < vocab_size; ++j) m = std::max(m, static_cast<double>(row[j]));
        double s = 0;
        for (int j = 0; j < vocab_size; ++j) s += std::exp(static_cast<double>(row[j]) - m);
        const double lse = m + std::log(s);
        stats.sum += lse - static_cast<double>(row[target]);
        ++stats.count;
        if (!dlogits.empty()) {
            T* dr = dlogits.data() + static_cast<std::size_t>(i - 1) * vocab_size;
            for (int j = 0; j < vocab_size; ++j) {
                dr[j] = static_cast<T>(grad_scale * std::exp(static_cast<double>(row[j]) - lse));
            }
            dr[target] -= static_cast<T>(grad_scale);
        }
    }
    return stats;
}

template LossStats masked_nll<float>(std::span<const float>, int, std::span<const int>, int,
                                     std::span<float>, double);
template LossStats masked_nll<double>(std::span<const double>, int, std::span<const int>, int,
                                      std::span<double>, double);

template <typename T>
std::vector<int> generate_greedy(const Transformer<T>& model, std::span<const int> prompt,
                                 int stop_id, int max_new) {
    if (prompt.empty()) throw UsageError("empty prompt");
    if (static_cast<int>(prompt.size()) > model.config().max_positions) {
        throw UsageError("prompt of " + std::to_string(prompt.size()) +
                         " tokens exceeds max_positions");
    }
    std::vector<int> out;
    if (max_new <= 0) return out;
    typename Transformer<T>::DecodeState state;
    std::vector<T> logits;
    for (int id : prompt) logits = model.step(state, id);
    while (static_cast<int>(out.size()) < max_new) {
        const int next = argmax<T>(logits);
        out.push_back(next);
        if (next == stop_id || state.pos >= model.config().max_positions) break;
        logits = model.step(state, next);
    }
    return out;
}

template std::vector<int> generate_greedy<float>(const Transformer<float>&, std::span<const int>,
                                                 int, int);
template std::vector<int> generate_greedy<double>(const Transformer<double>&,
                                                  std::span<const int>, int, int);

}  // namespace mtod
