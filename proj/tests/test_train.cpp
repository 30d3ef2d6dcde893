#include <cmath>
#include <limits>

#include "doctest.h"
#include "mtod/train.hpp"

using namespace mtod;

namespace {

ModelConfig tiny(int vocab = 12) {
    ModelConfig c;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_model = 16;
    c.d_ff = 32;
    c.max_positions = 16;
    c.vocab_size = vocab;
    c.dropout_rate = 0.0;
    return c;
}

// Repeating patterns a model can memorize in a few dozen steps.
std::vector<TrainingSequence> patterns() {
    std::vector<TrainingSequence> out;
    for (int k = 0; k < 4; ++k) {
        TrainingSequence s;
        s.scene_prefix_len = 1;
        for (int i = 0; i < 10; ++i) s.ids.push_back((k + i * (k + 1)) % 12);
        s.dialogue_id = "p" + std::to_string(k);
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_CASE("optimizer config validation and JSON") {
    OptimizerConfig o;
    CHECK(o.learning_rate == 1e-3);
    CHECK(o.epsilon == 1e-6);
    CHECK(o.weight_decay == 0.0);
    CHECK_NOTHROW(o.validate());
    o.learning_rate = 0;
    CHECK_THROWS_AS(o.validate(), UsageError);
    o = OptimizerConfig{};
    o.batch_size = 0;
    CHECK_THROWS_AS(o.validate(), UsageError);
    const auto back = optimizer_config_from_json(to_json(OptimizerConfig{}));
    CHECK(to_json(back) == to_json(OptimizerConfig{}));
}

TEST_CASE("an epoch without batches leaves the parameters unchanged") {
    auto model = Transformer<float>::init(tiny());
    const auto before = model.params();
    OptimizerConfig o;
    o.epochs = 1;
    const auto log = train(model, {}, o);
    CHECK(model.params() == before);
    REQUIRE(log.size() == 1);
    CHECK(log[0].steps == 0);

    // Sequences with nothing unmasked are skipped the same way.
    TrainingSequence scene_only;
    scene_only.ids = {1, 2, 3};
    scene_only.scene_prefix_len = 3;
    train(model, {scene_only}, o);
    CHECK(model.params() == before);
}

TEST_CASE("the first Adam step moves each weight by lr * g / (|g| + eps)") {
    auto model = Transformer<double>::init(tiny());
    const auto data = patterns();
    std::vector<const TrainingSequence*> batch;
    for (const auto& s : data) batch.push_back(&s);
    std::vector<double> grads;
    loss_and_grad<double>(model, batch, grads);
    const auto before = model.params();

    OptimizerConfig o;
    o.epochs = 1;
    o.batch_size = 4;
    o.clip_norm = 0;
    o.learning_rate = 1e-2;
    train(model, data, o);
    for (std::size_t i = 0; i < before.size(); ++i) {
        const double want = before[i] - o.learning_rate * grads[i] / (std::abs(grads[i]) + o.epsilon);
        REQUIRE(model.params()[i] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("training is reproducible and reduces the loss") {
    const auto data = patterns();
    OptimizerConfig o;
    o.epochs = 40;
    o.batch_size = 2;
    o.learning_rate = 1e-2;
    ModelConfig cfg = tiny();
    cfg.dropout_rate = 0.1;
    auto a = Transformer<float>::init(cfg);
    auto b = Transformer<float>::init(cfg);
    int callbacks = 0;
    const auto la = train(a, data, o, [&](const EpochLog&) { ++callbacks; });
    const auto lb = train(b, data, o);
    CHECK(callbacks == 40);
    CHECK(a.params() == b.params());
    REQUIRE(la.size() == 40);
    CHECK(la.back().mean_loss == lb.back().mean_loss);
    CHECK(la.front().targets == 36);
    CHECK(la.front().steps == 2);
    CHECK(la.back().mean_loss < la.front().mean_loss / 5);
    CHECK(to_json(la.front())["epoch"] == 1);
}

TEST_CASE("non-finite losses abort training") {
    auto model = Transformer<float>::init(tiny());
    model.tensor("w_out")[3] = std::numeric_limits<float>::quiet_NaN();
    OptimizerConfig o;
    o.epochs = 1;
    CHECK_THROWS_AS(train(model, patterns(), o), RuntimeFailure);
}

TEST_CASE("batch_loss needs an unmasked target") {
    auto model = Transformer<float>::init(tiny());
    TrainingSequence s;
    s.ids = {1, 2};
    s.scene_prefix_len = 2;
    CHECK_THROWS_AS(batch_loss(model, {&s}), UsageError);
    s.scene_prefix_len = 1;
    CHECK(batch_loss(model, {&s}) > 0);
}
