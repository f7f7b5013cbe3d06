#include <cmath>
#include <vector>

#include <doctest.h>

#include "tadbench/error.hpp"
#include "tadbench/model.hpp"
#include "tadbench/tokens.hpp"

#include "support/finite_diff.hpp"

using namespace tad;
using test::max_grad_rel_err;

namespace {

TextClassifier small_model(std::size_t vocab = 12, std::size_t classes = 3,
                           std::uint64_t seed = 5) {
    ModelConfig mc;
    mc.embed_dim = 4;
    mc.hidden_dim = 6;
    Rng rng(seed);
    return TextClassifier(vocab, classes, mc, rng);
}

}  // namespace

TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(argmax({2, 0}) == 0);
    CHECK(argmax({0, 2}) == 1);
    CHECK(argmax({1, 1, 1}) == 0);
    CHECK(argmax({0, 3, 3}) == 1);
}

TEST_CASE("zeroed head makes all logits equal") {
    TextClassifier model = small_model();
    model.params()[3]->value.fill(0.0);
    model.params()[4]->value.fill(0.0);
    const std::vector<double> z = model.logits_value({3, 4, 5});
    for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("forward is deterministic for fixed seed and tokens") {
    TextClassifier a = small_model(20, 2, 77);
    TextClassifier b = small_model(20, 2, 77);
    const std::vector<int> tokens = {1, 4, 9, 9, 3};
    const std::vector<double> za = a.logits_value(tokens);
    const std::vector<double> zb = b.logits_value(tokens);
    REQUIRE(za.size() == zb.size());
    for (std::size_t i = 0; i < za.size(); ++i) CHECK(za[i] == zb[i]);
}

TEST_CASE("mean pooling ignores token order") {
    TextClassifier model = small_model();
    const std::vector<double> ab = model.logits_value({3, 7});
    const std::vector<double> ba = model.logits_value({7, 3});
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab[i] == ba[i]);

    const std::vector<double> fwd = model.logits_value({2, 5, 8, 11});
    const std::vector<double> perm = model.logits_value({8, 11, 2, 5});
    for (std::size_t i = 0; i < fwd.size(); ++i)
        CHECK(fwd[i] == doctest::Approx(perm[i]).epsilon(1e-12));
}

TEST_CASE("tape and value forward paths agree bitwise") {
    TextClassifier model = small_model();
    const std::vector<int> tokens = {0, 1, 6, 10};
    const auto node = model.forward(tokens);
    const std::vector<double> fast = model.logits_value(tokens);
    REQUIRE(node->value.numel() == fast.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
        CHECK(node->value[i] == fast[i]);
}

TEST_CASE("zero offset reproduces forward exactly") {
    TextClassifier model = small_model();
    const std::vector<int> tokens = {2, 3, 4};
    auto zero = ad::leaf(Tensor({tokens.size(), model.embed_dim()}), true);
    const auto plain = model.forward(tokens);
    const auto offset = model.forward_with_offset(tokens, zero);
    for (std::size_t i = 0; i < plain->value.numel(); ++i)
        CHECK(plain->value[i] == offset->value[i]);
}

TEST_CASE("offset gradient matches finite differences") {
    TextClassifier model = small_model();
    const std::vector<int> tokens = {1, 5, 7};
    Rng rng(3);
    Tensor d({tokens.size(), model.embed_dim()});
    for (auto& v : d.data()) v = 0.01 * rng.normal();
    auto delta = ad::leaf(d, true);

    Tensor target({3}, {0.2, 0.5, 0.3});
    auto build = [&] {
        return ad::cross_entropy(model.forward_with_offset(tokens, delta),
                                 target);
    };
    ad::backward(build());
    auto value = [&] { return build()->value.item(); };
    CHECK(max_grad_rel_err(delta, value) < 1e-4);
}

TEST_CASE("tiny offsets move logits by at most a tiny amount") {
    TextClassifier model = small_model();
    const std::vector<int> tokens = {1, 2, 3, 4, 5};
    Rng rng(9);
    Tensor d = random_sphere({tokens.size(), model.embed_dim()}, 1e-8, rng);
    const auto base = model.forward(tokens);
    const auto moved = model.forward_with_offset(tokens, ad::constant(d));
    for (std::size_t i = 0; i < base->value.numel(); ++i)
        CHECK(std::abs(base->value[i] - moved->value[i]) <= 1e-5);
}

TEST_CASE("rank_choices shape and symmetry") {
    ModelConfig mc;
    mc.embed_dim = 4;
    mc.hidden_dim = 6;
    Rng rng(21);
    TextClassifier ranker(15, 1, mc, rng);

    const std::vector<int> context = {3, 4};
    const std::vector<int> choice = {6, 7};
    const auto twin = ranker.rank_choices(context, {choice, choice});
    REQUIRE(twin.size() == 2);
    CHECK(twin[0] == twin[1]);

    const auto three = ranker.rank_choices(context, {{5}, {6}, {7, 8}});
    REQUIRE(three.size() == 3);
    CHECK(argmax(three) < 3);

    const auto five = ranker.rank_choices(context, {{5}, {6}, {7}, {8}, {9}});
    CHECK(five.size() == 5);

    TextClassifier classifier = small_model();
    CHECK_THROWS_AS(classifier.rank_choices(context, {{5}, {6}}), NumericError);
}

TEST_CASE("predict and predict_proba agree") {
    TextClassifier model = small_model(30, 4, 99);
    Rng rng(1);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<int> tokens;
        const std::size_t len = 1 + rng.uniform_index(8);
        for (std::size_t i = 0; i < len; ++i)
            tokens.push_back(static_cast<int>(rng.uniform_index(30)));
        const auto proba = model.predict_proba(tokens);
        double s = 0.0;
        for (double p : proba) s += p;
        CHECK(std::abs(s - 1.0) < 1e-9);
        CHECK(model.predict(tokens) == argmax(proba));
        CHECK(model.predict(tokens) == argmax(model.logits_value(tokens)));
    }
}

TEST_CASE("out-of-range tokens are rejected") {
    TextClassifier model = small_model();
    CHECK_THROWS_AS(model.logits_value({0, 12}), NumericError);
    CHECK_THROWS_AS(model.logits_value({-1}), NumericError);
    CHECK_THROWS_AS(model.logits_value({}), NumericError);
}

TEST_CASE("checkpoint round-trip is bit exact") {
    TextClassifier model = small_model(18, 2, 42);
    nlohmann::json meta;
    meta["defence"] = "baseline";
    meta["seed"] = 42;
    const nlohmann::json ckpt = model.to_checkpoint(0xabcdef12ULL, meta);
    CHECK(TextClassifier::checkpoint_vocab_hash(ckpt) == 0xabcdef12ULL);
    CHECK(TextClassifier::checkpoint_meta(ckpt)["defence"] == "baseline");

    TextClassifier loaded = TextClassifier::from_checkpoint(ckpt);
    CHECK(loaded.param_hash() == model.param_hash());
    const std::vector<int> tokens = {1, 7, 13};
    const auto za = model.logits_value(tokens);
    const auto zb = loaded.logits_value(tokens);
    for (std::size_t i = 0; i < za.size(); ++i) CHECK(za[i] == zb[i]);

    // Serialized text round-trips to the same checkpoint.
    const nlohmann::json reparsed = nlohmann::json::parse(ckpt.dump());
    TextClassifier again = TextClassifier::from_checkpoint(reparsed);
    CHECK(again.param_hash() == model.param_hash());
}

TEST_CASE("malformed checkpoints are rejected") {
    CHECK_THROWS_AS(TextClassifier::from_checkpoint(nlohmann::json::object()),
                    ConfigError);
    nlohmann::json wrong = small_model().to_checkpoint(1, {});
    wrong["format"] = "something-else";
    CHECK_THROWS_AS(TextClassifier::from_checkpoint(wrong), ConfigError);
}

TEST_CASE("param hash tracks parameter changes") {
    TextClassifier model = small_model();
    const std::uint64_t before = model.param_hash();
    const auto snapshot = model.snapshot_params();
    model.params()[1]->value[0] += 0.5;
    CHECK(model.param_hash() != before);
    model.restore_params(snapshot);
    CHECK(model.param_hash() == before);
}
