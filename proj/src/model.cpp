#include "tadbench/model.hpp"

#include <cmath>
#include <cstring>
#include <string_view>

#include "tadbench/error.hpp"
#include "tadbench/tokens.hpp"

namespace tad {

namespace {

std::uint64_t hash_doubles(std::uint64_t h, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    const char* bytes = reinterpret_cast<const char*>(v.data());
    return fnv1a64(std::string_view(bytes, v.size() * sizeof(double)), h);
}

std::vector<double> json_doubles(const nlohmann::json& j, const char* key,
                                 std::size_t expected) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigError(std::string("checkpoint: missing param array ") + key);
    std::vector<double> out = j[key].get<std::vector<double>>();
    if (out.size() != expected)
        throw ConfigError(std::string("checkpoint: wrong size for ") + key);
    return out;
}

}  // namespace

std::size_t argmax(const std::vector<double>& v) {
    if (v.empty()) throw NumericError("argmax: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

TextClassifier::TextClassifier(std::size_t vocab_size, std::size_t num_classes,
                               const ModelConfig& config)
    : vocab_size_(vocab_size), num_classes_(num_classes), config_(config) {
    if (vocab_size_ == 0 || num_classes_ == 0 || config_.embed_dim == 0 ||
        config_.hidden_dim == 0)
        throw NumericError("model: all dimensions must be positive");
    const std::size_t d = config_.embed_dim, h = config_.hidden_dim;
    params_.push_back(ad::leaf(Tensor({vocab_size_, d}), true));
    params_.push_back(ad::leaf(Tensor({d, h}), true));
    params_.push_back(ad::leaf(Tensor({std::size_t{1}, h}), true));
    params_.push_back(ad::leaf(Tensor({h, num_classes_}), true));
    params_.push_back(ad::leaf(Tensor({std::size_t{1}, num_classes_}), true));
}

TextClassifier::TextClassifier(std::size_t vocab_size, std::size_t num_classes,
                               const ModelConfig& config, Rng& rng)
    : TextClassifier(vocab_size, num_classes, config) {
    const double emb_scale = 0.1;
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(config_.embed_dim));
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(config_.hidden_dim));
    Tensor& e = params_[0]->value;
    for (std::size_t i = 0; i < e.numel(); ++i) e[i] = rng.normal() * emb_scale;
    Tensor& w1v = params_[1]->value;
    for (std::size_t i = 0; i < w1v.numel(); ++i) w1v[i] = rng.normal() * w1_scale;
    Tensor& w2v = params_[3]->value;
    for (std::size_t i = 0; i < w2v.numel(); ++i) w2v[i] = rng.normal() * w2_scale;
}

void TextClassifier::check_tokens(const std::vector<int>& tokens) const {
    if (tokens.empty()) throw NumericError("model: empty token sequence");
    for (int id : tokens)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_)
            throw NumericError("model: token id out of vocabulary");
}

ad::NodePtr TextClassifier::forward(const std::vector<int>& tokens) const {
    auto emb = ad::embedding_lookup(embedding(), tokens);
    auto pooled = ad::mean_rows(emb);
    auto hidden = ad::tanh(ad::add(ad::matmul(pooled, w1()), b1()));
    return ad::add(ad::matmul(hidden, w2()), b2());
}

ad::NodePtr TextClassifier::forward_with_offset(const std::vector<int>& tokens,
                                                const ad::NodePtr& delta) const {
    auto emb = ad::embedding_lookup(embedding(), tokens);
    auto shifted = ad::add(emb, delta);
    auto pooled = ad::mean_rows(shifted);
    auto hidden = ad::tanh(ad::add(ad::matmul(pooled, w1()), b1()));
    return ad::add(ad::matmul(hidden, w2()), b2());
}

std::vector<double> TextClassifier::head_from_pooled(
    const std::vector<double>& pooled) const {
    Tensor p({std::size_t{1}, config_.embed_dim}, pooled);
    Tensor h = matmul_value(p, w1()->value);
    h.add_in_place(b1()->value);
    for (std::size_t i = 0; i < h.numel(); ++i) h[i] = std::tanh(h[i]);
    Tensor z = matmul_value(h, w2()->value);
    z.add_in_place(b2()->value);
    return z.data();
}

std::vector<double> TextClassifier::logits_value(
    const std::vector<int>& tokens) const {
    check_tokens(tokens);
    const Tensor& e = embedding()->value;
    const std::size_t d = config_.embed_dim;
    // Same accumulation order as the tape path: row-major sum, then scale.
    std::vector<double> pooled(d, 0.0);
    for (int id : tokens) {
        const std::size_t row = static_cast<std::size_t>(id);
        for (std::size_t j = 0; j < d; ++j) pooled[j] += e.at(row, j);
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (std::size_t j = 0; j < d; ++j) pooled[j] *= inv;
    return head_from_pooled(pooled);
}

std::vector<double> TextClassifier::predict_proba(
    const std::vector<int>& tokens) const {
    return softmax_value(logits_value(tokens));
}

std::size_t TextClassifier::predict(const std::vector<int>& tokens) const {
    return argmax(logits_value(tokens));
}

std::vector<double> TextClassifier::rank_choices(
    const std::vector<int>& context,
    const std::vector<std::vector<int>>& choices) const {
    if (num_classes_ != 1)
        throw NumericError("rank_choices: model must have a single-score head");
    if (choices.empty()) throw NumericError("rank_choices: no choices");
    std::vector<double> scores;
    scores.reserve(choices.size());
    for (const auto& choice : choices) {
        std::vector<int> seq = context;
        seq.push_back(kSepId);
        seq.insert(seq.end(), choice.begin(), choice.end());
        scores.push_back(logits_value(seq)[0]);
    }
    return scores;
}

Tensor TextClassifier::embedding_rows(const std::vector<int>& tokens) const {
    check_tokens(tokens);
    const Tensor& e = embedding()->value;
    const std::size_t d = config_.embed_dim;
    Tensor out({tokens.size(), d});
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            out.at(i, j) = e.at(static_cast<std::size_t>(tokens[i]), j);
    return out;
}

double TextClassifier::mean_embedding_norm() const {
    const Tensor& e = embedding()->value;
    const std::size_t d = config_.embed_dim;
    double total = 0.0;
    for (std::size_t r = 0; r < vocab_size_; ++r) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += e.at(r, j) * e.at(r, j);
        total += std::sqrt(sq);
    }
    return total / static_cast<double>(vocab_size_);
}

std::uint64_t TextClassifier::param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) h = hash_doubles(h, p->value.data());
    return h;
}

std::vector<Tensor> TextClassifier::snapshot_params() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
}

void TextClassifier::restore_params(const std::vector<Tensor>& snapshot) {
    if (snapshot.size() != params_.size())
        throw NumericError("restore_params: wrong parameter count");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!snapshot[i].same_shape(params_[i]->value))
            throw NumericError("restore_params: shape mismatch");
        params_[i]->value = snapshot[i];
    }
}

nlohmann::json TextClassifier::to_checkpoint(std::uint64_t vocab_hash,
                                             const nlohmann::json& meta) const {
    nlohmann::json j;
    j["format"] = "tadbench-checkpoint";
    j["version"] = 1;
    j["model"] = {{"vocab_size", vocab_size_},
                  {"num_classes", num_classes_},
                  {"embed_dim", config_.embed_dim},
                  {"hidden_dim", config_.hidden_dim}};
    j["params"] = {{"embedding", params_[0]->value.data()},
                   {"w1", params_[1]->value.data()},
                   {"b1", params_[2]->value.data()},
                   {"w2", params_[3]->value.data()},
                   {"b2", params_[4]->value.data()}};
    j["vocab_hash"] = vocab_hash;
    j["meta"] = meta;
    return j;
}

TextClassifier TextClassifier::from_checkpoint(const nlohmann::json& checkpoint) {
    if (!checkpoint.is_object() ||
        checkpoint.value("format", std::string()) != "tadbench-checkpoint")
        throw ConfigError("checkpoint: unrecognized format");
    if (checkpoint.value("version", 0) != 1)
        throw ConfigError("checkpoint: unsupported version");
    if (!checkpoint.contains("model") || !checkpoint.contains("params"))
        throw ConfigError("checkpoint: missing model or params section");
    const nlohmann::json& m = checkpoint["model"];
    ModelConfig config;
    const std::size_t v = m.value("vocab_size", std::size_t{0});
    const std::size_t c = m.value("num_classes", std::size_t{0});
    config.embed_dim = m.value("embed_dim", std::size_t{0});
    config.hidden_dim = m.value("hidden_dim", std::size_t{0});
    if (v == 0 || c == 0 || config.embed_dim == 0 || config.hidden_dim == 0)
        throw ConfigError("checkpoint: bad model dimensions");
    TextClassifier model(v, c, config);
    const nlohmann::json& p = checkpoint["params"];
    const std::size_t d = config.embed_dim, h = config.hidden_dim;
    model.params_[0]->value =
        Tensor({v, d}, json_doubles(p, "embedding", v * d));
    model.params_[1]->value = Tensor({d, h}, json_doubles(p, "w1", d * h));
    model.params_[2]->value =
        Tensor({std::size_t{1}, h}, json_doubles(p, "b1", h));
    model.params_[3]->value = Tensor({h, c}, json_doubles(p, "w2", h * c));
    model.params_[4]->value =
        Tensor({std::size_t{1}, c}, json_doubles(p, "b2", c));
    for (const auto& param : model.params_)
        if (!param->value.all_finite())
            throw ConfigError("checkpoint: non-finite parameter value");
    return model;
}

std::uint64_t TextClassifier::checkpoint_vocab_hash(
    const nlohmann::json& checkpoint) {
    if (!checkpoint.contains("vocab_hash") ||
        !checkpoint["vocab_hash"].is_number_unsigned())
        throw ConfigError("checkpoint: missing vocab_hash");
    return checkpoint["vocab_hash"].get<std::uint64_t>();
}

nlohmann::json TextClassifier::checkpoint_meta(const nlohmann::json& checkpoint) {
    return checkpoint.value("meta", nlohmann::json::object());
}

}  // namespace tad
