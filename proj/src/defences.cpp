#include "tadbench/defences.hpp"

#include <chrono>
#include <cmath>

#include "tadbench/error.hpp"
#include "tadbench/tokens.hpp"

namespace tad {

std::string DefenceConfig::name() const {
    switch (kind) {
        case DefenceKind::kBaseline: return "baseline";
        case DefenceKind::kSLS: return "sls";
        case DefenceKind::kALS: return "als";
        case DefenceKind::kFlooding: return "flooding";
        case DefenceKind::kTTSO: return "ttso";
        case DefenceKind::kTTSOpp: return "ttsopp";
        case DefenceKind::kPGD: return "pgd";
        case DefenceKind::kFreeLB: return "freelb";
        case DefenceKind::kTAVAT: return "tavat";
    }
    throw NumericError("defence: unknown kind");
}

bool DefenceConfig::adversarial() const {
    return kind == DefenceKind::kPGD || kind == DefenceKind::kFreeLB ||
           kind == DefenceKind::kTAVAT;
}

void DefenceConfig::validate() const {
    switch (kind) {
        case DefenceKind::kSLS:
        case DefenceKind::kALS:
            if (!(eps_smooth > 0.0 && eps_smooth < 1.0))
                throw ConfigError("defence: eps_smooth must be in (0,1)");
            break;
        case DefenceKind::kFlooding:
            if (!(flood_level >= 0.0))
                throw ConfigError("defence: flood_level must be >= 0");
            break;
        case DefenceKind::kTTSO:
            if (!(temperature > 0.0))
                throw ConfigError("defence: temperature must be > 0");
            break;
        case DefenceKind::kTTSOpp:
            if (!(t_base > 0.0)) throw ConfigError("defence: t_base must be > 0");
            if (!(alpha >= 0.0)) throw ConfigError("defence: alpha must be >= 0");
            break;
        case DefenceKind::kPGD:
        case DefenceKind::kFreeLB:
        case DefenceKind::kTAVAT:
            if (adv.steps < 0) throw ConfigError("defence: steps must be >= 0");
            if (kind == DefenceKind::kFreeLB && adv.steps < 1)
                throw ConfigError("defence: freelb needs steps >= 1");
            if (!(adv.adv_lr >= 0.0))
                throw ConfigError("defence: adv_lr must be >= 0");
            if (!(adv.init_mag >= 0.0))
                throw ConfigError("defence: init_mag must be >= 0");
            if (!(adv.max_norm >= 0.0))
                throw ConfigError("defence: max_norm must be >= 0");
            break;
        case DefenceKind::kBaseline:
            break;
    }
}

nlohmann::json DefenceConfig::to_json() const {
    nlohmann::json j;
    j["kind"] = name();
    switch (kind) {
        case DefenceKind::kSLS:
        case DefenceKind::kALS:
            j["eps_smooth"] = eps_smooth;
            break;
        case DefenceKind::kFlooding:
            j["flood_level"] = flood_level;
            break;
        case DefenceKind::kTTSO:
            j["temperature"] = temperature;
            break;
        case DefenceKind::kTTSOpp:
            j["t_base"] = t_base;
            j["alpha"] = alpha;
            break;
        case DefenceKind::kPGD:
        case DefenceKind::kFreeLB:
        case DefenceKind::kTAVAT:
            j["steps"] = adv.steps;
            j["adv_lr"] = adv.adv_lr;
            j["init_mag"] = adv.init_mag;
            j["max_norm"] = adv.max_norm;
            break;
        case DefenceKind::kBaseline:
            break;
    }
    return j;
}

DefenceConfig DefenceConfig::make(const std::string& kind_name) {
    DefenceConfig cfg;
    if (kind_name == "baseline") cfg.kind = DefenceKind::kBaseline;
    else if (kind_name == "sls") cfg.kind = DefenceKind::kSLS;
    else if (kind_name == "als") cfg.kind = DefenceKind::kALS;
    else if (kind_name == "flooding") cfg.kind = DefenceKind::kFlooding;
    else if (kind_name == "ttso") cfg.kind = DefenceKind::kTTSO;
    else if (kind_name == "ttsopp") cfg.kind = DefenceKind::kTTSOpp;
    else if (kind_name == "pgd") cfg.kind = DefenceKind::kPGD;
    else if (kind_name == "freelb") cfg.kind = DefenceKind::kFreeLB;
    else if (kind_name == "tavat") cfg.kind = DefenceKind::kTAVAT;
    else throw ConfigError("defence: unknown kind '" + kind_name + "'");
    return cfg;
}

DefenceConfig DefenceConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ConfigError("defence: config needs a kind field");
    DefenceConfig cfg = make(j["kind"].get<std::string>());
    cfg.eps_smooth = j.value("eps_smooth", cfg.eps_smooth);
    cfg.flood_level = j.value("flood_level", cfg.flood_level);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.t_base = j.value("t_base", cfg.t_base);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.adv.steps = j.value("steps", cfg.adv.steps);
    cfg.adv.adv_lr = j.value("adv_lr", cfg.adv.adv_lr);
    cfg.adv.init_mag = j.value("init_mag", cfg.adv.init_mag);
    cfg.adv.max_norm = j.value("max_norm", cfg.adv.max_norm);
    cfg.validate();
    return cfg;
}

Tensor onehot(std::size_t num_classes, int y) {
    if (num_classes == 0) throw NumericError("onehot: no classes");
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
        throw NumericError("onehot: label out of range");
    Tensor t({std::size_t{1}, num_classes});
    t[static_cast<std::size_t>(y)] = 1.0;
    return t;
}

ad::NodePtr loss_label_smoothing(const ad::NodePtr& logits, int y, double eps,
                                 SmoothingMode mode) {
    if (!(eps > 0.0 && eps < 1.0))
        throw NumericError("label smoothing: eps must be in (0,1)");
    const std::size_t c = logits->value.numel();
    if (y < 0 || static_cast<std::size_t>(y) >= c)
        throw NumericError("label smoothing: label out of range");
    Tensor target({std::size_t{1}, c});
    if (mode == SmoothingMode::kStandard) {
        const double share = eps / static_cast<double>(c);
        for (std::size_t i = 0; i < c; ++i) target[i] = share;
        target[static_cast<std::size_t>(y)] += 1.0 - eps;
    } else {
        if (c < 2) throw NumericError("label smoothing: adversarial mode needs C >= 2");
        const std::vector<double> p = softmax_value(logits->value.data());
        std::size_t worst = c;  // highest-probability wrong class, lowest index on ties
        for (std::size_t i = 0; i < c; ++i) {
            if (i == static_cast<std::size_t>(y)) continue;
            if (worst == c || p[i] > p[worst]) worst = i;
        }
        target[static_cast<std::size_t>(y)] = 1.0 - eps;
        target[worst] += eps;
    }
    return ad::cross_entropy(logits, target);
}

ad::NodePtr loss_flooding(const ad::NodePtr& base_loss, double b) {
    if (!(b >= 0.0)) throw NumericError("flooding: flood level must be >= 0");
    return ad::add_scalar(ad::abs(ad::add_scalar(base_loss, -b)), b);
}

ad::NodePtr loss_ttso(const ad::NodePtr& logits, int y, double t) {
    if (!(t > 0.0)) throw NumericError("ttso: temperature must be > 0");
    return ad::cross_entropy(ad::scale(logits, 1.0 / t),
                             onehot(logits->value.numel(), y));
}

double compute_dynamic_temperature(const std::vector<double>& logits,
                                   double t_base, double alpha) {
    if (!(t_base > 0.0)) throw NumericError("ttsopp: t_base must be > 0");
    if (!(alpha >= 0.0)) throw NumericError("ttsopp: alpha must be >= 0");
    const std::vector<double> p = softmax_value(logits);
    return t_base + alpha * entropy_value(p);
}

double compute_dynamic_temperature(const ad::NodePtr& logits, double t_base,
                                   double alpha) {
    return compute_dynamic_temperature(logits->value.data(), t_base, alpha);
}

ad::NodePtr loss_ttsopp(const ad::NodePtr& logits, int y, double t_base,
                        double alpha) {
    const double t = compute_dynamic_temperature(logits, t_base, alpha);
    return loss_ttso(logits, y, t);
}

namespace {

// One normalized-gradient ascent step on delta at the current value; returns
// false when the gradient vanished and delta is unchanged.
bool ascent_step(const TextClassifier& model, const std::vector<int>& tokens,
                 int y, double adv_lr, Tensor& delta) {
    auto delta_leaf = ad::leaf(delta, true);
    auto logits = model.forward_with_offset(tokens, delta_leaf);
    auto loss = ad::cross_entropy(logits, onehot(model.num_classes(), y));
    ad::backward(loss);
    if (!delta_leaf->has_grad) return false;
    const double gn = delta_leaf->grad.l2_norm();
    if (gn == 0.0) return false;
    delta.add_scaled_in_place(delta_leaf->grad, adv_lr / gn);
    return true;
}

}  // namespace

Tensor pgd_inner_max(const TextClassifier& model, const std::vector<int>& tokens,
                     int y, const AdvSettings& cfg, Rng& rng,
                     const StepObserver& observer) {
    if (cfg.steps < 0 || !(cfg.adv_lr >= 0.0) || !(cfg.init_mag >= 0.0) ||
        !(cfg.max_norm >= 0.0))
        throw NumericError("pgd: invalid settings");
    const std::vector<std::size_t> shape{tokens.size(), model.embed_dim()};
    if (cfg.max_norm == 0.0) {
        Tensor zero(shape);
        if (observer) {
            observer(zero);
            for (int k = 0; k < cfg.steps; ++k) observer(zero);
        }
        ad::zero_grads(model.params());
        return zero;
    }
    Tensor delta = random_sphere(shape, cfg.init_mag, rng);
    if (observer) observer(delta);
    for (int k = 0; k < cfg.steps; ++k) {
        if (ascent_step(model, tokens, y, cfg.adv_lr, delta))
            delta = l2_project(delta, cfg.max_norm);
        if (observer) observer(delta);
    }
    ad::zero_grads(model.params());
    return delta;
}

std::vector<double> tavat_row_budgets(const TextClassifier& model,
                                      const std::vector<int>& tokens,
                                      double max_norm) {
    const Tensor rows = model.embedding_rows(tokens);
    const double mean_norm = model.mean_embedding_norm();
    std::vector<double> budgets(tokens.size(), 0.0);
    if (mean_norm <= 0.0) return budgets;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        double sq = 0.0;
        for (std::size_t j = 0; j < rows.cols(); ++j)
            sq += rows.at(t, j) * rows.at(t, j);
        budgets[t] = max_norm * std::sqrt(sq) / mean_norm;
    }
    return budgets;
}

Tensor project_rows(const Tensor& delta, const std::vector<double>& budgets) {
    if (delta.rows() != budgets.size())
        throw NumericError("project_rows: budget count must match rows");
    Tensor out = delta;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double sq = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) sq += out.at(r, j) * out.at(r, j);
        const double norm = std::sqrt(sq);
        if (norm > budgets[r]) {
            const double s = budgets[r] > 0.0 ? budgets[r] / norm : 0.0;
            for (std::size_t j = 0; j < out.cols(); ++j) out.at(r, j) *= s;
        }
    }
    return out;
}

Tensor tavat_inner_max(const TextClassifier& model,
                       const std::vector<int>& tokens, int y,
                       const AdvSettings& cfg, Rng& rng,
                       const StepObserver& observer) {
    if (cfg.steps < 0 || !(cfg.adv_lr >= 0.0) || !(cfg.init_mag >= 0.0) ||
        !(cfg.max_norm >= 0.0))
        throw NumericError("tavat: invalid settings");
    const std::vector<std::size_t> shape{tokens.size(), model.embed_dim()};
    if (cfg.max_norm == 0.0) {
        Tensor zero(shape);
        if (observer) {
            observer(zero);
            for (int k = 0; k < cfg.steps; ++k) observer(zero);
        }
        ad::zero_grads(model.params());
        return zero;
    }
    const std::vector<double> budgets =
        tavat_row_budgets(model, tokens, cfg.max_norm);
    // Initialization is the plain init_mag sphere; the per-row budgets bind
    // from the first step onward.
    Tensor delta = random_sphere(shape, cfg.init_mag, rng);
    if (observer) observer(delta);
    for (int k = 0; k < cfg.steps; ++k) {
        if (ascent_step(model, tokens, y, cfg.adv_lr, delta))
            delta = project_rows(delta, budgets);
        if (observer) observer(delta);
    }
    ad::zero_grads(model.params());
    return delta;
}

EncodedDataset encode_dataset(const Dataset& dataset, const Vocabulary& vocab) {
    EncodedDataset out;
    out.name = dataset.name;
    out.num_classes = dataset.num_classes;
    out.ranking = dataset.ranking;
    out.examples.reserve(dataset.examples.size());
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        const Example& ex = dataset.examples[i];
        EncodedExample enc;
        enc.label = ex.label;
        if (dataset.ranking) {
            enc.tokens = vocab.encode_text(ex.text_a);
            for (const auto& choice : ex.choices) {
                std::vector<int> seq = enc.tokens;
                seq.push_back(kSepId);
                const std::vector<int> cids = vocab.encode_text(choice);
                seq.insert(seq.end(), cids.begin(), cids.end());
                enc.choices.push_back(std::move(seq));
            }
        } else {
            enc.tokens = vocab.encode_example(ex);
            if (enc.tokens.empty())
                throw ConfigError(dataset.name + ": example " +
                                  std::to_string(i) + " has no tokens");
        }
        out.examples.push_back(std::move(enc));
    }
    return out;
}

ad::NodePtr example_logits(const TextClassifier& model, const EncodedExample& ex,
                           bool ranking) {
    if (!ranking) return model.forward(ex.tokens);
    std::vector<ad::NodePtr> scores;
    scores.reserve(ex.choices.size());
    for (const auto& seq : ex.choices) scores.push_back(model.forward(seq));
    return ad::concat_scalars(scores);
}

namespace {

double adversarial_batch(const TextClassifier& model, const Batch& batch,
                         const DefenceConfig& defence, Rng& rng) {
    const AdvSettings& adv = defence.adv;
    const std::size_t b = batch.examples.size();

    if (defence.kind == DefenceKind::kFreeLB) {
        std::vector<Tensor> deltas;
        deltas.reserve(b);
        for (const auto* ex : batch.examples) {
            const std::vector<std::size_t> shape{ex->tokens.size(),
                                                 model.embed_dim()};
            deltas.push_back(adv.max_norm == 0.0
                                 ? Tensor(shape)
                                 : random_sphere(shape, adv.init_mag, rng));
        }
        double loss_sum = 0.0;
        for (int k = 0; k < adv.steps; ++k) {
            std::vector<ad::NodePtr> losses, leaves;
            for (std::size_t i = 0; i < b; ++i) {
                const auto* ex = batch.examples[i];
                auto leaf = ad::leaf(deltas[i], true);
                auto logits = model.forward_with_offset(ex->tokens, leaf);
                losses.push_back(ad::cross_entropy(
                    logits, onehot(model.num_classes(), ex->label)));
                leaves.push_back(std::move(leaf));
            }
            auto batch_loss =
                ad::scale(ad::sum_scalars(losses), 1.0 / static_cast<double>(b));
            ad::backward(batch_loss);
            loss_sum += batch_loss->value.item();
            if (adv.max_norm > 0.0) {
                for (std::size_t i = 0; i < b; ++i) {
                    if (!leaves[i]->has_grad) continue;
                    const double gn = leaves[i]->grad.l2_norm();
                    if (gn == 0.0) continue;
                    deltas[i].add_scaled_in_place(leaves[i]->grad, adv.adv_lr / gn);
                    deltas[i] = l2_project(deltas[i], adv.max_norm);
                }
            }
        }
        // Parameter gradients are the mean over the K ascent points.
        const double inv = 1.0 / static_cast<double>(adv.steps);
        for (const auto& p : model.params())
            if (p->has_grad) p->grad.scale_in_place(inv);
        return loss_sum * inv;
    }

    // PGD and TAVAT: inner maximization per example, then one parameter pass
    // at the final offsets.
    std::vector<Tensor> deltas;
    deltas.reserve(b);
    for (const auto* ex : batch.examples) {
        deltas.push_back(defence.kind == DefenceKind::kPGD
                             ? pgd_inner_max(model, ex->tokens, ex->label, adv, rng)
                             : tavat_inner_max(model, ex->tokens, ex->label, adv,
                                               rng));
    }
    ad::zero_grads(model.params());
    std::vector<ad::NodePtr> losses;
    for (std::size_t i = 0; i < b; ++i) {
        const auto* ex = batch.examples[i];
        auto logits =
            model.forward_with_offset(ex->tokens, ad::constant(deltas[i]));
        losses.push_back(
            ad::cross_entropy(logits, onehot(model.num_classes(), ex->label)));
    }
    auto batch_loss =
        ad::scale(ad::sum_scalars(losses), 1.0 / static_cast<double>(b));
    ad::backward(batch_loss);
    return batch_loss->value.item();
}

}  // namespace

double accumulate_batch_gradients(const TextClassifier& model, const Batch& batch,
                                  const DefenceConfig& defence, bool ranking,
                                  Rng& rng) {
    if (batch.examples.empty())
        throw NumericError("train: empty batch");
    if (defence.adversarial()) {
        if (ranking)
            throw NumericError(
                "train: adversarial defences support classification data only");
        return adversarial_batch(model, batch, defence, rng);
    }

    std::vector<ad::NodePtr> losses;
    losses.reserve(batch.examples.size());
    for (const auto* ex : batch.examples) {
        auto logits = example_logits(model, *ex, ranking);
        switch (defence.kind) {
            case DefenceKind::kBaseline:
            case DefenceKind::kFlooding:
                losses.push_back(ad::cross_entropy(
                    logits, onehot(logits->value.numel(), ex->label)));
                break;
            case DefenceKind::kSLS:
                losses.push_back(loss_label_smoothing(
                    logits, ex->label, defence.eps_smooth, SmoothingMode::kStandard));
                break;
            case DefenceKind::kALS:
                losses.push_back(loss_label_smoothing(logits, ex->label,
                                                      defence.eps_smooth,
                                                      SmoothingMode::kAdversarial));
                break;
            case DefenceKind::kTTSO:
                losses.push_back(loss_ttso(logits, ex->label, defence.temperature));
                break;
            case DefenceKind::kTTSOpp:
                losses.push_back(
                    loss_ttsopp(logits, ex->label, defence.t_base, defence.alpha));
                break;
            default:
                throw NumericError("train: unhandled defence");
        }
    }
    auto batch_loss = ad::scale(ad::sum_scalars(losses),
                                1.0 / static_cast<double>(losses.size()));
    if (defence.kind == DefenceKind::kFlooding)
        batch_loss = loss_flooding(batch_loss, defence.flood_level);
    ad::backward(batch_loss);
    return batch_loss->value.item();
}

double dataset_accuracy(const TextClassifier& model, const EncodedDataset& data) {
    if (data.examples.empty()) throw NumericError("accuracy: empty dataset");
    std::size_t correct = 0;
    for (const auto& ex : data.examples) {
        std::size_t pred;
        if (data.ranking) {
            std::vector<double> scores;
            scores.reserve(ex.choices.size());
            for (const auto& seq : ex.choices)
                scores.push_back(model.logits_value(seq)[0]);
            pred = argmax(scores);
        } else {
            pred = model.predict(ex.tokens);
        }
        if (pred == static_cast<std::size_t>(ex.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

TrainResult train(TextClassifier& model, const EncodedDataset& train_data,
                  const EncodedDataset& val_data, const DefenceConfig& defence,
                  const TrainConfig& tc) {
    if (train_data.examples.empty() || val_data.examples.empty())
        throw NumericError("train: empty split");
    if (tc.epochs < 1 || tc.batch_size == 0 || !(tc.lr > 0.0))
        throw NumericError("train: bad training settings");
    defence.validate();

    Rng root(tc.seed);
    Rng shuffle_rng = root.derive("shuffle");
    Rng adv_rng = root.derive("adv");
    AdamOptimizer opt(tc.lr);

    const std::size_t n = train_data.examples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    result.best_val_acc = -1.0;
    std::vector<Tensor> best_params;

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_weighted = 0.0;
        for (std::size_t start = 0; start < n; start += tc.batch_size) {
            const std::size_t end = std::min(n, start + tc.batch_size);
            Batch batch;
            for (std::size_t i = start; i < end; ++i)
                batch.examples.push_back(&train_data.examples[order[i]]);
            ad::zero_grads(model.params());
            const double loss = accumulate_batch_gradients(
                model, batch, defence, train_data.ranking, adv_rng);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(start / tc.batch_size));
            opt.step(model.params());
            loss_weighted += loss * static_cast<double>(end - start);
        }
        const double val_acc = dataset_accuracy(model, val_data);
        const auto t1 = std::chrono::steady_clock::now();
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_weighted / static_cast<double>(n);
        stats.val_acc = val_acc;
        stats.wall_ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.total_wall_ms += stats.wall_ms;
        result.epochs.push_back(stats);
        if (val_acc > result.best_val_acc) {
            result.best_val_acc = val_acc;
            result.best_epoch = epoch;
            best_params = model.snapshot_params();
        }
    }
    model.restore_params(best_params);
    return result;
}

}  // namespace tad
