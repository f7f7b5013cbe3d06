#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tadbench/autodiff.hpp"
#include "tadbench/data.hpp"
#include "tadbench/model.hpp"
#include "tadbench/optim.hpp"
#include "tadbench/rng.hpp"

namespace tad {

enum class DefenceKind {
    kBaseline,
    kSLS,
    kALS,
    kFlooding,
    kTTSO,
    kTTSOpp,
    kPGD,
    kFreeLB,
    kTAVAT,
};

struct AdvSettings {
    int steps = 5;
    double adv_lr = 0.03;
    double init_mag = 0.05;
    double max_norm = 1.0;
};

struct DefenceConfig {
    DefenceKind kind = DefenceKind::kBaseline;
    double eps_smooth = 0.1;      // SLS / ALS
    double flood_level = 0.1;     // Flooding
    double temperature = 10.0;    // TTSO
    double t_base = 10.0;         // TTSO++
    double alpha = 0.5;           // TTSO++
    AdvSettings adv;              // PGD / FreeLB / TAVAT

    std::string name() const;
    bool adversarial() const;
    void validate() const;  // throws ConfigError
    nlohmann::json to_json() const;
    static DefenceConfig from_json(const nlohmann::json& j);
    static DefenceConfig make(const std::string& kind_name);
};

struct TrainConfig {
    int epochs = 4;
    std::size_t batch_size = 32;
    double lr = 0.01;
    std::uint64_t seed = 1;
};

enum class SmoothingMode { kStandard, kAdversarial };

Tensor onehot(std::size_t num_classes, int y);

// Smoothed-target cross-entropy. Standard mode spreads eps uniformly;
// adversarial mode puts the eps mass on the highest-probability wrong class
// (current predicted probabilities, treated as constants).
ad::NodePtr loss_label_smoothing(const ad::NodePtr& logits, int y, double eps,
                                 SmoothingMode mode);

// |base_loss - b| + b with gradient flowing through the absolute value.
ad::NodePtr loss_flooding(const ad::NodePtr& base_loss, double b);

// Cross-entropy of logits / T against onehot(y).
ad::NodePtr loss_ttso(const ad::NodePtr& logits, int y, double t);

// T = t_base + alpha * H(softmax(logits)); probabilities at temperature 1,
// detached, so no gradient flows through T.
double compute_dynamic_temperature(const std::vector<double>& logits,
                                   double t_base, double alpha);
double compute_dynamic_temperature(const ad::NodePtr& logits, double t_base,
                                   double alpha);

ad::NodePtr loss_ttsopp(const ad::NodePtr& logits, int y, double t_base,
                        double alpha);

using StepObserver = std::function<void(const Tensor&)>;

// K normalized-gradient ascent steps on the embedding offset, each followed
// by an l2 projection onto the max_norm ball. The initial offset is uniform
// on the sphere of radius init_mag. The observer, when set, sees the offset
// after initialization and after every step. Parameter gradients are left
// zeroed. A zero gradient leaves the offset unchanged for that step.
Tensor pgd_inner_max(const TextClassifier& model, const std::vector<int>& tokens,
                     int y, const AdvSettings& cfg, Rng& rng,
                     const StepObserver& observer = nullptr);

// Per-token l2 budget: max_norm * ||E_t|| / mean embedding norm.
std::vector<double> tavat_row_budgets(const TextClassifier& model,
                                      const std::vector<int>& tokens,
                                      double max_norm);
Tensor project_rows(const Tensor& delta, const std::vector<double>& budgets);

// As pgd_inner_max but every step projects each token row onto its own
// budget instead of projecting the whole offset.
Tensor tavat_inner_max(const TextClassifier& model,
                       const std::vector<int>& tokens, int y,
                       const AdvSettings& cfg, Rng& rng,
                       const StepObserver& observer = nullptr);

struct EncodedExample {
    std::vector<int> tokens;                // classification: full sequence
    std::vector<std::vector<int>> choices;  // ranking: per-choice sequences
    int label = 0;
};

struct EncodedDataset {
    std::string name;
    std::vector<EncodedExample> examples;
    std::size_t num_classes = 0;
    bool ranking = false;
};

// Classification: encode_example (text pairs joined by SEP). Ranking: one
// context+SEP+choice sequence per choice.
EncodedDataset encode_dataset(const Dataset& dataset, const Vocabulary& vocab);

struct Batch {
    std::vector<const EncodedExample*> examples;
};

// Per-instance logits on a fresh tape (classification forward, or the
// concatenated choice scores in ranking mode).
ad::NodePtr example_logits(const TextClassifier& model, const EncodedExample& ex,
                           bool ranking);

// Gradient accumulation for one batch under the given defence; returns the
// batch loss value. The caller owns zeroing grads and the optimizer step.
double accumulate_batch_gradients(const TextClassifier& model, const Batch& batch,
                                  const DefenceConfig& defence, bool ranking,
                                  Rng& rng);

double dataset_accuracy(const TextClassifier& model, const EncodedDataset& data);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double best_val_acc = 0.0;
    double total_wall_ms = 0.0;  // epoch loop only
};

// Runs tc.epochs epochs of minibatch Adam and restores the parameters of the
// epoch with the highest validation accuracy (earliest on ties).
TrainResult train(TextClassifier& model, const EncodedDataset& train_data,
                  const EncodedDataset& val_data, const DefenceConfig& defence,
                  const TrainConfig& tc);

}  // namespace tad
