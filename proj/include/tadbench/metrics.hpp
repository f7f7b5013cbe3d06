#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tad {

// One attack episode: ground truth, the clean prediction, and whether the
// attack flipped a clean-correct prediction.
struct EpisodeRecord {
    int y = 0;
    std::size_t clean_pred = 0;
    bool success = false;
    long queries = 0;
};

struct AttackedDataset {
    std::vector<EpisodeRecord> records;
    std::size_t full_test_size = 0;
    bool allow_subsample = false;
};

// 100 * |clean_pred == y| / N
double clean_accuracy(const std::vector<EpisodeRecord>& records);

// 100 * |clean-correct and not flipped| / N; clean-incorrect examples count
// as errors under attack.
double accuracy_under_attack(const std::vector<EpisodeRecord>& records);

// 100 * successes / clean-correct count.
double attack_success_rate(const std::vector<EpisodeRecord>& records);

// Mean queries over successful episodes; absent when nothing succeeded.
std::optional<double> avg_queries(const std::vector<EpisodeRecord>& records);

// 100 * (1 - aua/acc); requires acc > 0.
double pdr(double acc, double aua);

// Arithmetic mean over per-attack Pdr values.
double apdr(const std::vector<double>& pdrs);

// Throws unless the records cover the full test set or subsampling was
// explicitly allowed.
void check_full_coverage(const AttackedDataset& attacked);

struct EvalRecord {
    std::string dataset;
    std::string model;
    std::string defence;
    std::string attack;
    double acc = 0.0;
    double aua = 0.0;
    double asr = 0.0;
    std::optional<double> avgq;
    double pdr = 0.0;
};

EvalRecord make_eval_record(const std::string& dataset, const std::string& model,
                            const std::string& defence, const std::string& attack,
                            const AttackedDataset& attacked);

// Header + one row per record + one apdr summary row per consecutive
// (dataset, model, defence) group (attack column reads "apdr").
std::string eval_records_to_csv(const std::vector<EvalRecord>& records);

// Attack rows only; apdr summary rows are recomputable and skipped.
std::vector<EvalRecord> parse_eval_csv(const std::string& text,
                                       const std::string& origin = "eval csv");

}  // namespace tad
