#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tadbench/config.hpp"
#include "tadbench/data.hpp"
#include "tadbench/defences.hpp"
#include "tadbench/metrics.hpp"
#include "tadbench/model.hpp"
#include "tadbench/synonyms.hpp"

namespace tad {

// Everything a run needs that derives deterministically from (config, seed):
// splits, vocabulary, encodings, and the synonym table.
struct PreparedData {
    DatasetSplits splits;
    Vocabulary vocab;
    EncodedDataset train;
    EncodedDataset val;
    EncodedDataset test;
    SynonymTable synonyms;
};

PreparedData prepare_data(const RunConfig& cfg, std::uint64_t seed);

TextClassifier build_model(const RunConfig& cfg, const PreparedData& data,
                           std::uint64_t seed);

struct TrainOutput {
    std::string checkpoint_path;
    std::string stats_csv_path;
    TrainResult result;
};

// Trains under cfg.defence, writes <prefix>_checkpoint.json and
// <prefix>_train.csv into out_dir (cfg.out_dir when out_dir is empty).
TrainOutput cmd_train(const RunConfig& cfg, std::uint64_t seed,
                      const std::string& out_dir = "");

struct AttackOutput {
    std::string eval_csv_path;
    std::vector<std::string> transcript_paths;
    std::vector<EvalRecord> records;  // one per attack
    double apdr = 0.0;
};

// Loads the checkpoint, rebuilds the dataset recorded in its metadata,
// attacks every test example with every configured attack, and writes
// transcripts plus the eval CSV.
AttackOutput cmd_attack(const RunConfig& cfg, const std::string& checkpoint_path,
                        const std::string& out_dir = "");

struct SweepRow {
    double temperature = 0.0;
    std::uint64_t seed = 0;
    double acc = 0.0;
    double aua_tf = 0.0;
    double aua_tb = 0.0;
    double apdr = 0.0;
};

// One TTSO train+attack cycle per (T, seed); writes sweep.csv.
std::vector<SweepRow> cmd_sweep_temperature(const RunConfig& cfg,
                                            const std::vector<double>& t_grid,
                                            const std::string& out_dir = "");

struct BenchRow {
    std::string defence;
    double wall_ms = 0.0;
    double multiplier = 1.0;
};

// Trains each listed defence on identical data/model/seed and reports
// wall-time multipliers against baseline; writes bench.csv and bench.txt.
std::vector<BenchRow> cmd_runtime_bench(const RunConfig& cfg,
                                        const std::vector<std::string>& defences,
                                        const std::string& out_dir = "");

// Renders every *_eval.csv under result_dir as markdown tables (best Aua
// bolded high, best Asr bolded low) and writes report.md there.
std::string cmd_report(const std::string& result_dir);

// Attack-facing word sequence of one example (pairs joined by the separator
// marker so encoding matches the training-side encoding).
std::vector<std::string> attack_words(const Example& ex);

}  // namespace tad
