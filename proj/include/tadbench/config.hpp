#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tadbench/attacks.hpp"
#include "tadbench/data.hpp"
#include "tadbench/defences.hpp"

namespace tad {

struct DatasetConfig {
    std::string kind = "synth";  // "synth" | "file"
    std::string name = "synth";
    SynthConfig synth;
    std::string format;  // file kind: "tsv" | "jsonl"
    std::string train_path, val_path, test_path;
};

struct ModelSettings {
    std::size_t embed_dim = 32;
    std::size_t hidden_dim = 64;
    std::size_t min_count = 2;
};

struct AttackSpec {
    std::string kind;  // "textfooler" | "textbugger"
    AttackBudget budget;
};

struct SynonymSettings {
    std::string file;  // when set, loaded instead of built
    std::size_t embed_dim = 32;
    std::size_t k = 10;
    std::size_t window = 2;
};

struct RunConfig {
    DatasetConfig dataset;
    ModelSettings model;
    DefenceConfig defence;
    TrainConfig train;
    std::vector<AttackSpec> attacks;
    SynonymSettings synonyms;
    std::vector<std::uint64_t> seeds{1};
    std::string out_dir = "out";
    std::size_t workers = 1;
    bool allow_subsample = false;
    std::size_t max_test_examples = 0;  // 0 = full test set

    void validate() const;  // throws ConfigError
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;
};

}  // namespace tad
