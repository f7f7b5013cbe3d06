#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tadbench/rng.hpp"

namespace tad {

struct Example {
    std::string text_a;
    std::optional<std::string> text_b;         // pair tasks
    std::vector<std::string> choices;          // multiple-choice tasks
    int label = 0;

    bool is_pair() const { return text_b.has_value(); }
    bool is_multiple_choice() const { return !choices.empty(); }
};

struct Dataset {
    std::string name;
    std::vector<Example> examples;
    std::size_t num_classes = 0;
    bool ranking = false;  // multiple-choice: label indexes into choices
};

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Lowercase, split on whitespace, and split punctuation characters into
// their own single-character tokens.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
public:
    static constexpr const char* kPadWord = "<pad>";
    static constexpr const char* kUnkWord = "<unk>";
    static constexpr const char* kSepWord = "<sep>";

    // Words with count >= min_count, ordered by descending frequency then
    // lexicographically; ids start after the reserved entries.
    static Vocabulary build(const std::vector<Example>& train_examples,
                            std::size_t min_count);

    int id(const std::string& word) const;      // kUnkId when absent
    const std::string& word(int id) const;
    bool contains(const std::string& word) const;
    std::size_t size() const { return words_.size(); }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    // tokenize(text_a) [+ SEP + tokenize(text_b)] as ids.
    std::vector<int> encode_example(const Example& ex) const;
    std::vector<int> encode_text(const std::string& text) const;

    // Non-reserved word ids, ascending.
    std::vector<int> content_ids() const;

    std::uint64_t hash() const;

private:
    Vocabulary();
    std::vector<std::string> words_;                       // indexed by id
    std::unordered_map<std::string, int> ids_;
};

Dataset load_tsv(const std::string& path, const std::string& name);
Dataset load_jsonl(const std::string& path, const std::string& name);
Dataset load_dataset(const std::string& path, const std::string& format,
                     const std::string& name);

struct SynthConfig {
    std::size_t n = 2000;            // total examples across all splits
    std::size_t vocab_size = 200;    // word types: signal + background
    std::size_t num_classes = 2;
    double noise = 0.05;             // label-flip probability
    std::size_t signal_per_class = 20;
    std::size_t min_len = 8;
    std::size_t max_len = 18;
    double signal_fraction = 0.3;    // expected share of signal positions
};

// Deterministic generative mixture: each class owns signal words, every text
// mixes them with shared background words, labels flip with probability
// `noise`. Splits are 70/15/15 with round-robin class assignment per split.
DatasetSplits synth_dataset(const SynthConfig& config, std::uint64_t seed);

}  // namespace tad
