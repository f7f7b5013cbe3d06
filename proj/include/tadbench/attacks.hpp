#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tadbench/data.hpp"
#include "tadbench/model.hpp"
#include "tadbench/synonyms.hpp"

namespace tad {

struct AttackBudget {
    double eps_pert = 0.4;   // max fraction of words changed
    long max_queries = 2000;
    std::size_t k = 10;      // candidates tried per word
    void validate() const;   // throws ConfigError
};

struct AttackResult {
    bool success = false;
    bool skipped = false;  // clean prediction was already wrong
    std::vector<std::string> perturbed;  // original words when unsuccessful
    long queries = 0;
    int words_changed = 0;
    std::size_t original_pred = 0;
    std::size_t final_pred = 0;
};

// Query-counted probability oracle. Attacks only see this interface, so they
// stay black-box; every proba call counts as one query.
class Victim {
public:
    using ProbaFn = std::function<std::vector<double>(const std::vector<int>&)>;

    explicit Victim(ProbaFn fn) : fn_(std::move(fn)) {}

    static Victim wrap(const TextClassifier& model);
    // Ranking oracle: tokens are the context; probabilities are the softmax
    // over the fixed choices' scores.
    static Victim wrap_ranking(const TextClassifier& model,
                               std::vector<std::vector<int>> choice_suffixes);

    std::vector<double> proba(const std::vector<int>& tokens) {
        ++queries_;
        return fn_(tokens);
    }
    long queries() const { return queries_; }
    void reset_queries() { queries_ = 0; }

private:
    ProbaFn fn_;
    long queries_ = 0;
};

// score_i = p_y(original) - p_y(sequence with position i removed); exactly
// one query per position. Removing the only token queries the UNK token
// instead of an empty sequence.
std::vector<double> word_importance(Victim& victim,
                                    const std::vector<int>& tokens, int y,
                                    double p_y_original);

// Greedy word-substitution attack: positions in descending importance, top-k
// synonym candidates per word, substitutions kept only when they strictly
// lower p_y, stop on misclassification or budget exhaustion.
AttackResult attack_textfooler(Victim& victim,
                               const std::vector<std::string>& words, int y,
                               const Vocabulary& vocab, const SynonymTable& syn,
                               const AttackBudget& budget);

// Same greedy loop with character-bug candidates (insert, delete, adjacent
// swap, visually-similar substitution) plus synonym substitutions. Bugged
// words that leave the vocabulary become UNK.
AttackResult attack_textbugger(Victim& victim,
                               const std::vector<std::string>& words, int y,
                               const Vocabulary& vocab, const SynonymTable& syn,
                               const AttackBudget& budget);

// Character-bug variants of one word, deduplicated, original excluded.
std::vector<std::string> bug_variants(const std::string& word);

// Exhaustive search over synonym substitutions with at most max_subs changed
// words; returns a minimum-words-changed success. Tractability limits: L <= 8
// and at most 4 candidates per word (after the per-word cap k).
AttackResult brute_force_attack(Victim& victim,
                                const std::vector<std::string>& words, int y,
                                const Vocabulary& vocab, const SynonymTable& syn,
                                std::size_t max_subs, std::size_t k);

}  // namespace tad
