#include "tadbench/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tadbench/error.hpp"
#include "tadbench/tokens.hpp"

namespace tad {

void AttackBudget::validate() const {
    if (!(eps_pert >= 0.0 && eps_pert <= 1.0))
        throw ConfigError("attack: eps_pert must be in [0,1]");
    if (max_queries < 1) throw ConfigError("attack: max_queries must be >= 1");
}

Victim Victim::wrap(const TextClassifier& model) {
    return Victim([&model](const std::vector<int>& tokens) {
        return model.predict_proba(tokens);
    });
}

Victim Victim::wrap_ranking(const TextClassifier& model,
                            std::vector<std::vector<int>> choice_suffixes) {
    return Victim([&model, choices = std::move(choice_suffixes)](
                      const std::vector<int>& tokens) {
        return softmax_value(model.rank_choices(tokens, choices));
    });
}

std::vector<double> word_importance(Victim& victim,
                                    const std::vector<int>& tokens, int y,
                                    double p_y_original) {
    if (tokens.empty()) throw NumericError("word_importance: empty input");
    std::vector<double> scores;
    scores.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::vector<int> trial;
        if (tokens.size() == 1) {
            trial = {kUnkId};
        } else {
            trial = tokens;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
        }
        const std::vector<double> p = victim.proba(trial);
        scores.push_back(p_y_original - p[static_cast<std::size_t>(y)]);
    }
    return scores;
}

namespace {

using CandidateFn =
    std::function<std::vector<std::string>(const std::string& word)>;

AttackResult greedy_attack(Victim& victim, const std::vector<std::string>& words,
                           int y, const Vocabulary& vocab,
                           const CandidateFn& candidates_for,
                           const AttackBudget& budget) {
    budget.validate();
    if (words.empty()) throw NumericError("attack: empty input");

    const long q_start = victim.queries();
    auto spent = [&] { return victim.queries() - q_start; };

    AttackResult res;
    res.perturbed = words;
    const std::vector<int> ids = vocab.encode(words);
    const std::vector<double> p0 = victim.proba(ids);
    res.original_pred = argmax(p0);
    res.final_pred = res.original_pred;
    if (res.original_pred != static_cast<std::size_t>(y)) {
        res.skipped = true;
        res.queries = spent();
        return res;
    }

    const std::size_t len = words.size();
    if (spent() + static_cast<long>(len) > budget.max_queries) {
        res.queries = spent();
        return res;
    }
    const std::vector<double> imp =
        word_importance(victim, ids, y, p0[static_cast<std::size_t>(y)]);

    std::vector<std::size_t> order(len);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return imp[a] > imp[b];
    });

    const int max_changes =
        static_cast<int>(std::ceil(budget.eps_pert * static_cast<double>(len)));
    std::vector<std::string> cur = words;
    std::vector<int> cur_ids = ids;
    double p_y_cur = p0[static_cast<std::size_t>(y)];
    int changed = 0;
    bool flipped = false;
    bool out_of_queries = false;

    for (std::size_t oi = 0; oi < len && !flipped && !out_of_queries; ++oi) {
        if (changed >= max_changes) break;
        const std::size_t pos = order[oi];
        const std::vector<std::string> cands = candidates_for(words[pos]);
        double best_p = p_y_cur;
        std::size_t best_ci = cands.size();
        for (std::size_t ci = 0; ci < cands.size() && ci < budget.k; ++ci) {
            if (spent() >= budget.max_queries) {
                out_of_queries = true;
                break;
            }
            cur_ids[pos] = vocab.id(cands[ci]);
            const std::vector<double> p = victim.proba(cur_ids);
            const std::size_t pred = argmax(p);
            if (pred != static_cast<std::size_t>(y)) {
                cur[pos] = cands[ci];
                ++changed;
                res.final_pred = pred;
                flipped = true;
                break;
            }
            if (p[static_cast<std::size_t>(y)] < best_p) {
                best_p = p[static_cast<std::size_t>(y)];
                best_ci = ci;
            }
        }
        if (!flipped) {
            if (best_ci < cands.size()) {
                // Keep the substitution that lowered p_y the most.
                cur[pos] = cands[best_ci];
                ++changed;
                p_y_cur = best_p;
            }
            cur_ids[pos] = vocab.id(cur[pos]);
        }
    }

    res.queries = spent();
    if (flipped) {
        res.success = true;
        res.perturbed = cur;
        res.words_changed = changed;
    }
    return res;
}

const std::vector<std::pair<char, char>>& visual_substitutions() {
    static const std::vector<std::pair<char, char>> kMap = {
        {'o', '0'}, {'l', '1'}, {'a', '@'}, {'e', '3'}, {'i', '1'}, {'s', '$'},
    };
    return kMap;
}

void push_unique(std::vector<std::string>& out, const std::string& original,
                 std::string cand) {
    if (cand == original) return;
    if (std::find(out.begin(), out.end(), cand) != out.end()) return;
    out.push_back(std::move(cand));
}

}  // namespace

std::vector<std::string> bug_variants(const std::string& word) {
    std::vector<std::string> out;
    const std::size_t n = word.size();
    if (n == 0) return out;
    const std::size_t mid = n / 2;

    std::string ins = word;
    ins.insert(ins.begin() + static_cast<std::ptrdiff_t>(mid), word[mid]);
    push_unique(out, word, std::move(ins));

    if (n >= 2) {
        std::string del = word;
        del.erase(mid, 1);
        push_unique(out, word, std::move(del));

        std::string sw = word;
        std::swap(sw[mid - 1], sw[mid]);
        push_unique(out, word, std::move(sw));
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [from, to] : visual_substitutions()) {
            if (word[i] == from) {
                std::string sub = word;
                sub[i] = to;
                push_unique(out, word, std::move(sub));
                i = n;  // first substitutable character only
                break;
            }
        }
    }
    return out;
}

AttackResult attack_textfooler(Victim& victim,
                               const std::vector<std::string>& words, int y,
                               const Vocabulary& vocab, const SynonymTable& syn,
                               const AttackBudget& budget) {
    return greedy_attack(
        victim, words, y, vocab,
        [&](const std::string& word) {
            std::vector<std::string> cands;
            for (int id : syn.candidates(vocab.id(word)))
                cands.push_back(vocab.word(id));
            return cands;
        },
        budget);
}

AttackResult attack_textbugger(Victim& victim,
                               const std::vector<std::string>& words, int y,
                               const Vocabulary& vocab, const SynonymTable& syn,
                               const AttackBudget& budget) {
    return greedy_attack(
        victim, words, y, vocab,
        [&](const std::string& word) {
            std::vector<std::string> cands = bug_variants(word);
            for (int id : syn.candidates(vocab.id(word)))
                push_unique(cands, word, vocab.word(id));
            return cands;
        },
        budget);
}

AttackResult brute_force_attack(Victim& victim,
                                const std::vector<std::string>& words, int y,
                                const Vocabulary& vocab, const SynonymTable& syn,
                                std::size_t max_subs, std::size_t k) {
    if (words.empty()) throw NumericError("attack: empty input");
    const std::size_t len = words.size();
    if (len > 8) throw NumericError("brute force: instance too large");

    std::vector<std::vector<int>> cands(len);
    for (std::size_t i = 0; i < len; ++i) {
        const auto& full = syn.candidates(vocab.id(words[i]));
        const std::size_t cap = std::min(full.size(), k);
        if (cap > 4) throw NumericError("brute force: instance too large");
        cands[i].assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(cap));
    }

    const long q_start = victim.queries();
    AttackResult res;
    res.perturbed = words;
    const std::vector<int> ids = vocab.encode(words);
    const std::vector<double> p0 = victim.proba(ids);
    res.original_pred = argmax(p0);
    res.final_pred = res.original_pred;
    if (res.original_pred != static_cast<std::size_t>(y)) {
        res.skipped = true;
        res.queries = victim.queries() - q_start;
        return res;
    }

    max_subs = std::min(max_subs, len);
    std::vector<std::size_t> subset;
    // Positions chosen lexicographically; candidate assignments advance like
    // an odometer, so the first success found uses the fewest substitutions.
    std::function<bool(std::size_t, std::size_t)> search =
        [&](std::size_t next_pos, std::size_t remaining) -> bool {
        if (remaining == 0) {
            std::vector<std::size_t> assign(subset.size(), 0);
            while (true) {
                std::vector<int> trial = ids;
                for (std::size_t s = 0; s < subset.size(); ++s)
                    trial[subset[s]] = cands[subset[s]][assign[s]];
                const std::vector<double> p = victim.proba(trial);
                const std::size_t pred = argmax(p);
                if (pred != static_cast<std::size_t>(y)) {
                    res.success = true;
                    res.final_pred = pred;
                    res.words_changed = static_cast<int>(subset.size());
                    res.perturbed = words;
                    for (std::size_t s = 0; s < subset.size(); ++s)
                        res.perturbed[subset[s]] =
                            vocab.word(trial[subset[s]]);
                    return true;
                }
                std::size_t d = 0;
                for (; d < assign.size(); ++d) {
                    if (++assign[d] < cands[subset[d]].size()) break;
                    assign[d] = 0;
                }
                if (d == assign.size()) return false;
            }
        }
        for (std::size_t pos = next_pos; pos + remaining <= len; ++pos) {
            if (cands[pos].empty()) continue;
            subset.push_back(pos);
            if (search(pos + 1, remaining - 1)) return true;
            subset.pop_back();
        }
        return false;
    };

    for (std::size_t size = 1; size <= max_subs && !res.success; ++size)
        search(0, size);

    res.queries = victim.queries() - q_start;
    return res;
}

}  // namespace tad
