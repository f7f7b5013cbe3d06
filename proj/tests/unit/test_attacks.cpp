#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <doctest.h>

#include "tadbench/attacks.hpp"
#include "tadbench/data.hpp"
#include "tadbench/error.hpp"
#include "tadbench/model.hpp"
#include "tadbench/rng.hpp"
#include "tadbench/synonyms.hpp"
#include "tadbench/tokens.hpp"

using namespace tad;

namespace {

std::vector<Example> word_examples(std::vector<std::string> texts) {
    std::vector<Example> out;
    for (auto& t : texts) {
        Example ex;
        ex.text_a = std::move(t);
        out.push_back(std::move(ex));
    }
    return out;
}

// Two-class bag-of-words oracle: p(class 0) = sigmoid(sum of id weights).
Victim linear_victim(const std::map<int, double>& weights) {
    return Victim([weights](const std::vector<int>& tokens) {
        double s = 0.0;
        for (int t : tokens) {
            auto it = weights.find(t);
            if (it != weights.end()) s += it->second;
        }
        const double p0 = 1.0 / (1.0 + std::exp(-s));
        return std::vector<double>{p0, 1.0 - p0};
    });
}

struct SentimentFixture {
    Vocabulary vocab;
    SynonymTable syn;
    std::map<int, double> weights;

    SentimentFixture()
        : vocab(Vocabulary::build(
              word_examples({"good bad film fine strong weak"}), 1)) {
        weights[vocab.id("good")] = 1.0;
        weights[vocab.id("strong")] = 0.8;
        weights[vocab.id("fine")] = 0.3;
        weights[vocab.id("film")] = 0.0;
        weights[vocab.id("weak")] = -0.6;
        weights[vocab.id("bad")] = -1.0;
        syn.set(vocab.id("good"), {vocab.id("bad"), vocab.id("fine")});
        syn.set(vocab.id("strong"), {vocab.id("weak")});
    }
};

}  // namespace

TEST_CASE("attack budget validation") {
    AttackBudget ok;
    ok.validate();
    ok.eps_pert = 0.0;  // allowed: forbids all substitutions
    ok.validate();
    AttackBudget bad;
    bad.eps_pert = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.eps_pert = 0.4;
    bad.max_queries = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("victim counts every probe") {
    Victim v = linear_victim({});
    CHECK(v.queries() == 0);
    v.proba({1});
    v.proba({1, 2});
    CHECK(v.queries() == 2);
    v.reset_queries();
    CHECK(v.queries() == 0);
}

TEST_CASE("word importance on a constant model is zero") {
    Victim v([](const std::vector<int>&) {
        return std::vector<double>{0.5, 0.5};
    });
    const double p0 = v.proba({5, 6, 7})[0];
    const auto scores = word_importance(v, {5, 6, 7}, 0, p0);
    REQUIRE(scores.size() == 3);
    for (double s : scores) CHECK(s == 0.0);
}

TEST_CASE("word importance ranks by linear contribution") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    const std::vector<int> ids =
        fx.vocab.encode({"good", "film", "strong", "fine"});
    const double p0 = v.proba(ids)[0];
    const long before = v.queries();
    const auto scores = word_importance(v, ids, 0, p0);
    CHECK(v.queries() - before == 4);  // one deletion probe per position

    // Deleting a high-weight word hurts p_y most: good > strong > fine > film.
    CHECK(scores[0] > scores[2]);
    CHECK(scores[2] > scores[3]);
    CHECK(scores[3] > scores[1]);
}

TEST_CASE("word importance on a single token probes the unknown word") {
    SentimentFixture fx;
    std::vector<std::vector<int>> seen;
    Victim v([&](const std::vector<int>& tokens) {
        seen.push_back(tokens);
        return std::vector<double>{0.6, 0.4};
    });
    const auto scores = word_importance(v, {fx.vocab.id("good")}, 0, 0.6);
    REQUIRE(scores.size() == 1);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0] == std::vector<int>{kUnkId});
}

TEST_CASE("textfooler flips a linear model with one substitution") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    const auto res = attack_textfooler(v, {"good", "film"}, 0, fx.vocab,
                                       fx.syn, budget);
    CHECK(res.success);
    CHECK_FALSE(res.skipped);
    CHECK(res.words_changed == 1);
    CHECK(res.perturbed == std::vector<std::string>{"bad", "film"});
    CHECK(res.original_pred == 0);
    CHECK(res.final_pred == 1);
    // Initial check + L importance probes + first candidate.
    CHECK(res.queries == 1 + 2 + 1);
}

TEST_CASE("textfooler skips cleanly misclassified inputs") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    const auto res =
        attack_textfooler(v, {"bad", "film"}, 0, fx.vocab, fx.syn, budget);
    CHECK(res.skipped);
    CHECK_FALSE(res.success);
    CHECK(res.queries == 1);
    CHECK(res.original_pred == 1);
}

TEST_CASE("zero perturbation budget never succeeds") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    budget.eps_pert = 0.0;
    const auto res = attack_textfooler(v, {"good", "film"}, 0, fx.vocab,
                                       fx.syn, budget);
    CHECK_FALSE(res.success);
    CHECK(res.perturbed == std::vector<std::string>{"good", "film"});
    CHECK(res.words_changed == 0);
}

TEST_CASE("failed attacks return the original words") {
    SentimentFixture fx;
    // Strong enough positive total that no single allowed change flips it.
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    budget.eps_pert = 0.2;  // ceil(0.2 * 5) = 1 change on 5 words
    const std::vector<std::string> words = {"good", "good", "good", "good",
                                            "film"};
    const auto res = attack_textfooler(v, words, 0, fx.vocab, fx.syn, budget);
    CHECK_FALSE(res.success);
    CHECK(res.perturbed == words);
    CHECK(res.words_changed == 0);
    CHECK(res.queries <= budget.max_queries);
}

TEST_CASE("query budget is respected") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    budget.max_queries = 7;  // 1 + 5 importance probes + at most one trial
    const std::vector<std::string> words = {"good", "good", "good", "good",
                                            "film"};
    const auto res = attack_textfooler(v, words, 0, fx.vocab, fx.syn, budget);
    CHECK(res.queries <= 7);
    CHECK_FALSE(res.success);
}

TEST_CASE("perturbation fraction bounds words changed") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    for (double eps : {0.2, 0.4, 0.8}) {
        budget.eps_pert = eps;
        const std::vector<std::string> words = {"good", "strong", "good",
                                                "fine", "film"};
        Victim fresh = linear_victim(fx.weights);
        const auto res =
            attack_textfooler(fresh, words, 0, fx.vocab, fx.syn, budget);
        CHECK(res.words_changed <=
              static_cast<int>(std::ceil(eps * words.size())));
    }
}

TEST_CASE("bug variants") {
    CHECK(bug_variants("ab") ==
          std::vector<std::string>{"abb", "a", "ba", "@b"});
    const auto one = bug_variants("a");
    CHECK(one == std::vector<std::string>{"aa", "@"});  // no delete, no swap
    const auto swap2 = bug_variants("xy");
    CHECK(std::find(swap2.begin(), swap2.end(), "yx") != swap2.end());
    // No visually mappable character: only structural edits.
    for (const auto& v : bug_variants("xy")) CHECK(v != "xy");
}

TEST_CASE("textbugger maps out-of-vocabulary bugs to UNK") {
    SentimentFixture fx;
    std::vector<std::vector<int>> seen;
    Victim v([&](const std::vector<int>& tokens) {
        seen.push_back(tokens);
        // Clean "good" is class 0; any UNK probe flips it.
        const bool has_unk =
            std::find(tokens.begin(), tokens.end(), kUnkId) != tokens.end();
        return has_unk ? std::vector<double>{0.1, 0.9}
                       : std::vector<double>{0.9, 0.1};
    });
    AttackBudget budget;
    const auto res =
        attack_textbugger(v, {"good"}, 0, fx.vocab, fx.syn, budget);
    CHECK(res.success);
    CHECK(res.words_changed == 1);
    CHECK(fx.vocab.encode(res.perturbed) == std::vector<int>{kUnkId});
    bool probed_unk = false;
    for (const auto& q : seen)
        probed_unk |= std::find(q.begin(), q.end(), kUnkId) != q.end();
    CHECK(probed_unk);
}

TEST_CASE("textbugger candidate set includes synonyms") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    AttackBudget budget;
    budget.k = 10;
    const auto res = attack_textbugger(v, {"good", "film"}, 0, fx.vocab,
                                       fx.syn, budget);
    // Char bugs of "good" all map to UNK (weight 0, not enough); the synonym
    // "bad" flips the prediction.
    CHECK(res.success);
    CHECK(res.perturbed[0] == "bad");
}

TEST_CASE("attacks leave the victim model untouched") {
    ModelConfig mc;
    mc.embed_dim = 4;
    mc.hidden_dim = 4;
    Rng rng(9);
    TextClassifier model(8, 2, mc, rng);
    const std::uint64_t before = model.param_hash();

    const auto vocab = Vocabulary::build(word_examples({"aa bb cc dd"}), 1);
    SynonymTable syn;
    syn.set(vocab.id("aa"), {vocab.id("bb"), vocab.id("cc")});
    Victim v = Victim::wrap(model);
    AttackBudget budget;
    attack_textfooler(v, {"aa", "bb", "cc"}, 0, vocab, syn, budget);
    attack_textbugger(v, {"aa", "bb", "cc"}, 1, vocab, syn, budget);
    CHECK(model.param_hash() == before);
}

TEST_CASE("ranking victim scores choices and counts one query per probe") {
    ModelConfig mc;
    mc.embed_dim = 4;
    mc.hidden_dim = 4;
    Rng rng(11);
    TextClassifier ranker(10, 1, mc, rng);
    Victim v = Victim::wrap_ranking(ranker, {{4, 5}, {6}, {7, 8}});
    const auto p = v.proba({1, 2});
    REQUIRE(p.size() == 3);
    double s = 0.0;
    for (double x : p) s += x;
    CHECK(std::abs(s - 1.0) < 1e-9);
    CHECK(v.queries() == 1);
}

TEST_CASE("brute force fails when no flip exists") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    const auto res = brute_force_attack(v, {"good", "good", "good"}, 0,
                                        fx.vocab, fx.syn, 1, 4);
    CHECK_FALSE(res.success);
    CHECK_FALSE(res.skipped);
}

TEST_CASE("brute force with zero substitutions") {
    SentimentFixture fx;
    Victim ok = linear_victim(fx.weights);
    const auto res =
        brute_force_attack(ok, {"good", "film"}, 0, fx.vocab, fx.syn, 0, 4);
    CHECK_FALSE(res.success);

    Victim wrong = linear_victim(fx.weights);
    const auto skipped =
        brute_force_attack(wrong, {"bad"}, 0, fx.vocab, fx.syn, 0, 4);
    CHECK(skipped.skipped);
}

TEST_CASE("brute force rejects oversized instances") {
    SentimentFixture fx;
    Victim v = linear_victim(fx.weights);
    const std::vector<std::string> nine(9, "film");
    CHECK_THROWS_AS(brute_force_attack(v, nine, 0, fx.vocab, fx.syn, 2, 4),
                    NumericError);
}

TEST_CASE("brute force finds the minimum number of changes") {
    SentimentFixture fx;
    // good(+1) strong(+1.5): no single substitution drives the sum negative,
    // but good->bad (-1) plus strong->weak (-0.6) does.
    std::map<int, double> w = fx.weights;
    w[fx.vocab.id("strong")] = 1.5;
    Victim v = linear_victim(w);
    const auto res = brute_force_attack(v, {"good", "strong", "film"}, 0,
                                        fx.vocab, fx.syn, 3, 4);
    CHECK(res.success);
    CHECK(res.words_changed == 2);
}

TEST_CASE("greedy successes are brute force successes") {
    SentimentFixture fx;
    Rng rng(13);
    const std::vector<std::string> pool = {"good", "bad",  "film",
                                           "fine", "weak", "strong"};
    AttackBudget budget;
    budget.k = 4;
    int greedy_wins = 0;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::string> words;
        const std::size_t len = 1 + rng.uniform_index(4);
        for (std::size_t i = 0; i < len; ++i)
            words.push_back(pool[rng.uniform_index(pool.size())]);
        const int y = static_cast<int>(rng.uniform_index(2));

        Victim vg = linear_victim(fx.weights);
        const auto greedy =
            attack_textfooler(vg, words, y, fx.vocab, fx.syn, budget);
        if (greedy.skipped || !greedy.success) continue;
        ++greedy_wins;

        const auto max_subs = static_cast<std::size_t>(
            std::ceil(budget.eps_pert * static_cast<double>(len)));
        Victim vb = linear_victim(fx.weights);
        const auto brute =
            brute_force_attack(vb, words, y, fx.vocab, fx.syn, max_subs, 4);
        CHECK(brute.success);
        CHECK(brute.words_changed <= greedy.words_changed);
    }
    CHECK(greedy_wins > 0);
}
