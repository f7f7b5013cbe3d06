#include <cstdio>
#include <string>
#include <vector>

#include <doctest.h>

#include "tadbench/data.hpp"
#include "tadbench/error.hpp"
#include "tadbench/io_util.hpp"
#include "tadbench/tokens.hpp"

using namespace tad;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("tadbench_test_" + name) {
        write_text_file(path, content);
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::vector<Example> word_examples(std::vector<std::string> texts) {
    std::vector<Example> out;
    for (auto& t : texts) {
        Example ex;
        ex.text_a = std::move(t);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
    CHECK(tokenize("Hello, world") ==
          std::vector<std::string>{"hello", ",", "world"});
    CHECK(tokenize("  A  b\tc ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("don't stop!") ==
          std::vector<std::string>{"don", "'", "t", "stop", "!"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("Hello, world") == tokenize("Hello, world"));
}

TEST_CASE("tsv loading") {
    TempFile f("a.tsv", "0\thello world\n1\tbye now\n");
    Dataset d = load_tsv(f.path, "toy");
    CHECK(d.name == "toy");
    REQUIRE(d.examples.size() == 2);
    CHECK(d.examples[0].label == 0);
    CHECK(d.examples[0].text_a == "hello world");
    CHECK_FALSE(d.examples[0].is_pair());
    CHECK(d.num_classes == 2);
    CHECK_FALSE(d.ranking);
}

TEST_CASE("tsv single example") {
    TempFile f("b.tsv", "0\thello world\n");
    Dataset d = load_tsv(f.path, "one");
    REQUIRE(d.examples.size() == 1);
    CHECK(d.examples[0].label == 0);
}

TEST_CASE("tsv pairs") {
    TempFile f("c.tsv", "1\tfirst half\tsecond half\n0\tleft\tright\n");
    Dataset d = load_tsv(f.path, "pairs");
    REQUIRE(d.examples.size() == 2);
    CHECK(d.examples[0].is_pair());
    CHECK(*d.examples[0].text_b == "second half");
}

TEST_CASE("tsv errors name the line") {
    TempFile bad_label("d.tsv", "0\tfine\nx\tbroken\n");
    CHECK_THROWS_WITH_AS(load_tsv(bad_label.path, "x"),
                         doctest::Contains(":2:"), ConfigError);
    TempFile missing("e.tsv", "just one column\n");
    CHECK_THROWS_AS(load_tsv(missing.path, "x"), ConfigError);
    TempFile ragged("f.tsv", "0\ta\tb\n0\tc\n");
    CHECK_THROWS_AS(load_tsv(ragged.path, "x"), ConfigError);
    TempFile empty("g.tsv", "");
    CHECK_THROWS_AS(load_tsv(empty.path, "x"), ConfigError);
}

TEST_CASE("jsonl text and pair records") {
    TempFile f("h.jsonl",
               "{\"label\": 0, \"text\": \"plain sample\"}\n"
               "{\"label\": 1, \"text\": \"another one\"}\n");
    Dataset d = load_jsonl(f.path, "j");
    REQUIRE(d.examples.size() == 2);
    CHECK(d.examples[1].text_a == "another one");

    TempFile p("i.jsonl",
               "{\"label\": 1, \"text_a\": \"premise\", \"text_b\": "
               "\"hypothesis\"}\n");
    Dataset dp = load_jsonl(p.path, "jp");
    REQUIRE(dp.examples.size() == 1);
    CHECK(dp.examples[0].is_pair());
    CHECK(*dp.examples[0].text_b == "hypothesis");
}

TEST_CASE("jsonl choices records become ranking datasets") {
    TempFile f("k.jsonl",
               "{\"label\": 2, \"context\": \"pick one\", \"choices\": "
               "[\"a\", \"b\", \"c\"]}\n"
               "{\"label\": 0, \"context\": \"again\", \"choices\": "
               "[\"d\", \"e\", \"f\"]}\n");
    Dataset d = load_jsonl(f.path, "mc");
    CHECK(d.ranking);
    CHECK(d.num_classes == 3);
    REQUIRE(d.examples.size() == 2);
    CHECK(d.examples[0].choices.size() == 3);
}

TEST_CASE("jsonl errors") {
    TempFile missing("l.jsonl", "{\"text\": \"no label here\"}\n");
    CHECK_THROWS_WITH_AS(load_jsonl(missing.path, "x"),
                         doctest::Contains(":1:"), ConfigError);
    TempFile mixed("m.jsonl",
                   "{\"label\": 0, \"text\": \"plain\"}\n"
                   "{\"label\": 0, \"context\": \"c\", \"choices\": [\"a\", "
                   "\"b\"]}\n");
    CHECK_THROWS_AS(load_jsonl(mixed.path, "x"), ConfigError);
    TempFile range("n.jsonl",
                   "{\"label\": 5, \"context\": \"c\", \"choices\": [\"a\", "
                   "\"b\"]}\n");
    CHECK_THROWS_AS(load_jsonl(range.path, "x"), ConfigError);
}

TEST_CASE("load_dataset dispatches on format") {
    TempFile f("o.tsv", "0\thello\n1\tthere\n");
    CHECK(load_dataset(f.path, "tsv", "t").examples.size() == 2);
    CHECK_THROWS_AS(load_dataset(f.path, "parquet", "t"), ConfigError);
    CHECK_THROWS_AS(load_dataset("no_such_file.tsv", "tsv", "t"), ConfigError);
}

TEST_CASE("vocabulary ids and reserved entries") {
    const auto vocab = Vocabulary::build(
        word_examples({"red red red blue", "blue green", "green red"}), 2);
    CHECK(vocab.id(Vocabulary::kPadWord) == kPadId);
    CHECK(vocab.id(Vocabulary::kUnkWord) == kUnkId);
    CHECK(vocab.id(Vocabulary::kSepWord) == kSepId);
    // red: 4, blue: 2, green: 2 -> red first, then blue/green lexicographic.
    CHECK(vocab.id("red") == kNumReservedIds);
    CHECK(vocab.id("blue") == kNumReservedIds + 1);
    CHECK(vocab.id("green") == kNumReservedIds + 2);
    CHECK(vocab.size() == 6);
    CHECK(vocab.id("never seen") == kUnkId);
    CHECK(vocab.word(kUnkId) == Vocabulary::kUnkWord);
    CHECK_THROWS_AS(vocab.word(42), NumericError);
    CHECK(vocab.content_ids() == std::vector<int>{3, 4, 5});
}

TEST_CASE("vocabulary min_count filters rare words") {
    const auto vocab =
        Vocabulary::build(word_examples({"common common rare"}), 2);
    CHECK(vocab.contains("common"));
    CHECK_FALSE(vocab.contains("rare"));
    CHECK(vocab.id("rare") == kUnkId);
}

TEST_CASE("encode maps words and pairs") {
    const auto vocab = Vocabulary::build(
        word_examples({"alpha beta", "alpha beta", "gamma gamma"}), 2);
    const auto ids = vocab.encode({"alpha", "mystery", "<sep>", "beta"});
    REQUIRE(ids.size() == 4);
    CHECK(ids[0] == vocab.id("alpha"));
    CHECK(ids[1] == kUnkId);
    CHECK(ids[2] == kSepId);

    Example pair;
    pair.text_a = "alpha beta";
    pair.text_b = "gamma";
    const auto pids = vocab.encode_example(pair);
    REQUIRE(pids.size() == 4);
    CHECK(pids[2] == kSepId);
    CHECK(pids[3] == vocab.id("gamma"));
}

TEST_CASE("vocabulary hash is order sensitive and stable") {
    const auto v1 = Vocabulary::build(word_examples({"a a b b"}), 2);
    const auto v2 = Vocabulary::build(word_examples({"a a b b"}), 2);
    const auto v3 = Vocabulary::build(word_examples({"a a b b c c"}), 2);
    const auto v4 = Vocabulary::build(word_examples({"b b a a a"}), 2);
    CHECK(v1.hash() == v2.hash());
    CHECK(v1.hash() != v3.hash());  // extra word
    CHECK(v1.hash() == v4.hash());  // same words, same final order
}

TEST_CASE("synth generation is deterministic") {
    SynthConfig cfg;
    cfg.n = 400;
    cfg.vocab_size = 100;
    const DatasetSplits a = synth_dataset(cfg, 9);
    const DatasetSplits b = synth_dataset(cfg, 9);
    REQUIRE(a.train.examples.size() == b.train.examples.size());
    CHECK(a.train.examples.size() == 280);
    CHECK(a.val.examples.size() == 60);
    CHECK(a.test.examples.size() == 60);
    for (std::size_t i = 0; i < a.train.examples.size(); ++i) {
        CHECK(a.train.examples[i].text_a == b.train.examples[i].text_a);
        CHECK(a.train.examples[i].label == b.train.examples[i].label);
    }
    const DatasetSplits c = synth_dataset(cfg, 10);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.train.examples.size(); ++i)
        any_difference |= a.train.examples[i].text_a != c.train.examples[i].text_a;
    CHECK(any_difference);
}

TEST_CASE("synth class priors are balanced") {
    SynthConfig cfg;
    cfg.n = 2000;
    const DatasetSplits splits = synth_dataset(cfg, 3);
    std::size_t ones = 0;
    for (const auto& ex : splits.train.examples) ones += ex.label == 1;
    const double frac =
        static_cast<double>(ones) / splits.train.examples.size();
    // Round-robin class assignment plus 5% symmetric flips stays near half.
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
}

TEST_CASE("synth respects length bounds and contains signal words") {
    SynthConfig cfg;
    cfg.n = 200;
    cfg.vocab_size = 100;
    cfg.min_len = 5;
    cfg.max_len = 9;
    const DatasetSplits splits = synth_dataset(cfg, 4);
    for (const auto& ex : splits.test.examples) {
        const auto toks = tokenize(ex.text_a);
        CHECK(toks.size() >= 5);
        CHECK(toks.size() <= 9);
        bool has_signal = false;
        for (const auto& t : toks) has_signal |= t.rfind("sig", 0) == 0;
        CHECK(has_signal);
    }
}

TEST_CASE("synth rejects bad parameters") {
    SynthConfig cfg;
    cfg.n = 10;
    CHECK_THROWS_AS(synth_dataset(cfg, 1), ConfigError);
    cfg.n = 200;
    cfg.noise = 0.6;
    CHECK_THROWS_AS(synth_dataset(cfg, 1), ConfigError);
    cfg.noise = 0.05;
    cfg.vocab_size = 30;  // not enough room beyond per-class signal words
    CHECK_THROWS_AS(synth_dataset(cfg, 1), ConfigError);
}
