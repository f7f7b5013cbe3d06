#include "tadbench/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

#include <nlohmann/json.hpp>

#include "tadbench/error.hpp"
#include "tadbench/io_util.hpp"
#include "tadbench/tokens.hpp"

namespace tad {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
        } else if (std::ispunct(c)) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
            tokens.push_back(std::string(1, static_cast<char>(c)));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary::Vocabulary() {
    words_ = {kPadWord, kUnkWord, kSepWord};
    for (int i = 0; i < kNumReservedIds; ++i) ids_[words_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<Example>& train_examples,
                             std::size_t min_count) {
    if (min_count == 0) min_count = 1;
    std::unordered_map<std::string, std::size_t> counts;
    auto count_text = [&](const std::string& text) {
        for (auto& tok : tokenize(text)) ++counts[tok];
    };
    for (const auto& ex : train_examples) {
        count_text(ex.text_a);
        if (ex.text_b) count_text(*ex.text_b);
        for (const auto& choice : ex.choices) count_text(choice);
    }

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [word, count] : counts)
        if (count >= min_count) kept.emplace_back(word, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    for (auto& [word, count] : kept) {
        (void)count;
        if (vocab.ids_.count(word)) continue;  // a literal reserved marker
        vocab.ids_[word] = static_cast<int>(vocab.words_.size());
        vocab.words_.push_back(word);
    }
    return vocab;
}

int Vocabulary::id(const std::string& word) const {
    auto it = ids_.find(word);
    return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::word(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
        throw NumericError("vocabulary: id out of range");
    return words_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(const std::string& word) const {
    return ids_.count(word) != 0;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) ids.push_back(id(tok));
    return ids;
}

std::vector<int> Vocabulary::encode_text(const std::string& text) const {
    return encode(tokenize(text));
}

std::vector<int> Vocabulary::encode_example(const Example& ex) const {
    std::vector<int> ids = encode_text(ex.text_a);
    if (ex.text_b) {
        ids.push_back(kSepId);
        const std::vector<int> b = encode_text(*ex.text_b);
        ids.insert(ids.end(), b.begin(), b.end());
    }
    return ids;
}

std::vector<int> Vocabulary::content_ids() const {
    std::vector<int> ids;
    for (int i = kNumReservedIds; i < static_cast<int>(words_.size()); ++i)
        ids.push_back(i);
    return ids;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& w : words_) {
        h = fnv1a64(w, h);
        h = fnv1a64(std::string_view("\n", 1), h);
    }
    return h;
}

namespace {

int parse_label(const std::string& field, const std::string& where) {
    int label = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, label);
    if (ec != std::errc() || ptr != end || label < 0)
        throw ConfigError(where + ": bad label '" + field + "'");
    return label;
}

std::string at_line(const std::string& path, std::size_t line_no) {
    return path + ":" + std::to_string(line_no);
}

}  // namespace

Dataset load_tsv(const std::string& path, const std::string& name) {
    Dataset ds;
    ds.name = name;
    const std::vector<std::string> lines = split_lines(read_text_file(path));
    std::size_t expected_cols = 0;
    int max_label = -1;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = at_line(path, i + 1);
        const std::vector<std::string> cols = split_on(lines[i], '\t');
        if (cols.size() != 2 && cols.size() != 3)
            throw ConfigError(where + ": expected 2 or 3 tab-separated columns");
        if (expected_cols == 0) expected_cols = cols.size();
        if (cols.size() != expected_cols)
            throw ConfigError(where + ": inconsistent column count");
        Example ex;
        ex.label = parse_label(cols[0], where);
        ex.text_a = cols[1];
        if (cols.size() == 3) ex.text_b = cols[2];
        max_label = std::max(max_label, ex.label);
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw ConfigError(path + ": no examples");
    ds.num_classes = static_cast<std::size_t>(max_label + 1);
    return ds;
}

Dataset load_jsonl(const std::string& path, const std::string& name) {
    Dataset ds;
    ds.name = name;
    const std::vector<std::string> lines = split_lines(read_text_file(path));
    int max_label = -1;
    std::size_t choice_count = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = at_line(path, i + 1);
        nlohmann::json j = nlohmann::json::parse(lines[i], nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ConfigError(where + ": invalid JSON object");
        if (!j.contains("label") || !j["label"].is_number_integer())
            throw ConfigError(where + ": missing label field");
        Example ex;
        ex.label = j["label"].get<int>();
        if (ex.label < 0) throw ConfigError(where + ": bad label");
        if (j.contains("choices")) {
            if (!j.contains("context") || !j["context"].is_string())
                throw ConfigError(where + ": multiple-choice record needs context");
            if (!j["choices"].is_array() || j["choices"].size() < 2)
                throw ConfigError(where + ": choices must list at least 2 entries");
            ex.text_a = j["context"].get<std::string>();
            for (const auto& c : j["choices"]) {
                if (!c.is_string())
                    throw ConfigError(where + ": choices must be strings");
                ex.choices.push_back(c.get<std::string>());
            }
            if (choice_count == 0) choice_count = ex.choices.size();
            if (ex.choices.size() != choice_count)
                throw ConfigError(where + ": inconsistent choice count");
            if (static_cast<std::size_t>(ex.label) >= ex.choices.size())
                throw ConfigError(where + ": label out of choice range");
        } else if (j.contains("text_a")) {
            ex.text_a = j.value("text_a", std::string());
            if (j.contains("text_b")) ex.text_b = j.value("text_b", std::string());
        } else if (j.contains("text")) {
            ex.text_a = j.value("text", std::string());
        } else {
            throw ConfigError(where + ": missing text field");
        }
        const bool mc = ex.is_multiple_choice();
        if (!ds.examples.empty() && mc != ds.ranking)
            throw ConfigError(where + ": mixed record shapes");
        ds.ranking = mc;
        max_label = std::max(max_label, ex.label);
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw ConfigError(path + ": no examples");
    ds.num_classes =
        ds.ranking ? choice_count : static_cast<std::size_t>(max_label + 1);
    return ds;
}

Dataset load_dataset(const std::string& path, const std::string& format,
                     const std::string& name) {
    if (format == "tsv") return load_tsv(path, name);
    if (format == "jsonl") return load_jsonl(path, name);
    throw ConfigError("unknown dataset format: " + format);
}

namespace {

std::string signal_word(std::size_t cls, std::size_t k) {
    return "sig" + std::to_string(cls) + "w" + std::to_string(k);
}

std::string background_word(std::size_t k) {
    return "bg" + std::to_string(k);
}

Dataset synth_split(const SynthConfig& cfg, std::size_t count,
                    const std::string& name, Rng& rng) {
    const std::size_t background =
        cfg.vocab_size - cfg.num_classes * cfg.signal_per_class;
    Dataset ds;
    ds.name = name;
    ds.num_classes = cfg.num_classes;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t cls = i % cfg.num_classes;
        const std::size_t len =
            cfg.min_len + rng.uniform_index(cfg.max_len - cfg.min_len + 1);
        std::vector<std::string> tokens;
        bool has_signal = false;
        for (std::size_t t = 0; t < len; ++t) {
            if (rng.uniform() < cfg.signal_fraction) {
                tokens.push_back(
                    signal_word(cls, rng.uniform_index(cfg.signal_per_class)));
                has_signal = true;
            } else {
                tokens.push_back(background_word(rng.uniform_index(background)));
            }
        }
        if (!has_signal)
            tokens[0] = signal_word(cls, rng.uniform_index(cfg.signal_per_class));

        Example ex;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (t) ex.text_a.push_back(' ');
            ex.text_a += tokens[t];
        }
        std::size_t label = cls;
        if (cfg.noise > 0.0 && rng.uniform() < cfg.noise)
            label = (cls + 1 + rng.uniform_index(cfg.num_classes - 1)) %
                    cfg.num_classes;
        ex.label = static_cast<int>(label);
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

}  // namespace

DatasetSplits synth_dataset(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.n < 100) throw ConfigError("synth: n must be >= 100");
    if (cfg.num_classes < 2) throw ConfigError("synth: need >= 2 classes");
    if (cfg.min_len == 0 || cfg.max_len < cfg.min_len)
        throw ConfigError("synth: bad length range");
    if (cfg.signal_per_class == 0)
        throw ConfigError("synth: need signal words");
    if (cfg.vocab_size <= cfg.num_classes * cfg.signal_per_class)
        throw ConfigError("synth: vocab_size leaves no background words");
    if (cfg.noise < 0.0 || cfg.noise >= 0.5)
        throw ConfigError("synth: noise must be in [0, 0.5)");

    Rng rng(seed);
    const std::size_t n_train = cfg.n * 70 / 100;
    const std::size_t n_val = cfg.n * 15 / 100;
    const std::size_t n_test = cfg.n - n_train - n_val;
    DatasetSplits splits;
    splits.train = synth_split(cfg, n_train, "synth-train", rng);
    splits.val = synth_split(cfg, n_val, "synth-val", rng);
    splits.test = synth_split(cfg, n_test, "synth-test", rng);
    return splits;
}

}  // namespace tad
