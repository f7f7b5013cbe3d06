#include "tadbench/synonyms.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "tadbench/error.hpp"
#include "tadbench/io_util.hpp"
#include "tadbench/rng.hpp"
#include "tadbench/tokens.hpp"

namespace tad {

void SynonymTable::set(int word_id, std::vector<int> candidates) {
    std::vector<int> clean;
    for (int c : candidates) {
        if (c == word_id) continue;
        if (std::find(clean.begin(), clean.end(), c) == clean.end())
            clean.push_back(c);
    }
    entries_[word_id] = std::move(clean);
}

const std::vector<int>& SynonymTable::candidates(int word_id) const {
    static const std::vector<int> kEmpty;
    auto it = entries_.find(word_id);
    return it == entries_.end() ? kEmpty : it->second;
}

std::vector<int> SynonymTable::word_ids() const {
    std::vector<int> ids;
    ids.reserve(entries_.size());
    for (const auto& [id, cands] : entries_) ids.push_back(id);
    return ids;
}

namespace {

// Columns of x orthonormalized in place (modified Gram-Schmidt); zero
// columns stay zero.
void orthonormalize_columns(std::vector<std::vector<double>>& x) {
    const std::size_t cols = x.empty() ? 0 : x[0].size();
    const std::size_t rows = x.size();
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t prev = 0; prev < j; ++prev) {
            double dot = 0.0;
            for (std::size_t r = 0; r < rows; ++r) dot += x[r][j] * x[r][prev];
            for (std::size_t r = 0; r < rows; ++r) x[r][j] -= dot * x[r][prev];
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < rows; ++r) norm += x[r][j] * x[r][j];
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (std::size_t r = 0; r < rows; ++r) x[r][j] /= norm;
    }
}

}  // namespace

SynonymTable build_synonym_table(const std::vector<std::vector<int>>& docs,
                                 std::size_t embed_dim, std::size_t k,
                                 std::size_t window, std::uint64_t seed) {
    if (embed_dim == 0) throw NumericError("synonyms: embed_dim must be positive");
    if (window == 0) throw NumericError("synonyms: window must be positive");

    // Dense index over the content words that actually occur.
    std::vector<int> words;
    {
        std::vector<char> seen;
        for (const auto& doc : docs)
            for (int id : doc) {
                if (id < kNumReservedIds) continue;
                if (static_cast<std::size_t>(id) >= seen.size())
                    seen.resize(static_cast<std::size_t>(id) + 1, 0);
                seen[static_cast<std::size_t>(id)] = 1;
            }
        for (std::size_t id = 0; id < seen.size(); ++id)
            if (seen[id]) words.push_back(static_cast<int>(id));
    }

    SynonymTable table;
    if (k == 0) {
        for (int w : words) table.set(w, {});
        return table;
    }
    if (words.size() < k + 1)
        throw NumericError("synonyms: vocabulary too small for k");

    std::unordered_map<int, std::size_t> index;
    for (std::size_t i = 0; i < words.size(); ++i) index[words[i]] = i;
    const std::size_t n = words.size();

    // Symmetric co-occurrence counts within the window.
    std::vector<std::vector<double>> counts(n, std::vector<double>(n, 0.0));
    for (const auto& doc : docs) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (doc[i] < kNumReservedIds) continue;
            const std::size_t a = index[doc[i]];
            const std::size_t hi = std::min(doc.size(), i + window + 1);
            for (std::size_t j = i + 1; j < hi; ++j) {
                if (doc[j] < kNumReservedIds) continue;
                const std::size_t b = index[doc[j]];
                counts[a][b] += 1.0;
                counts[b][a] += 1.0;
            }
        }
    }

    double total = 0.0;
    std::vector<double> row_sum(n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            row_sum[a] += counts[a][b];
            total += counts[a][b];
        }

    // PPMI transform in place.
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const double c = counts[a][b];
            if (c <= 0.0 || row_sum[a] <= 0.0 || row_sum[b] <= 0.0) {
                counts[a][b] = 0.0;
                continue;
            }
            const double pmi = std::log(c * total / (row_sum[a] * row_sum[b]));
            counts[a][b] = pmi > 0.0 ? pmi : 0.0;
        }

    // Dominant subspace of the symmetric PPMI matrix by subspace iteration.
    const std::size_t dim = std::min(embed_dim, n);
    Rng rng(seed);
    std::vector<std::vector<double>> basis(n, std::vector<double>(dim));
    for (auto& row : basis)
        for (auto& v : row) v = rng.normal();
    auto multiply = [&](const std::vector<std::vector<double>>& x) {
        std::vector<std::vector<double>> y(n, std::vector<double>(dim, 0.0));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                const double m = counts[a][b];
                if (m == 0.0) continue;
                for (std::size_t j = 0; j < dim; ++j) y[a][j] += m * x[b][j];
            }
        return y;
    };
    orthonormalize_columns(basis);
    for (int iter = 0; iter < 8; ++iter) {
        basis = multiply(basis);
        orthonormalize_columns(basis);
    }
    const std::vector<std::vector<double>> embed = multiply(basis);

    std::vector<double> norms(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        double sq = 0.0;
        for (double v : embed[a]) sq += v * v;
        norms[a] = std::sqrt(sq);
    }

    for (std::size_t a = 0; a < n; ++a) {
        std::vector<std::pair<double, int>> scored;
        if (norms[a] > 0.0) {
            for (std::size_t b = 0; b < n; ++b) {
                if (b == a || norms[b] == 0.0) continue;
                double dot = 0.0;
                for (std::size_t j = 0; j < dim; ++j) dot += embed[a][j] * embed[b][j];
                scored.emplace_back(dot / (norms[a] * norms[b]), words[b]);
            }
        }
        std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        std::vector<int> cands;
        for (std::size_t i = 0; i < scored.size() && cands.size() < k; ++i)
            cands.push_back(scored[i].second);
        table.set(words[a], std::move(cands));
    }
    return table;
}

std::string synonym_table_to_text(const SynonymTable& table,
                                  const Vocabulary& vocab) {
    std::string out;
    for (int id : table.word_ids()) {
        out += vocab.word(id);
        out.push_back('\t');
        const auto& cands = table.candidates(id);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (i) out.push_back(',');
            out += vocab.word(cands[i]);
        }
        out.push_back('\n');
    }
    return out;
}

SynonymTable synonym_table_from_text(const std::string& text,
                                     const Vocabulary& vocab,
                                     const std::string& origin) {
    SynonymTable table;
    const std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = origin + ":" + std::to_string(i + 1);
        const std::vector<std::string> parts = split_on(lines[i], '\t');
        if (parts.size() != 2)
            throw ConfigError(where + ": expected `word<TAB>candidates`");
        if (!vocab.contains(parts[0]))
            throw ConfigError(where + ": unknown word '" + parts[0] + "'");
        const int word_id = vocab.id(parts[0]);
        std::vector<int> cands;
        if (!parts[1].empty()) {
            for (const auto& cand : split_on(parts[1], ',')) {
                if (cand.empty())
                    throw ConfigError(where + ": empty candidate");
                if (!vocab.contains(cand))
                    throw ConfigError(where + ": unknown candidate '" + cand + "'");
                cands.push_back(vocab.id(cand));
            }
        }
        table.set(word_id, std::move(cands));
    }
    return table;
}

void save_synonym_table(const std::string& path, const SynonymTable& table,
                        const Vocabulary& vocab) {
    write_text_file(path, synonym_table_to_text(table, vocab));
}

SynonymTable load_synonym_table(const std::string& path,
                                const Vocabulary& vocab) {
    return synonym_table_from_text(read_text_file(path), vocab, path);
}

}  // namespace tad
