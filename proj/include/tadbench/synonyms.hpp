#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tadbench/data.hpp"

namespace tad {

// Word-id -> ordered candidate substitute ids. A word never lists itself;
// candidate lists are duplicate-free.
class SynonymTable {
public:
    void set(int word_id, std::vector<int> candidates);
    const std::vector<int>& candidates(int word_id) const;
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    std::vector<int> word_ids() const;  // ascending

private:
    std::map<int, std::vector<int>> entries_;
};

// Window-based PPMI co-occurrence embedding over the corpus, factorized to
// embed_dim by seeded subspace iteration; candidates are the top-k cosine
// neighbors (self excluded, ties broken by ascending id).
SynonymTable build_synonym_table(const std::vector<std::vector<int>>& docs,
                                 std::size_t embed_dim, std::size_t k,
                                 std::size_t window = 2,
                                 std::uint64_t seed = 0x5eedULL);

// One record per line: `word<TAB>cand1,cand2,...`; words in id order.
std::string synonym_table_to_text(const SynonymTable& table,
                                  const Vocabulary& vocab);
SynonymTable synonym_table_from_text(const std::string& text,
                                     const Vocabulary& vocab,
                                     const std::string& origin = "synonyms");
void save_synonym_table(const std::string& path, const SynonymTable& table,
                        const Vocabulary& vocab);
SynonymTable load_synonym_table(const std::string& path,
                                const Vocabulary& vocab);

}  // namespace tad
