#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tor/case_model.hpp"
#include "tor/errors.hpp"

namespace tor {

struct CorpusDoc {
    std::string id;
    std::string title;
    std::string body;

    bool operator==(const CorpusDoc& other) const = default;
};

struct Corpus {
    std::vector<CorpusDoc> docs;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Inverted index with Okapi BM25 scoring state. Immutable after build.
struct Index {
    Bm25Params params;
    std::vector<CorpusDoc> docs;
    std::vector<int> doc_lengths;
    double avg_doc_length = 0.0;
    // term -> (doc ordinal, term frequency), ordinals ascending
    std::map<std::string, std::vector<std::pair<int, int>>> postings;
};

struct RetrievedDoc {
    std::string doc_id;
    std::string title;
    double score = 0.0;
    std::string snippet;
};

/// Load a JSONL corpus, one {"id","title","body"} object per line.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

/// Build the index. Throws EmptyCorpus when there are no documents or no
/// tokens at all, SchemaError on duplicate document ids.
Index index_corpus(const Corpus& corpus, Bm25Params params = {});

/// Okapi BM25 with the +1-smoothed IDF: ln((N - df + 0.5)/(df + 0.5) + 1).
/// Query tokens contribute per occurrence; unseen terms contribute zero.
double bm25_score(const Index& index, const std::string& query, size_t ordinal);

/// Score every document, order by (score desc, doc_id asc), return the first
/// min(k, N). Snippets are body prefixes cut at `snippet_token_budget` tokens.
std::vector<RetrievedDoc> retrieve_top_k(const Index& index, const std::string& query,
                                         int k, int snippet_token_budget = 512);

/// Deterministic query text for a role: concatenated free-text sections (the
/// outpatient query leads with chief complaints and present illness; age and
/// sex are skipped), truncated to `token_budget` tokens. Empty sections give
/// an empty query, which callers treat as "skip retrieval".
std::string build_query(const RoleInput& input, int token_budget = 256);

/// Versioned JSON serialization, magic header "TORIDX1".
std::string index_to_json_text(const Index& index);
void save_index(const Index& index, const std::string& path);
Index load_index(const std::string& path);

}  // namespace tor
