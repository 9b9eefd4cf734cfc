#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "support/bm25_oracle.hpp"
#include "tor/retrieval.hpp"
#include "tor/rng.hpp"
#include "tor/strings.hpp"

using namespace tor;
using namespace tor::testsupport;

namespace {

Corpus two_doc_corpus() {
    Corpus c;
    c.docs.push_back({"d0", "first", "x"});
    c.docs.push_back({"d1", "second", "y"});
    return c;
}

}  // namespace

TEST_CASE("single-term score on the two-document corpus equals ln 2") {
    Index idx = index_corpus(two_doc_corpus());
    // N=2, df=1, tf=1, dl=avgdl=1: idf = ln((2-1+0.5)/(1+0.5)+1) = ln 2 and the
    // tf factor reduces to exactly 1.
    CHECK(bm25_score(idx, "x", 0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(std::abs(bm25_score(idx, "x", 0) - std::log(2.0)) < 1e-9);
    CHECK(bm25_score(idx, "x", 1) == 0.0);
    CHECK(bm25_score(idx, "absent", 0) == 0.0);
}

TEST_CASE("default parameters are k1=1.2 b=0.75") {
    Index idx = index_corpus(two_doc_corpus());
    CHECK(idx.params.k1 == 1.2);
    CHECK(idx.params.b == 0.75);
}

TEST_CASE("scores match an independent reference implementation") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        Corpus corpus = gen_corpus(rng, 2 + static_cast<int>(rng.below(19)));
        Index idx = index_corpus(corpus);
        for (int q = 0; q < 5; ++q) {
            std::string query = gen_query(rng);
            for (size_t d = 0; d < corpus.docs.size(); ++d) {
                double expected = oracle_bm25(corpus, query, d, 1.2, 0.75);
                INFO("query " << query << " doc " << d);
                CHECK(bm25_score(idx, query, d) == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("top-k agrees with the exhaustive oracle in membership and order") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        Corpus corpus = gen_corpus(rng, 3 + static_cast<int>(rng.below(18)));
        Index idx = index_corpus(corpus);
        for (int q = 0; q < 5; ++q) {
            std::string query = gen_query(rng);
            int k = 1 + static_cast<int>(rng.below(5));
            auto got = retrieve_top_k(idx, query, k);
            auto expected = oracle_top_k(corpus, query, k, 1.2, 0.75);
            REQUIRE(got.size() == expected.size());
            for (size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].doc_id == expected[i].doc_id);
                CHECK(got[i].score == doctest::Approx(expected[i].score).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("k larger than the corpus returns every document") {
    Corpus corpus = two_doc_corpus();
    Index idx = index_corpus(corpus);
    CHECK(retrieve_top_k(idx, "x", 10).size() == 2);
    CHECK(retrieve_top_k(idx, "x", 0).empty());
    CHECK_THROWS_AS((void)retrieve_top_k(idx, "x", -1), InvalidConfig);
}

TEST_CASE("documents never matching the query still fill the result list") {
    Corpus corpus;
    corpus.docs.push_back({"b", "t", "alpha"});
    corpus.docs.push_back({"a", "t", "beta"});
    corpus.docs.push_back({"c", "t", "gamma"});
    Index idx = index_corpus(corpus);
    auto hits = retrieve_top_k(idx, "delta", 2);
    REQUIRE(hits.size() == 2);
    // all zero scores: ordered by doc id
    CHECK(hits[0].doc_id == "a");
    CHECK(hits[1].doc_id == "b");
    CHECK(hits[0].score == 0.0);
}

TEST_CASE("repeated term occurrences raise the score at fixed length and df") {
    Corpus base;
    base.docs.push_back({"d0", "", "q pad pad"});
    base.docs.push_back({"d1", "", "q other words"});
    Corpus more = base;
    more.docs[0].body = "q q pad";

    double low = bm25_score(index_corpus(base), "q", 0);
    double high = bm25_score(index_corpus(more), "q", 0);
    CHECK(high > low);
}

TEST_CASE("idf never increases as document frequency grows") {
    // doc-0 stays fixed; more of the remaining docs contain the query term.
    double previous = 1e300;
    for (int df_extra = 0; df_extra <= 4; ++df_extra) {
        Corpus corpus;
        corpus.docs.push_back({"d0", "", "q pad pad"});
        for (int i = 0; i < 4; ++i) {
            std::string body = (i < df_extra) ? "q fill fill" : "none fill fill";
            corpus.docs.push_back({"d" + std::to_string(i + 1), "", body});
        }
        double s = bm25_score(index_corpus(corpus), "q", 0);
        CHECK(s <= previous);
        previous = s;
    }
}

TEST_CASE("query token order does not change scores") {
    Rng rng(31);
    Corpus corpus = gen_corpus(rng, 8);
    Index idx = index_corpus(corpus);
    for (size_t d = 0; d < corpus.docs.size(); ++d)
        CHECK(bm25_score(idx, "term1 term2 term3", d) ==
              bm25_score(idx, "term3 term1 term2", d));
}

TEST_CASE("re-indexing the same corpus yields an identical index") {
    Rng rng(55);
    Corpus corpus = gen_corpus(rng, 15);
    CHECK(index_to_json_text(index_corpus(corpus)) ==
          index_to_json_text(index_corpus(corpus)));
}

TEST_CASE("index file round trip with magic header") {
    Rng rng(56);
    Corpus corpus = gen_corpus(rng, 10);
    Index idx = index_corpus(corpus);
    std::string path = "/tmp/tor_test_index.json";
    save_index(idx, path);

    Index back = load_index(path);
    CHECK(index_to_json_text(back) == index_to_json_text(idx));
    CHECK(index_to_json_text(idx).find("TORIDX1") != std::string::npos);
    std::remove(path.c_str());

    std::ofstream bad(path);
    bad << R"({"magic":"WRONG","k1":1.2})";
    bad.close();
    CHECK_THROWS_AS((void)load_index(path), IoError);
    std::remove(path.c_str());
}

TEST_CASE("empty corpora are rejected") {
    CHECK_THROWS_AS((void)index_corpus(Corpus{}), EmptyCorpus);
    Corpus blank;
    blank.docs.push_back({"d0", "", "   "});
    CHECK_THROWS_AS((void)index_corpus(blank), EmptyCorpus);

    Corpus dup;
    dup.docs.push_back({"d0", "", "a"});
    dup.docs.push_back({"d0", "", "b"});
    CHECK_THROWS_AS((void)index_corpus(dup), SchemaError);
}

TEST_CASE("corpus jsonl round trip and error reporting") {
    Rng rng(57);
    Corpus corpus = gen_corpus(rng, 6);
    std::string path = "/tmp/tor_test_corpus.jsonl";
    save_corpus(corpus, path);
    Corpus back = load_corpus(path);
    CHECK(back.docs == corpus.docs);
    std::remove(path.c_str());

    std::ofstream bad(path);
    bad << R"({"id":"a","title":"t","body":"x"})" << "\n";
    bad << "not json" << "\n";
    bad.close();
    try {
        (void)load_corpus(path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.record_index == 1);
    }
    std::remove(path.c_str());
}

TEST_CASE("snippets are token-budgeted prefixes of the body") {
    Corpus corpus;
    std::string body;
    for (int i = 0; i < 700; ++i) body += "w" + std::to_string(i) + " ";
    corpus.docs.push_back({"d0", "t", body});
    corpus.docs.push_back({"d1", "t", "w1 w2"});
    Index idx = index_corpus(corpus);

    auto hits = retrieve_top_k(idx, "w1", 2, 512);
    for (const auto& hit : hits) {
        CHECK(tokenize(hit.snippet).size() <= 512);
        const std::string& full =
            hit.doc_id == "d0" ? corpus.docs[0].body : corpus.docs[1].body;
        CHECK(full.compare(0, hit.snippet.size(), hit.snippet) == 0);
    }
    auto tight = retrieve_top_k(idx, "w1", 1, 5);
    CHECK(tokenize(tight[0].snippet).size() <= 5);
}

TEST_CASE("build_query leads with complaints, respects the budget, skips age and sex") {
    RoleInput input;
    input.role = AgentRole::Outpatient;
    input.sections = {{"age", "63"},
                      {"sex", "female"},
                      {"chief_complaints", "neck swelling"},
                      {"present_illness", "slowly enlarging mass"},
                      {"physical_examination", "firm nodule"}};
    std::string q = build_query(input);
    CHECK(starts_with(q, "neck swelling"));
    CHECK(q.find("slowly enlarging mass") != std::string::npos);
    CHECK(q.find("female") == std::string::npos);
    CHECK(q.find("63") == std::string::npos);
    CHECK(q == build_query(input));

    RoleInput lab;
    lab.role = AgentRole::Laboratory;
    lab.sections = {{"lab_results", ""}};
    CHECK(build_query(lab).empty());

    RoleInput big;
    big.role = AgentRole::Laboratory;
    std::string long_text;
    for (int i = 0; i < 600; ++i) long_text += "tok" + std::to_string(i) + " ";
    big.sections = {{"lab_results", long_text}};
    CHECK(tokenize(build_query(big)).size() <= 256);
    CHECK(tokenize(build_query(big, 10)).size() <= 10);
}
