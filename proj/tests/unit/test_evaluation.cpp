#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "tor/evaluation.hpp"
#include "tor/io.hpp"
#include "tor/rng.hpp"

using namespace tor;

namespace {

// Confusion counts recomputed by scanning every letter of the union, kept
// deliberately different in shape from the set-based production code.
struct BruteCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

BruteCounts brute_confusion(const std::vector<std::string>& selected,
                            const std::vector<std::string>& gold) {
    std::set<std::string> sel(selected.begin(), selected.end());
    std::set<std::string> gld(gold.begin(), gold.end());
    std::set<std::string> all;
    all.insert(sel.begin(), sel.end());
    all.insert(gld.begin(), gld.end());
    BruteCounts counts;
    for (const std::string& letter : all) {
        bool in_sel = sel.count(letter) > 0;
        bool in_gold = gld.count(letter) > 0;
        if (in_sel && in_gold) ++counts.tp;
        if (in_sel && !in_gold) ++counts.fp;
        if (!in_sel && in_gold) ++counts.fn;
    }
    return counts;
}

std::string temp_csv(const std::string& name, const std::string& content) {
    std::filesystem::path path = std::filesystem::temp_directory_path() / name;
    write_text_file(path.string(), content);
    return path.string();
}

}  // namespace

TEST_CASE("percent metrics handle empty denominators") {
    CHECK(precision_pct(0, 0) == 0.0);
    CHECK(recall_pct(0, 0) == 0.0);
    CHECK(f1_pct(0.0, 0.0) == 0.0);
    CHECK(precision_pct(1, 0) == 100.0);
    CHECK(recall_pct(1, 0) == 100.0);
    CHECK(precision_pct(1, 1) == doctest::Approx(50.0));
    CHECK(recall_pct(1, 3) == doctest::Approx(25.0));
    CHECK(f1_pct(50.0, 25.0) == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("case scores count letter hits and misses") {
    CaseScore score = score_case({"A", "C"}, {"A", "B"}, "case-1");
    CHECK(score.case_id == "case-1");
    CHECK(score.tp == 1);
    CHECK(score.fp == 1);
    CHECK(score.fn == 1);
    CHECK(score.precision == doctest::Approx(50.0));
    CHECK(score.recall == doctest::Approx(50.0));
    CHECK(score.f1 == doctest::Approx(50.0));

    CaseScore perfect = score_case({"B", "D"}, {"D", "B"});
    CHECK(perfect.tp == 2);
    CHECK(perfect.fp == 0);
    CHECK(perfect.fn == 0);
    CHECK(perfect.f1 == doctest::Approx(100.0));

    CaseScore nothing = score_case({}, {"A"});
    CHECK(nothing.precision == 0.0);
    CHECK(nothing.recall == 0.0);
    CHECK(nothing.f1 == 0.0);
}

TEST_CASE("duplicated letters do not inflate the counts") {
    CaseScore score = score_case({"A", "A", "B", "B"}, {"A", "A"});
    CHECK(score.tp == 1);
    CHECK(score.fp == 1);
    CHECK(score.fn == 0);
}

TEST_CASE("random selections agree with a brute-force confusion scan") {
    Rng rng(20240817);
    std::vector<std::string> alphabet = {"A", "B", "C", "D", "E", "F", "G", "H"};
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::string> selected;
        std::vector<std::string> gold;
        for (const std::string& letter : alphabet) {
            if (rng.next() % 3 == 0) selected.push_back(letter);
            if (rng.next() % 3 == 0) gold.push_back(letter);
            if (rng.next() % 7 == 0) selected.push_back(letter);
        }
        CaseScore score = score_case(selected, gold);
        BruteCounts brute = brute_confusion(selected, gold);
        REQUIRE(score.tp == brute.tp);
        REQUIRE(score.fp == brute.fp);
        REQUIRE(score.fn == brute.fn);
        double p = brute.tp + brute.fp == 0
                       ? 0.0
                       : 100.0 * brute.tp / (brute.tp + brute.fp);
        double r = brute.tp + brute.fn == 0
                       ? 0.0
                       : 100.0 * brute.tp / (brute.tp + brute.fn);
        REQUIRE(score.precision == doctest::Approx(p));
        REQUIRE(score.recall == doctest::Approx(r));
        double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        REQUIRE(score.f1 == doctest::Approx(f));
    }
}

TEST_CASE("aggregation separates summed and averaged metrics") {
    std::vector<CaseScore> scores = {
        score_case({"A"}, {"A"}, "c1"),            // P=100 R=100
        score_case({"A", "B"}, {"A", "C"}, "c2"),  // tp1 fp1 fn1, P=50 R=50
        score_case({}, {"A"}, "c3"),               // tp0 fp0 fn1, P=0 R=0
    };
    AggregateReport report = aggregate(scores);
    CHECK(report.cases == 3);
    CHECK(report.tp == 2);
    CHECK(report.fp == 1);
    CHECK(report.fn == 2);
    CHECK(report.micro_precision == doctest::Approx(100.0 * 2 / 3));
    CHECK(report.micro_recall == doctest::Approx(50.0));
    double mp = 100.0 * 2 / 3;
    CHECK(report.micro_f1 == doctest::Approx(2 * mp * 50.0 / (mp + 50.0)));
    CHECK(report.macro_precision == doctest::Approx((100.0 + 50.0 + 0.0) / 3));
    CHECK(report.macro_recall == doctest::Approx(50.0));
    CHECK(report.macro_f1 == doctest::Approx((100.0 + 50.0 + 0.0) / 3));
    CHECK(report.per_case.size() == 3);
    CHECK_FALSE(report.human.has_value());
}

TEST_CASE("aggregating nothing is an error") {
    CHECK_THROWS_AS(aggregate({}), EmptyBatch);
}

TEST_CASE("micro counters are additive across batches") {
    Rng rng(7);
    std::vector<CaseScore> first;
    std::vector<CaseScore> second;
    std::vector<std::string> alphabet = {"A", "B", "C", "D"};
    auto random_scores = [&](int n, std::vector<CaseScore>& out) {
        for (int i = 0; i < n; ++i) {
            std::vector<std::string> selected;
            std::vector<std::string> gold;
            for (const std::string& letter : alphabet) {
                if (rng.next() % 2 == 0) selected.push_back(letter);
                if (rng.next() % 2 == 0) gold.push_back(letter);
            }
            if (gold.empty()) gold.push_back("A");
            out.push_back(score_case(selected, gold));
        }
    };
    random_scores(17, first);
    random_scores(23, second);

    std::vector<CaseScore> combined = first;
    combined.insert(combined.end(), second.begin(), second.end());
    AggregateReport a = aggregate(first);
    AggregateReport b = aggregate(second);
    AggregateReport all = aggregate(combined);
    CHECK(all.tp == a.tp + b.tp);
    CHECK(all.fp == a.fp + b.fp);
    CHECK(all.fn == a.fn + b.fn);
}

TEST_CASE("published precision and recall pairs reproduce their F1 scores") {
    struct Row {
        double p;
        double r;
        double f1;
    };
    std::vector<Row> rows = {
        {88.89, 29.58, 44.39}, {87.63, 27.61, 42.00}, {88.21, 30.02, 44.80},
        {89.01, 31.59, 46.63}, {87.96, 30.70, 45.51}, {90.32, 34.04, 49.45},
        {79.23, 28.13, 41.52}, {69.23, 25.62, 37.40}, {92.08, 33.52, 49.15},
        {86.00, 32.31, 46.97}, {94.23, 35.68, 51.76}, {95.70, 46.60, 62.68},
    };
    for (const Row& row : rows) {
        CHECK(std::abs(f1_pct(row.p, row.r) - row.f1) <= 0.01);
    }
}

TEST_CASE("human score sheets average per column") {
    std::string path = temp_csv("tor_human_ok.csv",
                                "case_id,relevance,completeness\n"
                                "case-1,4.5,4.0\n"
                                "case-2,3.5,5.0\n"
                                "\n"
                                "case-3,4.0,4.5\n");
    HumanScores scores = load_human_scores_csv(path);
    CHECK(scores.count == 3);
    CHECK(scores.relevance == doctest::Approx(4.0));
    CHECK(scores.completeness == doctest::Approx(4.5));
}

TEST_CASE("human score sheets are validated") {
    SUBCASE("wrong header") {
        std::string path =
            temp_csv("tor_human_header.csv", "id,relevance,completeness\ncase-1,4,4\n");
        CHECK_THROWS_AS(load_human_scores_csv(path), SchemaError);
    }
    SUBCASE("wrong field count") {
        std::string path = temp_csv("tor_human_fields.csv",
                                    "case_id,relevance,completeness\ncase-1,4\n");
        CHECK_THROWS_AS(load_human_scores_csv(path), SchemaError);
    }
    SUBCASE("non-numeric score") {
        std::string path = temp_csv(
            "tor_human_nan.csv", "case_id,relevance,completeness\ncase-1,high,4\n");
        CHECK_THROWS_AS(load_human_scores_csv(path), SchemaError);
    }
    SUBCASE("no data rows") {
        std::string path =
            temp_csv("tor_human_empty.csv", "case_id,relevance,completeness\n");
        CHECK_THROWS_AS(load_human_scores_csv(path), SchemaError);
    }
}

TEST_CASE("reports serialize to json with rounded percentages") {
    std::vector<CaseScore> scores = {score_case({"A"}, {"A", "B"}, "c1")};
    AggregateReport report = aggregate(scores);
    report.human = HumanScores{2, 4.25, 4.75};

    nlohmann::json j = nlohmann::json::parse(report_to_json_text(report));
    CHECK(j["cases"] == 1);
    CHECK(j["micro"]["tp"] == 1);
    CHECK(j["micro"]["fn"] == 1);
    CHECK(j["micro"]["precision"] == doctest::Approx(100.0));
    CHECK(j["micro"]["recall"] == doctest::Approx(50.0));
    CHECK(j["micro"]["f1"] == doctest::Approx(66.67));
    CHECK(j["macro"]["f1"] == doctest::Approx(66.67));
    CHECK(j["human"]["count"] == 2);
    CHECK(j["human"]["relevance"] == doctest::Approx(4.2).epsilon(0.05));
    REQUIRE(j["per_case"].size() == 1);
    CHECK(j["per_case"][0]["case_id"] == "c1");

    report.human.reset();
    nlohmann::json plain = nlohmann::json::parse(report_to_json_text(report));
    CHECK(plain["human"].is_null());
}

TEST_CASE("the table layout names its metric columns") {
    std::vector<CaseScore> scores = {
        score_case({"A"}, {"A"}, "c1"),
        score_case({"B"}, {"A"}, "c2"),
    };
    AggregateReport report = aggregate(scores);
    std::string table = report_to_table(report);
    CHECK(table.find("P.(%)") != std::string::npos);
    CHECK(table.find("R.(%)") != std::string::npos);
    CHECK(table.find("F1(%)") != std::string::npos);
    CHECK(table.find("Micro") != std::string::npos);
    CHECK(table.find("Macro") != std::string::npos);
    CHECK(table.find("50.00") != std::string::npos);
    CHECK(table.find("Cases: 2") != std::string::npos);
    CHECK(table.find("Human scores") == std::string::npos);

    report.human = HumanScores{3, 4.0, 4.5};
    std::string with_human = report_to_table(report);
    CHECK(with_human.find("Human scores (n=3): relevance 4.0, completeness 4.5") !=
          std::string::npos);
}
