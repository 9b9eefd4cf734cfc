#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tor/errors.hpp"

namespace tor {

/// Letter-set confusion counts and percentage metrics for one case.
struct CaseScore {
    std::string case_id;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 0.0;  // percent
    double recall = 0.0;     // percent
    double f1 = 0.0;         // percent
};

double precision_pct(int tp, int fp);
double recall_pct(int tp, int fn);
/// Harmonic mean of two percentages; 0 when both are 0.
double f1_pct(double precision, double recall);

CaseScore score_case(const std::vector<std::string>& selected,
                     const std::vector<std::string>& gold,
                     const std::string& case_id = "");

struct HumanScores {
    int count = 0;
    double relevance = 0.0;
    double completeness = 0.0;
};

struct AggregateReport {
    int cases = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<CaseScore> per_case;
    std::optional<HumanScores> human;
};

/// Micro metrics from summed counts, macro from per-case means.
/// Throws EmptyBatch when `scores` is empty.
AggregateReport aggregate(const std::vector<CaseScore>& scores);

/// CSV with a "case_id,relevance,completeness" header row.
HumanScores load_human_scores_csv(const std::string& path);

std::string report_to_json_text(const AggregateReport& report);
std::string report_to_table(const AggregateReport& report);

}  // namespace tor
