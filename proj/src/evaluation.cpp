#include "tor/evaluation.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tor/io.hpp"
#include "tor/strings.hpp"

namespace tor {

double precision_pct(int tp, int fp) {
    int denom = tp + fp;
    if (denom == 0) return 0.0;
    return 100.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double recall_pct(int tp, int fn) {
    int denom = tp + fn;
    if (denom == 0) return 0.0;
    return 100.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double f1_pct(double precision, double recall) {
    double denom = precision + recall;
    if (denom == 0.0) return 0.0;
    return 2.0 * precision * recall / denom;
}

CaseScore score_case(const std::vector<std::string>& selected,
                     const std::vector<std::string>& gold,
                     const std::string& case_id) {
    std::set<std::string> sel(selected.begin(), selected.end());
    std::set<std::string> ref(gold.begin(), gold.end());
    CaseScore score;
    score.case_id = case_id;
    for (const auto& letter : sel) {
        if (ref.count(letter)) {
            ++score.tp;
        } else {
            ++score.fp;
        }
    }
    for (const auto& letter : ref) {
        if (!sel.count(letter)) ++score.fn;
    }
    score.precision = precision_pct(score.tp, score.fp);
    score.recall = recall_pct(score.tp, score.fn);
    score.f1 = f1_pct(score.precision, score.recall);
    return score;
}

AggregateReport aggregate(const std::vector<CaseScore>& scores) {
    if (scores.empty()) throw EmptyBatch();
    AggregateReport report;
    report.cases = static_cast<int>(scores.size());
    report.per_case = scores;
    double sum_p = 0.0;
    double sum_r = 0.0;
    double sum_f = 0.0;
    for (const auto& score : scores) {
        report.tp += score.tp;
        report.fp += score.fp;
        report.fn += score.fn;
        sum_p += score.precision;
        sum_r += score.recall;
        sum_f += score.f1;
    }
    report.micro_precision = precision_pct(report.tp, report.fp);
    report.micro_recall = recall_pct(report.tp, report.fn);
    report.micro_f1 = f1_pct(report.micro_precision, report.micro_recall);
    double n = static_cast<double>(scores.size());
    report.macro_precision = sum_p / n;
    report.macro_recall = sum_r / n;
    report.macro_f1 = sum_f / n;
    return report;
}

HumanScores load_human_scores_csv(const std::string& path) {
    std::string text = read_text_file(path);
    std::vector<std::string> lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw SchemaError(0, "header", "empty human score file");
    if (trim(lines[0]) != "case_id,relevance,completeness") {
        throw SchemaError(0, "header",
                          "expected \"case_id,relevance,completeness\"");
    }
    HumanScores scores;
    double sum_rel = 0.0;
    double sum_com = 0.0;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        std::vector<std::string> fields = split(lines[i], ',');
        if (fields.size() != 3) {
            throw SchemaError(static_cast<int>(i), "row", "expected 3 fields");
        }
        try {
            size_t used = 0;
            double rel = std::stod(trim(fields[1]), &used);
            if (used != trim(fields[1]).size()) throw std::invalid_argument("trail");
            double com = std::stod(trim(fields[2]), &used);
            if (used != trim(fields[2]).size()) throw std::invalid_argument("trail");
            sum_rel += rel;
            sum_com += com;
        } catch (const std::exception&) {
            throw SchemaError(static_cast<int>(i), "score", "not a number");
        }
        ++scores.count;
    }
    if (scores.count == 0) throw SchemaError(0, "rows", "no score rows");
    scores.relevance = sum_rel / scores.count;
    scores.completeness = sum_com / scores.count;
    return scores;
}

namespace {

double round2(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return std::stod(buf);
}

std::string fmt2(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

std::string fmt1(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

}  // namespace

std::string report_to_json_text(const AggregateReport& report) {
    nlohmann::ordered_json j;
    j["cases"] = report.cases;
    nlohmann::ordered_json micro;
    micro["tp"] = report.tp;
    micro["fp"] = report.fp;
    micro["fn"] = report.fn;
    micro["precision"] = round2(report.micro_precision);
    micro["recall"] = round2(report.micro_recall);
    micro["f1"] = round2(report.micro_f1);
    j["micro"] = micro;
    nlohmann::ordered_json macro;
    macro["precision"] = round2(report.macro_precision);
    macro["recall"] = round2(report.macro_recall);
    macro["f1"] = round2(report.macro_f1);
    j["macro"] = macro;
    if (report.human) {
        nlohmann::ordered_json human;
        human["count"] = report.human->count;
        human["relevance"] = std::stod(fmt1(report.human->relevance));
        human["completeness"] = std::stod(fmt1(report.human->completeness));
        j["human"] = human;
    } else {
        j["human"] = nullptr;
    }
    nlohmann::ordered_json per_case = nlohmann::ordered_json::array();
    for (const auto& score : report.per_case) {
        nlohmann::ordered_json c;
        c["case_id"] = score.case_id;
        c["tp"] = score.tp;
        c["fp"] = score.fp;
        c["fn"] = score.fn;
        c["precision"] = round2(score.precision);
        c["recall"] = round2(score.recall);
        c["f1"] = round2(score.f1);
        per_case.push_back(c);
    }
    j["per_case"] = per_case;
    return j.dump(2) + "\n";
}

std::string report_to_table(const AggregateReport& report) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s\n", "Metric", "P.(%)",
                  "R.(%)", "F1(%)");
    out << line;
    std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s\n", "Micro",
                  fmt2(report.micro_precision).c_str(), fmt2(report.micro_recall).c_str(),
                  fmt2(report.micro_f1).c_str());
    out << line;
    std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s\n", "Macro",
                  fmt2(report.macro_precision).c_str(), fmt2(report.macro_recall).c_str(),
                  fmt2(report.macro_f1).c_str());
    out << line;
    std::snprintf(line, sizeof(line), "Cases: %d\n", report.cases);
    out << line;
    if (report.human) {
        std::snprintf(line, sizeof(line),
                      "Human scores (n=%d): relevance %s, completeness %s\n",
                      report.human->count, fmt1(report.human->relevance).c_str(),
                      fmt1(report.human->completeness).c_str());
        out << line;
    }
    return out.str();
}

}  // namespace tor
