#include "tor/evidence_tree.hpp"

#include <cctype>
#include <map>
#include <set>

#include "json.hpp"
#include "tor/strings.hpp"

namespace tor {

namespace {

enum class LineKind { Label, Analysis, Evidence };

struct ClassifiedLine {
    int number = 0;  // 1-based position in the raw input
    LineKind kind = LineKind::Label;
    std::string content;  // label text, or payload after the Analysis/Evidence prefix
};

bool is_blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

// ".N content" level markers, as emitted by dirtree-style listings. The
// marker convention also appends a trailing period to the content.
bool strip_level_marker(std::string& s) {
    size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i + 1 >= s.size() || s[i] != '.') return false;
    if (!std::isdigit(static_cast<unsigned char>(s[i + 1]))) return false;
    size_t j = i + 1;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) return false;
    s = s.substr(j);
    return true;
}

void strip_bullet(std::string& s) {
    std::string t = trim(s);
    for (const char* bullet : {"- ", "* ", "+ ", "\xE2\x80\xA2 "}) {
        if (starts_with(t, bullet)) {
            s = t.substr(std::string(bullet).size());
            return;
        }
    }
    s = t;
}

// Case-insensitive "analysis" followed by optional spaces and a colon.
bool match_analysis(const std::string& s, std::string& payload) {
    static const std::string kw = "analysis";
    if (to_lower(s.substr(0, kw.size())) != kw) return false;
    size_t i = kw.size();
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || s[i] != ':') return false;
    payload = s.substr(i + 1);
    return true;
}

// Case-insensitive "evidence", optional number, then ':' or '.'.
bool match_evidence(const std::string& s, std::string& payload) {
    static const std::string kw = "evidence";
    if (to_lower(s.substr(0, kw.size())) != kw) return false;
    size_t i = kw.size();
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || (s[i] != ':' && s[i] != '.')) return false;
    payload = s.substr(i + 1);
    return true;
}

std::vector<ClassifiedLine> classify_lines(const std::string& text) {
    std::vector<ClassifiedLine> out;
    int number = 0;
    for (std::string raw : split(text, '\n')) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (is_blank(raw)) continue;
        if (starts_with(trim(raw), "```")) continue;

        std::string s = raw;
        bool marker = strip_level_marker(s);
        strip_bullet(s);
        s = trim(s);
        if (marker && !s.empty() && s.back() == '.') s.pop_back();
        if (is_blank(s)) continue;

        ClassifiedLine line;
        line.number = number;
        std::string payload;
        if (match_analysis(s, payload)) {
            line.kind = LineKind::Analysis;
            line.content = collapse_whitespace(payload);
        } else if (match_evidence(s, payload)) {
            line.kind = LineKind::Evidence;
            line.content = collapse_whitespace(payload);
        } else {
            line.kind = LineKind::Label;
            line.content = collapse_whitespace(s);
        }
        out.push_back(line);
    }
    return out;
}

[[noreturn]] void malformed(int line, const std::string& why) {
    throw TreeParseError(TreeParseError::Kind::MalformedEntry, line,
                         "line " + std::to_string(line) + ": " + why);
}

}  // namespace

std::string normalize_label(const std::string& label) {
    std::string s = collapse_whitespace(to_lower(label));
    while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) s.pop_back();
    return trim(s);
}

EvidenceTree parse_tree(const std::string& text) {
    std::vector<ClassifiedLine> lines = classify_lines(text);
    if (lines.empty())
        throw TreeParseError(TreeParseError::Kind::NoTitle, 0, "input has no content lines");

    size_t first_analysis = lines.size();
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].kind == LineKind::Analysis) {
            first_analysis = i;
            break;
        }
    }
    if (first_analysis == lines.size())
        throw TreeParseError(TreeParseError::Kind::NoDiagnoses, 0,
                             "input contains no diagnosis entries");
    if (first_analysis == 0)
        malformed(lines[0].number, "analysis without a preceding disease label");
    if (lines[first_analysis - 1].kind != LineKind::Label)
        malformed(lines[first_analysis - 1].number,
                  "expected a disease label before the first analysis");
    if (first_analysis < 2 || lines[first_analysis - 2].kind != LineKind::Label)
        throw TreeParseError(TreeParseError::Kind::NoTitle,
                             lines[first_analysis - 1].number,
                             "no title line before the first disease label");

    EvidenceTree tree;
    tree.title = lines[first_analysis - 2].content;  // earlier lines are prose

    std::set<std::string> seen_labels;
    DiagnosisEntry current;
    current.disease = lines[first_analysis - 1].content;
    seen_labels.insert(normalize_label(current.disease));

    auto close_current = [&](int at_line) {
        if (current.analysis.empty()) malformed(at_line, "entry has no analysis");
        if (current.evidence.empty()) malformed(at_line, "entry has no evidence");
        tree.entries.push_back(current);
        current = DiagnosisEntry{};
    };

    for (size_t i = first_analysis; i < lines.size(); ++i) {
        const ClassifiedLine& line = lines[i];
        switch (line.kind) {
            case LineKind::Analysis:
                if (!current.analysis.empty())
                    malformed(line.number, "second analysis without a new disease label");
                if (line.content.empty()) malformed(line.number, "empty analysis text");
                current.analysis = line.content;
                break;
            case LineKind::Evidence:
                if (current.analysis.empty())
                    malformed(line.number, "evidence before the entry's analysis");
                if (line.content.empty()) malformed(line.number, "empty evidence text");
                current.evidence.push_back(
                    {static_cast<int>(current.evidence.size()) + 1, line.content});
                break;
            case LineKind::Label: {
                close_current(line.number);
                std::string norm = normalize_label(line.content);
                if (norm.empty()) malformed(line.number, "empty disease label");
                if (!seen_labels.insert(norm).second)
                    malformed(line.number, "duplicate disease label '" + norm + "'");
                current.disease = line.content;
                break;
            }
        }
    }
    close_current(lines.back().number);
    return tree;
}

std::vector<std::string> validate_tree(const EvidenceTree& tree) {
    std::vector<std::string> violations;
    if (collapse_whitespace(tree.title).empty()) violations.push_back("empty title");
    if (tree.entries.empty()) violations.push_back("no diagnosis entries");

    std::set<std::string> seen;
    for (size_t i = 0; i < tree.entries.size(); ++i) {
        const DiagnosisEntry& entry = tree.entries[i];
        std::string where = "entry " + std::to_string(i + 1);
        std::string norm = normalize_label(entry.disease);
        if (norm.empty())
            violations.push_back(where + ": empty disease label");
        else if (!seen.insert(norm).second)
            violations.push_back(where + ": duplicate disease label '" + norm + "'");
        if (collapse_whitespace(entry.analysis).empty())
            violations.push_back(where + ": empty analysis");
        if (entry.evidence.empty()) violations.push_back(where + ": no evidence items");
        bool contiguous = true;
        for (size_t j = 0; j < entry.evidence.size(); ++j) {
            if (collapse_whitespace(entry.evidence[j].text).empty())
                violations.push_back(where + ": empty evidence text at position " +
                                     std::to_string(j + 1));
            if (entry.evidence[j].index != static_cast<int>(j) + 1) contiguous = false;
        }
        if (!contiguous)
            violations.push_back(where + ": evidence indices not contiguous from 1");
    }
    return violations;
}

std::string render_tree(const EvidenceTree& tree) {
    std::vector<std::string> violations = validate_tree(tree);
    if (!violations.empty()) throw TreeValidationError(violations);

    std::string out;
    out += collapse_whitespace(tree.title) + "\n";
    for (const DiagnosisEntry& entry : tree.entries) {
        out += "    " + collapse_whitespace(entry.disease) + "\n";
        out += "        Analysis: " + collapse_whitespace(entry.analysis) + "\n";
        for (size_t j = 0; j < entry.evidence.size(); ++j) {
            out += "            Evidence " + std::to_string(j + 1) + ": " +
                   collapse_whitespace(entry.evidence[j].text) + "\n";
        }
    }
    return out;
}

EvidenceTree merge_trees(const std::vector<EvidenceTree>& trees,
                         const std::string& title) {
    if (trees.empty()) throw InvalidConfig("merge requires at least one input tree");

    struct Accumulated {
        std::string disease;
        std::vector<std::string> analyses;
        std::set<std::string> seen_analyses;
        std::vector<std::string> evidence;
        std::set<std::string> seen_evidence;
    };
    std::vector<Accumulated> accs;
    std::map<std::string, size_t> position;

    for (const EvidenceTree& tree : trees) {
        std::string source = collapse_whitespace(tree.title);
        for (const DiagnosisEntry& entry : tree.entries) {
            std::string norm = normalize_label(entry.disease);
            auto it = position.find(norm);
            if (it == position.end()) {
                it = position.emplace(norm, accs.size()).first;
                accs.push_back({});
                accs.back().disease = collapse_whitespace(entry.disease);
            }
            Accumulated& acc = accs[it->second];

            std::string attributed =
                "[" + source + "] " + collapse_whitespace(entry.analysis);
            if (acc.seen_analyses.insert(attributed).second)
                acc.analyses.push_back(attributed);

            for (const EvidenceItem& ev : entry.evidence) {
                std::string key = normalize_label(ev.text);
                if (acc.seen_evidence.insert(key).second)
                    acc.evidence.push_back(collapse_whitespace(ev.text));
            }
        }
    }

    EvidenceTree out;
    out.title = title;
    for (const Accumulated& acc : accs) {
        DiagnosisEntry entry;
        entry.disease = acc.disease;
        entry.analysis = join(acc.analyses, " | ");
        for (size_t j = 0; j < acc.evidence.size(); ++j)
            entry.evidence.push_back({static_cast<int>(j) + 1, acc.evidence[j]});
        out.entries.push_back(entry);
    }
    return out;
}

ConflictSet diff_trees(const EvidenceTree& left, const EvidenceTree& right) {
    std::set<std::string> la, lb;
    for (const auto& e : left.entries) la.insert(normalize_label(e.disease));
    for (const auto& e : right.entries) lb.insert(normalize_label(e.disease));

    ConflictSet out;
    for (const auto& l : la)
        (lb.count(l) ? out.shared : out.only_in_left).push_back(l);
    for (const auto& l : lb)
        if (!la.count(l)) out.only_in_right.push_back(l);
    return out;  // std::set iteration keeps each vector sorted
}

std::string tree_to_json_text(const EvidenceTree& tree, bool pretty) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const DiagnosisEntry& entry : tree.entries) {
        nlohmann::ordered_json evidence = nlohmann::ordered_json::array();
        for (const EvidenceItem& ev : entry.evidence) evidence.push_back(ev.text);
        entries.push_back({{"disease", entry.disease},
                           {"analysis", entry.analysis},
                           {"evidence", evidence}});
    }
    nlohmann::ordered_json doc = {{"title", tree.title}, {"entries", entries}};
    return pretty ? doc.dump(2) + "\n" : doc.dump();
}

EvidenceTree tree_from_json_text(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid tree json: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("title") || !doc.contains("entries"))
        throw IoError("tree json must be an object with 'title' and 'entries'");

    EvidenceTree tree;
    try {
        tree.title = doc["title"].get<std::string>();
        for (const auto& e : doc["entries"]) {
            DiagnosisEntry entry;
            entry.disease = e.at("disease").get<std::string>();
            entry.analysis = e.at("analysis").get<std::string>();
            for (const auto& ev : e.at("evidence"))
                entry.evidence.push_back(
                    {static_cast<int>(entry.evidence.size()) + 1, ev.get<std::string>()});
            tree.entries.push_back(entry);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("invalid tree json: ") + e.what());
    }
    return tree;
}

}  // namespace tor
