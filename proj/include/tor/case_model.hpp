#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tor/errors.hpp"
#include "tor/roles.hpp"

namespace tor {

enum class Sex { Male, Female };

std::string sex_name(Sex sex);  // "male" / "female"
std::optional<Sex> parse_sex(const std::string& text);

/// One patient record. Empty modality text means the examination was not
/// performed. gold_labels is the reference diagnosis set (at least one).
struct CaseRecord {
    std::string case_id;
    int age = 0;
    Sex sex = Sex::Male;
    std::string chief_complaints;
    std::string present_illness;
    std::string physical_examination;
    std::string lab_results;
    std::string imaging_results;
    std::string pathology_results;
    std::string department;
    std::vector<std::string> gold_labels;

    bool operator==(const CaseRecord& other) const = default;
};

/// The data sections one specialist is allowed to see: (field name, text).
struct RoleInput {
    AgentRole role = AgentRole::Outpatient;
    std::vector<std::pair<std::string, std::string>> sections;
};

struct OptionItem {
    std::string letter;
    std::string label;
    bool is_gold = false;
};

/// Lettered diagnosis options shown to the moderator.
struct DiagnosisOptions {
    std::vector<OptionItem> items;

    std::vector<std::string> letters() const;
    std::vector<std::string> gold_letters() const;
    std::string render() const;  // "A. label\nB. label\n..."
};

/// department -> candidate disease labels
using LabelPool = std::map<std::string, std::vector<std::string>>;

/// Load a JSON array of case records. Throws SchemaError naming the record
/// index and field of the first violation, IoError on unreadable files.
std::vector<CaseRecord> load_cases(const std::string& path);
std::string cases_to_json_text(const std::vector<CaseRecord>& cases);
void save_cases(const std::vector<CaseRecord>& cases, const std::string& path);

/// Load a JSON object mapping department names to label arrays.
LabelPool load_label_pool(const std::string& path);
void save_label_pool(const LabelPool& pool, const std::string& path);

/// Spreadsheet-style letter for a zero-based index: A..Z, AA, AB, ...
std::string option_letter(size_t index);

/// Partition the case's data sections for one active role. Sections owned by
/// inactive specialists are appended to the Outpatient agent, which must
/// always be active. Throws InvalidConfig when `role` is not active.
RoleInput slice_for_role(const CaseRecord& record, AgentRole role,
                         const std::vector<AgentRole>& active_roles);

/// Gold labels plus seeded same-department distractors, shuffled, lettered.
/// distractor_count: nullopt means max(3, |gold_labels|). Throws PoolTooSmall.
DiagnosisOptions build_options(const CaseRecord& record, const LabelPool& pool,
                               std::optional<int> distractor_count,
                               std::uint64_t seed);

/// Age band of the synthetic generator, weight is the target share of cases.
struct AgeBand {
    int lo;
    int hi;
    double weight;
};

const std::vector<AgeBand>& generator_age_bands();

/// Built-in department catalog used by generate_cases.
LabelPool builtin_label_pool();

/// Deterministic synthetic cases: same (count, seed) gives identical records.
std::vector<CaseRecord> generate_cases(int count, std::uint64_t seed);

}  // namespace tor
