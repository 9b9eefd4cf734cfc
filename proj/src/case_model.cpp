#include "tor/case_model.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "tor/evidence_tree.hpp"
#include "tor/io.hpp"
#include "tor/rng.hpp"
#include "tor/strings.hpp"

namespace tor {

namespace {

const std::vector<std::string>& section_order() {
    static const std::vector<std::string> names = {
        "age",         "sex",           "chief_complaints",
        "present_illness", "physical_examination", "lab_results",
        "imaging_results", "pathology_results"};
    return names;
}

AgentRole section_owner(const std::string& name) {
    if (name == "lab_results") return AgentRole::Laboratory;
    if (name == "imaging_results") return AgentRole::Radiology;
    if (name == "pathology_results") return AgentRole::Pathology;
    return AgentRole::Outpatient;
}

std::string section_text(const CaseRecord& c, const std::string& name) {
    if (name == "age") return std::to_string(c.age);
    if (name == "sex") return sex_name(c.sex);
    if (name == "chief_complaints") return c.chief_complaints;
    if (name == "present_illness") return c.present_illness;
    if (name == "physical_examination") return c.physical_examination;
    if (name == "lab_results") return c.lab_results;
    if (name == "imaging_results") return c.imaging_results;
    return c.pathology_results;
}

std::string require_string(const nlohmann::json& rec, int index, const std::string& field) {
    if (!rec.contains(field))
        throw SchemaError(index, field, "missing required field");
    if (!rec[field].is_string())
        throw SchemaError(index, field, "expected a string");
    return rec[field].get<std::string>();
}

}  // namespace

std::string sex_name(Sex sex) { return sex == Sex::Male ? "male" : "female"; }

std::optional<Sex> parse_sex(const std::string& text) {
    std::string t = to_lower(trim(text));
    if (t == "male") return Sex::Male;
    if (t == "female") return Sex::Female;
    return std::nullopt;
}

std::vector<std::string> DiagnosisOptions::letters() const {
    std::vector<std::string> out;
    for (const auto& item : items) out.push_back(item.letter);
    return out;
}

std::vector<std::string> DiagnosisOptions::gold_letters() const {
    std::vector<std::string> out;
    for (const auto& item : items)
        if (item.is_gold) out.push_back(item.letter);
    return out;
}

std::string DiagnosisOptions::render() const {
    std::string out;
    for (const auto& item : items) out += item.letter + ". " + item.label + "\n";
    return out;
}

std::string cases_to_json_text(const std::vector<CaseRecord>& cases) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const CaseRecord& c : cases) {
        nlohmann::ordered_json rec = {
            {"case_id", c.case_id},
            {"age", c.age},
            {"sex", sex_name(c.sex)},
            {"chief_complaints", c.chief_complaints},
            {"present_illness", c.present_illness},
            {"physical_examination", c.physical_examination},
            {"lab_results", c.lab_results},
            {"imaging_results", c.imaging_results},
            {"pathology_results", c.pathology_results},
            {"department", c.department},
            {"gold_labels", c.gold_labels}};
        doc.push_back(rec);
    }
    return doc.dump(2) + "\n";
}

void save_cases(const std::vector<CaseRecord>& cases, const std::string& path) {
    write_text_file(path, cases_to_json_text(cases));
}

std::vector<CaseRecord> load_cases(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(-1, "(root)", std::string("invalid json: ") + e.what());
    }
    if (!doc.is_array()) throw SchemaError(-1, "(root)", "expected a JSON array");

    std::vector<CaseRecord> cases;
    std::set<std::string> ids;
    for (int i = 0; i < static_cast<int>(doc.size()); ++i) {
        const nlohmann::json& rec = doc[static_cast<size_t>(i)];
        if (!rec.is_object()) throw SchemaError(i, "(record)", "expected an object");

        CaseRecord c;
        c.case_id = require_string(rec, i, "case_id");
        if (c.case_id.empty()) throw SchemaError(i, "case_id", "must be non-empty");
        if (!ids.insert(c.case_id).second)
            throw SchemaError(i, "case_id", "duplicate case id '" + c.case_id + "'");

        if (!rec.contains("age")) throw SchemaError(i, "age", "missing required field");
        if (!rec["age"].is_number_integer())
            throw SchemaError(i, "age", "expected an integer");
        c.age = rec["age"].get<int>();
        if (c.age < 0) throw SchemaError(i, "age", "must be >= 0");

        std::optional<Sex> sex = parse_sex(require_string(rec, i, "sex"));
        if (!sex) throw SchemaError(i, "sex", "expected 'male' or 'female'");
        c.sex = *sex;

        c.chief_complaints = require_string(rec, i, "chief_complaints");
        c.present_illness = require_string(rec, i, "present_illness");
        c.physical_examination = require_string(rec, i, "physical_examination");
        c.lab_results = require_string(rec, i, "lab_results");
        c.imaging_results = require_string(rec, i, "imaging_results");
        c.pathology_results = require_string(rec, i, "pathology_results");
        c.department = require_string(rec, i, "department");
        if (c.department.empty()) throw SchemaError(i, "department", "must be non-empty");

        if (!rec.contains("gold_labels"))
            throw SchemaError(i, "gold_labels", "missing required field");
        if (!rec["gold_labels"].is_array() || rec["gold_labels"].empty())
            throw SchemaError(i, "gold_labels", "expected a non-empty array");
        std::set<std::string> gold_norms;
        for (const auto& g : rec["gold_labels"]) {
            if (!g.is_string() || g.get<std::string>().empty())
                throw SchemaError(i, "gold_labels", "labels must be non-empty strings");
            std::string label = g.get<std::string>();
            if (!gold_norms.insert(normalize_label(label)).second)
                throw SchemaError(i, "gold_labels", "duplicate label '" + label + "'");
            c.gold_labels.push_back(label);
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

LabelPool load_label_pool(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(-1, "(root)", std::string("invalid json: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError(-1, "(root)", "expected a JSON object");

    LabelPool pool;
    for (const auto& [dept, labels] : doc.items()) {
        if (!labels.is_array() || labels.empty())
            throw SchemaError(0, dept, "expected a non-empty label array");
        std::set<std::string> norms;
        for (const auto& l : labels) {
            if (!l.is_string() || l.get<std::string>().empty())
                throw SchemaError(0, dept, "labels must be non-empty strings");
            std::string label = l.get<std::string>();
            if (!norms.insert(normalize_label(label)).second)
                throw SchemaError(0, dept, "duplicate label '" + label + "'");
            pool[dept].push_back(label);
        }
    }
    return pool;
}

void save_label_pool(const LabelPool& pool, const std::string& path) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& [dept, labels] : pool) doc[dept] = labels;
    write_text_file(path, doc.dump(2) + "\n");
}

std::string option_letter(size_t index) {
    std::string out;
    size_t n = index;
    for (;;) {
        out.insert(out.begin(), static_cast<char>('A' + n % 26));
        if (n < 26) break;
        n = n / 26 - 1;
    }
    return out;
}

RoleInput slice_for_role(const CaseRecord& record, AgentRole role,
                         const std::vector<AgentRole>& active_roles) {
    if (role == AgentRole::Moderator)
        throw InvalidConfig("the moderator has no case slice");
    std::set<AgentRole> active;
    for (AgentRole r : active_roles) {
        if (r == AgentRole::Moderator)
            throw InvalidConfig("active roles must be specialists");
        if (!active.insert(r).second)
            throw InvalidConfig("duplicate role in active set");
    }
    if (!active.count(AgentRole::Outpatient))
        throw InvalidConfig("the outpatient role must always be active");
    if (!active.count(role))
        throw InvalidConfig("role '" + role_id(role) + "' is not active");

    RoleInput input;
    input.role = role;
    for (const std::string& name : section_order()) {
        AgentRole owner = section_owner(name);
        if (!active.count(owner)) owner = AgentRole::Outpatient;
        if (owner == role) input.sections.emplace_back(name, section_text(record, name));
    }
    return input;
}

DiagnosisOptions build_options(const CaseRecord& record, const LabelPool& pool,
                               std::optional<int> distractor_count,
                               std::uint64_t seed) {
    int needed = distractor_count.value_or(
        std::max<int>(3, static_cast<int>(record.gold_labels.size())));
    if (needed < 0) throw InvalidConfig("distractor count must be >= 0");

    std::set<std::string> gold_norms;
    for (const auto& g : record.gold_labels) gold_norms.insert(normalize_label(g));

    auto it = pool.find(record.department);
    if (it == pool.end()) throw PoolTooSmall(record.department, needed, 0);

    std::vector<std::string> eligible;
    std::set<std::string> seen;
    for (const auto& label : it->second) {
        std::string norm = normalize_label(label);
        if (gold_norms.count(norm) || !seen.insert(norm).second) continue;
        eligible.push_back(label);
    }
    if (static_cast<int>(eligible.size()) < needed)
        throw PoolTooSmall(record.department, needed, static_cast<int>(eligible.size()));

    Rng rng(seed);
    std::vector<OptionItem> items;
    for (const auto& g : record.gold_labels) items.push_back({"", g, true});
    for (size_t idx : rng.sample_indices(eligible.size(), static_cast<size_t>(needed)))
        items.push_back({"", eligible[idx], false});
    rng.shuffle(items);

    DiagnosisOptions options;
    options.items = std::move(items);
    for (size_t i = 0; i < options.items.size(); ++i)
        options.items[i].letter = option_letter(i);
    return options;
}

const std::vector<AgeBand>& generator_age_bands() {
    static const std::vector<AgeBand> bands = {
        {18, 44, 0.250}, {45, 59, 0.185}, {60, 74, 0.396}, {75, 90, 0.169}};
    return bands;
}

namespace {

struct DeptCatalog {
    std::string name;
    double weight;
    std::vector<std::string> diseases;
    std::vector<std::string> complaints;
    std::vector<std::string> illness;
    std::vector<std::string> exam;
    std::vector<std::string> labs;
    std::vector<std::string> imaging;
    std::vector<std::string> pathology;
};

const std::vector<DeptCatalog>& catalog() {
    static const std::vector<DeptCatalog> depts = {
        {"oncology",
         0.1576,
         {"Lung cancer", "Gastric cancer", "Esophageal cancer",
          "Hepatocellular carcinoma", "Colorectal cancer", "Pancreatic cancer",
          "Breast cancer", "Lymphoma", "Bone metastasis", "Pleural effusion",
          "Hypoproteinemia", "Anemia", "Hypertension", "Type 2 diabetes mellitus"},
         {"Progressive weight loss and fatigue", "Persistent cough with chest discomfort",
          "Epigastric pain with early satiety", "Palpable mass with night sweats"},
         {"a poor appetite with unintentional weight loss of several kilograms",
          "intermittent dull pain that no longer responds to rest",
          "worsening fatigue and occasional low-grade fever"},
         {"Thin build, mild tenderness on deep palpation, no rebound pain",
          "Enlarged supraclavicular lymph node, breath sounds reduced at the right base",
          "Pale conjunctiva, abdomen soft, liver edge palpable below the costal margin"},
         {"CEA 25.4 ng/mL, CA19-9 88 U/mL, albumin 31 g/L",
          "Hemoglobin 96 g/L, ESR elevated, ferritin raised",
          "ALT 64 U/L, AST 58 U/L, alkaline phosphatase elevated"},
         {"Contrast CT shows an irregular enhancing mass with regional lymphadenopathy",
          "PET-CT demonstrates a hypermetabolic lesion with increased uptake",
          "Chest CT reveals a spiculated nodule with pleural retraction"},
         {"Core needle biopsy shows poorly differentiated adenocarcinoma",
          "Biopsy reveals malignant cells with high mitotic activity",
          "Immunohistochemistry supports an epithelial malignancy"}},
        {"gastrointestinal surgery",
         0.1355,
         {"Chronic gastritis", "Gastric ulcer", "Duodenal ulcer", "Acute appendicitis",
          "Cholelithiasis", "Chronic cholecystitis", "Hepatic cyst", "Inguinal hernia",
          "Intestinal obstruction", "Colonic polyp", "Hemorrhoids",
          "Gastrointestinal stromal tumor", "Hypertension", "Type 2 diabetes mellitus"},
         {"Recurrent epigastric pain after meals", "Right lower abdominal pain with nausea",
          "Bloating and irregular bowel habits", "Right upper quadrant pain after fatty food"},
         {"burning epigastric discomfort relieved briefly by antacids",
          "colicky abdominal pain with episodes of vomiting",
          "alternating constipation and loose stools with mucus"},
         {"Abdomen soft with epigastric tenderness, no guarding",
          "McBurney point tenderness with mild rebound pain",
          "Positive Murphy sign, bowel sounds reduced"},
         {"WBC 12.3x10^9/L with neutrophilia, CRP 46 mg/L",
          "Helicobacter pylori antigen positive, hemoglobin 118 g/L",
          "Total bilirubin 28 umol/L, GGT elevated"},
         {"Abdominal ultrasound shows gallbladder wall thickening with stones",
          "CT shows dilated bowel loops with air-fluid levels",
          "Gastroscopy reveals mucosal erosion with a visible ulcer crater"},
         {"Gastric biopsy shows chronic active inflammation without dysplasia",
          "Resected specimen confirms a benign polyp with clear margins",
          "Histology shows spindle cells consistent with a stromal tumor"}},
        {"thyroid surgery",
         0.0882,
         {"Papillary thyroid carcinoma", "Nodular goiter", "Thyroid adenoma",
          "Hashimoto thyroiditis", "Hyperthyroidism", "Hypothyroidism", "Thyroid cyst",
          "Subacute thyroiditis", "Graves disease", "Secondary hyperparathyroidism",
          "Hypertension", "Type 2 diabetes mellitus"},
         {"Anterior neck swelling noticed while dressing", "Neck fullness with mild pressure",
          "Palpitations with heat intolerance", "Painless neck lump found on checkup"},
         {"a slowly enlarging anterior neck mass without pain",
          "tremor, sweating and unintentional weight change",
          "a foreign-body sensation when swallowing"},
         {"Palpable nodule moving with swallowing, no cervical lymphadenopathy",
          "Diffusely enlarged thyroid, fine tremor of outstretched hands",
          "Firm solitary nodule in the right lobe, trachea midline"},
         {"TSH 0.02 mIU/L, FT4 32 pmol/L, TRAb positive",
          "TSH 6.8 mIU/L, anti-TPO antibodies markedly elevated",
          "Serum calcium 2.71 mmol/L, PTH elevated"},
         {"Ultrasound shows a hypoechoic nodule with microcalcifications, TI-RADS 4",
          "Ultrasound shows multiple mixed nodules in both lobes",
          "Scintigraphy shows a cold nodule in the right lobe"},
         {"FNA cytology suggests papillary carcinoma, Bethesda V",
          "FNA shows benign follicular cells with colloid",
          "Histology shows lymphocytic infiltration consistent with thyroiditis"}},
    };
    return depts;
}

}  // namespace

LabelPool builtin_label_pool() {
    LabelPool pool;
    for (const DeptCatalog& d : catalog()) pool[d.name] = d.diseases;
    return pool;
}

std::vector<CaseRecord> generate_cases(int count, std::uint64_t seed) {
    if (count < 0) throw InvalidConfig("case count must be >= 0");
    Rng rng(seed);

    // Age bands are quota-assigned so realized frequencies track the
    // configured weights even for small batches, then shuffled by seed.
    const std::vector<AgeBand>& bands = generator_age_bands();
    std::vector<int> quota(bands.size(), 0);
    std::vector<std::pair<double, size_t>> fractions;
    int assigned = 0;
    for (size_t i = 0; i < bands.size(); ++i) {
        double exact = bands[i].weight * count;
        quota[i] = static_cast<int>(exact);
        assigned += quota[i];
        fractions.push_back({exact - quota[i], i});
    }
    std::sort(fractions.begin(), fractions.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < count - assigned; ++r)
        quota[fractions[static_cast<size_t>(r) % fractions.size()].second]++;

    std::vector<size_t> band_of;
    for (size_t i = 0; i < bands.size(); ++i)
        for (int j = 0; j < quota[i]; ++j) band_of.push_back(i);
    rng.shuffle(band_of);

    std::vector<double> dept_weights;
    for (const DeptCatalog& d : catalog()) dept_weights.push_back(d.weight);

    auto pick = [&rng](const std::vector<std::string>& bank) {
        return bank[rng.below(bank.size())];
    };

    std::vector<CaseRecord> cases;
    for (int i = 0; i < count; ++i) {
        const DeptCatalog& dept = catalog()[rng.weighted(dept_weights)];

        CaseRecord c;
        char id[32];
        std::snprintf(id, sizeof(id), "case-%04d", i + 1);
        c.case_id = id;
        c.department = dept.name;

        size_t n_gold = 1 + rng.below(3);
        for (size_t idx : rng.sample_indices(dept.diseases.size(), n_gold))
            c.gold_labels.push_back(dept.diseases[idx]);

        const AgeBand& band = bands[band_of[static_cast<size_t>(i)]];
        c.age = band.lo + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(band.hi - band.lo + 1)));
        c.sex = rng.unit() < 0.539 ? Sex::Male : Sex::Female;

        int duration = 1 + static_cast<int>(rng.below(11));
        std::string unit = rng.below(2) ? " weeks" : " months";
        c.chief_complaints = pick(dept.complaints) + " for " +
                             std::to_string(duration) + unit;
        static const std::vector<std::string> course = {
            "gradually worsened", "remained stable", "fluctuated"};
        c.present_illness = "The patient reports " + pick(dept.illness) +
                            ". Symptoms have " + course[rng.below(course.size())] +
                            " since onset.";
        c.physical_examination = pick(dept.exam);
        c.lab_results = pick(dept.labs);
        if (rng.below(2)) c.lab_results += " " + pick(dept.labs);
        c.imaging_results = pick(dept.imaging);
        c.pathology_results = rng.unit() < 0.7 ? pick(dept.pathology) : "";

        cases.push_back(std::move(c));
    }
    return cases;
}

}  // namespace tor
