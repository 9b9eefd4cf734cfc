#include "tor/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tor/io.hpp"
#include "tor/strings.hpp"

namespace tor {

namespace {

const char* kOutpatientPersona =
    "You are an experienced attending physician responsible for detailed inquiry of "
    "the patient's chief complaints, medical history, and initial physical "
    "examination.";
const char* kLaboratoryPersona =
    "You are an experienced laboratory physician responsible for analyzing laboratory "
    "test results and providing diagnostic suggestions based on the results.";
const char* kRadiologyPersona =
    "You are an experienced imaging physician responsible for analyzing imaging test "
    "results and providing diagnostic suggestions based on the results.";
const char* kPathologyPersona =
    "You are an experienced pathology physician responsible for analyzing pathology "
    "test results and providing diagnostic suggestions based on the results.";
const char* kModeratorPersona = "You are the head of the medical team.";

const char* kOutpatientInitial =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

Patient information is as follows:
{
"Age": {age},
"Sex": {sex},
"Chief-Complaints": {chief_complaints},
"Present-Illness": {present_illness},
"Physical-Examination": {physical_examination}{additional_sections}
}

Please analyze the patient's information and output evidence tree structure in following format:
1. Clinical Clues: Identify key clinical clues present in the patient's chief complaints, medical history, and initial physical examination.
2. Possible Diseases: List possible diseases that these clinical clues might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the chief complaints, medical history, and physical examination.

Output Format:
Chief Complaints Clinical Reasoning Pathway
    Disease 1
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Chief Complaints.
            Evidence 2: Medical History.
            Evidence 3: Physical Examination.
    Disease 2
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Chief Complaints.
            Evidence 2: Medical History.
            Evidence 3: Physical Examination.
    ...

Please ensure that the output strictly follows the above format and only includes the evidence tree structure. Avoid any additional text or explanations outside the tree structure.)";

const char* kOutpatientInitialFreeform =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

Patient information is as follows:
{
"Age": {age},
"Sex": {sex},
"Chief-Complaints": {chief_complaints},
"Present-Illness": {present_illness},
"Physical-Examination": {physical_examination}{additional_sections}
}

Please analyze the patient's information and provide your diagnostic analysis:
1. Clinical Clues: Identify key clinical clues present in the patient's chief complaints, medical history, and initial physical examination.
2. Possible Diseases: List possible diseases that these clinical clues might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the chief complaints, medical history, and physical examination.)";

const char* kLaboratoryInitial =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

The laboratory test results are as follows:
{lab_results}

Please analyze the laboratory test results and output evidence tree structure in following format:
1. Abnormal Indicators: Identify which indicators in the laboratory test results are abnormal.
2. Possible Diseases: List possible diseases that these abnormal indicators might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the laboratory test results.

Output Format:
Laboratory Test Clinical Reasoning Pathway
    Disease 1
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Indicator 1.
            Evidence 2: Abnormal Indicator 2.
            Evidence 3: Abnormal Indicator 3.
    Disease 2
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Indicator 1.
            Evidence 2: Abnormal Indicator 2.
            Evidence 3: Abnormal Indicator 3.
    ...

Please ensure that the output strictly follows the above format and only includes the evidence tree structure. Avoid any additional text or explanations outside the tree structure.)";

const char* kLaboratoryInitialFreeform =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

The laboratory test results are as follows:
{lab_results}

Please analyze the laboratory test results and provide your diagnostic analysis:
1. Abnormal Indicators: Identify which indicators in the laboratory test results are abnormal.
2. Possible Diseases: List possible diseases that these abnormal indicators might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the laboratory test results.)";

const char* kRadiologyInitial =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

The imaging test results are as follows:
{imaging_results}

Please analyze the imaging test results and output evidence tree structure in following format:
1. Abnormal Findings: Identify what abnormal findings are present in the imaging test results.
2. Possible Diseases: List possible diseases that these abnormal findings might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the imaging test results.

Output Format:
Imaging Test Clinical Reasoning Pathway
    Disease 1
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    Disease 2
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    ...

Please ensure that the output strictly follows the above format and only includes the evidence tree structure. Avoid any additional text or explanations outside the tree structure.)";

const char* kRadiologyInitialFreeform =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

The imaging test results are as follows:
{imaging_results}

Please analyze the imaging test results and provide your diagnostic analysis:
1. Abnormal Findings: Identify what abnormal findings are present in the imaging test results.
2. Possible Diseases: List possible diseases that these abnormal findings might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the imaging test results.)";

const char* kPathologyInitial =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

The pathology test results are as follows:
{pathology_results}

Please analyze the pathology test results and output evidence tree structure in following format:
1. Abnormal Findings: Identify what abnormal findings are present in the pathology test results.
2. Possible Diseases: List possible diseases that these abnormal findings might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the pathology test results.

Output Format:
Pathology Test Clinical Reasoning Pathway
    Disease 1
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    Disease 2
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    ...

Please ensure that the output strictly follows the above format and only includes the evidence tree structure. Avoid any additional text or explanations outside the tree structure.)";

const char* kPathologyInitialFreeform =
    R"(Based on the retrieved medical knowledge:
{retrieved_info}

The pathology test results are as follows:
{pathology_results}

Please analyze the pathology test results and provide your diagnostic analysis:
1. Abnormal Findings: Identify what abnormal findings are present in the pathology test results.
2. Possible Diseases: List possible diseases that these abnormal findings might point to.
3. Reasoning Process: For each possible disease, provide a brief explanation of your reasoning process.
4. Evidence: For each possible disease, summarize the supporting evidence from the pathology test results.)";

const char* kParticipation =
    R"(Based on the current discussion situation, actively identify areas where your perspective differs from others'. Consider if providing your unique viewpoint could help resolve disagreements or improve the diagnosis. You should participate whenever there's an opportunity to clarify your position or persuade others, even if some opinions have already been expressed.
Do you need to provide new insights or engage in discussion with other doctors?
Please answer only with "Yes" or "No".

Current situation:
1. Patient case:
{patient_case}
2. Current round: Round {round_num}, Turn {turn_num}
3. Diagnosis opinions from each doctor:
{doctor_opinions})";

const char* kTarget =
    R"(As the {source_doctor} doctor, choose which doctors you want to discuss with in this turn.
1. Patient case:
{patient_case}
2. Current round: Round {round_num}, Turn {turn_num}
3. Diagnosis opinions from each doctor:
{doctor_opinions}

Please answer only with a comma-separated list of doctor names chosen from: {peer_roles}. Answer "None" if you do not wish to address anyone.)";

const char* kOpinion =
    R"(As the {source_doctor} doctor, please provide your professional opinion on the diagnosis from the {target_doctor} doctor:
1. Patient case:
{patient_case}
2. Current round: Round {round_num}, Turn {turn_num}
3. Diagnosis opinions from each doctor:
{doctor_opinions}

Please concisely express your views, focusing on:
1. Which aspects of the other doctor's opinion you agree or disagree with
2. What additional insights or suggestions you have based on your expertise
3. How to integrate both professional perspectives to improve the diagnosis)";

const char* kUpdate =
    R"(As the {doctor_type} doctor, please generate an UPDATED diagnostic tree based on original assessment and new feedback.

Output Format:
{doctor_type} Doctor Reasoning Pathway
    Disease 1
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    Disease 2
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    ...

Please ensure that the output strictly follows the above format and only includes the evidence tree structure. Avoid any additional text or explanations outside the tree structure.

1. Original diagnosis:
{original_tree}
2. Feedback received in this round:
{feedback})";

const char* kUpdateFreeform =
    R"(As the {doctor_type} doctor, please provide an UPDATED diagnostic assessment based on original assessment and new feedback.

1. Original diagnosis:
{original_tree}
2. Feedback received in this round:
{feedback})";

const char* kFinalDecision =
    R"(As the head of the medical team, please make the final diagnosis based on the following information:

1. Patient case:
{patient_case}
2. Diagnosis opinions from the last round:
{doctor_opinions}
3. Diagnosis options:
{options}

The output should include:
1. The final diagnosis result (please select the appropriate letter from the options)
2. The evidence tree structure, formatted as follows:
Reasoning Pathway
    Disease 1
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    Disease 2
        Analysis: Brief explanation of the reasoning process.
            Evidence 1: Abnormal Finding 1.
            Evidence 2: Abnormal Finding 2.
            Evidence 3: Abnormal Finding 3.
    ...

The result should be output in JSON format, strictly following the format below. Do not add any extraneous words!
{
    "selected_options":"",
    "evi_tree":""
})";

const char* kRepairPreamble =
    R"(Your previous output did not match the required format. {error} Please answer again, strictly following the required output format.)";

struct TemplateSpec {
    const char* name;
    const char* text;
    std::set<std::string> slots;
};

const std::vector<TemplateSpec>& template_specs() {
    static const std::vector<TemplateSpec> specs = {
        {"outpatient_initial", kOutpatientInitial,
         {"retrieved_info", "age", "sex", "chief_complaints", "present_illness",
          "physical_examination", "additional_sections"}},
        {"outpatient_initial_freeform", kOutpatientInitialFreeform,
         {"retrieved_info", "age", "sex", "chief_complaints", "present_illness",
          "physical_examination", "additional_sections"}},
        {"laboratory_initial", kLaboratoryInitial, {"retrieved_info", "lab_results"}},
        {"laboratory_initial_freeform", kLaboratoryInitialFreeform,
         {"retrieved_info", "lab_results"}},
        {"radiology_initial", kRadiologyInitial, {"retrieved_info", "imaging_results"}},
        {"radiology_initial_freeform", kRadiologyInitialFreeform,
         {"retrieved_info", "imaging_results"}},
        {"pathology_initial", kPathologyInitial,
         {"retrieved_info", "pathology_results"}},
        {"pathology_initial_freeform", kPathologyInitialFreeform,
         {"retrieved_info", "pathology_results"}},
        {"participation", kParticipation,
         {"patient_case", "round_num", "turn_num", "doctor_opinions"}},
        {"target", kTarget,
         {"source_doctor", "patient_case", "round_num", "turn_num", "doctor_opinions",
          "peer_roles"}},
        {"opinion", kOpinion,
         {"source_doctor", "target_doctor", "patient_case", "round_num", "turn_num",
          "doctor_opinions"}},
        {"update", kUpdate, {"doctor_type", "original_tree", "feedback"}},
        {"update_freeform", kUpdateFreeform,
         {"doctor_type", "original_tree", "feedback"}},
        {"final_decision", kFinalDecision,
         {"patient_case", "doctor_opinions", "options"}},
        {"repair_preamble", kRepairPreamble, {"error"}},
    };
    return specs;
}

bool slot_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Finds the slot name starting right after `pos` (which must point at '{').
// Returns empty when the brace does not open a well-formed slot reference.
std::string slot_at(const std::string& text, size_t pos) {
    size_t i = pos + 1;
    std::string name;
    while (i < text.size() && slot_char(text[i])) {
        name.push_back(text[i]);
        ++i;
    }
    if (name.empty() || i >= text.size() || text[i] != '}') return "";
    if (name[0] >= '0' && name[0] <= '9') return "";
    return name;
}

}  // namespace

std::string fill_template(const std::string& template_name, const std::string& text,
                          const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        char c = text[pos];
        if (c != '{') {
            out.push_back(c);
            ++pos;
            continue;
        }
        std::string name = slot_at(text, pos);
        if (name.empty()) {
            out.push_back(c);
            ++pos;
            continue;
        }
        auto it = slots.find(name);
        if (it == slots.end()) throw TemplateError(template_name, name);
        out += it->second;
        pos += name.size() + 2;
    }
    return out;
}

const std::vector<std::string>& PromptLibrary::template_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& spec : template_specs()) v.push_back(spec.name);
        return v;
    }();
    return names;
}

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (const auto& spec : template_specs()) lib.templates_[spec.name] = spec.text;
    return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::string& dir) {
    PromptLibrary lib = builtin();
    for (const auto& spec : template_specs()) {
        std::filesystem::path p = std::filesystem::path(dir) / (std::string(spec.name) + ".txt");
        if (file_exists(p.string())) {
            std::string text = read_text_file(p.string());
            while (!text.empty() && text.back() == '\n') text.pop_back();
            lib.templates_[spec.name] = text;
        }
    }
    return lib;
}

const std::string& PromptLibrary::text(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw InvalidConfig("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& slots) const {
    return fill_template(name, text(name), slots);
}

std::vector<std::string> PromptLibrary::check() const {
    std::vector<std::string> problems;
    for (const auto& spec : template_specs()) {
        const std::string& body = text(spec.name);
        std::set<std::string> seen;
        for (size_t pos = 0; pos < body.size(); ++pos) {
            if (body[pos] != '{') continue;
            std::string name = slot_at(body, pos);
            if (!name.empty()) seen.insert(name);
        }
        for (const auto& slot : seen) {
            if (!spec.slots.count(slot)) {
                problems.push_back(std::string(spec.name) + ": unknown slot {" + slot + "}");
            }
        }
        for (const auto& slot : spec.slots) {
            if (!seen.count(slot)) {
                problems.push_back(std::string(spec.name) + ": missing slot {" + slot + "}");
            }
        }
    }
    return problems;
}

std::string role_persona(AgentRole role) {
    switch (role) {
        case AgentRole::Outpatient: return kOutpatientPersona;
        case AgentRole::Laboratory: return kLaboratoryPersona;
        case AgentRole::Radiology: return kRadiologyPersona;
        case AgentRole::Pathology: return kPathologyPersona;
        case AgentRole::Moderator: return kModeratorPersona;
    }
    throw InvalidConfig("unknown role");
}

std::string initial_tree_title(AgentRole role) {
    switch (role) {
        case AgentRole::Outpatient: return "Chief Complaints Clinical Reasoning Pathway";
        case AgentRole::Laboratory: return "Laboratory Test Clinical Reasoning Pathway";
        case AgentRole::Radiology: return "Imaging Test Clinical Reasoning Pathway";
        case AgentRole::Pathology: return "Pathology Test Clinical Reasoning Pathway";
        case AgentRole::Moderator: return "Reasoning Pathway";
    }
    throw InvalidConfig("unknown role");
}

const char* kNoRetrievalSentinel = "No relevant references were retrieved.";

std::string render_retrieved_block(const std::vector<RetrievedDoc>& docs) {
    if (docs.empty()) return kNoRetrievalSentinel;
    std::ostringstream out;
    for (size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) out << "\n\n";
        out << "(" << (i + 1) << ") " << docs[i].title << "\n" << docs[i].snippet;
    }
    return out.str();
}

std::string render_patient_case_json(const CaseRecord& record) {
    nlohmann::ordered_json j;
    j["case_id"] = record.case_id;
    j["age"] = record.age;
    j["sex"] = sex_name(record.sex);
    j["chief_complaints"] = record.chief_complaints;
    j["present_illness"] = record.present_illness;
    j["physical_examination"] = record.physical_examination;
    j["lab_results"] = record.lab_results;
    j["imaging_results"] = record.imaging_results;
    j["pathology_results"] = record.pathology_results;
    return j.dump(2);
}

std::string render_opinions_block(
    const std::vector<std::pair<std::string, std::string>>& assessments) {
    std::ostringstream out;
    for (size_t i = 0; i < assessments.size(); ++i) {
        if (i > 0) out << "\n";
        out << assessments[i].first << " Doctor:\n" << assessments[i].second;
        if (assessments[i].second.empty() || assessments[i].second.back() != '\n') {
            out << "\n";
        }
    }
    return out.str();
}

std::string render_feedback_block(const std::vector<FeedbackItem>& feedback) {
    std::ostringstream out;
    for (size_t i = 0; i < feedback.size(); ++i) {
        if (i > 0) out << "\n";
        out << "From the " << role_name(feedback[i].source) << " Doctor (Round "
            << feedback[i].round << ", Turn " << feedback[i].turn << "):\n"
            << feedback[i].text;
        if (feedback[i].text.empty() || feedback[i].text.back() != '\n') out << "\n";
    }
    return out.str();
}

namespace {

std::string section_text(const RoleInput& input, const std::string& name) {
    for (const auto& [key, value] : input.sections) {
        if (key == name) return value;
    }
    return "";
}

std::string heading_for_section(const std::string& name) {
    std::string out;
    bool cap = true;
    for (char c : name) {
        if (c == '_') {
            out.push_back('-');
            cap = true;
        } else if (cap) {
            out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            cap = false;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

ChatRequest make_request(AgentRole persona_role, std::string user_text) {
    ChatRequest req;
    req.messages.push_back({ChatMessage::Role::System, role_persona(persona_role)});
    req.messages.push_back({ChatMessage::Role::User, std::move(user_text)});
    return req;
}

}  // namespace

ChatRequest build_initial_request(const PromptLibrary& lib, AgentRole role,
                                  const RoleInput& input,
                                  const std::string& retrieved_block,
                                  bool tree_format) {
    std::map<std::string, std::string> slots;
    slots["retrieved_info"] = retrieved_block;
    std::string name;
    switch (role) {
        case AgentRole::Outpatient: {
            name = "outpatient_initial";
            static const std::vector<std::string> core = {
                "age", "sex", "chief_complaints", "present_illness",
                "physical_examination"};
            for (const auto& key : core) slots[key] = section_text(input, key);
            std::string extra;
            for (const auto& [key, value] : input.sections) {
                if (std::find(core.begin(), core.end(), key) != core.end()) continue;
                extra += ",\n\"" + heading_for_section(key) + "\": " + value;
            }
            slots["additional_sections"] = extra;
            break;
        }
        case AgentRole::Laboratory:
            name = "laboratory_initial";
            slots["lab_results"] = section_text(input, "lab_results");
            break;
        case AgentRole::Radiology:
            name = "radiology_initial";
            slots["imaging_results"] = section_text(input, "imaging_results");
            break;
        case AgentRole::Pathology:
            name = "pathology_initial";
            slots["pathology_results"] = section_text(input, "pathology_results");
            break;
        case AgentRole::Moderator:
            throw InvalidConfig("moderator has no initial diagnosis prompt");
    }
    if (!tree_format) name += "_freeform";
    return make_request(role, lib.render(name, slots));
}

ChatRequest build_participation_request(const PromptLibrary& lib, AgentRole role,
                                        const std::string& patient_case_json,
                                        int round, int turn,
                                        const std::string& opinions_block) {
    std::map<std::string, std::string> slots = {
        {"patient_case", patient_case_json},
        {"round_num", std::to_string(round)},
        {"turn_num", std::to_string(turn)},
        {"doctor_opinions", opinions_block},
    };
    return make_request(role, lib.render("participation", slots));
}

ChatRequest build_target_request(const PromptLibrary& lib, AgentRole role,
                                 const std::string& patient_case_json, int round,
                                 int turn, const std::string& opinions_block,
                                 const std::vector<AgentRole>& peers) {
    std::vector<std::string> names;
    for (AgentRole peer : peers) names.push_back(role_name(peer));
    std::map<std::string, std::string> slots = {
        {"source_doctor", role_name(role)},
        {"patient_case", patient_case_json},
        {"round_num", std::to_string(round)},
        {"turn_num", std::to_string(turn)},
        {"doctor_opinions", opinions_block},
        {"peer_roles", join(names, ", ")},
    };
    return make_request(role, lib.render("target", slots));
}

ChatRequest build_opinion_request(const PromptLibrary& lib, AgentRole source,
                                  AgentRole target,
                                  const std::string& patient_case_json, int round,
                                  int turn, const std::string& opinions_block) {
    std::map<std::string, std::string> slots = {
        {"source_doctor", role_name(source)},
        {"target_doctor", role_name(target)},
        {"patient_case", patient_case_json},
        {"round_num", std::to_string(round)},
        {"turn_num", std::to_string(turn)},
        {"doctor_opinions", opinions_block},
    };
    return make_request(source, lib.render("opinion", slots));
}

ChatRequest build_update_request(const PromptLibrary& lib, AgentRole role,
                                 const std::string& original_assessment,
                                 const std::string& feedback_block,
                                 bool tree_format) {
    std::map<std::string, std::string> slots = {
        {"doctor_type", role_name(role)},
        {"original_tree", original_assessment},
        {"feedback", feedback_block},
    };
    return make_request(role, lib.render(tree_format ? "update" : "update_freeform", slots));
}

ChatRequest build_final_request(const PromptLibrary& lib,
                                const std::string& patient_case_json,
                                const std::string& opinions_block,
                                const std::string& options_text) {
    std::map<std::string, std::string> slots = {
        {"patient_case", patient_case_json},
        {"doctor_opinions", opinions_block},
        {"options", options_text},
    };
    return make_request(AgentRole::Moderator, lib.render("final_decision", slots));
}

ChatRequest build_repair_request(const PromptLibrary& lib, const ChatRequest& original,
                                 const std::string& previous_output,
                                 const std::string& error) {
    ChatRequest req = original;
    req.messages.push_back({ChatMessage::Role::Assistant, previous_output});
    req.messages.push_back(
        {ChatMessage::Role::User, lib.render("repair_preamble", {{"error", error}})});
    return req;
}

}  // namespace tor
