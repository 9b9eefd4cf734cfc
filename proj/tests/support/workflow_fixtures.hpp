#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "tor/agents.hpp"
#include "tor/case_model.hpp"
#include "tor/llm_backend.hpp"
#include "tor/orchestrator.hpp"
#include "tor/prompts.hpp"
#include "tor/roles.hpp"

namespace tor::testsupport {

inline tor::CaseRecord fixture_case(const std::string& case_id = "case-0001") {
    tor::CaseRecord record;
    record.case_id = case_id;
    record.age = 63;
    record.sex = tor::Sex::Female;
    record.chief_complaints = "Neck swelling and hoarseness for two months.";
    record.present_illness =
        "Progressive painless anterior neck swelling with recent voice change.";
    record.physical_examination = "Firm, fixed thyroid nodule, about 3 cm.";
    record.lab_results = "TSH suppressed at 0.1 mIU/L, calcitonin normal.";
    record.imaging_results =
        "Ultrasound shows a hypoechoic nodule with microcalcifications.";
    record.pathology_results =
        "Fine needle aspiration suspicious for papillary carcinoma.";
    record.department = "thyroid surgery";
    record.gold_labels = {"Papillary thyroid carcinoma"};
    return record;
}

// One-disease canonical tree, distinct per role unless a shared label is
// requested (shared labels keep trees conflict-free with one another).
inline std::string fixture_tree_text(tor::AgentRole role,
                                     const std::string& label = "") {
    std::string disease = label.empty() ? tor::role_name(role) + " syndrome" : label;
    return tor::initial_tree_title(role) + "\n    " + disease +
           "\n        Analysis: Working hypothesis from the " +
           tor::role_id(role) +
           " review.\n            Evidence 1: Supporting finding.\n";
}

inline std::string fixture_updated_tree_text(tor::AgentRole role, int round) {
    return tor::role_name(role) + " Doctor Reasoning Pathway\n    Revised diagnosis " +
           std::to_string(round) +
           "\n        Analysis: Adjusted after feedback.\n            Evidence 1: "
           "Peer comment.\n";
}

inline std::string fixture_final_json(const std::vector<std::string>& letters) {
    nlohmann::json j;
    j["selected_options"] = letters;
    j["evi_tree"] =
        "Reasoning Pathway\n    Consensus diagnosis\n        Analysis: Team "
        "conclusion.\n            Evidence 1: Combined evidence.";
    return j.dump();
}

struct ScriptBuilder {
    tor::Transcript transcript;

    ScriptBuilder& add(const std::string& tag, const std::string& response,
                       const std::string& contains = "") {
        transcript.entries.push_back({tag, contains, "", response});
        return *this;
    }
};

// Backend that answers from the request tag alone: canned trees for initial
// and update calls, configurable participation, and gold-letter decisions
// looked up by the case id found in the final prompt.
class TagOracleBackend : public tor::Backend {
public:
    std::string participation_reply = "No";
    std::map<std::string, std::vector<std::string>> gold_by_case;

    tor::ChatResponse complete(const tor::ChatRequest& request) override {
        tor::ChatResponse resp;
        resp.content = reply_for(request);
        resp.usage.prompt_tokens = 1;
        resp.usage.completion_tokens = 1;
        return resp;
    }

private:
    std::string reply_for(const tor::ChatRequest& request) const {
        const std::string& tag = request.tag;
        auto tag_role = [&]() {
            return *tor::parse_role(tag.substr(0, tag.find('/')));
        };
        if (tag.find("/initial") != std::string::npos) {
            return fixture_tree_text(tag_role());
        }
        if (tag.find("/participate/") != std::string::npos) {
            return participation_reply;
        }
        if (tag.find("/opinion/") != std::string::npos) {
            return "I would broaden the differential based on the imaging findings.";
        }
        if (tag.find("/update/") != std::string::npos) {
            return fixture_updated_tree_text(tag_role(), 1);
        }
        if (tag == tor::final_tag()) {
            std::vector<std::string> letters = {"A"};
            std::string case_id = find_case_id(request);
            auto it = gold_by_case.find(case_id);
            if (it != gold_by_case.end()) letters = it->second;
            return fixture_final_json(letters);
        }
        return "Yes";
    }

    std::string find_case_id(const tor::ChatRequest& request) const {
        static const std::string marker = "\"case_id\": \"";
        for (const auto& message : request.messages) {
            size_t pos = message.content.find(marker);
            if (pos == std::string::npos) continue;
            size_t start = pos + marker.size();
            size_t end = message.content.find('"', start);
            if (end != std::string::npos) {
                return message.content.substr(start, end - start);
            }
        }
        return "";
    }
};

}  // namespace tor::testsupport
