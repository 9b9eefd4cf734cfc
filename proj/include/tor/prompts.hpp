#pragma once

#include <map>
#include <string>
#include <vector>

#include "tor/case_model.hpp"
#include "tor/errors.hpp"
#include "tor/llm_backend.hpp"
#include "tor/retrieval.hpp"
#include "tor/roles.hpp"

namespace tor {

/// Replace every {slot} occurrence in one pass. Lone braces and brace blocks
/// that do not look like slot names are left alone. Throws TemplateError when
/// the template references a slot missing from `slots`.
std::string fill_template(const std::string& template_name, const std::string& text,
                          const std::map<std::string, std::string>& slots);

/// Named prompt templates. Built-in texts mirror the published role prompts;
/// any template can be overridden by a "<name>.txt" file in an override
/// directory.
class PromptLibrary {
public:
    static const std::vector<std::string>& template_names();
    static PromptLibrary builtin();
    static PromptLibrary with_overrides(const std::string& dir);

    const std::string& text(const std::string& name) const;
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& slots) const;

    /// Template sanity check: every required slot referenced, no unknown
    /// slots. Returns human-readable violations, empty when clean.
    std::vector<std::string> check() const;

private:
    std::map<std::string, std::string> templates_;
};

/// Persona sentence carried as the system message for a role.
std::string role_persona(AgentRole role);

/// Title of the tree each specialist is asked to produce initially.
std::string initial_tree_title(AgentRole role);

/// Fixed text used when retrieval returns nothing or is disabled.
extern const char* kNoRetrievalSentinel;

/// "(1) title\nsnippet" blocks, or the sentinel when empty.
std::string render_retrieved_block(const std::vector<RetrievedDoc>& docs);

/// The case as indented JSON for prompt embedding. Reference labels and the
/// department are deliberately excluded.
std::string render_patient_case_json(const CaseRecord& record);

/// "<Display Name> Doctor:\n<assessment>" blocks joined by blank lines.
std::string render_opinions_block(
    const std::vector<std::pair<std::string, std::string>>& assessments);

/// Feedback for the update prompt, grouped with source attribution headers.
struct FeedbackItem {
    AgentRole source = AgentRole::Outpatient;
    int round = 0;
    int turn = 0;
    std::string text;
};
std::string render_feedback_block(const std::vector<FeedbackItem>& feedback);

/// Initial diagnosis request for a role: persona as the system message, data
/// sections and retrieved knowledge in the user message. When `tree_format`
/// is false the free-text template variant (no output-format block) is used.
ChatRequest build_initial_request(const PromptLibrary& lib, AgentRole role,
                                  const RoleInput& input,
                                  const std::string& retrieved_block,
                                  bool tree_format);

ChatRequest build_participation_request(const PromptLibrary& lib, AgentRole role,
                                        const std::string& patient_case_json,
                                        int round, int turn,
                                        const std::string& opinions_block);

ChatRequest build_target_request(const PromptLibrary& lib, AgentRole role,
                                 const std::string& patient_case_json, int round,
                                 int turn, const std::string& opinions_block,
                                 const std::vector<AgentRole>& peers);

ChatRequest build_opinion_request(const PromptLibrary& lib, AgentRole source,
                                  AgentRole target,
                                  const std::string& patient_case_json, int round,
                                  int turn, const std::string& opinions_block);

ChatRequest build_update_request(const PromptLibrary& lib, AgentRole role,
                                 const std::string& original_assessment,
                                 const std::string& feedback_block,
                                 bool tree_format);

ChatRequest build_final_request(const PromptLibrary& lib,
                                const std::string& patient_case_json,
                                const std::string& opinions_block,
                                const std::string& options_text);

/// Follow-up message sequence for a format repair: the original exchange plus
/// a corrective user message naming the problem.
ChatRequest build_repair_request(const PromptLibrary& lib, const ChatRequest& original,
                                 const std::string& previous_output,
                                 const std::string& error);

}  // namespace tor
