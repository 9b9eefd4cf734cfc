#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tor/case_model.hpp"
#include "tor/evidence_tree.hpp"
#include "tor/llm_backend.hpp"
#include "tor/prompts.hpp"
#include "tor/roles.hpp"
#include "tor/trace.hpp"

namespace tor {

struct AgentOptions {
    int repair_budget = 2;  // extra attempts after the first malformed reply
    double temperature = 0.0;
    int max_tokens = 0;
};

/// Shared discussion context handed to every agent in a turn.
struct SituationView {
    std::string patient_case_json;
    int round = 1;
    int turn = 1;
    // (display name, rendered tree or free-text assessment) in fixed role order
    std::vector<std::pair<std::string, std::string>> assessments;
};

struct OpinionRecord {
    int round = 0;
    int turn = 0;
    AgentRole source = AgentRole::Outpatient;
    AgentRole target = AgentRole::Outpatient;
    std::string text;
};

struct ParticipationResult {
    bool participate = false;
    std::string reply;
};

struct FinalDecision {
    std::vector<std::string> selected_letters;  // valid, deduped, sorted
    EvidenceTree tree;
    std::string raw_response;
};

// Request tags, also used by the trace readers.
std::string initial_tag(AgentRole role);
std::string participation_tag(AgentRole role, int round, int turn);
std::string target_tag(AgentRole role, int round, int turn);
std::string opinion_tag(AgentRole role, int round, int turn);
std::string update_tag(AgentRole role, int round);
std::string final_tag();

/// Drops a leading ``` fence line and a trailing ``` line when present.
std::string strip_code_fences(const std::string& text);

/// Yes/No classification of a reply: case-insensitive leading word after
/// punctuation stripping. Anything else is nullopt.
std::optional<bool> parse_yes_no(const std::string& text);

/// Role names mentioned in free text, in order of first appearance. The
/// speaking role itself and names outside `candidates` are dropped.
std::vector<AgentRole> parse_roles_in_text(const std::string& text, AgentRole self,
                                           const std::vector<AgentRole>& candidates);

/// Peers whose diagnosis label sets differ from the speaker's.
std::vector<AgentRole> conflict_targets(
    AgentRole self, const std::vector<std::pair<AgentRole, EvidenceTree>>& trees);

/// Option letters found in a raw selection string. Accepts "A", "A,C", "AC",
/// bracketed lists, and stray punctuation; invalid letters are dropped, the
/// result is deduped and sorted by (length, lexicographic).
std::vector<std::string> parse_selected_letters(const std::string& text,
                                                const std::vector<std::string>& valid);

EvidenceTree initial_diagnosis(const PromptLibrary& lib, AgentRole role,
                               const RoleInput& input,
                               const std::string& retrieved_block, Backend& backend,
                               Trace& trace, const AgentOptions& opts);

/// Free-text variant used when tree-structured reasoning is disabled.
std::string initial_assessment_text(const PromptLibrary& lib, AgentRole role,
                                    const RoleInput& input,
                                    const std::string& retrieved_block,
                                    Backend& backend, Trace& trace,
                                    const AgentOptions& opts);

/// One repair attempt on an unreadable reply, then defaults to "no" with an
/// anomaly event.
ParticipationResult should_participate(const PromptLibrary& lib, AgentRole role,
                                       const SituationView& situation,
                                       Backend& backend, Trace& trace,
                                       const AgentOptions& opts);

/// Asks the model which peers to address. An unreadable reply falls back to
/// `fallback` (normally the conflict-based targets) with an anomaly event.
std::vector<AgentRole> choose_targets(const PromptLibrary& lib, AgentRole role,
                                      const SituationView& situation,
                                      const std::vector<AgentRole>& peers,
                                      const std::vector<AgentRole>& fallback,
                                      Backend& backend, Trace& trace,
                                      const AgentOptions& opts);

OpinionRecord generate_opinion(const PromptLibrary& lib, AgentRole source,
                               AgentRole target, const SituationView& situation,
                               Backend& backend, Trace& trace,
                               const AgentOptions& opts);

/// Revises a tree against this round's feedback. Empty feedback returns the
/// original without a backend call; repair exhaustion keeps the original and
/// records an anomaly.
EvidenceTree update_tree(const PromptLibrary& lib, AgentRole role,
                         const EvidenceTree& original,
                         const std::vector<FeedbackItem>& feedback, int round,
                         Backend& backend, Trace& trace, const AgentOptions& opts);

std::string update_assessment_text(const PromptLibrary& lib, AgentRole role,
                                   const std::string& original,
                                   const std::vector<FeedbackItem>& feedback,
                                   int round, Backend& backend, Trace& trace,
                                   const AgentOptions& opts);

FinalDecision final_decision(const PromptLibrary& lib,
                             const std::string& patient_case_json,
                             const std::string& opinions_block,
                             const DiagnosisOptions& options, Backend& backend,
                             Trace& trace, const AgentOptions& opts);

}  // namespace tor
