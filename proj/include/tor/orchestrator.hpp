#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tor/agents.hpp"
#include "tor/case_model.hpp"
#include "tor/evidence_tree.hpp"
#include "tor/llm_backend.hpp"
#include "tor/prompts.hpp"
#include "tor/retrieval.hpp"
#include "tor/roles.hpp"
#include "tor/trace.hpp"

namespace tor {

struct RunConfig {
    int rounds = 2;  // discussion rounds (k)
    int turns = 2;   // speaking turns per round (t)
    std::vector<AgentRole> active_roles = specialist_roles();
    std::uint64_t seed = 0;
    int retrieval_k = 3;
    int query_token_budget = 256;
    int snippet_token_budget = 512;
    bool rag_enabled = true;
    bool cross_verification_enabled = true;
    bool evidence_tree_enabled = true;
    // Stop discussing once a whole round passes without a single opinion.
    // Off by default so the call schedule is a pure function of the config.
    bool early_exit_enabled = false;
    // Compatibility switch: count the final update round against the budget,
    // running rounds-1 discussion rounds instead of rounds.
    bool strict_rounds = false;
    std::string target_mode = "parse";  // "parse" | "model"
    int repair_budget = 2;
    double temperature = 0.0;
    int max_tokens = 0;
    std::optional<int> distractor_count;
    std::string template_dir;
    int jobs = 1;
};

void validate_config(const RunConfig& config);

/// Per-case RNG stream so batch order and size never change a case's options.
std::uint64_t derive_case_seed(std::uint64_t seed, const std::string& case_id);

struct CaseResult {
    std::string case_id;
    DiagnosisOptions options;
    std::vector<std::string> gold_letters;
    std::vector<std::string> selected_letters;
    EvidenceTree final_tree;   // the moderator's tree
    EvidenceTree merged_tree;  // union of the last-round specialist trees
    // role id -> rendered tree (or free-form assessment) after the last round
    std::vector<std::pair<std::string, std::string>> final_assessments;
    std::string final_response;
    Trace trace;
};

struct BatchFailure {
    std::string case_id;
    std::string error;
};

struct BatchResult {
    std::vector<CaseResult> results;
    std::vector<BatchFailure> failures;
};

CaseResult run_case(const RunConfig& config, const CaseRecord& record,
                    const LabelPool& pool, const Index* index, Backend& backend,
                    const PromptLibrary& lib);

/// Runs every case, isolating failures. `config.jobs` bounds parallelism
/// across cases; result order always follows input order.
BatchResult run_batch(const RunConfig& config, const std::vector<CaseRecord>& cases,
                      const LabelPool& pool, const Index* index, Backend& backend,
                      const PromptLibrary& lib);

/// Stable JSON for a finished case. Contains no timing and no absolute paths
/// so identical runs serialize identically.
std::string case_result_to_json_text(const CaseResult& result);

/// Writes "<case_id>.result.json" and "<case_id>.trace.jsonl" under dir.
void write_case_result(const std::string& dir, const CaseResult& result);

std::string run_config_to_json_text(const RunConfig& config);

}  // namespace tor
