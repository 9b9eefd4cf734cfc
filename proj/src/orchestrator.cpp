#include "tor/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include "json.hpp"
#include "tor/io.hpp"
#include "tor/strings.hpp"

namespace tor {

void validate_config(const RunConfig& config) {
    if (config.rounds < 1) throw InvalidConfig("rounds must be >= 1");
    if (config.turns < 1) throw InvalidConfig("turns must be >= 1");
    if (config.active_roles.empty()) throw InvalidConfig("no active roles");
    std::set<AgentRole> seen;
    bool has_outpatient = false;
    for (AgentRole role : config.active_roles) {
        if (role == AgentRole::Moderator)
            throw InvalidConfig("the moderator is not a specialist role");
        if (!seen.insert(role).second)
            throw InvalidConfig("duplicate active role: " + role_id(role));
        if (role == AgentRole::Outpatient) has_outpatient = true;
    }
    if (!has_outpatient)
        throw InvalidConfig("the outpatient role must always be active");
    if (config.target_mode != "parse" && config.target_mode != "model")
        throw InvalidConfig("target_mode must be \"parse\" or \"model\"");
    if (config.retrieval_k < 0) throw InvalidConfig("retrieval_k must be >= 0");
    if (config.query_token_budget <= 0 || config.snippet_token_budget <= 0)
        throw InvalidConfig("token budgets must be positive");
    if (config.repair_budget < 0) throw InvalidConfig("repair_budget must be >= 0");
    if (config.jobs < 1) throw InvalidConfig("jobs must be >= 1");
}

std::uint64_t derive_case_seed(std::uint64_t seed, const std::string& case_id) {
    return seed ^ fnv1a(case_id);
}

std::string run_config_to_json_text(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["rounds"] = config.rounds;
    j["turns"] = config.turns;
    nlohmann::ordered_json roles = nlohmann::ordered_json::array();
    for (AgentRole role : config.active_roles) roles.push_back(role_id(role));
    j["active_roles"] = roles;
    j["seed"] = config.seed;
    j["retrieval_k"] = config.retrieval_k;
    j["query_token_budget"] = config.query_token_budget;
    j["snippet_token_budget"] = config.snippet_token_budget;
    j["rag_enabled"] = config.rag_enabled;
    j["cross_verification_enabled"] = config.cross_verification_enabled;
    j["evidence_tree_enabled"] = config.evidence_tree_enabled;
    j["early_exit_enabled"] = config.early_exit_enabled;
    j["strict_rounds"] = config.strict_rounds;
    j["target_mode"] = config.target_mode;
    j["repair_budget"] = config.repair_budget;
    j["temperature"] = config.temperature;
    j["max_tokens"] = config.max_tokens;
    if (config.distractor_count)
        j["distractor_count"] = *config.distractor_count;
    else
        j["distractor_count"] = nullptr;
    j["template_dir"] = config.template_dir;
    j["jobs"] = config.jobs;
    return j.dump(2) + "\n";
}

namespace {

std::vector<AgentRole> peers_of(AgentRole self, const std::vector<AgentRole>& roles) {
    std::vector<AgentRole> out;
    for (AgentRole role : roles)
        if (role != self) out.push_back(role);
    return out;
}

struct CaseState {
    std::vector<AgentRole> roles;
    bool tree_mode = true;
    std::map<AgentRole, EvidenceTree> trees;
    std::map<AgentRole, std::string> texts;

    std::string assessment_of(AgentRole role) const {
        if (tree_mode) return render_tree(trees.at(role));
        return texts.at(role);
    }

    std::vector<std::pair<std::string, std::string>> assessments_view() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (AgentRole role : roles) out.emplace_back(role_name(role), assessment_of(role));
        return out;
    }

    std::vector<std::pair<AgentRole, EvidenceTree>> tree_list() const {
        std::vector<std::pair<AgentRole, EvidenceTree>> out;
        for (AgentRole role : roles) out.emplace_back(role, trees.at(role));
        return out;
    }
};

CaseResult run_case_inner(const RunConfig& config, const CaseRecord& record,
                          const LabelPool& pool, const Index* index,
                          Backend& backend, const PromptLibrary& lib) {
    CaseResult result;
    result.case_id = record.case_id;
    Trace& trace = result.trace;

    std::uint64_t case_seed = derive_case_seed(config.seed, record.case_id);
    // jobs schedules cases across threads and must not change a case's bytes
    RunConfig case_config = config;
    case_config.jobs = 1;
    trace.add("config", "run", run_config_to_json_text(case_config) + record.case_id);

    result.options = build_options(record, pool, config.distractor_count, case_seed);
    result.gold_letters = result.options.gold_letters();

    AgentOptions agent_opts;
    agent_opts.repair_budget = config.repair_budget;
    agent_opts.temperature = config.temperature;
    agent_opts.max_tokens = config.max_tokens;

    std::string patient_json = render_patient_case_json(record);

    CaseState state;
    state.roles = config.active_roles;
    state.tree_mode = config.evidence_tree_enabled;

    for (AgentRole role : state.roles) {
        RoleInput slice = slice_for_role(record, role, state.roles);
        std::vector<RetrievedDoc> docs;
        if (config.rag_enabled && index != nullptr) {
            std::string query = build_query(slice, config.query_token_budget);
            if (!query.empty()) {
                docs = retrieve_top_k(*index, query, config.retrieval_k,
                                      config.snippet_token_budget);
            }
        }
        std::string retrieved = render_retrieved_block(docs);
        if (state.tree_mode) {
            state.trees[role] =
                initial_diagnosis(lib, role, slice, retrieved, backend, trace, agent_opts);
        } else {
            state.texts[role] = initial_assessment_text(lib, role, slice, retrieved,
                                                        backend, trace, agent_opts);
        }
        trace.add("snapshot", initial_tag(role), state.assessment_of(role));
    }

    if (config.cross_verification_enabled) {
        int rounds_to_run = config.strict_rounds ? config.rounds - 1 : config.rounds;
        for (int round = 1; round <= rounds_to_run; ++round) {
            std::vector<OpinionRecord> round_opinions;
            for (int turn = 1; turn <= config.turns; ++turn) {
                for (AgentRole role : state.roles) {
                    SituationView situation{patient_json, round, turn,
                                            state.assessments_view()};
                    ParticipationResult part =
                        should_participate(lib, role, situation, backend, trace,
                                           agent_opts);
                    if (!part.participate) continue;

                    std::vector<AgentRole> fallback =
                        state.tree_mode ? conflict_targets(role, state.tree_list())
                                        : peers_of(role, state.roles);
                    std::vector<AgentRole> targets;
                    if (config.target_mode == "model") {
                        targets = choose_targets(lib, role, situation,
                                                 peers_of(role, state.roles), fallback,
                                                 backend, trace, agent_opts);
                    } else {
                        targets = parse_roles_in_text(part.reply, role, state.roles);
                        if (targets.empty()) targets = fallback;
                    }
                    for (AgentRole target : targets) {
                        round_opinions.push_back(generate_opinion(
                            lib, role, target, situation, backend, trace, agent_opts));
                    }
                }
            }
            for (AgentRole role : state.roles) {
                std::vector<FeedbackItem> feedback;
                for (const auto& opinion : round_opinions) {
                    if (opinion.target == role) {
                        feedback.push_back({opinion.source, opinion.round, opinion.turn,
                                            opinion.text});
                    }
                }
                if (state.tree_mode) {
                    state.trees[role] = update_tree(lib, role, state.trees[role],
                                                    feedback, round, backend, trace,
                                                    agent_opts);
                } else {
                    state.texts[role] = update_assessment_text(
                        lib, role, state.texts[role], feedback, round, backend, trace,
                        agent_opts);
                }
                trace.add("snapshot", update_tag(role, round), state.assessment_of(role));
            }
            if (config.early_exit_enabled && round_opinions.empty()) break;
        }
    }

    for (AgentRole role : state.roles) {
        result.final_assessments.emplace_back(role_id(role), state.assessment_of(role));
    }

    std::string opinions_block = render_opinions_block(state.assessments_view());
    FinalDecision decision = final_decision(lib, patient_json, opinions_block,
                                            result.options, backend, trace, agent_opts);
    result.selected_letters = decision.selected_letters;
    result.final_tree = decision.tree;
    result.final_response = decision.raw_response;
    trace.add("snapshot", final_tag(), render_tree(result.final_tree));

    if (state.tree_mode) {
        std::vector<EvidenceTree> ordered;
        for (AgentRole role : state.roles) ordered.push_back(state.trees.at(role));
        result.merged_tree = merge_trees(ordered, "Merged Reasoning Pathway");
    }
    return result;
}

}  // namespace

CaseResult run_case(const RunConfig& config, const CaseRecord& record,
                    const LabelPool& pool, const Index* index, Backend& backend,
                    const PromptLibrary& lib) {
    validate_config(config);
    try {
        return run_case_inner(config, record, pool, index, backend, lib);
    } catch (const RunError&) {
        throw;
    } catch (const std::exception& e) {
        throw RunError(record.case_id, e.what());
    }
}

BatchResult run_batch(const RunConfig& config, const std::vector<CaseRecord>& cases,
                      const LabelPool& pool, const Index* index, Backend& backend,
                      const PromptLibrary& lib) {
    validate_config(config);

    struct Slot {
        bool ok = false;
        CaseResult result;
        std::string error;
    };
    std::vector<Slot> slots(cases.size());

    auto run_one = [&](size_t i) {
        try {
            slots[i].result = run_case(config, cases[i], pool, index, backend, lib);
            slots[i].ok = true;
        } catch (const std::exception& e) {
            slots[i].error = e.what();
        }
    };

    size_t workers = static_cast<size_t>(config.jobs);
    if (workers <= 1 || cases.size() <= 1) {
        for (size_t i = 0; i < cases.size(); ++i) run_one(i);
    } else {
        workers = std::min(workers, cases.size());
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool_threads;
        for (size_t w = 0; w < workers; ++w) {
            pool_threads.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < cases.size();
                     i = next.fetch_add(1)) {
                    run_one(i);
                }
            });
        }
        for (auto& t : pool_threads) t.join();
    }

    BatchResult out;
    for (size_t i = 0; i < cases.size(); ++i) {
        if (slots[i].ok) {
            out.results.push_back(std::move(slots[i].result));
        } else {
            out.failures.push_back({cases[i].case_id, slots[i].error});
        }
    }
    return out;
}

namespace {

nlohmann::ordered_json tree_as_json(const EvidenceTree& tree) {
    if (tree.title.empty() && tree.entries.empty()) return nullptr;
    return nlohmann::ordered_json::parse(tree_to_json_text(tree, false));
}

}  // namespace

std::string case_result_to_json_text(const CaseResult& result) {
    nlohmann::ordered_json j;
    j["case_id"] = result.case_id;
    j["gold_letters"] = result.gold_letters;
    j["selected_letters"] = result.selected_letters;
    nlohmann::ordered_json options = nlohmann::ordered_json::array();
    for (const auto& item : result.options.items) {
        nlohmann::ordered_json o;
        o["letter"] = item.letter;
        o["label"] = item.label;
        o["is_gold"] = item.is_gold;
        options.push_back(o);
    }
    j["options"] = options;
    j["final_tree"] = tree_as_json(result.final_tree);
    j["merged_tree"] = tree_as_json(result.merged_tree);
    nlohmann::ordered_json assessments = nlohmann::ordered_json::object();
    for (const auto& [role, text] : result.final_assessments) assessments[role] = text;
    j["final_assessments"] = assessments;
    j["final_response"] = result.final_response;
    return j.dump(2) + "\n";
}

void write_case_result(const std::string& dir, const CaseResult& result) {
    std::filesystem::path base(dir);
    write_text_file((base / (result.case_id + ".result.json")).string(),
                    case_result_to_json_text(result));
    result.trace.save((base / (result.case_id + ".trace.jsonl")).string());
}

}  // namespace tor
