#include "tor/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <set>

#include "json.hpp"
#include "tor/strings.hpp"

namespace tor {

namespace {

std::string round_turn(int round, int turn) {
    return std::to_string(round) + "." + std::to_string(turn);
}

ChatResponse traced_complete(Backend& backend, Trace& trace, const ChatRequest& req) {
    trace.add("call", req.tag, request_digest(req));
    ChatResponse resp = backend.complete(req);
    trace.add("response", req.tag, resp.content);
    return resp;
}

void apply_options(ChatRequest& req, const AgentOptions& opts) {
    req.temperature = opts.temperature;
    req.max_tokens = opts.max_tokens;
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string initial_tag(AgentRole role) { return role_id(role) + "/initial"; }

std::string participation_tag(AgentRole role, int round, int turn) {
    return role_id(role) + "/participate/" + round_turn(round, turn);
}

std::string target_tag(AgentRole role, int round, int turn) {
    return role_id(role) + "/target/" + round_turn(round, turn);
}

std::string opinion_tag(AgentRole role, int round, int turn) {
    return role_id(role) + "/opinion/" + round_turn(round, turn);
}

std::string update_tag(AgentRole role, int round) {
    return role_id(role) + "/update/" + std::to_string(round);
}

std::string final_tag() { return "moderator/final"; }

std::string strip_code_fences(const std::string& text) {
    std::string s = trim(text);
    if (starts_with(s, "```")) {
        size_t eol = s.find('\n');
        s = (eol == std::string::npos) ? "" : s.substr(eol + 1);
    }
    size_t tail = s.rfind("```");
    if (tail != std::string::npos && trim(s.substr(tail)) == "```") {
        s = s.substr(0, tail);
    }
    return trim(s);
}

std::optional<bool> parse_yes_no(const std::string& text) {
    std::string s = to_lower(trim(text));
    size_t start = 0;
    while (start < s.size() &&
           std::isalnum(static_cast<unsigned char>(s[start])) == 0) {
        ++start;
    }
    s = s.substr(start);
    auto word_is = [&](const char* word) {
        size_t n = std::strlen(word);
        if (!starts_with(s, word)) return false;
        return s.size() == n || !is_alpha(s[n]);
    };
    if (word_is("yes")) return true;
    if (word_is("no")) return false;
    return std::nullopt;
}

std::vector<AgentRole> parse_roles_in_text(const std::string& text, AgentRole self,
                                           const std::vector<AgentRole>& candidates) {
    std::string haystack = to_lower(text);
    std::vector<std::pair<size_t, AgentRole>> hits;
    for (AgentRole role : candidates) {
        if (role == self) continue;
        size_t pos = haystack.find(to_lower(role_name(role)));
        if (pos != std::string::npos) hits.emplace_back(pos, role);
    }
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<AgentRole> out;
    for (const auto& [pos, role] : hits) out.push_back(role);
    return out;
}

std::vector<AgentRole> conflict_targets(
    AgentRole self, const std::vector<std::pair<AgentRole, EvidenceTree>>& trees) {
    const EvidenceTree* own = nullptr;
    for (const auto& [role, tree] : trees) {
        if (role == self) own = &tree;
    }
    std::vector<AgentRole> out;
    if (!own) return out;
    for (const auto& [role, tree] : trees) {
        if (role == self) continue;
        ConflictSet diff = diff_trees(*own, tree);
        if (!diff.only_in_left.empty() || !diff.only_in_right.empty()) {
            out.push_back(role);
        }
    }
    return out;
}

std::vector<std::string> parse_selected_letters(const std::string& text,
                                                const std::vector<std::string>& valid) {
    std::set<std::string> valid_set(valid.begin(), valid.end());
    std::set<std::string> chosen;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        std::string up = token;
        for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        token.clear();
        if (valid_set.count(up)) {
            chosen.insert(up);
            return;
        }
        // A run like "AC" selects each single-letter option it spells, but
        // only when every character is itself a valid option.
        if (up.size() < 2) return;
        for (char c : up) {
            if (!valid_set.count(std::string(1, c))) return;
        }
        for (char c : up) chosen.insert(std::string(1, c));
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            token.push_back(c);
        } else {
            flush();
        }
    }
    flush();
    std::vector<std::string> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

namespace {

struct TreeAttempt {
    bool ok = false;
    EvidenceTree tree;
    std::string error;
};

TreeAttempt try_parse_tree(const std::string& content) {
    TreeAttempt result;
    try {
        result.tree = parse_tree(content);
        result.ok = true;
    } catch (const TreeParseError& e) {
        result.error = e.what();
    }
    return result;
}

// Shared repair loop for calls whose reply must parse as an evidence tree.
// Returns nullopt when every attempt failed; `last_error` reports the final
// parse failure.
std::optional<EvidenceTree> tree_call_with_repairs(const PromptLibrary& lib,
                                                   Backend& backend, Trace& trace,
                                                   const ChatRequest& base,
                                                   int repair_budget,
                                                   std::string& last_error) {
    ChatRequest req = base;
    for (int attempt = 0; attempt <= repair_budget; ++attempt) {
        ChatResponse resp = traced_complete(backend, trace, req);
        TreeAttempt parsed = try_parse_tree(strip_code_fences(resp.content));
        if (parsed.ok) return parsed.tree;
        last_error = parsed.error;
        if (attempt == repair_budget) break;
        trace.add("repair", base.tag, last_error);
        req = build_repair_request(lib, base, resp.content, last_error);
        req.tag = base.tag;
    }
    return std::nullopt;
}

}  // namespace

EvidenceTree initial_diagnosis(const PromptLibrary& lib, AgentRole role,
                               const RoleInput& input,
                               const std::string& retrieved_block, Backend& backend,
                               Trace& trace, const AgentOptions& opts) {
    ChatRequest base = build_initial_request(lib, role, input, retrieved_block, true);
    base.tag = initial_tag(role);
    apply_options(base, opts);
    std::string last_error;
    auto tree = tree_call_with_repairs(lib, backend, trace, base, opts.repair_budget,
                                       last_error);
    if (!tree) {
        throw AgentError(role_id(role),
                         "initial diagnosis unparseable after repairs: " + last_error);
    }
    return *tree;
}

std::string initial_assessment_text(const PromptLibrary& lib, AgentRole role,
                                    const RoleInput& input,
                                    const std::string& retrieved_block,
                                    Backend& backend, Trace& trace,
                                    const AgentOptions& opts) {
    ChatRequest req = build_initial_request(lib, role, input, retrieved_block, false);
    req.tag = initial_tag(role);
    apply_options(req, opts);
    return traced_complete(backend, trace, req).content;
}

ParticipationResult should_participate(const PromptLibrary& lib, AgentRole role,
                                       const SituationView& situation,
                                       Backend& backend, Trace& trace,
                                       const AgentOptions& opts) {
    std::string opinions = render_opinions_block(situation.assessments);
    ChatRequest base = build_participation_request(
        lib, role, situation.patient_case_json, situation.round, situation.turn,
        opinions);
    base.tag = participation_tag(role, situation.round, situation.turn);
    apply_options(base, opts);

    ChatResponse resp = traced_complete(backend, trace, base);
    auto verdict = parse_yes_no(resp.content);
    if (!verdict) {
        std::string error = "The reply must start with \"Yes\" or \"No\".";
        trace.add("repair", base.tag, error);
        ChatRequest repair = build_repair_request(lib, base, resp.content, error);
        repair.tag = base.tag;
        resp = traced_complete(backend, trace, repair);
        verdict = parse_yes_no(resp.content);
        if (!verdict) {
            trace.add("anomaly", base.tag,
                      "participation reply unreadable, defaulting to No");
            return {false, resp.content};
        }
    }
    return {*verdict, resp.content};
}

std::vector<AgentRole> choose_targets(const PromptLibrary& lib, AgentRole role,
                                      const SituationView& situation,
                                      const std::vector<AgentRole>& peers,
                                      const std::vector<AgentRole>& fallback,
                                      Backend& backend, Trace& trace,
                                      const AgentOptions& opts) {
    std::string opinions = render_opinions_block(situation.assessments);
    ChatRequest req = build_target_request(lib, role, situation.patient_case_json,
                                           situation.round, situation.turn, opinions,
                                           peers);
    req.tag = target_tag(role, situation.round, situation.turn);
    apply_options(req, opts);
    ChatResponse resp = traced_complete(backend, trace, req);
    std::vector<AgentRole> targets = parse_roles_in_text(resp.content, role, peers);
    if (!targets.empty()) return targets;
    if (to_lower(resp.content).find("none") != std::string::npos) return {};
    trace.add("anomaly", req.tag, "target reply unreadable, using conflict targets");
    return fallback;
}

OpinionRecord generate_opinion(const PromptLibrary& lib, AgentRole source,
                               AgentRole target, const SituationView& situation,
                               Backend& backend, Trace& trace,
                               const AgentOptions& opts) {
    std::string opinions = render_opinions_block(situation.assessments);
    ChatRequest req = build_opinion_request(lib, source, target,
                                            situation.patient_case_json,
                                            situation.round, situation.turn, opinions);
    req.tag = opinion_tag(source, situation.round, situation.turn);
    apply_options(req, opts);
    ChatResponse resp = traced_complete(backend, trace, req);
    return {situation.round, situation.turn, source, target, resp.content};
}

EvidenceTree update_tree(const PromptLibrary& lib, AgentRole role,
                         const EvidenceTree& original,
                         const std::vector<FeedbackItem>& feedback, int round,
                         Backend& backend, Trace& trace, const AgentOptions& opts) {
    if (feedback.empty()) return original;
    ChatRequest base = build_update_request(lib, role, render_tree(original),
                                            render_feedback_block(feedback), true);
    base.tag = update_tag(role, round);
    apply_options(base, opts);
    std::string last_error;
    auto tree = tree_call_with_repairs(lib, backend, trace, base, opts.repair_budget,
                                       last_error);
    if (!tree) {
        trace.add("anomaly", base.tag,
                  "update unparseable after repairs, keeping previous tree");
        return original;
    }
    return *tree;
}

std::string update_assessment_text(const PromptLibrary& lib, AgentRole role,
                                   const std::string& original,
                                   const std::vector<FeedbackItem>& feedback,
                                   int round, Backend& backend, Trace& trace,
                                   const AgentOptions& opts) {
    if (feedback.empty()) return original;
    ChatRequest req = build_update_request(lib, role, original,
                                           render_feedback_block(feedback), false);
    req.tag = update_tag(role, round);
    apply_options(req, opts);
    return traced_complete(backend, trace, req).content;
}

namespace {

struct DecisionAttempt {
    bool ok = false;
    FinalDecision decision;
    FinalDecisionError::Kind kind = FinalDecisionError::Kind::Unparseable;
    std::string error;
};

DecisionAttempt try_parse_decision(const std::string& content,
                                   const DiagnosisOptions& options) {
    DecisionAttempt result;
    std::string body = strip_code_fences(content);
    size_t open = body.find('{');
    size_t close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        result.error = "the reply contains no JSON object";
        return result;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body.substr(open, close - open + 1));
    } catch (const nlohmann::json::exception&) {
        result.error = "the reply is not valid JSON";
        return result;
    }
    if (!j.is_object() || !j.contains("selected_options") || !j.contains("evi_tree")) {
        result.error =
            "the JSON object must contain \"selected_options\" and \"evi_tree\"";
        return result;
    }

    std::string raw_selection;
    if (j["selected_options"].is_array()) {
        std::vector<std::string> parts;
        for (const auto& item : j["selected_options"]) {
            parts.push_back(item.is_string() ? item.get<std::string>() : item.dump());
        }
        raw_selection = join(parts, ",");
    } else if (j["selected_options"].is_string()) {
        raw_selection = j["selected_options"].get<std::string>();
    } else {
        raw_selection = j["selected_options"].dump();
    }

    if (!j["evi_tree"].is_string()) {
        result.error = "\"evi_tree\" must be a string holding the evidence tree";
        return result;
    }
    TreeAttempt tree = try_parse_tree(strip_code_fences(j["evi_tree"].get<std::string>()));
    if (!tree.ok) {
        result.error = "\"evi_tree\" is not a readable evidence tree: " + tree.error;
        return result;
    }

    std::vector<std::string> letters =
        parse_selected_letters(raw_selection, options.letters());
    if (letters.empty()) {
        result.kind = FinalDecisionError::Kind::NoValidLetters;
        result.error = "\"selected_options\" names no valid option letter";
        return result;
    }

    result.ok = true;
    result.decision = {letters, tree.tree, content};
    return result;
}

}  // namespace

FinalDecision final_decision(const PromptLibrary& lib,
                             const std::string& patient_case_json,
                             const std::string& opinions_block,
                             const DiagnosisOptions& options, Backend& backend,
                             Trace& trace, const AgentOptions& opts) {
    ChatRequest base = build_final_request(lib, patient_case_json, opinions_block,
                                           options.render());
    base.tag = final_tag();
    apply_options(base, opts);

    ChatRequest req = base;
    FinalDecisionError::Kind kind = FinalDecisionError::Kind::Unparseable;
    std::string last_error;
    for (int attempt = 0; attempt <= opts.repair_budget; ++attempt) {
        ChatResponse resp = traced_complete(backend, trace, req);
        DecisionAttempt parsed = try_parse_decision(resp.content, options);
        if (parsed.ok) return parsed.decision;
        kind = parsed.kind;
        last_error = parsed.error;
        if (attempt == opts.repair_budget) break;
        trace.add("repair", base.tag, last_error);
        req = build_repair_request(lib, base, resp.content, last_error);
        req.tag = base.tag;
    }
    throw FinalDecisionError(kind, "final decision failed: " + last_error);
}

}  // namespace tor
