#include <filesystem>
#include <functional>
#include <map>

#include "doctest.h"
#include "json.hpp"
#include "support/trace_oracle.hpp"
#include "support/workflow_fixtures.hpp"
#include "tor/io.hpp"
#include "tor/orchestrator.hpp"

using namespace tor;
using tor::testsupport::OracleScenario;
using tor::testsupport::ScriptBuilder;
using tor::testsupport::TagOracleBackend;
using tor::testsupport::fixture_case;
using tor::testsupport::fixture_final_json;
using tor::testsupport::fixture_tree_text;
using tor::testsupport::fixture_updated_tree_text;
using tor::testsupport::predict_call_tags;

namespace {

RunConfig base_config() {
    RunConfig config;
    config.rag_enabled = false;
    return config;
}

AgentRole cyclic_next(AgentRole role) {
    switch (role) {
        case AgentRole::Outpatient: return AgentRole::Laboratory;
        case AgentRole::Laboratory: return AgentRole::Radiology;
        case AgentRole::Radiology: return AgentRole::Pathology;
        default: return AgentRole::Outpatient;
    }
}

// Builds a strict transcript whose entries follow the oracle's predicted tag
// order; `reply_for` receives the tag and its occurrence index (repairs see
// index 1, 2, ...).
Transcript script_from_tags(const std::vector<std::string>& tags,
                            const std::function<std::string(const std::string&, int)>&
                                reply_for) {
    std::map<std::string, int> seen;
    Transcript transcript;
    for (const std::string& tag : tags) {
        transcript.entries.push_back({tag, "", "", reply_for(tag, seen[tag]++)});
    }
    return transcript;
}

std::string tag_role_id(const std::string& tag) {
    return tag.substr(0, tag.find('/'));
}

std::filesystem::path fresh_dir(const std::string& name) {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("a fully participating panel follows the predicted call schedule") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.participates = [](int, int, AgentRole) { return true; };
    scenario.targets = [](int, int, AgentRole role) {
        return std::vector<AgentRole>{cyclic_next(role)};
    };
    std::vector<std::string> predicted = predict_call_tags(scenario);
    REQUIRE(predicted.size() == 45);

    Transcript transcript = script_from_tags(predicted, [](const std::string& tag, int) {
        AgentRole role = *parse_role(tag_role_id(tag));
        if (tag.find("/initial") != std::string::npos) return fixture_tree_text(role);
        if (tag.find("/participate/") != std::string::npos)
            return "Yes, I address the " + role_name(cyclic_next(role)) + " doctor.";
        if (tag.find("/opinion/") != std::string::npos)
            return std::string("Please reconsider the differential.");
        if (tag.find("/update/") != std::string::npos) {
            int round = tag.back() - '0';
            return fixture_updated_tree_text(role, round);
        }
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    CaseResult result = run_case(base_config(), fixture_case(), builtin_label_pool(),
                                 nullptr, backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    CHECK(backend.consumed_count() == 45);
    CHECK(result.selected_letters == std::vector<std::string>{"A"});
    CHECK(result.final_tree.title == "Reasoning Pathway");
    CHECK(result.merged_tree.title == "Merged Reasoning Pathway");
    REQUIRE(result.merged_tree.entries.size() == 1);
    CHECK(result.merged_tree.entries[0].disease == "Revised diagnosis 2");
    CHECK(result.merged_tree.entries[0].analysis.find(
              "[Outpatient Doctor Reasoning Pathway]") != std::string::npos);
    CHECK(result.merged_tree.entries[0].evidence.size() == 1);
}

TEST_CASE("a silent panel runs initials, checks, and the final decision only") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.participates = [](int, int, AgentRole) { return false; };
    scenario.targets = [](int, int, AgentRole) { return std::vector<AgentRole>{}; };
    std::vector<std::string> predicted = predict_call_tags(scenario);
    REQUIRE(predicted.size() == 21);

    Transcript transcript = script_from_tags(predicted, [](const std::string& tag, int) {
        if (tag.find("/initial") != std::string::npos)
            return fixture_tree_text(*parse_role(tag_role_id(tag)));
        if (tag.find("/participate/") != std::string::npos) return std::string("No");
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    CaseResult result = run_case(base_config(), fixture_case(), builtin_label_pool(),
                                 nullptr, backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    CHECK(result.trace.count("response") == result.trace.count("call"));
    CHECK(result.trace.count("config") == 1);
    // snapshots: one per initial, one per role per round, one final
    CHECK(result.trace.count("snapshot") == 4 + 8 + 1);
    // nobody spoke, so every final assessment is the initial tree
    REQUIRE(result.final_assessments.size() == 4);
    for (size_t i = 0; i < result.final_assessments.size(); ++i) {
        AgentRole role = specialist_roles()[i];
        CHECK(result.final_assessments[i].first == role_id(role));
        CHECK(result.final_assessments[i].second ==
              render_tree(parse_tree(fixture_tree_text(role))));
    }
}

TEST_CASE("mixed participation uses named targets or conflict fallbacks") {
    auto initial_label = [](AgentRole role) {
        return role == AgentRole::Pathology ? std::string("Lymphoma")
                                            : std::string("Thyroid carcinoma");
    };

    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.participates = [](int round, int turn, AgentRole role) {
        return round == 1 && turn == 1 &&
               (role == AgentRole::Outpatient || role == AgentRole::Radiology);
    };
    scenario.targets = [](int, int, AgentRole role) -> std::vector<AgentRole> {
        if (role == AgentRole::Outpatient) return {AgentRole::Pathology};
        return {AgentRole::Pathology, AgentRole::Laboratory};
    };
    std::vector<std::string> predicted = predict_call_tags(scenario);
    REQUIRE(predicted.size() == 26);

    Transcript transcript =
        script_from_tags(predicted, [&](const std::string& tag, int) {
            AgentRole role = *parse_role(tag_role_id(tag));
            if (tag.find("/initial") != std::string::npos)
                return fixture_tree_text(role, initial_label(role));
            if (tag.find("/participate/") != std::string::npos) {
                if (tag.find("/1.1") == std::string::npos) return std::string("No");
                // plain yes relies on the conflict fallback; the radiology
                // reply names its targets explicitly
                if (role == AgentRole::Outpatient) return std::string("Yes");
                if (role == AgentRole::Radiology)
                    return std::string(
                        "Yes, I address the Pathology and Laboratory doctors.");
                return std::string("No");
            }
            if (tag.find("/opinion/") != std::string::npos)
                return std::string("The label set looks inconsistent to me.");
            if (tag.find("/update/") != std::string::npos)
                return fixture_tree_text(role, "Thyroid carcinoma");
            return fixture_final_json({"A"});
        });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    CaseResult result = run_case(base_config(), fixture_case(), builtin_label_pool(),
                                 nullptr, backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    CHECK(backend.consumed_count() == backend.entry_count());
    // after the updates every tree carries the same label, so the merge has
    // exactly one entry
    REQUIRE(result.merged_tree.entries.size() == 1);
    CHECK(normalize_label(result.merged_tree.entries[0].disease) ==
          "thyroid carcinoma");
}

TEST_CASE("repaired replies add calls under the same tag") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.participates = [](int, int, AgentRole) { return false; };
    scenario.targets = [](int, int, AgentRole) { return std::vector<AgentRole>{}; };
    scenario.call_counts[initial_tag(AgentRole::Outpatient)] = 2;
    scenario.call_counts[participation_tag(AgentRole::Laboratory, 1, 1)] = 2;
    std::vector<std::string> predicted = predict_call_tags(scenario);
    REQUIRE(predicted.size() == 23);

    Transcript transcript = script_from_tags(predicted, [](const std::string& tag,
                                                           int occurrence) {
        if (tag == initial_tag(AgentRole::Outpatient)) {
            if (occurrence == 0) return std::string("I refuse to use the format.");
            return fixture_tree_text(AgentRole::Outpatient);
        }
        if (tag == participation_tag(AgentRole::Laboratory, 1, 1)) {
            if (occurrence == 0) return std::string("cannot say");
            return std::string("No");
        }
        if (tag.find("/initial") != std::string::npos)
            return fixture_tree_text(*parse_role(tag_role_id(tag)));
        if (tag.find("/participate/") != std::string::npos) return std::string("No");
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    CaseResult result = run_case(base_config(), fixture_case(), builtin_label_pool(),
                                 nullptr, backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    CHECK(result.trace.count("repair") == 2);
    CHECK(result.trace.count("anomaly") == 0);
}

TEST_CASE("disabling cross verification skips the discussion entirely") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.cross_verification = false;
    scenario.participates = [](int, int, AgentRole) { return false; };
    scenario.targets = [](int, int, AgentRole) { return std::vector<AgentRole>{}; };
    std::vector<std::string> predicted = predict_call_tags(scenario);
    REQUIRE(predicted.size() == 5);

    Transcript transcript = script_from_tags(predicted, [](const std::string& tag, int) {
        if (tag.find("/initial") != std::string::npos)
            return fixture_tree_text(*parse_role(tag_role_id(tag)));
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    RunConfig config = base_config();
    config.cross_verification_enabled = false;
    CaseResult result = run_case(config, fixture_case(), builtin_label_pool(), nullptr,
                                 backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    for (const std::string& tag : result.trace.tags("call")) {
        CHECK(tag.find("/participate/") == std::string::npos);
        CHECK(tag.find("/opinion/") == std::string::npos);
        CHECK(tag.find("/update/") == std::string::npos);
    }
    for (size_t i = 0; i < result.final_assessments.size(); ++i) {
        AgentRole role = specialist_roles()[i];
        CHECK(result.final_assessments[i].second ==
              render_tree(parse_tree(fixture_tree_text(role))));
    }
}

TEST_CASE("early exit stops after a round without opinions") {
    std::vector<std::string> expected;
    for (AgentRole role : specialist_roles()) expected.push_back(initial_tag(role));
    for (int turn = 1; turn <= 2; ++turn) {
        for (AgentRole role : specialist_roles()) {
            expected.push_back(participation_tag(role, 1, turn));
        }
    }
    expected.push_back(final_tag());

    Transcript transcript = script_from_tags(expected, [](const std::string& tag, int) {
        if (tag.find("/initial") != std::string::npos)
            return fixture_tree_text(*parse_role(tag_role_id(tag)));
        if (tag.find("/participate/") != std::string::npos) return std::string("No");
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    RunConfig config = base_config();
    config.rounds = 3;
    config.early_exit_enabled = true;
    CaseResult result = run_case(config, fixture_case(), builtin_label_pool(), nullptr,
                                 backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == expected);
    CHECK(backend.consumed_count() == 13);
}

TEST_CASE("strict round counting runs one discussion round fewer") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.rounds = 1;
    scenario.participates = [](int, int, AgentRole) { return false; };
    scenario.targets = [](int, int, AgentRole) { return std::vector<AgentRole>{}; };
    std::vector<std::string> predicted = predict_call_tags(scenario);

    Transcript transcript = script_from_tags(predicted, [](const std::string& tag, int) {
        if (tag.find("/initial") != std::string::npos)
            return fixture_tree_text(*parse_role(tag_role_id(tag)));
        if (tag.find("/participate/") != std::string::npos) return std::string("No");
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    RunConfig config = base_config();
    config.rounds = 2;
    config.strict_rounds = true;
    CaseResult result = run_case(config, fixture_case(), builtin_label_pool(), nullptr,
                                 backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    for (const std::string& tag : result.trace.tags("call")) {
        CHECK(tag.find("/2.") == std::string::npos);
        CHECK(tag.find("/update/2") == std::string::npos);
    }
}

TEST_CASE("free-text mode addresses all peers when none are named") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.rounds = 1;
    scenario.turns = 1;
    scenario.participates = [](int, int, AgentRole role) {
        return role == AgentRole::Outpatient;
    };
    scenario.targets = [](int, int, AgentRole) {
        return std::vector<AgentRole>{AgentRole::Laboratory, AgentRole::Radiology,
                                      AgentRole::Pathology};
    };
    std::vector<std::string> predicted = predict_call_tags(scenario);
    REQUIRE(predicted.size() == 15);

    Transcript transcript = script_from_tags(predicted, [](const std::string& tag, int) {
        if (tag.find("/initial") != std::string::npos)
            return std::string("Free-text assessment from ") + tag_role_id(tag) + ".";
        if (tag.find("/participate/") != std::string::npos) {
            if (tag_role_id(tag) == "outpatient") return std::string("Yes");
            return std::string("No");
        }
        if (tag.find("/opinion/") != std::string::npos)
            return std::string("A broader differential seems warranted.");
        if (tag.find("/update/") != std::string::npos)
            return std::string("Revised free-text assessment from ") +
                   tag_role_id(tag) + ".";
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    RunConfig config = base_config();
    config.rounds = 1;
    config.turns = 1;
    config.evidence_tree_enabled = false;
    CaseResult result = run_case(config, fixture_case(), builtin_label_pool(), nullptr,
                                 backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == predicted);
    CHECK(result.final_assessments[0].second ==
          "Free-text assessment from outpatient.");
    CHECK(result.final_assessments[1].second ==
          "Revised free-text assessment from laboratory.");
    CHECK(result.merged_tree == EvidenceTree{});

    nlohmann::json j = nlohmann::json::parse(case_result_to_json_text(result));
    CHECK(j["merged_tree"].is_null());
    CHECK(j["final_tree"].is_object());
}

TEST_CASE("identical runs produce identical artifacts") {
    RunConfig config = base_config();
    config.seed = 41;

    auto run_once = [&]() {
        TagOracleBackend backend;
        return run_case(config, fixture_case(), builtin_label_pool(), nullptr, backend,
                        PromptLibrary::builtin());
    };
    CaseResult a = run_once();
    CaseResult b = run_once();
    CHECK(case_result_to_json_text(a) == case_result_to_json_text(b));
    CHECK(a.trace.to_jsonl() == b.trace.to_jsonl());
}

TEST_CASE("recorded runs replay to identical artifacts") {
    RunConfig config = base_config();
    config.seed = 7;

    TagOracleBackend inner;
    RecordingBackend recorder(inner);
    CaseResult recorded_run = run_case(config, fixture_case(), builtin_label_pool(),
                                       nullptr, recorder, PromptLibrary::builtin());

    auto dir = fresh_dir("tor_record_replay");
    std::string transcript_path = (dir / "session.jsonl").string();
    recorder.save(transcript_path);

    ScriptedBackend replay(load_transcript(transcript_path), ReplayMode::Strict);
    CaseResult replayed_run = run_case(config, fixture_case(), builtin_label_pool(),
                                       nullptr, replay, PromptLibrary::builtin());

    CHECK(case_result_to_json_text(recorded_run) ==
          case_result_to_json_text(replayed_run));
    CHECK(recorded_run.trace.to_jsonl() == replayed_run.trace.to_jsonl());
    CHECK(replay.consumed_count() == replay.entry_count());
}

TEST_CASE("batch failures are isolated per case") {
    std::vector<CaseRecord> cases = {fixture_case("case-a"), fixture_case("case-b"),
                                     fixture_case("case-c")};

    ScriptBuilder script;
    script.add("*/initial", fixture_tree_text(AgentRole::Outpatient));
    script.add(final_tag(), "no structured answer here", "case-b");
    script.add(final_tag(), fixture_final_json({"A"}));
    ScriptedBackend backend(script.transcript, ReplayMode::Lenient);

    RunConfig config = base_config();
    config.cross_verification_enabled = false;
    BatchResult batch = run_batch(config, cases, builtin_label_pool(), nullptr, backend,
                                  PromptLibrary::builtin());

    REQUIRE(batch.results.size() == 2);
    REQUIRE(batch.failures.size() == 1);
    CHECK(batch.results[0].case_id == "case-a");
    CHECK(batch.results[1].case_id == "case-c");
    CHECK(batch.failures[0].case_id == "case-b");
    CHECK(batch.failures[0].error.find("final decision failed") != std::string::npos);
}

TEST_CASE("parallel batches match sequential output") {
    std::vector<CaseRecord> cases = {fixture_case("case-a"), fixture_case("case-b"),
                                     fixture_case("case-c"), fixture_case("case-d")};

    auto run_with_jobs = [&](int jobs) {
        TagOracleBackend backend;
        RunConfig config = base_config();
        config.jobs = jobs;
        return run_batch(config, cases, builtin_label_pool(), nullptr, backend,
                         PromptLibrary::builtin());
    };

    BatchResult sequential = run_with_jobs(1);
    BatchResult parallel = run_with_jobs(3);
    REQUIRE(sequential.results.size() == 4);
    REQUIRE(parallel.results.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(case_result_to_json_text(sequential.results[i]) ==
              case_result_to_json_text(parallel.results[i]));
        CHECK(sequential.results[i].trace.to_jsonl() ==
              parallel.results[i].trace.to_jsonl());
    }
}

TEST_CASE("case seeds vary with both the run seed and the case id") {
    CHECK(derive_case_seed(0, "case-a") != derive_case_seed(0, "case-b"));
    CHECK(derive_case_seed(1, "case-a") != derive_case_seed(2, "case-a"));
    CHECK(derive_case_seed(99, "case-a") == derive_case_seed(99, "case-a"));
}

TEST_CASE("invalid configurations are rejected before any backend call") {
    ScriptedBackend backend({}, ReplayMode::Strict);
    auto expect_invalid = [&](RunConfig config) {
        CHECK_THROWS_AS(run_case(config, fixture_case(), builtin_label_pool(), nullptr,
                                 backend, PromptLibrary::builtin()),
                        InvalidConfig);
    };

    RunConfig config = base_config();
    config.rounds = 0;
    expect_invalid(config);

    config = base_config();
    config.turns = 0;
    expect_invalid(config);

    config = base_config();
    config.active_roles = {};
    expect_invalid(config);

    config = base_config();
    config.active_roles = {AgentRole::Outpatient, AgentRole::Outpatient};
    expect_invalid(config);

    config = base_config();
    config.active_roles = {AgentRole::Outpatient, AgentRole::Moderator};
    expect_invalid(config);

    config = base_config();
    config.active_roles = {AgentRole::Laboratory, AgentRole::Radiology};
    expect_invalid(config);

    config = base_config();
    config.target_mode = "vote";
    expect_invalid(config);

    config = base_config();
    config.retrieval_k = -1;
    expect_invalid(config);

    config = base_config();
    config.snippet_token_budget = 0;
    expect_invalid(config);

    config = base_config();
    config.repair_budget = -1;
    expect_invalid(config);

    config = base_config();
    config.jobs = 0;
    expect_invalid(config);

    CHECK(backend.consumed_count() == 0);
}

TEST_CASE("model target mode asks the backend who to address") {
    OracleScenario scenario;
    scenario.roles = specialist_roles();
    scenario.rounds = 1;
    scenario.turns = 1;
    scenario.participates = [](int, int, AgentRole role) {
        return role == AgentRole::Radiology;
    };
    scenario.targets = [](int, int, AgentRole) {
        return std::vector<AgentRole>{AgentRole::Outpatient};
    };
    std::vector<std::string> predicted = predict_call_tags(scenario);
    // the oracle does not model target calls; inject the expected one by hand
    std::vector<std::string> expected;
    for (const std::string& tag : predicted) {
        if (tag == opinion_tag(AgentRole::Radiology, 1, 1)) {
            expected.push_back(target_tag(AgentRole::Radiology, 1, 1));
        }
        expected.push_back(tag);
    }

    Transcript transcript = script_from_tags(expected, [](const std::string& tag, int) {
        if (tag.find("/initial") != std::string::npos)
            return fixture_tree_text(*parse_role(tag_role_id(tag)));
        if (tag.find("/participate/") != std::string::npos) {
            if (tag_role_id(tag) == "radiology")
                return std::string("Yes, the imaging is being misread.");
            return std::string("No");
        }
        if (tag.find("/target/") != std::string::npos)
            return std::string("The Outpatient doctor should hear this.");
        if (tag.find("/opinion/") != std::string::npos)
            return std::string("The nodule morphology points elsewhere.");
        if (tag.find("/update/") != std::string::npos)
            return fixture_updated_tree_text(*parse_role(tag_role_id(tag)), 1);
        return fixture_final_json({"A"});
    });
    ScriptedBackend backend(transcript, ReplayMode::Strict);

    RunConfig config = base_config();
    config.rounds = 1;
    config.turns = 1;
    config.target_mode = "model";
    CaseResult result = run_case(config, fixture_case(), builtin_label_pool(), nullptr,
                                 backend, PromptLibrary::builtin());

    CHECK(result.trace.tags("call") == expected);
    CHECK(backend.consumed_count() == backend.entry_count());
}

TEST_CASE("case results and traces are written next to each other") {
    TagOracleBackend backend;
    RunConfig config = base_config();
    config.cross_verification_enabled = false;
    CaseResult result = run_case(config, fixture_case("case-write"),
                                 builtin_label_pool(), nullptr, backend,
                                 PromptLibrary::builtin());

    auto dir = fresh_dir("tor_case_write");
    write_case_result(dir.string(), result);
    CHECK(read_text_file((dir / "case-write.result.json").string()) ==
          case_result_to_json_text(result));
    CHECK(read_text_file((dir / "case-write.trace.jsonl").string()) ==
          result.trace.to_jsonl());

    nlohmann::json j =
        nlohmann::json::parse(read_text_file((dir / "case-write.result.json").string()));
    CHECK(j["case_id"] == "case-write");
    REQUIRE(j["options"].is_array());
    int gold_count = 0;
    for (const auto& option : j["options"]) {
        if (option["is_gold"].get<bool>()) ++gold_count;
    }
    CHECK(gold_count == 1);
    CHECK(j["gold_letters"].size() == 1);
    CHECK(j["final_assessments"].size() == 4);
}
