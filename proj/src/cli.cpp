#include "tor/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tor/agents.hpp"
#include "tor/case_model.hpp"
#include "tor/errors.hpp"
#include "tor/evaluation.hpp"
#include "tor/evidence_tree.hpp"
#include "tor/io.hpp"
#include "tor/llm_backend.hpp"
#include "tor/orchestrator.hpp"
#include "tor/prompts.hpp"
#include "tor/retrieval.hpp"
#include "tor/roles.hpp"

namespace tor {

namespace {

void require_clobber(const std::string& path, bool force) {
    if (!force && file_exists(path)) {
        throw InvalidConfig("refusing to overwrite existing " + path +
                            " (use --force)");
    }
}

std::string env_value(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

std::vector<AgentRole> parse_roles_csv(const std::string& csv) {
    std::vector<AgentRole> roles;
    for (const auto& part : split(csv, ',')) {
        std::string name = trim(part);
        if (name.empty()) continue;
        auto role = parse_role(name);
        if (!role) throw InvalidConfig("unknown role: " + name);
        roles.push_back(*role);
    }
    if (roles.empty()) throw InvalidConfig("--roles names no role");
    return roles;
}

// ---------------------------------------------------------------------------
// run / record

struct RunCmd {
    std::string cases_path;
    std::string out_dir;
    std::string pool_path;
    std::string corpus_path;
    std::string index_path;
    std::string config_path;
    std::string backend = "scripted";
    std::string transcript_path;
    bool lenient = false;
    std::string record_path;
    std::string base_url;
    std::string model = "tor-default";
    int max_retries = 3;
    std::string roles_csv;
    bool force = false;
    bool force_http = false;  // the record subcommand always talks HTTP

    RunConfig config;
    bool no_rag = false;
    bool no_cross_verification = false;
    bool no_evidence_tree = false;
    bool early_exit = false;
    bool strict_rounds = false;
    int distractor_count = -1;

    // option handles, used to tell "flag given" from "default"
    std::map<std::string, CLI::Option*> opts;

    bool given(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void apply_config_file(RunCmd& cmd, const std::string& path, RunConfig& config) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw InvalidConfig("config file " + path + ": not an object");

    for (const auto& [key, value] : j.items()) {
        if (key == "rounds") config.rounds = value.get<int>();
        else if (key == "turns") config.turns = value.get<int>();
        else if (key == "active_roles") {
            std::vector<AgentRole> roles;
            for (const auto& item : value) {
                auto role = parse_role(item.get<std::string>());
                if (!role) throw InvalidConfig("config file: unknown role " + item.dump());
                roles.push_back(*role);
            }
            config.active_roles = roles;
        }
        else if (key == "seed") config.seed = value.get<std::uint64_t>();
        else if (key == "retrieval_k") config.retrieval_k = value.get<int>();
        else if (key == "query_token_budget") config.query_token_budget = value.get<int>();
        else if (key == "snippet_token_budget") config.snippet_token_budget = value.get<int>();
        else if (key == "rag_enabled") config.rag_enabled = value.get<bool>();
        else if (key == "cross_verification_enabled") config.cross_verification_enabled = value.get<bool>();
        else if (key == "evidence_tree_enabled") config.evidence_tree_enabled = value.get<bool>();
        else if (key == "early_exit_enabled") config.early_exit_enabled = value.get<bool>();
        else if (key == "strict_rounds") config.strict_rounds = value.get<bool>();
        else if (key == "target_mode") config.target_mode = value.get<std::string>();
        else if (key == "repair_budget") config.repair_budget = value.get<int>();
        else if (key == "temperature") config.temperature = value.get<double>();
        else if (key == "max_tokens") config.max_tokens = value.get<int>();
        else if (key == "distractor_count") {
            if (value.is_null()) config.distractor_count.reset();
            else config.distractor_count = value.get<int>();
        }
        else if (key == "template_dir") config.template_dir = value.get<std::string>();
        else if (key == "jobs") config.jobs = value.get<int>();
        else if (key == "backend") { if (!cmd.given("--backend")) cmd.backend = value.get<std::string>(); }
        else if (key == "transcript") { if (!cmd.given("--transcript")) cmd.transcript_path = value.get<std::string>(); }
        else if (key == "base_url") { if (!cmd.given("--base-url")) cmd.base_url = value.get<std::string>(); }
        else if (key == "model") { if (!cmd.given("--model")) cmd.model = value.get<std::string>(); }
        else if (key == "max_retries") { if (!cmd.given("--max-retries")) cmd.max_retries = value.get<int>(); }
        else throw InvalidConfig("config file: unknown key \"" + key + "\"");
    }
}

// Precedence: built-in defaults < config file < command line flags < env.
RunConfig resolve_config(RunCmd& cmd) {
    RunConfig config;

    std::string config_path = cmd.config_path;
    if (config_path.empty()) config_path = env_value("TOR_CONFIG");
    if (!config_path.empty()) apply_config_file(cmd, config_path, config);

    if (cmd.given("--seed")) config.seed = cmd.config.seed;
    if (cmd.given("--rounds")) config.rounds = cmd.config.rounds;
    if (cmd.given("--turns")) config.turns = cmd.config.turns;
    if (cmd.given("--roles")) config.active_roles = parse_roles_csv(cmd.roles_csv);
    if (cmd.given("--retrieval-k")) config.retrieval_k = cmd.config.retrieval_k;
    if (cmd.given("--query-budget")) config.query_token_budget = cmd.config.query_token_budget;
    if (cmd.given("--snippet-budget")) config.snippet_token_budget = cmd.config.snippet_token_budget;
    if (cmd.given("--jobs")) config.jobs = cmd.config.jobs;
    if (cmd.no_rag) config.rag_enabled = false;
    if (cmd.no_cross_verification) config.cross_verification_enabled = false;
    if (cmd.no_evidence_tree) config.evidence_tree_enabled = false;
    if (cmd.early_exit) config.early_exit_enabled = true;
    if (cmd.strict_rounds) config.strict_rounds = true;
    if (cmd.given("--target-mode")) config.target_mode = cmd.config.target_mode;
    if (cmd.given("--repair-budget")) config.repair_budget = cmd.config.repair_budget;
    if (cmd.given("--temperature")) config.temperature = cmd.config.temperature;
    if (cmd.given("--max-tokens")) config.max_tokens = cmd.config.max_tokens;
    if (cmd.given("--distractor-count")) config.distractor_count = cmd.distractor_count;
    if (cmd.given("--templates")) config.template_dir = cmd.config.template_dir;

    std::string env_base = env_value("TOR_BASE_URL");
    if (!env_base.empty()) cmd.base_url = env_base;
    return config;
}

int cmd_run(RunCmd& cmd, std::ostream& out, std::ostream& err) {
    RunConfig config = resolve_config(cmd);
    if (cmd.force_http) cmd.backend = "http";

    // Deterministic replay and transcript recording both depend on a stable
    // request order, so they pin execution to one worker.
    bool scripted_strict = cmd.backend == "scripted" && !cmd.lenient;
    if (config.jobs > 1 && (scripted_strict || !cmd.record_path.empty())) {
        out << "note: jobs reset to 1 (strict replay or recording in effect)\n";
        config.jobs = 1;
    }
    validate_config(config);

    std::unique_ptr<Backend> inner;
    if (cmd.backend == "scripted") {
        if (cmd.transcript_path.empty()) {
            throw InvalidConfig("the scripted backend requires --transcript");
        }
        inner = std::make_unique<ScriptedBackend>(
            load_transcript(cmd.transcript_path),
            cmd.lenient ? ReplayMode::Lenient : ReplayMode::Strict);
    } else if (cmd.backend == "http") {
        if (cmd.base_url.empty()) {
            throw InvalidConfig("the http backend requires --base-url or TOR_BASE_URL");
        }
        HttpBackendConfig http;
        http.base_url = cmd.base_url;
        http.model = cmd.model;
        http.retry.max_retries = cmd.max_retries;
        inner = std::make_unique<HttpBackend>(http);
    } else {
        throw InvalidConfig("backend must be \"scripted\" or \"http\"");
    }

    std::unique_ptr<RecordingBackend> recorder;
    Backend* backend = inner.get();
    if (!cmd.record_path.empty()) {
        require_clobber(cmd.record_path, cmd.force);
        recorder = std::make_unique<RecordingBackend>(*inner, cmd.record_path);
        backend = recorder.get();
    }

    std::vector<CaseRecord> cases = load_cases(cmd.cases_path);
    LabelPool pool = cmd.pool_path.empty() ? builtin_label_pool()
                                           : load_label_pool(cmd.pool_path);

    std::optional<Index> index;
    if (!cmd.index_path.empty()) {
        index = load_index(cmd.index_path);
    } else if (!cmd.corpus_path.empty()) {
        index = index_corpus(load_corpus(cmd.corpus_path));
    }

    PromptLibrary lib = config.template_dir.empty()
                            ? PromptLibrary::builtin()
                            : PromptLibrary::with_overrides(config.template_dir);

    std::filesystem::path out_dir(cmd.out_dir);
    require_clobber((out_dir / "report.json").string(), cmd.force);
    ensure_dir(cmd.out_dir);

    out << run_config_to_json_text(config);
    write_text_file((out_dir / "run_config.json").string(),
                    run_config_to_json_text(config));

    BatchResult batch = run_batch(config, cases, pool, index ? &*index : nullptr,
                                  *backend, lib);

    std::vector<CaseScore> scores;
    for (const auto& result : batch.results) {
        write_case_result(cmd.out_dir, result);
        scores.push_back(
            score_case(result.selected_letters, result.gold_letters, result.case_id));
    }

    AggregateReport report;
    if (!scores.empty()) report = aggregate(scores);
    write_text_file((out_dir / "report.json").string(), report_to_json_text(report));
    write_text_file((out_dir / "report.txt").string(), report_to_table(report));

    out << report_to_table(report);
    out << "results written to " << cmd.out_dir << "\n";

    if (recorder) recorder->save(cmd.record_path);

    for (const auto& failure : batch.failures) {
        err << failure.error << "\n";
    }
    return batch.failures.empty() ? 0 : 1;
}

void register_run_options(CLI::App* cmd, RunCmd& o, bool recording_mode) {
    o.opts["--cases"] =
        cmd->add_option("--cases", o.cases_path, "Case records JSON file")->required();
    o.opts["--out"] =
        cmd->add_option("--out", o.out_dir,
                        "Output directory for results, traces, and reports")
            ->required();
    o.opts["--pool"] = cmd->add_option(
        "--pool", o.pool_path, "Label pool JSON (defaults to the built-in pool)");
    o.opts["--corpus"] = cmd->add_option("--corpus", o.corpus_path,
                                         "Reference corpus JSONL, indexed in memory");
    o.opts["--index"] =
        cmd->add_option("--index", o.index_path, "Prebuilt retrieval index file");
    o.opts["--config"] = cmd->add_option(
        "--config", o.config_path, "JSON config file (TOR_CONFIG when omitted)");
    if (recording_mode) {
        o.opts["--record"] =
            cmd->add_option("--record", o.record_path, "Transcript file to write")
                ->required();
    } else {
        o.opts["--backend"] =
            cmd->add_option("--backend", o.backend, "Backend kind: scripted or http")
                ->check(CLI::IsMember({"scripted", "http"}));
        o.opts["--transcript"] = cmd->add_option(
            "--transcript", o.transcript_path,
            "Transcript JSONL replayed by the scripted backend");
        cmd->add_flag("--lenient", o.lenient,
                      "Scripted replay matches any entry instead of strict order");
        o.opts["--record"] = cmd->add_option(
            "--record", o.record_path, "Record every exchange to this transcript file");
    }
    o.opts["--base-url"] = cmd->add_option(
        "--base-url", o.base_url, "HTTP backend base URL (TOR_BASE_URL overrides)");
    o.opts["--model"] =
        cmd->add_option("--model", o.model, "Model name sent to the HTTP backend");
    o.opts["--max-retries"] =
        cmd->add_option("--max-retries", o.max_retries, "HTTP retry budget");
    o.opts["--seed"] = cmd->add_option("--seed", o.config.seed, "Run seed");
    o.opts["--rounds"] = cmd->add_option("--rounds", o.config.rounds, "Discussion rounds");
    o.opts["--turns"] = cmd->add_option("--turns", o.config.turns, "Turns per round");
    o.opts["--roles"] = cmd->add_option(
        "--roles", o.roles_csv, "Active specialist roles, comma separated");
    o.opts["--retrieval-k"] = cmd->add_option(
        "--retrieval-k", o.config.retrieval_k, "References retrieved per role");
    o.opts["--query-budget"] = cmd->add_option(
        "--query-budget", o.config.query_token_budget, "Query token budget");
    o.opts["--snippet-budget"] = cmd->add_option(
        "--snippet-budget", o.config.snippet_token_budget, "Snippet token budget");
    o.opts["--jobs"] =
        cmd->add_option("--jobs", o.config.jobs, "Cases processed in parallel");
    cmd->add_flag("--no-rag", o.no_rag, "Disable reference retrieval");
    cmd->add_flag("--no-cross-verification", o.no_cross_verification,
                  "Skip the discussion phase");
    cmd->add_flag("--no-evidence-tree", o.no_evidence_tree,
                  "Use free-text assessments instead of trees");
    cmd->add_flag("--early-exit", o.early_exit,
                  "Stop discussing after a round with no opinions");
    cmd->add_flag("--strict-rounds", o.strict_rounds,
                  "Count the update round against the round budget");
    o.opts["--target-mode"] =
        cmd->add_option("--target-mode", o.config.target_mode,
                        "How opinion targets are chosen: parse or model")
            ->check(CLI::IsMember({"parse", "model"}));
    o.opts["--repair-budget"] = cmd->add_option(
        "--repair-budget", o.config.repair_budget, "Format repairs per call");
    o.opts["--temperature"] =
        cmd->add_option("--temperature", o.config.temperature, "Sampling temperature");
    o.opts["--max-tokens"] = cmd->add_option(
        "--max-tokens", o.config.max_tokens, "Completion token cap (0 = backend default)");
    o.opts["--distractor-count"] = cmd->add_option(
        "--distractor-count", o.distractor_count,
        "Distractor options per case (default max(3, gold count))");
    o.opts["--templates"] = cmd->add_option(
        "--templates", o.config.template_dir, "Prompt template override directory");
    cmd->add_flag("--force", o.force, "Overwrite existing outputs");
}

// ---------------------------------------------------------------------------
// validate

struct ValidateCmd {
    std::string cases_path;
    std::string corpus_path;
    std::string pool_path;
    std::string templates_dir;
};

int cmd_validate(const ValidateCmd& cmd, std::ostream& out, std::ostream& err) {
    int problems = 0;
    try {
        auto cases = load_cases(cmd.cases_path);
        out << "cases: " << cases.size() << " records OK\n";
    } catch (const std::exception& e) {
        err << "cases: " << e.what() << "\n";
        ++problems;
    }
    if (!cmd.corpus_path.empty()) {
        try {
            Corpus corpus = load_corpus(cmd.corpus_path);
            out << "corpus: " << corpus.docs.size() << " documents OK\n";
        } catch (const std::exception& e) {
            err << "corpus: " << e.what() << "\n";
            ++problems;
        }
    }
    if (!cmd.pool_path.empty()) {
        try {
            LabelPool pool = load_label_pool(cmd.pool_path);
            out << "pool: " << pool.size() << " departments OK\n";
        } catch (const std::exception& e) {
            err << "pool: " << e.what() << "\n";
            ++problems;
        }
    }
    try {
        PromptLibrary lib = cmd.templates_dir.empty()
                                ? PromptLibrary::builtin()
                                : PromptLibrary::with_overrides(cmd.templates_dir);
        std::vector<std::string> template_problems = lib.check();
        for (const auto& problem : template_problems) {
            err << "templates: " << problem << "\n";
        }
        problems += static_cast<int>(template_problems.size());
        if (template_problems.empty()) {
            out << "templates: " << PromptLibrary::template_names().size() << " OK\n";
        }
    } catch (const std::exception& e) {
        err << "templates: " << e.what() << "\n";
        ++problems;
    }
    return problems == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// gen-cases / index

struct GenCasesCmd {
    int count = 10;
    std::uint64_t seed = 0;
    std::string out_path;
    bool force = false;
};

int cmd_gen_cases(const GenCasesCmd& cmd, std::ostream& out) {
    if (cmd.count <= 0) throw InvalidConfig("--count must be positive");
    require_clobber(cmd.out_path, cmd.force);
    std::vector<CaseRecord> cases = generate_cases(cmd.count, cmd.seed);
    save_cases(cases, cmd.out_path);
    out << "wrote " << cases.size() << " cases to " << cmd.out_path << "\n";
    return 0;
}

struct IndexCmd {
    std::string corpus_path;
    std::string out_path;
    double k1 = 1.2;
    double b = 0.75;
    bool force = false;
};

int cmd_index(const IndexCmd& cmd, std::ostream& out) {
    require_clobber(cmd.out_path, cmd.force);
    Corpus corpus = load_corpus(cmd.corpus_path);
    Index index = index_corpus(corpus, {cmd.k1, cmd.b});
    save_index(index, cmd.out_path);
    out << "indexed " << index.docs.size() << " documents, "
        << index.postings.size() << " terms -> " << cmd.out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// tree

struct TreeCmd {
    std::string in_path;
    std::vector<std::string> in_paths;
    std::string left_path;
    std::string right_path;
    std::string out_path;
    std::string title = "Merged Reasoning Pathway";
    bool as_json = false;
    bool force = false;
};

void emit(const std::string& text, const std::string& out_path, bool force,
          std::ostream& out) {
    if (out_path.empty()) {
        out << text;
    } else {
        require_clobber(out_path, force);
        write_text_file(out_path, text);
    }
}

int cmd_tree_parse(const TreeCmd& cmd, std::ostream& out) {
    EvidenceTree tree = parse_tree(read_text_file(cmd.in_path));
    std::string text = cmd.as_json ? tree_to_json_text(tree, true) + "\n"
                                   : render_tree(tree);
    emit(text, cmd.out_path, cmd.force, out);
    return 0;
}

int cmd_tree_render(const TreeCmd& cmd, std::ostream& out) {
    EvidenceTree tree = tree_from_json_text(read_text_file(cmd.in_path));
    emit(render_tree(tree), cmd.out_path, cmd.force, out);
    return 0;
}

int cmd_tree_diff(const TreeCmd& cmd, std::ostream& out) {
    EvidenceTree left = parse_tree(read_text_file(cmd.left_path));
    EvidenceTree right = parse_tree(read_text_file(cmd.right_path));
    ConflictSet diff = diff_trees(left, right);
    if (cmd.as_json) {
        nlohmann::ordered_json j;
        j["only_in_left"] = diff.only_in_left;
        j["only_in_right"] = diff.only_in_right;
        j["shared"] = diff.shared;
        out << j.dump(2) << "\n";
        return 0;
    }
    auto section = [&](const char* name, const std::vector<std::string>& labels) {
        out << name << " (" << labels.size() << "):\n";
        for (const auto& label : labels) out << "  " << label << "\n";
    };
    section("only in left", diff.only_in_left);
    section("only in right", diff.only_in_right);
    section("shared", diff.shared);
    return 0;
}

int cmd_tree_merge(const TreeCmd& cmd, std::ostream& out) {
    std::vector<EvidenceTree> trees;
    for (const auto& path : cmd.in_paths) {
        trees.push_back(parse_tree(read_text_file(path)));
    }
    EvidenceTree merged = merge_trees(trees, cmd.title);
    std::string text = cmd.as_json ? tree_to_json_text(merged, true) + "\n"
                                   : render_tree(merged);
    emit(text, cmd.out_path, cmd.force, out);
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalCmd {
    std::string results_dir;
    std::string human_csv;
    std::string out_path;
    bool force = false;
};

int cmd_eval(const EvalCmd& cmd, std::ostream& out) {
    std::vector<std::string> files;
    {
        std::error_code ec;
        std::filesystem::directory_iterator it(cmd.results_dir, ec);
        if (ec) throw IoError("cannot read directory " + cmd.results_dir);
        for (const auto& entry : it) {
            std::string name = entry.path().filename().string();
            if (name.size() > 12 &&
                name.compare(name.size() - 12, 12, ".result.json") == 0) {
                files.push_back(entry.path().string());
            }
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw InvalidConfig("no *.result.json files under " + cmd.results_dir);
    }

    std::vector<CaseScore> scores;
    for (const auto& path : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ": " + e.what());
        }
        scores.push_back(score_case(
            j.at("selected_letters").get<std::vector<std::string>>(),
            j.at("gold_letters").get<std::vector<std::string>>(),
            j.at("case_id").get<std::string>()));
    }

    AggregateReport report = aggregate(scores);
    if (!cmd.human_csv.empty()) report.human = load_human_scores_csv(cmd.human_csv);

    out << report_to_table(report);
    if (!cmd.out_path.empty()) {
        require_clobber(cmd.out_path, cmd.force);
        write_text_file(cmd.out_path, report_to_json_text(report));
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct CliState {
    RunCmd run;
    RunCmd record;
    ValidateCmd validate;
    GenCasesCmd gen_cases;
    IndexCmd index;
    TreeCmd tree;
    EvalCmd eval;
    int exit_code = 0;
};

std::unique_ptr<CLI::App> build_app(CliState& state, std::ostream& out,
                                    std::ostream& err) {
    auto app = std::make_unique<CLI::App>(
        "Multi-agent diagnostic workflows over evidence trees");
    app->name("tor");
    app->require_subcommand(0, 1);
    app->footer(
        "Environment:\n"
        "  TOR_API_KEY   bearer token for the HTTP backend\n"
        "  TOR_BASE_URL  overrides --base-url\n"
        "  TOR_CONFIG    config file used when --config is absent");

    CLI::App* run_cmd =
        app->add_subcommand("run", "Run the diagnostic workflow over a case file");
    register_run_options(run_cmd, state.run, false);
    run_cmd->callback([&] { state.exit_code = cmd_run(state.run, out, err); });

    CLI::App* record_cmd = app->add_subcommand(
        "record", "Run against the HTTP backend while recording a transcript");
    register_run_options(record_cmd, state.record, true);
    record_cmd->callback([&] {
        state.record.force_http = true;
        state.exit_code = cmd_run(state.record, out, err);
    });

    CLI::App* validate_cmd =
        app->add_subcommand("validate", "Check case, corpus, pool, and template files");
    validate_cmd->add_option("--cases", state.validate.cases_path, "Case records JSON file")
        ->required();
    validate_cmd->add_option("--corpus", state.validate.corpus_path,
                             "Reference corpus JSONL");
    validate_cmd->add_option("--pool", state.validate.pool_path, "Label pool JSON");
    validate_cmd->add_option("--templates", state.validate.templates_dir,
                             "Prompt template override directory");
    validate_cmd->callback(
        [&] { state.exit_code = cmd_validate(state.validate, out, err); });

    CLI::App* gen_cmd =
        app->add_subcommand("gen-cases", "Generate deterministic synthetic cases");
    gen_cmd->add_option("--count", state.gen_cases.count, "Cases to generate");
    gen_cmd->add_option("--seed", state.gen_cases.seed, "Generator seed");
    gen_cmd->add_option("--out", state.gen_cases.out_path, "Output case file")->required();
    gen_cmd->add_flag("--force", state.gen_cases.force, "Overwrite existing outputs");
    gen_cmd->callback([&] { state.exit_code = cmd_gen_cases(state.gen_cases, out); });

    CLI::App* index_cmd =
        app->add_subcommand("index", "Build a retrieval index from a corpus");
    index_cmd->add_option("--corpus", state.index.corpus_path, "Reference corpus JSONL")
        ->required();
    index_cmd->add_option("--out", state.index.out_path, "Output index file")->required();
    index_cmd->add_option("--k1", state.index.k1, "Term frequency saturation");
    index_cmd->add_option("--b", state.index.b, "Length normalization strength");
    index_cmd->add_flag("--force", state.index.force, "Overwrite existing outputs");
    index_cmd->callback([&] { state.exit_code = cmd_index(state.index, out); });

    CLI::App* tree_cmd = app->add_subcommand("tree", "Evidence tree utilities");
    tree_cmd->require_subcommand(1);

    CLI::App* tree_parse = tree_cmd->add_subcommand(
        "parse", "Parse loosely formatted tree text into canonical form");
    tree_parse->add_option("--in", state.tree.in_path, "Tree text file")->required();
    tree_parse->add_flag("--json", state.tree.as_json, "Emit JSON instead of text");
    tree_parse->add_option("--out", state.tree.out_path, "Output file (stdout otherwise)");
    tree_parse->add_flag("--force", state.tree.force, "Overwrite existing outputs");
    tree_parse->callback([&] { state.exit_code = cmd_tree_parse(state.tree, out); });

    CLI::App* tree_render =
        tree_cmd->add_subcommand("render", "Render a tree JSON file as canonical text");
    tree_render->add_option("--in", state.tree.in_path, "Tree JSON file")->required();
    tree_render->add_option("--out", state.tree.out_path, "Output file (stdout otherwise)");
    tree_render->add_flag("--force", state.tree.force, "Overwrite existing outputs");
    tree_render->callback([&] { state.exit_code = cmd_tree_render(state.tree, out); });

    CLI::App* tree_diff =
        tree_cmd->add_subcommand("diff", "Compare the diagnoses of two trees");
    tree_diff->add_option("--left", state.tree.left_path, "Left tree text file")->required();
    tree_diff->add_option("--right", state.tree.right_path, "Right tree text file")
        ->required();
    tree_diff->add_flag("--json", state.tree.as_json, "Emit JSON instead of text");
    tree_diff->callback([&] { state.exit_code = cmd_tree_diff(state.tree, out); });

    CLI::App* tree_merge =
        tree_cmd->add_subcommand("merge", "Merge trees into one attributed tree");
    tree_merge->add_option("--in", state.tree.in_paths, "Tree text files")->required();
    tree_merge->add_option("--title", state.tree.title, "Title of the merged tree");
    tree_merge->add_flag("--json", state.tree.as_json, "Emit JSON instead of text");
    tree_merge->add_option("--out", state.tree.out_path, "Output file (stdout otherwise)");
    tree_merge->add_flag("--force", state.tree.force, "Overwrite existing outputs");
    tree_merge->callback([&] { state.exit_code = cmd_tree_merge(state.tree, out); });

    CLI::App* eval_cmd =
        app->add_subcommand("eval", "Score result files and build a report");
    eval_cmd->add_option("--results", state.eval.results_dir,
                         "Directory holding *.result.json files")
        ->required();
    eval_cmd->add_option("--import-human", state.eval.human_csv,
                         "CSV of human scores (case_id,relevance,completeness)");
    eval_cmd->add_option("--out", state.eval.out_path, "Report JSON output file");
    eval_cmd->add_flag("--force", state.eval.force, "Overwrite existing outputs");
    eval_cmd->callback([&] { state.exit_code = cmd_eval(state.eval, out); });

    return app;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CliState state;
    auto app = build_app(state, out, err);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app->parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app->exit(e, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    if (args.empty()) {
        out << app->help();
        return 0;
    }
    return state.exit_code;
}

std::string cli_help_text() {
    CliState state;
    std::ostringstream sink;
    auto app = build_app(state, sink, sink);
    return app->help();
}

}  // namespace tor
