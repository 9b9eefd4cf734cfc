#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tor {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a file cannot be read or written.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Raised when evidence-tree text cannot be parsed.
class TreeParseError : public Error {
public:
    enum class Kind { NoTitle, NoDiagnoses, MalformedEntry };

    TreeParseError(Kind kind, int line, const std::string& msg)
        : Error(msg), kind(kind), line(line) {}

    Kind kind;
    int line;  // 1-based line in the input; 0 when no line applies
};

/// Raised when an evidence tree violates a structural invariant.
class TreeValidationError : public Error {
public:
    explicit TreeValidationError(std::vector<std::string> violations)
        : Error(violations.empty() ? std::string("invalid tree")
                                   : violations.front()),
          violations(std::move(violations)) {}

    std::vector<std::string> violations;
};

/// Raised when a case file or label pool fails schema validation.
class SchemaError : public Error {
public:
    SchemaError(int record_index, const std::string& field, const std::string& reason)
        : Error("record " + std::to_string(record_index) + ", field '" + field +
                "': " + reason),
          record_index(record_index), field(field), reason(reason) {}

    int record_index;
    std::string field;
    std::string reason;
};

/// Raised when a configuration value is out of range or inconsistent.
class InvalidConfig : public Error {
public:
    explicit InvalidConfig(const std::string& msg) : Error(msg) {}
};

/// Raised when a department pool cannot supply enough distractors.
class PoolTooSmall : public Error {
public:
    PoolTooSmall(const std::string& department, int needed, int available)
        : Error("label pool for department '" + department + "' has " +
                std::to_string(available) + " eligible distractors, need " +
                std::to_string(needed)),
          department(department), needed(needed), available(available) {}

    std::string department;
    int needed;
    int available;
};

/// Raised when indexing an empty corpus or a corpus with invalid documents.
class EmptyCorpus : public Error {
public:
    explicit EmptyCorpus(const std::string& msg) : Error(msg) {}
};

/// Raised when a prompt template references a slot with no binding.
class TemplateError : public Error {
public:
    TemplateError(const std::string& template_name, const std::string& slot)
        : Error("template '" + template_name + "' references unbound slot '" +
                slot + "'"),
          template_name(template_name), slot(slot) {}

    std::string template_name;
    std::string slot;
};

/// Raised by chat backends.
class BackendError : public Error {
public:
    enum class Kind { Timeout, Http, Exhausted, NoMatch };

    BackendError(Kind kind, const std::string& msg, int status = 0,
                 const std::string& tag = "")
        : Error(msg), kind(kind), status(status), tag(tag) {}

    Kind kind;
    int status;       // HTTP status when kind == Http
    std::string tag;  // request tag when known
};

/// Raised when an agent cannot produce a usable artifact after repairs.
class AgentError : public Error {
public:
    AgentError(const std::string& role, const std::string& msg)
        : Error(role + ": " + msg), role(role) {}

    std::string role;
};

/// Raised when the moderator response cannot be turned into a decision.
class FinalDecisionError : public Error {
public:
    enum class Kind { Unparseable, NoValidLetters };

    FinalDecisionError(Kind kind, const std::string& msg) : Error(msg), kind(kind) {}

    Kind kind;
};

/// Wraps the first unrecoverable error of a case run.
class RunError : public Error {
public:
    RunError(const std::string& case_id, const std::string& msg)
        : Error("case '" + case_id + "': " + msg), case_id(case_id) {}

    std::string case_id;
};

/// Raised when aggregating an empty batch.
class EmptyBatch : public Error {
public:
    EmptyBatch() : Error("cannot aggregate an empty batch") {}
};

}  // namespace tor
