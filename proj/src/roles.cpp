#include "tor/roles.hpp"

#include "tor/strings.hpp"

namespace tor {

std::string role_id(AgentRole role) {
    switch (role) {
        case AgentRole::Outpatient: return "outpatient";
        case AgentRole::Laboratory: return "laboratory";
        case AgentRole::Radiology: return "radiology";
        case AgentRole::Pathology: return "pathology";
        case AgentRole::Moderator: return "moderator";
    }
    return "unknown";
}

std::string role_name(AgentRole role) {
    switch (role) {
        case AgentRole::Outpatient: return "Outpatient";
        case AgentRole::Laboratory: return "Laboratory";
        case AgentRole::Radiology: return "Radiology";
        case AgentRole::Pathology: return "Pathology";
        case AgentRole::Moderator: return "Moderator";
    }
    return "Unknown";
}

std::optional<AgentRole> parse_role(const std::string& text) {
    std::string t = to_lower(trim(text));
    if (t == "outpatient") return AgentRole::Outpatient;
    if (t == "laboratory") return AgentRole::Laboratory;
    if (t == "radiology") return AgentRole::Radiology;
    if (t == "pathology") return AgentRole::Pathology;
    if (t == "moderator") return AgentRole::Moderator;
    return std::nullopt;
}

}  // namespace tor
