#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tor {

enum class AgentRole { Outpatient, Laboratory, Radiology, Pathology, Moderator };

/// The four specialists in fixed workflow order.
inline const std::vector<AgentRole>& specialist_roles() {
    static const std::vector<AgentRole> roles = {
        AgentRole::Outpatient, AgentRole::Laboratory, AgentRole::Radiology,
        AgentRole::Pathology};
    return roles;
}

/// Lowercase identifier used in tags, config and file names.
std::string role_id(AgentRole role);

/// Display name used in prompts ("Outpatient", "Laboratory", ...).
std::string role_name(AgentRole role);

/// Parse a role from an identifier or display name, case-insensitive.
std::optional<AgentRole> parse_role(const std::string& text);

}  // namespace tor
