#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "discoprompt/error.hpp"

namespace discoprompt {

// What a mask slot predicts. The first three map onto hierarchy depths;
// whole_path is the single-mask generation slot.
enum class Role { connective, top, second, whole_path };

inline constexpr std::array<Role, 3> kLevelRoles = {Role::connective, Role::top,
                                                    Role::second};

inline std::string_view role_name(Role r) {
  switch (r) {
    case Role::connective: return "connective";
    case Role::top: return "top";
    case Role::second: return "second";
    case Role::whole_path: return "whole_path";
  }
  return "unknown";
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "connective") return Role::connective;
  if (s == "top") return Role::top;
  if (s == "second") return Role::second;
  if (s == "whole_path") return Role::whole_path;
  return std::nullopt;
}

inline int role_depth(Role r) {
  switch (r) {
    case Role::top: return 1;
    case Role::second: return 2;
    case Role::connective: return 3;
    case Role::whole_path: break;
  }
  throw ValidationError("role whole_path has no hierarchy depth", "whole_path");
}

}  // namespace discoprompt
