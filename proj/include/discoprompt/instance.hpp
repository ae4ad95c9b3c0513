#pragma once

#include <optional>
#include <string>
#include <vector>

namespace discoprompt {

enum class RelationType { implicit, explicit_relation };

struct GoldSense {
  std::string top;
  std::string second;

  friend bool operator==(const GoldSense&, const GoldSense&) = default;
};

// One argument pair with its (possibly multiple) gold senses. Gold labels
// are canonical hierarchy labels.
struct Instance {
  std::string id;
  std::string arg1;
  std::string arg2;
  std::vector<GoldSense> gold;
  RelationType type = RelationType::implicit;
  std::optional<std::string> connective;
  std::optional<int> section;

  friend bool operator==(const Instance&, const Instance&) = default;
};

}  // namespace discoprompt
