#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "discoprompt/hierarchy.hpp"
#include "discoprompt/instance.hpp"

namespace testutil {

inline std::string fixture(const std::string& name) { return std::string(DP_FIXTURE_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline discoprompt::LabelHierarchy minimal_hierarchy() {
  return discoprompt::load_hierarchy(nlohmann::json::parse(R"({"name": "mini", "depth": 3, "nodes": [
    {"label": "A", "depth": 1, "parent": null, "surface": "A"},
    {"label": "B", "depth": 2, "parent": "A", "surface": "B"},
    {"label": "c", "depth": 3, "parent": "B", "surface": "c"}]})"));
}

inline discoprompt::Instance make_instance(std::string id, std::string arg1, std::string arg2) {
  discoprompt::Instance inst;
  inst.id = std::move(id);
  inst.arg1 = std::move(arg1);
  inst.arg2 = std::move(arg2);
  return inst;
}

}  // namespace testutil
