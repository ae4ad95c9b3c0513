#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/builtin_hierarchies.hpp"
#include "discoprompt/error.hpp"
#include "discoprompt/text.hpp"

namespace discoprompt {

inline constexpr std::string_view kPathSeparator = " -> ";

struct LabelNode {
  std::string label;
  int depth = 0;
  int parent = -1;  // index into LabelHierarchy::nodes(); -1 is the virtual root
  std::string surface;
  std::string display;     // name used in chat candidate lists
  std::string short_name;  // name used in label-wise report rows
  std::vector<std::string> aliases;
  std::vector<int> children;
  int level_index = 0;  // position among same-depth nodes in enumeration order
};

struct SensePath {
  int id = 0;
  std::vector<int> nodes;  // nodes[k] sits at depth k + 1

  friend bool operator==(const SensePath&, const SensePath&) = default;
};

// Immutable label tree. Node indices are stable for the lifetime of the
// object; paths are enumerated once at load.
class LabelHierarchy {
 public:
  static LabelHierarchy from_json(const nlohmann::json& config);

  const std::string& name() const { return name_; }
  int depth() const { return depth_; }
  const std::string& comment() const { return comment_; }
  bool has_connective_layer() const { return depth_ == 3; }

  const std::vector<LabelNode>& nodes() const { return nodes_; }
  const LabelNode& node(int index) const { return nodes_.at(index); }

  // Node indices at `depth` in enumeration (depth-first) order.
  const std::vector<int>& level(int depth) const {
    check_depth(depth);
    return levels_[depth - 1];
  }

  const std::vector<SensePath>& paths() const { return paths_; }

  const LabelNode& ancestor_at(const SensePath& path, int depth) const {
    check_depth(depth);
    if (static_cast<int>(path.nodes.size()) != depth_)
      throw ValidationError("path has " + std::to_string(path.nodes.size()) +
                            " nodes, hierarchy depth is " + std::to_string(depth_));
    return nodes_.at(path.nodes[depth - 1]);
  }

  // Exact canonical label lookup.
  std::optional<int> find(int depth, std::string_view label) const {
    check_depth(depth);
    for (int idx : levels_[depth - 1])
      if (nodes_[idx].label == label) return idx;
    return std::nullopt;
  }

  // Case-insensitive lookup over label, display, short name, surface and
  // aliases. Restricted to children of `parent` when parent >= 0.
  std::optional<int> lookup(int depth, std::string_view name, int parent = -2) const {
    check_depth(depth);
    std::string_view key = text::trim(name);
    for (int idx : levels_[depth - 1]) {
      const LabelNode& n = nodes_[idx];
      if (parent != -2 && n.parent != parent) continue;
      for (const std::string& candidate : names_of(n))
        if (text::iequals(candidate, key)) return idx;
    }
    return std::nullopt;
  }

  // Every spelling a node answers to, canonical label first.
  static std::vector<std::string> names_of(const LabelNode& n) {
    std::vector<std::string> out{n.label};
    auto add = [&](const std::string& s) {
      if (s.empty()) return;
      for (const auto& have : out)
        if (text::iequals(have, s)) return;
      out.push_back(s);
    };
    add(n.display);
    add(n.short_name);
    add(n.surface);
    for (const auto& a : n.aliases) add(a);
    return out;
  }

  std::string serialize(const SensePath& path) const {
    std::string out;
    for (std::size_t k = 0; k < path.nodes.size(); ++k) {
      if (k) out.append(kPathSeparator);
      out.append(nodes_.at(path.nodes[k]).label);
    }
    return out;
  }

  // The first enumerated path through node `index`.
  const SensePath& first_path_through(int index) const {
    for (const auto& p : paths_) {
      int d = nodes_.at(index).depth;
      if (p.nodes[d - 1] == index) return p;
    }
    throw ValidationError("node has no path", nodes_.at(index).label);
  }

  // Maps a sense string ("Top.Second", "Top.Second.Third" or a bare
  // second-level name) onto (top, second) node indices. For deeper strings
  // the deepest component naming a child of Top wins, else the prefix.
  std::optional<std::pair<int, int>> resolve_sense(std::string_view sense) const {
    if (depth_ < 2) return std::nullopt;
    std::vector<std::string> parts = text::split(text::trim(sense), '.');
    for (auto& p : parts) p = std::string(text::trim(p));
    if (parts.size() == 1) {
      auto second = lookup(2, parts[0]);
      if (!second) return std::nullopt;
      return std::pair{nodes_[*second].parent, *second};
    }
    auto top = lookup(1, parts[0]);
    if (!top) return std::nullopt;
    for (std::size_t k = parts.size() - 1; k >= 1; --k) {
      if (auto second = lookup(2, parts[k], *top)) return std::pair{*top, *second};
    }
    return std::nullopt;
  }

  // Second-level node indices in label-wise report order.
  const std::vector<int>& report_order() const { return report_order_; }

  nlohmann::json to_json() const;

 private:
  void check_depth(int depth) const {
    if (depth < 1 || depth > depth_)
      throw ValidationError("depth " + std::to_string(depth) + " out of range 1.." +
                            std::to_string(depth_));
  }

  void enumerate();

  std::string name_;
  std::string comment_;
  int depth_ = 0;
  std::vector<LabelNode> nodes_;
  std::vector<std::vector<int>> levels_;
  std::vector<SensePath> paths_;
  std::vector<int> report_order_;
};

namespace detail {

inline std::string optional_string(const nlohmann::json& obj, const char* key,
                                   const std::string& node_label) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string())
    throw ValidationError(std::string("field '") + key + "' must be a string", node_label);
  return it->get<std::string>();
}

}  // namespace detail

inline LabelHierarchy LabelHierarchy::from_json(const nlohmann::json& config) {
  using nlohmann::json;
  if (!config.is_object()) throw ValidationError("hierarchy config must be a JSON object");

  LabelHierarchy h;
  if (!config.contains("name") || !config["name"].is_string())
    throw ValidationError("hierarchy config needs a string 'name'");
  h.name_ = config["name"].get<std::string>();
  if (!config.contains("depth") || !config["depth"].is_number_integer())
    throw ValidationError("hierarchy config needs an integer 'depth'");
  h.depth_ = config["depth"].get<int>();
  if (h.depth_ < 2) throw ValidationError("hierarchy depth must be >= 2");
  if (config.contains("comment") && config["comment"].is_string())
    h.comment_ = config["comment"].get<std::string>();
  if (!config.contains("nodes") || !config["nodes"].is_array())
    throw ValidationError("hierarchy config needs a 'nodes' array");

  std::vector<std::string> parent_refs;
  for (const json& item : config["nodes"]) {
    if (!item.is_object()) throw ValidationError("node entries must be objects");
    if (!item.contains("label") || !item["label"].is_string())
      throw ValidationError("node without a string 'label'");
    LabelNode n;
    n.label = item["label"].get<std::string>();
    if (text::trim(n.label).empty()) throw ValidationError("empty node label", n.label);
    if (n.label.find("->") != std::string::npos)
      throw ValidationError("label contains the path separator '->'", n.label);
    if (!item.contains("depth") || !item["depth"].is_number_integer())
      throw ValidationError("node needs an integer 'depth'", n.label);
    n.depth = item["depth"].get<int>();
    if (n.depth < 1 || n.depth > h.depth_)
      throw ValidationError("node depth " + std::to_string(n.depth) + " outside 1.." +
                                std::to_string(h.depth_),
                            n.label);
    if (item.contains("surface")) {
      n.surface = detail::optional_string(item, "surface", n.label);
      if (text::trim(n.surface).empty()) throw ValidationError("empty surface", n.label);
    } else {
      n.surface = n.label;
    }
    n.display = detail::optional_string(item, "display", n.label);
    if (n.display.empty()) n.display = n.label;
    n.short_name = detail::optional_string(item, "short", n.label);
    if (n.short_name.empty()) n.short_name = n.label;
    if (item.contains("aliases")) {
      if (!item["aliases"].is_array()) throw ValidationError("'aliases' must be an array", n.label);
      for (const json& a : item["aliases"]) {
        if (!a.is_string()) throw ValidationError("alias must be a string", n.label);
        n.aliases.push_back(a.get<std::string>());
      }
    }
    for (const LabelNode& other : h.nodes_)
      if (other.depth == n.depth && other.label == n.label)
        throw ValidationError("duplicate label at depth " + std::to_string(n.depth), n.label);
    std::string parent_ref;
    if (item.contains("parent") && !item["parent"].is_null()) {
      if (!item["parent"].is_string()) throw ValidationError("'parent' must be a string or null", n.label);
      parent_ref = item["parent"].get<std::string>();
    }
    parent_refs.push_back(parent_ref);
    h.nodes_.push_back(std::move(n));
  }

  // Resolve parent links.
  for (std::size_t i = 0; i < h.nodes_.size(); ++i) {
    LabelNode& n = h.nodes_[i];
    const std::string& ref = parent_refs[i];
    if (n.depth == 1) {
      if (!ref.empty()) throw ValidationError("top-level node must have a null parent", n.label);
      continue;
    }
    if (ref.empty()) throw ValidationError("orphan node: no parent given", n.label);
    int found = -1;
    int found_elsewhere = -1;
    for (std::size_t j = 0; j < h.nodes_.size(); ++j) {
      if (h.nodes_[j].label != ref) continue;
      if (h.nodes_[j].depth == n.depth - 1) found = static_cast<int>(j);
      else found_elsewhere = static_cast<int>(j);
    }
    if (found < 0) {
      if (found_elsewhere >= 0 && h.nodes_[found_elsewhere].depth >= n.depth)
        throw ValidationError("cycle: parent '" + ref + "' is not shallower than the node", n.label);
      if (found_elsewhere >= 0)
        throw ValidationError("parent '" + ref + "' is not at depth " + std::to_string(n.depth - 1),
                              n.label);
      throw ValidationError("orphan node: parent '" + ref + "' not found", n.label);
    }
    n.parent = found;
    h.nodes_[found].children.push_back(static_cast<int>(i));
  }

  for (int d = 1; d <= h.depth_; ++d) {
    bool any = false;
    for (const LabelNode& n : h.nodes_) any = any || n.depth == d;
    if (!any) throw ValidationError("empty level at depth " + std::to_string(d));
  }
  for (const LabelNode& n : h.nodes_)
    if (n.depth < h.depth_ && n.children.empty())
      throw ValidationError("node at depth " + std::to_string(n.depth) +
                                " has no children; every path must reach depth " +
                                std::to_string(h.depth_),
                            n.label);

  h.enumerate();

  if (config.contains("report_order")) {
    const json& order = config["report_order"];
    if (!order.is_array()) throw ValidationError("'report_order' must be an array");
    std::vector<int> seen;
    for (const json& item : order) {
      if (!item.is_string()) throw ValidationError("'report_order' entries must be strings");
      auto idx = h.find(2, item.get<std::string>());
      if (!idx) throw ValidationError("'report_order' names an unknown second-level label",
                                      item.get<std::string>());
      for (int s : seen)
        if (s == *idx) throw ValidationError("'report_order' repeats a label", item.get<std::string>());
      seen.push_back(*idx);
    }
    if (seen.size() != h.levels_[1].size())
      throw ValidationError("'report_order' must list every second-level label");
    h.report_order_ = std::move(seen);
  } else {
    h.report_order_ = h.levels_[1];
  }
  return h;
}

// Depth-first, children in config order. Also assigns level indices.
inline void LabelHierarchy::enumerate() {
  levels_.assign(depth_, {});
  paths_.clear();
  std::vector<int> stack;
  auto visit = [&](auto&& self, int idx) -> void {
    LabelNode& n = nodes_[idx];
    n.level_index = static_cast<int>(levels_[n.depth - 1].size());
    levels_[n.depth - 1].push_back(idx);
    stack.push_back(idx);
    if (n.children.empty()) {
      paths_.push_back(SensePath{static_cast<int>(paths_.size()), stack});
    } else {
      for (int child : n.children) self(self, child);
    }
    stack.pop_back();
  };
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].depth == 1) visit(visit, static_cast<int>(i));
}

inline nlohmann::json LabelHierarchy::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (int d = 1; d <= depth_; ++d) {
    for (int idx : levels_[d - 1]) {
      const LabelNode& n = nodes_[idx];
      nlohmann::json item = {{"label", n.label},
                             {"depth", n.depth},
                             {"parent", n.parent < 0 ? nlohmann::json(nullptr)
                                                     : nlohmann::json(nodes_[n.parent].label)},
                             {"surface", n.surface}};
      if (n.display != n.label) item["display"] = n.display;
      if (n.short_name != n.label) item["short"] = n.short_name;
      if (!n.aliases.empty()) item["aliases"] = n.aliases;
      nodes.push_back(std::move(item));
    }
  }
  nlohmann::json out = {{"name", name_}, {"depth", depth_}, {"nodes", std::move(nodes)}};
  if (!comment_.empty()) out["comment"] = comment_;
  if (report_order_ != levels_[1]) {
    nlohmann::json order = nlohmann::json::array();
    for (int idx : report_order_) order.push_back(nodes_[idx].label);
    out["report_order"] = std::move(order);
  }
  return out;
}

inline LabelHierarchy load_hierarchy(const nlohmann::json& config) {
  return LabelHierarchy::from_json(config);
}

inline std::vector<SensePath> enumerate_paths(const LabelHierarchy& h) { return h.paths(); }

inline const LabelNode& ancestor_at(const LabelHierarchy& h, const SensePath& path, int depth) {
  return h.ancestor_at(path, depth);
}

inline LabelHierarchy builtin_hierarchy(std::string_view name) {
  if (name == "pdtb2") return load_hierarchy(nlohmann::json::parse(builtin::kPdtb2));
  if (name == "conll16") return load_hierarchy(nlohmann::json::parse(builtin::kConll16));
  throw ValidationError("unknown built-in hierarchy", std::string(name));
}

// A built-in name, or a path to a hierarchy config file.
inline LabelHierarchy resolve_hierarchy(const std::string& name_or_path) {
  if (name_or_path == "pdtb2" || name_or_path == "conll16") return builtin_hierarchy(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ValidationError("cannot read hierarchy config", name_or_path);
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("hierarchy config is not valid JSON: ") + e.what(),
                          name_or_path);
  }
  return load_hierarchy(config);
}

}  // namespace discoprompt
