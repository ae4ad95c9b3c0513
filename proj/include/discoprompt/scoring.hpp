#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/error.hpp"
#include "discoprompt/hierarchy.hpp"
#include "discoprompt/role.hpp"
#include "discoprompt/text.hpp"

namespace discoprompt {

inline constexpr double kDistributionTolerance = 1e-9;

// Candidate-restricted probabilities per mask role, each vector aligned with
// the hierarchy's enumeration order at that role's depth.
struct MaskDistributions {
  std::map<Role, std::vector<double>> probs;

  bool has(Role r) const { return probs.count(r) != 0; }
  const std::vector<double>& at(Role r) const {
    auto it = probs.find(r);
    if (it == probs.end())
      throw ValidationError("mask distributions miss role", std::string(role_name(r)));
    return it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [role, v] : probs) out[std::string(role_name(role))] = v;
    return out;
  }

  static MaskDistributions from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("mask distributions must be a JSON object");
    MaskDistributions d;
    for (const auto& [key, value] : j.items()) {
      auto role = parse_role(key);
      if (!role) throw ValidationError("unknown mask role", key);
      if (!value.is_array()) throw ValidationError("distribution must be an array", key);
      std::vector<double> v;
      for (const auto& x : value) {
        if (!x.is_number()) throw ValidationError("distribution entries must be numbers", key);
        v.push_back(x.get<double>());
      }
      d.probs[*role] = std::move(v);
    }
    return d;
  }
};

// Checks the distribution invariants: right length, non-negative, finite,
// sums to 1 within `tolerance`.
inline void validate_distributions(const MaskDistributions& d, const LabelHierarchy& h,
                                   double tolerance = kDistributionTolerance) {
  for (const auto& [role, v] : d.probs) {
    std::string name(role_name(role));
    if (role == Role::whole_path) {
      if (v.size() != h.paths().size())
        throw ValidationError("whole_path distribution length mismatch", name);
    } else if (role_depth(role) > h.depth() || v.size() != h.level(role_depth(role)).size()) {
      throw ValidationError("distribution length does not match candidate count", name);
    }
    double sum = 0;
    for (double x : v) {
      if (!std::isfinite(x) || x < 0) throw ValidationError("negative or non-finite probability", name);
      sum += x;
    }
    if (std::abs(sum - 1.0) > tolerance)
      throw ValidationError("distribution sums to " + std::to_string(sum), name);
  }
}

// Which mask factors enter the path score. The full set is the joint
// probability over all three masks; proper subsets are the ablations.
struct MaskSubset {
  bool top = true;
  bool second = true;
  bool connective = true;

  static MaskSubset full() { return {}; }
  static MaskSubset of(std::initializer_list<Role> roles) {
    MaskSubset s{false, false, false};
    for (Role r : roles) s.set(r);
    s.validate();
    return s;
  }

  // Comma-separated role names, e.g. "top,second".
  static MaskSubset parse(std::string_view spec) {
    MaskSubset s{false, false, false};
    for (const std::string& part : text::split(spec, ',')) {
      auto role = parse_role(text::trim(part));
      if (!role || *role == Role::whole_path) throw ValidationError("bad mask subset entry", part);
      s.set(*role);
    }
    s.validate();
    return s;
  }

  bool contains(Role r) const {
    switch (r) {
      case Role::top: return top;
      case Role::second: return second;
      case Role::connective: return connective;
      case Role::whole_path: return false;
    }
    return false;
  }

  std::vector<Role> roles() const {
    std::vector<Role> out;
    for (Role r : {Role::top, Role::second, Role::connective})
      if (contains(r)) out.push_back(r);
    return out;
  }

  std::string name() const {
    std::vector<std::string> parts;
    for (Role r : roles()) parts.emplace_back(role_name(r));
    return text::join(parts, ",");
  }

  void validate() const {
    if (!top && !second && !connective) throw ValidationError("mask subset is empty");
  }

 private:
  void set(Role r) {
    if (r == Role::top) top = true;
    if (r == Role::second) second = true;
    if (r == Role::connective) connective = true;
  }
};

struct PathScore {
  int path_id = 0;
  double score = 0;
  double log_score = 0;
  std::map<Role, double> factors;
};

struct Prediction {
  SensePath path;
  std::vector<std::string> labels;  // labels[k] is the node at depth k + 1
  double score = 0;
  std::vector<PathScore> all_scores;
  std::optional<std::string> filled_connective;

  const std::string& top() const { return labels.at(0); }
  const std::string& second() const { return labels.at(1); }
  std::string connective() const {
    if (filled_connective) return *filled_connective;
    return labels.size() > 2 ? labels[2] : std::string();
  }

  nlohmann::json to_json(const LabelHierarchy& h) const {
    return {{"path", h.serialize(path)}, {"top", top()},     {"second", second()},
            {"connective", connective()}, {"score", score}};
  }
};

namespace detail {
inline void check_subset_covered(const MaskDistributions& d, const LabelHierarchy& h,
                                 MaskSubset subset) {
  subset.validate();
  for (Role r : subset.roles()) {
    const auto& v = d.at(r);
    int depth = role_depth(r);
    if (depth > h.depth())
      throw ValidationError("hierarchy has no level for role", std::string(role_name(r)));
    if (v.size() < h.level(depth).size())
      throw ValidationError("candidate index out of range for role", std::string(role_name(r)));
  }
}
}  // namespace detail

// score(path) = product over included roles of d[role][candidate index of the
// path's node at that role's depth]. Accumulated in log space.
inline std::vector<PathScore> score_paths(const MaskDistributions& d,
                                          const std::vector<SensePath>& paths,
                                          const LabelHierarchy& h,
                                          MaskSubset subset = MaskSubset::full()) {
  detail::check_subset_covered(d, h, subset);
  std::vector<Role> roles = subset.roles();
  std::vector<PathScore> out;
  out.reserve(paths.size());
  for (const SensePath& p : paths) {
    PathScore ps;
    ps.path_id = p.id;
    for (Role r : roles) {
      const LabelNode& n = h.ancestor_at(p, role_depth(r));
      double f = d.at(r)[n.level_index];
      ps.factors[r] = f;
      ps.log_score += f > 0 ? std::log(f) : -std::numeric_limits<double>::infinity();
    }
    ps.score = std::exp(ps.log_score);
    out.push_back(std::move(ps));
  }
  return out;
}

inline std::vector<PathScore> score_paths(const MaskDistributions& d, const LabelHierarchy& h,
                                          MaskSubset subset = MaskSubset::full()) {
  return score_paths(d, h.paths(), h, subset);
}

namespace detail {
inline Prediction best_of(std::vector<PathScore> scores, const LabelHierarchy& h) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const auto& a = scores[i];
    const auto& b = scores[best];
    if (a.log_score > b.log_score || (a.log_score == b.log_score && a.path_id < b.path_id))
      best = i;
  }
  Prediction pred;
  pred.path = h.paths().at(scores[best].path_id);
  pred.score = scores[best].score;
  for (int k = 1; k <= h.depth(); ++k) pred.labels.push_back(h.ancestor_at(pred.path, k).label);
  pred.all_scores = std::move(scores);
  return pred;
}
}  // namespace detail

// Highest-scoring path; ties go to the smallest path id. Level labels are
// the path's ancestors.
inline Prediction predict(const MaskDistributions& d, const LabelHierarchy& h,
                          MaskSubset subset = MaskSubset::full()) {
  return detail::best_of(score_paths(d, h, subset), h);
}

// Explicit relations: the connective slot holds the gold connective as
// text, so only the top and second masks are scored.
inline Prediction predict_edrr(const MaskDistributions& d_partial,
                               const std::string& gold_connective, const LabelHierarchy& h) {
  Prediction pred = predict(d_partial, h, MaskSubset::of({Role::top, Role::second}));
  pred.filled_connective = gold_connective;
  return pred;
}

enum class Aggregation { max, sum };

struct LevelProjection {
  int node = -1;            // winning node index
  double weight = 0;        // its weight
  std::vector<double> weights;  // aligned with h.level(depth)
};

// Node weight = prior(node) * (max or sum of scores of paths through it).
// A missing prior is 1.0 for every node.
inline LevelProjection project_level(const std::vector<PathScore>& scores, const LabelHierarchy& h,
                                     int depth, const std::optional<std::vector<double>>& prior = {},
                                     Aggregation agg = Aggregation::max) {
  if (scores.empty()) throw ValidationError("project_level needs at least one path score");
  const auto& level = h.level(depth);
  if (prior && prior->size() != level.size())
    throw ValidationError("prior length does not match level size");
  LevelProjection out;
  out.weights.assign(level.size(), 0.0);
  for (const PathScore& ps : scores) {
    const LabelNode& n = h.ancestor_at(h.paths().at(ps.path_id), depth);
    double& w = out.weights[n.level_index];
    w = agg == Aggregation::max ? std::max(w, ps.score) : w + ps.score;
  }
  if (prior)
    for (std::size_t i = 0; i < level.size(); ++i) out.weights[i] *= (*prior)[i];
  std::size_t best = 0;
  for (std::size_t i = 1; i < level.size(); ++i)
    if (out.weights[i] > out.weights[best]) best = i;
  out.node = level[best];
  out.weight = out.weights[best];
  return out;
}

enum class ObjectiveMode { sum_of_logs, log_of_sums };

struct ObjectiveValue {
  double value = 0;
  bool degenerate = false;  // a gold factor had zero probability
};

// Per-instance loss for the gold path. sum_of_logs is -sum_k log p_k;
// log_of_sums is the literal -log(sum_k p_k).
inline ObjectiveValue objective_value(const MaskDistributions& d, const SensePath& gold,
                                      const LabelHierarchy& h,
                                      ObjectiveMode mode = ObjectiveMode::sum_of_logs) {
  if (gold.id < 0 || gold.id >= static_cast<int>(h.paths().size()) || h.paths()[gold.id] != gold)
    throw ValidationError("gold is not an enumerated path");
  detail::check_subset_covered(d, h, MaskSubset::full());
  ObjectiveValue out;
  double sum = 0;
  for (Role r : {Role::connective, Role::top, Role::second}) {
    double p = d.at(r)[h.ancestor_at(gold, role_depth(r)).level_index];
    if (mode == ObjectiveMode::sum_of_logs) {
      if (p <= 0) {
        out.degenerate = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
      }
      out.value -= std::log(p);
    } else {
      sum += p;
    }
  }
  if (mode == ObjectiveMode::log_of_sums) {
    if (sum <= 0) {
      out.degenerate = true;
      out.value = std::numeric_limits<double>::infinity();
    } else {
      out.value = -std::log(sum);
    }
  }
  return out;
}

}  // namespace discoprompt
