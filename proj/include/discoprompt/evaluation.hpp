#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/error.hpp"
#include "discoprompt/hierarchy.hpp"

namespace discoprompt {

enum class Level { top = 1, second = 2 };

inline Level parse_level(std::string_view s) {
  if (s == "top") return Level::top;
  if (s == "second") return Level::second;
  throw ValidationError("unknown level", std::string(s));
}

inline std::string_view level_name(Level l) { return l == Level::top ? "top" : "second"; }

struct LabelStats {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  int support = 0;    // resolved gold count
  int predicted = 0;
  int true_positive = 0;
  bool included = false;  // counted in macro-F1
};

struct EvalReport {
  Level level = Level::second;
  std::vector<std::string> labels;    // hierarchy order at this level
  std::vector<LabelStats> per_label;  // aligned with labels
  // confusion[gold][pred]; the extra last column counts missing predictions.
  std::vector<std::vector<int>> confusion;
  int total = 0;
  int correct = 0;
  int n_unparseable = 0;
  double accuracy = 0;
  double macro_f1 = 0;

  const LabelStats& stats(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return per_label[i];
    throw ValidationError("label not in report", std::string(label));
  }

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& s = per_label[i];
      per[labels[i]] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                        {"support", s.support},     {"predicted", s.predicted},
                        {"included", s.included}};
    }
    return {{"level", level_name(level)}, {"accuracy", accuracy}, {"macro_f1", macro_f1},
            {"total", total},             {"correct", correct},   {"n_unparseable", n_unparseable},
            {"labels", labels},           {"per_label", per},     {"confusion", confusion}};
  }
};

// An instance is correct when its predicted label equals any of its gold
// labels. For F1 the resolved gold is the matched one, else the first.
// Missing predictions (unparseable output, backend failure) count as wrong.
// Macro-F1 averages over labels that occur in resolved golds or predictions.
inline EvalReport evaluate(const std::vector<std::optional<std::string>>& preds,
                           const std::vector<std::vector<std::string>>& golds,
                           Level level, const LabelHierarchy& h) {
  if (preds.size() != golds.size())
    throw ValidationError("predictions and golds differ in length (" +
                          std::to_string(preds.size()) + " vs " + std::to_string(golds.size()) + ")");
  EvalReport r;
  r.level = level;
  for (int idx : h.level(static_cast<int>(level))) r.labels.push_back(h.node(idx).label);
  const std::size_t n = r.labels.size();
  auto index_of = [&](const std::string& label) -> std::size_t {
    for (std::size_t i = 0; i < n; ++i)
      if (r.labels[i] == label) return i;
    throw ValidationError("label is not a " + std::string(level_name(level)) + "-level label", label);
  };
  r.per_label.assign(n, {});
  r.confusion.assign(n, std::vector<int>(n + 1, 0));

  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (golds[i].empty()) throw ValidationError("instance without gold labels at position " + std::to_string(i));
    std::size_t resolved = index_of(golds[i].front());
    std::optional<std::size_t> predicted;
    if (preds[i]) {
      predicted = index_of(*preds[i]);
      for (const std::string& g : golds[i]) {
        if (g == *preds[i]) {
          resolved = *predicted;
          break;
        }
      }
    } else {
      ++r.n_unparseable;
    }
    ++r.total;
    r.per_label[resolved].support += 1;
    if (predicted) {
      r.per_label[*predicted].predicted += 1;
      if (*predicted == resolved) {
        ++r.correct;
        r.per_label[resolved].true_positive += 1;
      }
      r.confusion[resolved][*predicted] += 1;
    } else {
      r.confusion[resolved][n] += 1;
    }
  }

  double f1_sum = 0;
  int included = 0;
  for (auto& s : r.per_label) {
    s.precision = s.predicted ? static_cast<double>(s.true_positive) / s.predicted : 0.0;
    s.recall = s.support ? static_cast<double>(s.true_positive) / s.support : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.included = s.support > 0 || s.predicted > 0;
    if (s.included) {
      f1_sum += s.f1;
      ++included;
    }
  }
  r.accuracy = r.total ? static_cast<double>(r.correct) / r.total : 0.0;
  r.macro_f1 = included ? f1_sum / included : 0.0;
  return r;
}

struct LabelwiseRow {
  std::string name;  // e.g. "Temp.Asynchronous"
  std::string label;
  double f1;
  double precision;
  double recall;
  int support;
};

// One row per label; second-level rows follow the hierarchy's report order
// and carry the parent's short name as a prefix.
inline std::vector<LabelwiseRow> labelwise_rows(const EvalReport& r, const LabelHierarchy& h) {
  std::vector<int> order = r.level == Level::second ? h.report_order() : h.level(1);
  std::vector<LabelwiseRow> rows;
  for (int idx : order) {
    const LabelNode& node = h.node(idx);
    const LabelStats& s = r.stats(node.label);
    std::string name = r.level == Level::second
                           ? h.node(node.parent).short_name + "." + node.short_name
                           : node.label;
    rows.push_back({name, node.label, s.f1, s.precision, s.recall, s.support});
  }
  return rows;
}

inline std::string labelwise_report(const EvalReport& r, const LabelHierarchy& h) {
  auto rows = labelwise_rows(r, h);
  std::size_t width = 5;
  for (const auto& row : rows) width = std::max(width, row.name.size());
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s\n", static_cast<int>(width), "Label", "F1 (%)", "Support");
  out << buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.2f  %8d\n", static_cast<int>(width), row.name.c_str(),
                  row.f1 * 100.0, row.support);
    out << buf;
  }
  return out.str();
}

inline nlohmann::json labelwise_json(const EvalReport& r, const LabelHierarchy& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : labelwise_rows(r, h))
    rows.push_back({{"name", row.name}, {"label", row.label}, {"f1", row.f1},
                    {"precision", row.precision}, {"recall", row.recall}, {"support", row.support}});
  return rows;
}

}  // namespace discoprompt
