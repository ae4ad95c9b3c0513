#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/error.hpp"
#include "discoprompt/hierarchy.hpp"
#include "discoprompt/instance.hpp"
#include "discoprompt/prior.hpp"
#include "discoprompt/text.hpp"

namespace discoprompt {

struct LineError {
  std::size_t line;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<Instance> instances;           // implicit relations
  std::vector<Instance> explicit_instances;  // explicit relations, kept for EDRR runs
  std::vector<ExplicitRecord> explicit_records;  // (connective, second) for the prior
  std::vector<LineError> errors;
  std::map<std::string, int> dropped_senses;  // sense string -> occurrences
  std::map<std::string, int> skipped_types;   // relation types other than implicit/explicit

  nlohmann::json summary() const {
    nlohmann::json errs = nlohmann::json::array();
    for (const auto& e : errors) errs.push_back({{"line", e.line}, {"message", e.message}});
    return {{"implicit", instances.size()},
            {"explicit", explicit_instances.size()},
            {"explicit_records", explicit_records.size()},
            {"errors", errs},
            {"dropped_senses", dropped_senses},
            {"skipped_types", skipped_types}};
  }
};

namespace detail {

// Resolves each sense against the hierarchy, deduplicating; unresolvable
// ones are tallied in `dropped`.
inline std::vector<GoldSense> resolve_golds(const std::vector<std::string>& senses,
                                            const LabelHierarchy& h,
                                            std::map<std::string, int>& dropped) {
  std::vector<GoldSense> out;
  for (const std::string& s : senses) {
    auto r = h.resolve_sense(s);
    if (!r) {
      ++dropped[s];
      continue;
    }
    GoldSense g{h.node(r->first).label, h.node(r->second).label};
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(std::move(g));
  }
  return out;
}

inline void route(Instance inst, IngestResult& out) {
  if (inst.type == RelationType::explicit_relation) {
    if (inst.connective && !normalize_connective(*inst.connective).empty())
      for (const auto& g : inst.gold) out.explicit_records.push_back({*inst.connective, g.second});
    out.explicit_instances.push_back(std::move(inst));
  } else {
    out.instances.push_back(std::move(inst));
  }
}

// "wsj_2100" -> 21.
inline std::optional<int> section_from_doc_id(const std::string& doc_id) {
  static const std::regex wsj(R"(^wsj_(\d\d)\d\d$)", std::regex::icase);
  std::smatch m;
  if (std::regex_match(doc_id, m, wsj)) return std::stoi(m[1].str());
  return std::nullopt;
}

inline std::optional<int> parse_int(std::string_view s) {
  s = text::trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

// CoNLL-2016 relations, one JSON object per line. Implicit relations become
// instances (every sense kept as a gold); explicit ones also feed the
// explicit-record stream. Bad lines are reported and skipped.
inline IngestResult ingest_conll(std::istream& in, const LabelHierarchy& h) {
  IngestResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json rel;
    try {
      rel = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      out.errors.push_back({lineno, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    try {
      std::string type = rel.at("Type").get<std::string>();
      RelationType rt;
      if (type == "Implicit") {
        rt = RelationType::implicit;
      } else if (type == "Explicit") {
        rt = RelationType::explicit_relation;
      } else {
        ++out.skipped_types[type];
        continue;
      }
      Instance inst;
      inst.type = rt;
      inst.arg1 = rel.at("Arg1").at("RawText").get<std::string>();
      inst.arg2 = rel.at("Arg2").at("RawText").get<std::string>();
      std::vector<std::string> senses = rel.at("Sense").get<std::vector<std::string>>();
      if (rel.contains("Connective") && rel["Connective"].contains("RawText")) {
        std::string conn = rel["Connective"]["RawText"].get<std::string>();
        if (!text::trim(conn).empty()) inst.connective = conn;
      }
      std::string doc = rel.contains("DocID") ? rel["DocID"].get<std::string>() : std::string();
      if (rel.contains("ID")) {
        const auto& id = rel["ID"];
        inst.id = id.is_string() ? id.get<std::string>() : id.dump();
      } else {
        inst.id = (doc.empty() ? "line" : doc) + "-" + std::to_string(lineno);
      }
      inst.section = detail::section_from_doc_id(doc);
      if (rt == RelationType::explicit_relation && !inst.connective) {
        out.errors.push_back({lineno, "explicit relation without a connective"});
        continue;
      }
      inst.gold = detail::resolve_golds(senses, h, out.dropped_senses);
      if (inst.gold.empty()) continue;  // every sense dropped; tallied above
      detail::route(std::move(inst), out);
    } catch (const nlohmann::json::exception& e) {
      out.errors.push_back({lineno, std::string("missing or mistyped field: ") + e.what()});
    }
  }
  return out;
}

inline IngestResult ingest_conll(const std::string& path, const LabelHierarchy& h) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read CoNLL relations file '" + path + "'");
  return ingest_conll(in, h);
}

inline constexpr std::size_t kTsvColumns = 7;

// Normalized TSV: id, section, type, connective, senses ("Top.Second"
// joined by ';'), arg1, arg2.
inline IngestResult ingest_tsv(std::istream& in, const LabelHierarchy& h) {
  IngestResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != kTsvColumns) {
      out.errors.push_back({lineno, "expected " + std::to_string(kTsvColumns) + " columns, got " +
                                        std::to_string(cols.size())});
      continue;
    }
    Instance inst;
    inst.id = std::string(text::trim(cols[0]));
    if (inst.id.empty()) {
      out.errors.push_back({lineno, "empty id"});
      continue;
    }
    if (!text::trim(cols[1]).empty()) {
      inst.section = detail::parse_int(cols[1]);
      if (!inst.section) {
        out.errors.push_back({lineno, "section is not an integer"});
        continue;
      }
    }
    std::string type = text::to_lower(text::trim(cols[2]));
    if (type == "implicit") {
      inst.type = RelationType::implicit;
    } else if (type == "explicit") {
      inst.type = RelationType::explicit_relation;
    } else {
      out.errors.push_back({lineno, "unknown relation type '" + cols[2] + "'"});
      continue;
    }
    if (!text::trim(cols[3]).empty()) inst.connective = std::string(text::trim(cols[3]));
    if (text::trim(cols[4]).empty()) {
      out.errors.push_back({lineno, "empty senses column"});
      continue;
    }
    std::vector<std::string> senses;
    bool malformed = false;
    for (const std::string& raw : text::split(cols[4], ';')) {
      std::string s(text::trim(raw));
      auto parts = text::split(s, '.');
      bool ok = parts.size() >= 2;
      for (const auto& p : parts) ok = ok && !text::trim(p).empty();
      if (!ok) {
        out.errors.push_back({lineno, "unparseable sense string '" + s + "'"});
        malformed = true;
        break;
      }
      senses.push_back(s);
    }
    if (malformed) continue;
    inst.arg1 = cols[5];
    inst.arg2 = cols[6];
    if (inst.type == RelationType::explicit_relation && !inst.connective) {
      out.errors.push_back({lineno, "explicit relation without a connective"});
      continue;
    }
    inst.gold = detail::resolve_golds(senses, h, out.dropped_senses);
    if (inst.gold.empty()) {
      out.errors.push_back({lineno, "no sense resolves against hierarchy '" + h.name() + "'"});
      continue;
    }
    detail::route(std::move(inst), out);
  }
  return out;
}

inline IngestResult ingest_tsv(const std::string& path, const LabelHierarchy& h) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read TSV corpus '" + path + "'");
  return ingest_tsv(in, h);
}

// Train/dev/test assignment by WSJ section, or by explicit id lists.
struct SplitSpec {
  std::string name;
  bool by_section = true;
  std::set<int> train_sections, dev_sections, test_sections;
  std::set<std::string> train_ids, dev_ids, test_ids;
  bool everything_to_test = false;

  static std::set<int> range(int lo, int hi) {
    std::set<int> s;
    for (int i = lo; i <= hi; ++i) s.insert(i);
    return s;
  }

  static SplitSpec sections(std::string name, std::set<int> train, std::set<int> dev,
                            std::set<int> test) {
    SplitSpec s;
    s.name = std::move(name);
    s.train_sections = std::move(train);
    s.dev_sections = std::move(dev);
    s.test_sections = std::move(test);
    return s;
  }

  static SplitSpec ji() { return sections("ji", range(2, 20), {0, 1}, {21, 22}); }
  static SplitSpec lin() { return sections("lin", range(2, 21), {22}, {23}); }
  static SplitSpec conll_test() { return sections("conll_test", range(2, 21), {22}, {23}); }
  static SplitSpec conll_blind() {
    SplitSpec s;
    s.name = "conll_blind";
    s.by_section = false;
    s.everything_to_test = true;
    return s;
  }

  static SplitSpec named(std::string_view name) {
    if (name == "ji") return ji();
    if (name == "lin") return lin();
    if (name == "conll_test") return conll_test();
    if (name == "conll_blind") return conll_blind();
    throw ValidationError("unknown split", std::string(name));
  }

  // {"name": "custom", "train": [...], "dev": [...], "test": [...]} where
  // entries are section numbers or instance ids.
  static SplitSpec from_json(const nlohmann::json& j) {
    if (j.is_string()) return named(j.get<std::string>());
    SplitSpec s;
    s.name = j.value("name", std::string("custom"));
    if (s.name != "custom") return named(s.name);
    auto fill = [&](const char* key, std::set<int>& secs, std::set<std::string>& ids) {
      if (!j.contains(key)) return;
      for (const auto& v : j[key]) {
        if (v.is_number_integer()) secs.insert(v.get<int>());
        else if (v.is_string()) ids.insert(v.get<std::string>());
        else throw ValidationError("split entries must be sections or ids", key);
      }
    };
    fill("train", s.train_sections, s.train_ids);
    fill("dev", s.dev_sections, s.dev_ids);
    fill("test", s.test_sections, s.test_ids);
    bool any_sections = !s.train_sections.empty() || !s.dev_sections.empty() || !s.test_sections.empty();
    bool any_ids = !s.train_ids.empty() || !s.dev_ids.empty() || !s.test_ids.empty();
    if (any_sections && any_ids) throw ValidationError("custom split mixes sections and ids");
    s.by_section = !any_ids;
    s.validate();
    return s;
  }

  void validate() const {
    auto disjoint = [](const auto& a, const auto& b) {
      for (const auto& x : a)
        if (b.count(x)) return false;
      return true;
    };
    if (!disjoint(train_sections, dev_sections) || !disjoint(train_sections, test_sections) ||
        !disjoint(dev_sections, test_sections) || !disjoint(train_ids, dev_ids) ||
        !disjoint(train_ids, test_ids) || !disjoint(dev_ids, test_ids))
      throw ValidationError("split sets overlap", name);
  }
};

struct SplitResult {
  std::vector<Instance> train, dev, test, unassigned;

  nlohmann::json report() const {
    return {{"train", train.size()},
            {"dev", dev.size()},
            {"test", test.size()},
            {"unassigned", unassigned.size()}};
  }
};

inline SplitResult apply_split(const std::vector<Instance>& instances, const SplitSpec& spec) {
  spec.validate();
  SplitResult out;
  for (const Instance& inst : instances) {
    if (spec.everything_to_test) {
      out.test.push_back(inst);
      continue;
    }
    if (spec.by_section) {
      if (!inst.section)
        throw DataError("instance '" + inst.id + "' has no section under split '" + spec.name + "'");
      int s = *inst.section;
      if (spec.train_sections.count(s)) out.train.push_back(inst);
      else if (spec.dev_sections.count(s)) out.dev.push_back(inst);
      else if (spec.test_sections.count(s)) out.test.push_back(inst);
      else out.unassigned.push_back(inst);
    } else {
      if (spec.train_ids.count(inst.id)) out.train.push_back(inst);
      else if (spec.dev_ids.count(inst.id)) out.dev.push_back(inst);
      else if (spec.test_ids.count(inst.id)) out.test.push_back(inst);
      else out.unassigned.push_back(inst);
    }
  }
  return out;
}

}  // namespace discoprompt
