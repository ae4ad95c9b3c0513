#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <optional>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/error.hpp"
#include "discoprompt/hierarchy.hpp"
#include "discoprompt/text.hpp"

// Naive-Bayes connective priors Pr(second-level sense | connective),
// estimated from explicit relations.
namespace discoprompt {

struct ExplicitRecord {
  std::string connective;
  std::string sense;  // second-level label, or a "Top.Second" string
};

// Lowercase, collapse internal whitespace, strip punctuation at both ends.
inline std::string normalize_connective(std::string_view raw) {
  std::string s = text::collapse_whitespace(text::to_lower(raw));
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && (punct(s[b]) || text::is_space(s[b]))) ++b;
  while (e > b && (punct(s[e - 1]) || text::is_space(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct PriorMatrix {
  std::vector<std::string> connectives;  // sorted, normalized
  std::vector<std::string> senses;       // second-level labels, hierarchy order
  std::vector<std::vector<std::uint64_t>> counts;  // [connective][sense]
  double alpha = 0.0;

  std::optional<std::size_t> row_of(std::string_view connective) const {
    std::string key = normalize_connective(connective);
    auto it = std::lower_bound(connectives.begin(), connectives.end(), key);
    if (it == connectives.end() || *it != key) return std::nullopt;
    return static_cast<std::size_t>(it - connectives.begin());
  }

  std::uint64_t count(std::string_view connective, std::string_view sense) const {
    auto row = row_of(connective);
    if (!row) return 0;
    for (std::size_t j = 0; j < senses.size(); ++j)
      if (senses[j] == sense) return counts[*row][j];
    return 0;
  }

  std::uint64_t row_sum(std::size_t row) const {
    std::uint64_t s = 0;
    for (auto c : counts.at(row)) s += c;
    return s;
  }

  nlohmann::json to_json() const {
    return {{"connectives", connectives}, {"senses", senses}, {"counts", counts}, {"alpha", alpha}};
  }

  static PriorMatrix from_json(const nlohmann::json& j) {
    PriorMatrix m;
    try {
      m.connectives = j.at("connectives").get<std::vector<std::string>>();
      m.senses = j.at("senses").get<std::vector<std::string>>();
      m.counts = j.at("counts").get<std::vector<std::vector<std::uint64_t>>>();
      m.alpha = j.value("alpha", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed prior matrix: ") + e.what());
    }
    if (m.counts.size() != m.connectives.size())
      throw ValidationError("prior matrix row count does not match connectives");
    for (const auto& row : m.counts)
      if (row.size() != m.senses.size())
        throw ValidationError("prior matrix column count does not match senses");
    if (!std::is_sorted(m.connectives.begin(), m.connectives.end()))
      throw ValidationError("prior matrix connectives must be sorted");
    if (m.alpha < 0) throw ValidationError("smoothing alpha must be non-negative");
    return m;
  }
};

struct RecordReject {
  std::size_t index;  // position in the input stream
  std::string reason;
};

struct AccumulateResult {
  PriorMatrix matrix;
  std::vector<RecordReject> rejects;
};

// Counts (connective, second-level sense) pairs. Records whose sense does
// not resolve against `h`, or whose connective normalizes to nothing, are
// rejected individually.
inline AccumulateResult accumulate(const std::vector<ExplicitRecord>& records,
                                   const LabelHierarchy& h, double alpha = 0.0) {
  if (alpha < 0) throw ValidationError("smoothing alpha must be non-negative");
  AccumulateResult result;
  PriorMatrix& m = result.matrix;
  m.alpha = alpha;
  for (int idx : h.level(2)) m.senses.push_back(h.node(idx).label);

  std::map<std::string, std::vector<std::uint64_t>> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ExplicitRecord& r = records[i];
    std::string conn = normalize_connective(r.connective);
    if (conn.empty()) {
      result.rejects.push_back({i, "empty connective"});
      continue;
    }
    auto resolved = h.resolve_sense(r.sense);
    if (!resolved) {
      result.rejects.push_back({i, "unknown sense '" + r.sense + "'"});
      continue;
    }
    auto& row = rows[conn];
    if (row.empty()) row.assign(m.senses.size(), 0);
    row[h.node(resolved->second).level_index] += 1;
  }
  for (auto& [conn, row] : rows) {
    m.connectives.push_back(conn);
    m.counts.push_back(std::move(row));
  }
  return result;
}

// Pr(sense | z) = (count(z, sense) + alpha) / (row_sum + alpha * |senses|).
inline std::vector<double> conditional(const PriorMatrix& m, std::string_view connective) {
  const double n = static_cast<double>(m.senses.size());
  auto row = m.row_of(connective);
  std::uint64_t total = row ? m.row_sum(*row) : 0;
  if (total == 0 && m.alpha == 0.0)
    throw ValidationError("undefined conditional: connective never observed and alpha is 0",
                          std::string(connective));
  std::vector<double> out(m.senses.size());
  const double denom = static_cast<double>(total) + m.alpha * n;
  for (std::size_t j = 0; j < out.size(); ++j) {
    double c = row ? static_cast<double>(m.counts[*row][j]) : 0.0;
    out[j] = (c + m.alpha) / denom;
  }
  return out;
}

struct RankedConnective {
  std::string connective;
  double probability;
};

struct ConnectiveRanking {
  std::vector<std::string> senses;
  std::vector<std::vector<RankedConnective>> by_sense;  // aligned with senses

  const std::vector<RankedConnective>& for_sense(std::string_view sense) const {
    for (std::size_t j = 0; j < senses.size(); ++j)
      if (senses[j] == sense) return by_sense[j];
    throw ValidationError("sense not in ranking", std::string(sense));
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (std::size_t j = 0; j < senses.size(); ++j) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& rc : by_sense[j])
        list.push_back({{"connective", rc.connective}, {"probability", rc.probability}});
      out[senses[j]] = std::move(list);
    }
    return out;
  }
};

// Per sense, observed connectives by descending Pr(sense | z); ties go to
// the lexicographically smaller connective. Top-1 is the suggested leaf.
inline ConnectiveRanking rank_connectives(const PriorMatrix& m) {
  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < m.connectives.size(); ++i)
    if (m.row_sum(i) > 0) observed.push_back(i);
  if (observed.empty()) throw ValidationError("rank_connectives needs an observed connective");

  ConnectiveRanking ranking;
  ranking.senses = m.senses;
  ranking.by_sense.resize(m.senses.size());
  for (std::size_t i : observed) {
    std::vector<double> probs = conditional(m, m.connectives[i]);
    for (std::size_t j = 0; j < probs.size(); ++j)
      ranking.by_sense[j].push_back({m.connectives[i], probs[j]});
  }
  for (auto& list : ranking.by_sense) {
    std::sort(list.begin(), list.end(), [](const RankedConnective& a, const RankedConnective& b) {
      if (a.probability != b.probability) return a.probability > b.probability;
      return a.connective < b.connective;
    });
  }
  return ranking;
}

struct TsvRecords {
  std::vector<ExplicitRecord> records;
  std::vector<RecordReject> rejects;  // index = 1-based line number
};

// "connective<TAB>second_level_sense" per line; blank lines are skipped.
inline TsvRecords read_explicit_tsv(std::istream& in) {
  TsvRecords out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != 2) {
      out.rejects.push_back({lineno, "expected 2 tab-separated columns"});
      continue;
    }
    out.records.push_back({cols[0], std::string(text::trim(cols[1]))});
  }
  return out;
}

inline TsvRecords read_explicit_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read explicit-record file '" + path + "'");
  return read_explicit_tsv(in);
}

}  // namespace discoprompt
