#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/error.hpp"
#include "discoprompt/hierarchy.hpp"
#include "discoprompt/instance.hpp"
#include "discoprompt/role.hpp"
#include "discoprompt/text.hpp"

namespace discoprompt {

enum class Variant {
  discoprompt,
  no_tree,
  no_cloze,
  no_discrete,
  t5_adapt,
  chat_label,
  chat_label_conn,
  chat_structure,
};

inline constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::discoprompt, "discoprompt"},       {Variant::no_tree, "no_tree"},
    {Variant::no_cloze, "no_cloze"},             {Variant::no_discrete, "no_discrete"},
    {Variant::t5_adapt, "t5_adapt"},             {Variant::chat_label, "chat_label"},
    {Variant::chat_label_conn, "chat_label_conn"}, {Variant::chat_structure, "chat_structure"},
};

inline std::string_view variant_name(Variant v) {
  for (const auto& [value, name] : kVariantNames)
    if (value == v) return name;
  return "unknown";
}

inline Variant parse_variant(std::string_view s) {
  for (const auto& [value, name] : kVariantNames)
    if (name == s) return value;
  throw ValidationError("unknown template variant", std::string(s));
}

inline bool is_chat(Variant v) {
  return v == Variant::chat_label || v == Variant::chat_label_conn ||
         v == Variant::chat_structure;
}

namespace segment {
struct SoftTokens { int count = 0; };
struct Literal { std::string text; };
struct TreePrompt {};
struct Arg1 {};
struct Arg2 {};
struct Mask { Role role; };
}  // namespace segment

using Segment = std::variant<segment::SoftTokens, segment::Literal, segment::TreePrompt,
                             segment::Arg1, segment::Arg2, segment::Mask>;

inline constexpr std::string_view kClozeText = "The path is";
inline constexpr std::string_view kEdgeText = "->";

struct PromptTemplate {
  Variant variant = Variant::discoprompt;
  int soft_token_count = 20;
  std::vector<Segment> segments;

  // The canonical segment layout of each variant:
  //   [soft] tree. arg1 <conn> arg2 The path is <top> -> <second>
  // no_tree / no_cloze / no_discrete drop the tree, the cloze text, or both;
  // t5_adapt keeps the discrete parts and ends in one whole-path mask.
  static PromptTemplate make(Variant variant, int soft_tokens = 20) {
    using namespace segment;
    if (soft_tokens < 0) throw ValidationError("soft token count must be >= 0");
    PromptTemplate t;
    t.variant = variant;
    t.soft_token_count = is_chat(variant) ? 0 : soft_tokens;
    auto& s = t.segments;
    if (is_chat(variant)) {
      s = {Literal{"Argument 1:"}, Arg1{}, Literal{"Argument 2:"}, Arg2{}};
      return t;
    }
    s.push_back(SoftTokens{t.soft_token_count});
    const bool tree = variant != Variant::no_tree && variant != Variant::no_discrete;
    const bool cloze = variant != Variant::no_cloze && variant != Variant::no_discrete;
    if (tree) s.push_back(TreePrompt{});
    s.push_back(Arg1{});
    if (variant == Variant::t5_adapt) {
      s.push_back(Arg2{});
      s.push_back(Literal{std::string(kClozeText)});
      s.push_back(Mask{Role::whole_path});
      return t;
    }
    s.push_back(Mask{Role::connective});
    s.push_back(Arg2{});
    if (cloze) s.push_back(Literal{std::string(kClozeText)});
    s.push_back(Mask{Role::top});
    s.push_back(Literal{std::string(kEdgeText)});
    s.push_back(Mask{Role::second});
    return t;
  }

  std::vector<Role> mask_roles() const {
    std::vector<Role> roles;
    for (const Segment& seg : segments)
      if (auto* m = std::get_if<segment::Mask>(&seg)) roles.push_back(m->role);
    return roles;
  }

  void validate() const {
    if (segments.empty()) throw ValidationError("template has no segments");
    std::vector<Role> roles = mask_roles();
    std::set<Role> unique(roles.begin(), roles.end());
    if (unique.size() != roles.size()) throw ValidationError("template repeats a mask role");
    if (is_chat(variant)) {
      if (!roles.empty()) throw ValidationError("chat templates carry no masks");
    } else if (variant == Variant::t5_adapt) {
      if (roles != std::vector<Role>{Role::whole_path})
        throw ValidationError("t5_adapt template needs exactly one whole_path mask");
    } else {
      if (roles != std::vector<Role>{Role::connective, Role::top, Role::second})
        throw ValidationError("path template needs masks [connective, top, second] in order");
    }
  }
};

struct MaskSpan {
  Role role;
  int slot;           // k in <extra_mask_k>
  std::size_t begin;  // byte offsets into RenderedPrompt::text, [begin, end)
  std::size_t end;
};

struct RenderedPrompt {
  std::string text;
  std::vector<MaskSpan> mask_spans;
  std::map<Role, std::vector<std::string>> candidate_sets;
  int soft_token_count = 0;

  const MaskSpan* span_for(Role r) const {
    for (const auto& s : mask_spans)
      if (s.role == r) return &s;
    return nullptr;
  }

  nlohmann::json to_json() const {
    nlohmann::json spans = nlohmann::json::object();
    for (const auto& s : mask_spans) spans[std::string(role_name(s.role))] = {s.begin, s.end};
    nlohmann::json cands = nlohmann::json::object();
    for (const auto& [role, list] : candidate_sets) cands[std::string(role_name(role))] = list;
    return {{"text", text},
            {"mask_spans", spans},
            {"candidate_sets", cands},
            {"soft_tokens", soft_token_count}};
  }
};

inline std::string mask_marker(int slot) { return "<extra_mask_" + std::to_string(slot) + ">"; }
inline std::string soft_marker(int k) { return "<soft_" + std::to_string(k) + ">"; }

// "Top -> Second -> connective" clauses joined by "; ".
inline std::string tree_prompt(const LabelHierarchy& h) {
  std::string out;
  for (const SensePath& p : h.paths()) {
    if (!out.empty()) out.append("; ");
    out.append(h.serialize(p));
  }
  return out;
}

// Candidate surfaces for a mask role, in hierarchy enumeration order.
inline std::vector<std::string> candidates_for(Role role, const LabelHierarchy& h) {
  std::vector<std::string> out;
  if (role == Role::whole_path) {
    for (const SensePath& p : h.paths()) out.push_back(h.serialize(p));
    return out;
  }
  int depth = role_depth(role);
  if (depth > h.depth())
    throw ValidationError("hierarchy has no level for mask role", std::string(role_name(role)));
  for (int idx : h.level(depth)) out.push_back(h.node(idx).surface);
  return out;
}

enum class ChatKind { label, label_conn, structure };

inline ChatKind parse_chat_kind(std::string_view s) {
  if (s == "label") return ChatKind::label;
  if (s == "label-conn" || s == "label_conn") return ChatKind::label_conn;
  if (s == "structure") return ChatKind::structure;
  throw ValidationError("unknown chat prompt kind", std::string(s));
}

// Numbered candidate lines, 1-based, in enumeration order.
inline std::vector<std::string> chat_candidates(ChatKind kind, const LabelHierarchy& h) {
  std::vector<std::string> lines;
  auto name = [&](int idx) { return h.node(idx).display; };
  if (kind == ChatKind::label) {
    for (int idx : h.level(2)) lines.push_back(name(h.node(idx).parent) + "." + name(idx));
  } else {
    if (!h.has_connective_layer())
      throw ValidationError("chat prompt kind needs a connective layer");
    for (const SensePath& p : h.paths()) {
      if (kind == ChatKind::label_conn)
        lines.push_back(name(p.nodes[0]) + "." + name(p.nodes[1]) + ", " + name(p.nodes[2]));
      else
        lines.push_back(name(p.nodes[0]) + " -> " + name(p.nodes[1]) + " -> " + name(p.nodes[2]));
    }
  }
  for (std::size_t i = 0; i < lines.size(); ++i) lines[i] = std::to_string(i + 1) + ". " + lines[i];
  return lines;
}

namespace detail {
inline void require_arguments(const Instance& inst) {
  if (text::trim(inst.arg1).empty()) throw ValidationError("empty argument 1", inst.id);
  if (text::trim(inst.arg2).empty()) throw ValidationError("empty argument 2", inst.id);
}
}  // namespace detail

inline std::string chat_prompt(ChatKind kind, const Instance& inst, const LabelHierarchy& h) {
  detail::require_arguments(inst);
  std::string_view asked = kind == ChatKind::label        ? "label"
                           : kind == ChatKind::label_conn ? "and connective"
                                                          : "path";
  std::string out = "Argument 1: " + inst.arg1 + " Argument 2: " + inst.arg2 +
                    " What is the relation " + std::string(asked) +
                    " between Argument 1 and Argument 2? Select from the candidates.";
  for (const std::string& line : chat_candidates(kind, h)) out.append("\n").append(line);
  return out;
}

struct RenderOptions {
  // When set, the connective mask is replaced by this text (explicit
  // relations with their gold connective).
  std::optional<std::string> filled_connective;
};

inline RenderedPrompt render(const PromptTemplate& t, const Instance& inst,
                             const LabelHierarchy& h, const RenderOptions& opts = {}) {
  t.validate();
  detail::require_arguments(inst);
  RenderedPrompt out;
  if (is_chat(t.variant)) {
    ChatKind kind = t.variant == Variant::chat_label        ? ChatKind::label
                    : t.variant == Variant::chat_label_conn ? ChatKind::label_conn
                                                            : ChatKind::structure;
    out.text = chat_prompt(kind, inst, h);
    return out;
  }

  out.soft_token_count = t.soft_token_count;
  std::string& s = out.text;
  auto append = [&](std::string_view piece) {
    if (piece.empty()) return;
    if (!s.empty()) s.push_back(' ');
    s.append(piece);
  };
  int slot = 0;
  for (const Segment& seg : t.segments) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, segment::SoftTokens>) {
            for (int k = 0; k < v.count; ++k) append(soft_marker(k));
          } else if constexpr (std::is_same_v<T, segment::Literal>) {
            append(v.text);
          } else if constexpr (std::is_same_v<T, segment::TreePrompt>) {
            append(tree_prompt(h) + ".");
          } else if constexpr (std::is_same_v<T, segment::Arg1>) {
            append(inst.arg1);
          } else if constexpr (std::is_same_v<T, segment::Arg2>) {
            append(inst.arg2);
          } else if constexpr (std::is_same_v<T, segment::Mask>) {
            if (v.role == Role::connective && opts.filled_connective) {
              append(*opts.filled_connective);
              return;
            }
            std::string marker = mask_marker(slot);
            append(marker);
            out.mask_spans.push_back({v.role, slot, s.size() - marker.size(), s.size()});
            out.candidate_sets[v.role] = candidates_for(v.role, h);
            ++slot;
          }
        },
        seg);
  }
  return out;
}

// Parses a free-form generation into a path. Accepts the arrow chain
// "X -> Y [-> Z]" and the dotted "X.Y[, z]" form, case-insensitively; the
// first recognizable occurrence wins and missing deeper nodes are filled
// with the first enumerated descendant.
class PathParser {
 public:
  explicit PathParser(const LabelHierarchy& h) : h_(h) {}

  SensePath parse(std::string_view raw) const {
    std::string s = normalize_arrows(raw);
    for (std::size_t pos = s.find("->"); pos != std::string::npos; pos = s.find("->", pos + 2)) {
      auto top = match_suffix(s, pos, 1);
      if (!top) continue;
      std::size_t cursor = skip_spaces(s, pos + 2);
      auto second = match_prefix(s, cursor, 2, -2);
      if (!second) continue;
      std::vector<int> chain{top->first, second->first};
      cursor = second->second;
      for (int depth = 3; depth <= h_.depth(); ++depth) {
        std::size_t c = skip_spaces(s, cursor);
        if (s.compare(c, 2, "->") != 0) break;
        c = skip_spaces(s, c + 2);
        auto next = match_prefix(s, c, depth, -2);
        if (!next) break;
        chain.push_back(next->first);
        cursor = next->second;
      }
      return complete(chain, raw);
    }
    for (std::size_t pos = s.find('.'); pos != std::string::npos; pos = s.find('.', pos + 1)) {
      auto top = match_suffix(s, pos, 1);
      if (!top) continue;
      auto second = match_prefix(s, pos + 1, 2, -2);
      if (!second) continue;
      std::vector<int> chain{top->first, second->first};
      if (h_.depth() >= 3) {
        std::size_t c = skip_spaces(s, second->second);
        if (c < s.size() && s[c] == ',') {
          auto conn = match_prefix(s, skip_spaces(s, c + 1), 3, second->first);
          if (conn) chain.push_back(conn->first);
        }
      }
      return complete(chain, raw);
    }
    throw ValidationError("unparseable path: no recognizable labels", std::string(raw));
  }

 private:
  static std::string normalize_arrows(std::string_view raw) {
    std::string s(raw);
    const std::string unicode_arrow = "\xE2\x86\x92";
    for (std::size_t p = s.find(unicode_arrow); p != std::string::npos; p = s.find(unicode_arrow, p))
      s.replace(p, unicode_arrow.size(), "->");
    return s;
  }

  static std::size_t skip_spaces(const std::string& s, std::size_t pos) {
    while (pos < s.size() && text::is_space(s[pos])) ++pos;
    return pos;
  }

  // Longest node name at `depth` ending right before `end` (spaces skipped),
  // starting on a word boundary.
  std::optional<std::pair<int, std::size_t>> match_suffix(const std::string& s, std::size_t end,
                                                          int depth) const {
    while (end > 0 && text::is_space(s[end - 1])) --end;
    std::optional<std::pair<int, std::size_t>> best;
    std::size_t best_len = 0;
    for (int idx : h_.level(depth)) {
      for (const std::string& name : LabelHierarchy::names_of(h_.node(idx))) {
        if (name.size() > end || name.size() <= best_len) continue;
        std::size_t begin = end - name.size();
        if (!text::iequals(std::string_view(s).substr(begin, name.size()), name)) continue;
        if (begin > 0 && text::is_alnum(s[begin - 1])) continue;
        best = std::pair{idx, begin};
        best_len = name.size();
      }
    }
    return best;
  }

  // Longest node name at `depth` starting at `begin` and ending on a word
  // boundary. parent == -2 means any parent. Returns (node, end offset).
  std::optional<std::pair<int, std::size_t>> match_prefix(const std::string& s, std::size_t begin,
                                                          int depth, int parent) const {
    std::optional<std::pair<int, std::size_t>> best;
    std::size_t best_len = 0;
    for (int idx : h_.level(depth)) {
      const LabelNode& n = h_.node(idx);
      if (parent != -2 && n.parent != parent) continue;
      for (const std::string& name : LabelHierarchy::names_of(n)) {
        if (begin + name.size() > s.size() || name.size() <= best_len) continue;
        if (!text::iequals(std::string_view(s).substr(begin, name.size()), name)) continue;
        std::size_t end = begin + name.size();
        if (end < s.size() && text::is_alnum(s[end])) continue;
        best = std::pair{idx, end};
        best_len = name.size();
      }
    }
    return best;
  }

  SensePath complete(const std::vector<int>& chain, std::string_view raw) const {
    for (std::size_t k = 1; k < chain.size(); ++k) {
      if (h_.node(chain[k]).parent != chain[k - 1])
        throw ValidationError("unparseable path: '" + h_.node(chain[k]).label +
                                  "' is not a child of '" + h_.node(chain[k - 1]).label + "'",
                              std::string(raw));
    }
    const SensePath& p = h_.first_path_through(chain.back());
    return p;
  }

  const LabelHierarchy& h_;
};

inline SensePath parse_path(std::string_view text, const LabelHierarchy& h) {
  return PathParser(h).parse(text);
}

}  // namespace discoprompt
