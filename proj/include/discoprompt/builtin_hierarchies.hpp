#pragma once

#include <string_view>

// Shipped label word sets. Children appear in the order paths are enumerated.
namespace discoprompt::builtin {

inline constexpr std::string_view kPdtb2 = R"json({
  "name": "pdtb2",
  "depth": 3,
  "comment": "PDTB 2.0: 4 top-level relations, 11 second-level subtypes, one connective per subtype.",
  "report_order": ["Asynchronous", "Synchrony", "Cause", "Justification", "Contrast", "Concession",
                   "Conjunction", "Instantiation", "Restatement", "Alternative", "List"],
  "nodes": [
    {"label": "Comparison", "depth": 1, "parent": null, "surface": "Comparison", "short": "Comp"},
    {"label": "Contingency", "depth": 1, "parent": null, "surface": "Contingency", "short": "Cont"},
    {"label": "Expansion", "depth": 1, "parent": null, "surface": "Expansion", "short": "Exp"},
    {"label": "Temporal", "depth": 1, "parent": null, "surface": "Temporal", "short": "Temp"},

    {"label": "Concession", "depth": 2, "parent": "Comparison", "surface": "Concession"},
    {"label": "Contrast", "depth": 2, "parent": "Comparison", "surface": "Contrast"},
    {"label": "Cause", "depth": 2, "parent": "Contingency", "surface": "Cause"},
    {"label": "Justification", "depth": 2, "parent": "Contingency", "surface": "Justification",
     "display": "Pragmatic", "short": "PragmaticCause",
     "aliases": ["Pragmatic cause", "Pragmatic", "PragmaticCause"]},
    {"label": "Alternative", "depth": 2, "parent": "Expansion", "surface": "Alternative"},
    {"label": "Conjunction", "depth": 2, "parent": "Expansion", "surface": "Conjunction"},
    {"label": "Instantiation", "depth": 2, "parent": "Expansion", "surface": "Instantiation"},
    {"label": "List", "depth": 2, "parent": "Expansion", "surface": "List"},
    {"label": "Restatement", "depth": 2, "parent": "Expansion", "surface": "Restatement"},
    {"label": "Asynchronous", "depth": 2, "parent": "Temporal", "surface": "Asynchronous"},
    {"label": "Synchrony", "depth": 2, "parent": "Temporal", "surface": "Synchrony"},

    {"label": "if", "depth": 3, "parent": "Concession", "surface": "if"},
    {"label": "however", "depth": 3, "parent": "Contrast", "surface": "however"},
    {"label": "so", "depth": 3, "parent": "Cause", "surface": "so"},
    {"label": "indeed", "depth": 3, "parent": "Justification", "surface": "indeed"},
    {"label": "instead", "depth": 3, "parent": "Alternative", "surface": "instead"},
    {"label": "also", "depth": 3, "parent": "Conjunction", "surface": "also"},
    {"label": "for example", "depth": 3, "parent": "Instantiation", "surface": "for example"},
    {"label": "and", "depth": 3, "parent": "List", "surface": "and"},
    {"label": "specifically", "depth": 3, "parent": "Restatement", "surface": "specifically"},
    {"label": "before", "depth": 3, "parent": "Asynchronous", "surface": "before"},
    {"label": "when", "depth": 3, "parent": "Synchrony", "surface": "when"}
  ]
})json";

inline constexpr std::string_view kConll16 = R"json({
  "name": "conll16",
  "depth": 3,
  "comment": "CoNLL 2016: 14 second-level senses with one connective each. The shared task's sense inventory has 15 entries; the 15th is EntRel, which has no top-level parent and is left out of the path tree.",
  "nodes": [
    {"label": "Comparison", "depth": 1, "parent": null, "surface": "Comparison", "short": "Comp"},
    {"label": "Contingency", "depth": 1, "parent": null, "surface": "Contingency", "short": "Cont"},
    {"label": "Expansion", "depth": 1, "parent": null, "surface": "Expansion", "short": "Exp"},
    {"label": "Temporal", "depth": 1, "parent": null, "surface": "Temporal", "short": "Temp"},

    {"label": "Concession", "depth": 2, "parent": "Comparison", "surface": "Concession"},
    {"label": "Contrast", "depth": 2, "parent": "Comparison", "surface": "Contrast"},
    {"label": "Reason", "depth": 2, "parent": "Contingency", "surface": "Reason"},
    {"label": "Result", "depth": 2, "parent": "Contingency", "surface": "Result"},
    {"label": "Condition", "depth": 2, "parent": "Contingency", "surface": "Condition"},
    {"label": "Alternative", "depth": 2, "parent": "Expansion", "surface": "Alternative"},
    {"label": "Chosen", "depth": 2, "parent": "Expansion", "surface": "Chosen",
     "aliases": ["Chosen alternative"]},
    {"label": "Conjunction", "depth": 2, "parent": "Expansion", "surface": "Conjunction"},
    {"label": "Instantiation", "depth": 2, "parent": "Expansion", "surface": "Instantiation"},
    {"label": "Exception", "depth": 2, "parent": "Expansion", "surface": "Exception"},
    {"label": "Restatement", "depth": 2, "parent": "Expansion", "surface": "Restatement"},
    {"label": "Precedence", "depth": 2, "parent": "Temporal", "surface": "Precedence"},
    {"label": "Succession", "depth": 2, "parent": "Temporal", "surface": "Succession"},
    {"label": "Synchrony", "depth": 2, "parent": "Temporal", "surface": "Synchrony"},

    {"label": "nonetheless", "depth": 3, "parent": "Concession", "surface": "nonetheless"},
    {"label": "but", "depth": 3, "parent": "Contrast", "surface": "but"},
    {"label": "because", "depth": 3, "parent": "Reason", "surface": "because"},
    {"label": "so", "depth": 3, "parent": "Result", "surface": "so"},
    {"label": "if", "depth": 3, "parent": "Condition", "surface": "if"},
    {"label": "unless", "depth": 3, "parent": "Alternative", "surface": "unless"},
    {"label": "instead", "depth": 3, "parent": "Chosen", "surface": "instead"},
    {"label": "and", "depth": 3, "parent": "Conjunction", "surface": "and"},
    {"label": "for example", "depth": 3, "parent": "Instantiation", "surface": "for example"},
    {"label": "except", "depth": 3, "parent": "Exception", "surface": "except"},
    {"label": "indeed", "depth": 3, "parent": "Restatement", "surface": "indeed"},
    {"label": "before", "depth": 3, "parent": "Precedence", "surface": "before"},
    {"label": "previously", "depth": 3, "parent": "Succession", "surface": "previously"},
    {"label": "when", "depth": 3, "parent": "Synchrony", "surface": "when"}
  ]
})json";

}  // namespace discoprompt::builtin
