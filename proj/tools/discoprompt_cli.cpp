#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "discoprompt/discoprompt.hpp"

using namespace discoprompt;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("not valid JSON: ") + e.what(), path);
  }
}

// Non-empty JSON lines of a file, with 1-based line numbers.
std::vector<std::pair<std::size_t, json>> read_json_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::vector<std::pair<std::size_t, json>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.emplace_back(lineno, json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

Instance instance_from(const std::string& arg1, const std::string& arg2) {
  Instance inst;
  inst.id = "cli";
  inst.arg1 = arg1;
  inst.arg2 = arg2;
  return inst;
}

void print_eval_table(const EvalReport& r, const LabelHierarchy& h) {
  std::printf("%-6s  acc %.4f  macro-F1 %.4f  n=%d  missing=%d\n\n", std::string(level_name(r.level)).c_str(),
              r.accuracy, r.macro_f1, r.total, r.n_unparseable);
  std::cout << labelwise_report(r, h);
}

json eval_json(const EvalReport& r, const LabelHierarchy& h) {
  json j = r.to_json();
  j["labelwise"] = labelwise_json(r, h);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchy-path prediction for implicit discourse relations"};
  app.require_subcommand(1);

  std::string hierarchy_name = "pdtb2";
  std::string format = "json";
  const auto formats = CLI::IsMember({"json", "table"});
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--hierarchy", hierarchy_name, "Built-in name (pdtb2, conll16) or JSON config path");
    cmd->add_option("--format", format, "json or table")->check(formats);
  };

  auto* hier = app.add_subcommand("hierarchy", "Label hierarchies");
  hier->require_subcommand(1);
  auto* hier_show = hier->add_subcommand("show", "Show a hierarchy and its paths");
  hier_show->add_option("name", hierarchy_name, "Built-in name or JSON config path");
  hier_show->add_option("--format", format)->check(formats);

  auto* prior = app.add_subcommand("prior", "Connective/sense prior");
  prior->require_subcommand(1);
  std::string prior_in, out_path, matrix_path;
  double alpha = 0;
  int top_k = 3;
  auto* prior_build = prior->add_subcommand("build", "Count (connective, sense) pairs");
  prior_build->add_option("--in", prior_in, "connective<TAB>sense lines")->required();
  prior_build->add_option("--alpha", alpha, "Additive smoothing")->check(CLI::NonNegativeNumber);
  prior_build->add_option("--out", out_path, "Also write the matrix JSON here");
  add_common(prior_build);
  auto* prior_rank = prior->add_subcommand("rank", "Rank connectives per sense");
  prior_rank->add_option("--matrix", matrix_path, "Matrix JSON from 'prior build'")->required();
  prior_rank->add_option("--top", top_k, "Connectives shown per sense in table output")->check(CLI::PositiveNumber);
  prior_rank->add_option("--format", format)->check(formats);

  std::string variant = "discoprompt", arg1, arg2, connective;
  int soft = 20;
  auto* render_cmd = app.add_subcommand("render", "Render a prompt for one argument pair");
  render_cmd->add_option("--variant", variant);
  render_cmd->add_option("--arg1", arg1)->required();
  render_cmd->add_option("--arg2", arg2)->required();
  render_cmd->add_option("--soft-tokens", soft)->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--connective", connective, "Fill the connective slot (explicit relations)");
  add_common(render_cmd);

  std::string kind = "structure";
  auto* chat_cmd = app.add_subcommand("chat-prompts", "Render a chat prompt");
  chat_cmd->add_option("--kind", kind, "label, label-conn or structure");
  chat_cmd->add_option("--arg1", arg1)->required();
  chat_cmd->add_option("--arg2", arg2)->required();
  add_common(chat_cmd);

  std::string response;
  auto* parse_cmd = app.add_subcommand("parse-path", "Parse a generated path string");
  parse_cmd->add_option("text", response)->required();
  add_common(parse_cmd);

  std::string backend, dist_path, subset_spec = "top,second,connective", endpoint, table_path;
  int timeout_ms = 5000, retries = 3;
  auto* score_cmd = app.add_subcommand("score", "Score one argument pair, or predict from stored distributions");
  score_cmd->add_option("--backend", backend, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  score_cmd->add_option("--table", table_path, "Mock table JSON (mock backend)");
  score_cmd->add_option("--endpoint", endpoint, "Mask scorer base URL (remote backend)");
  score_cmd->add_option("--timeout-ms", timeout_ms)->check(CLI::PositiveNumber);
  score_cmd->add_option("--retries", retries)->check(CLI::NonNegativeNumber);
  score_cmd->add_option("--arg1", arg1);
  score_cmd->add_option("--arg2", arg2);
  score_cmd->add_option("--variant", variant);
  score_cmd->add_option("--soft-tokens", soft)->check(CLI::NonNegativeNumber);
  score_cmd->add_option("--distributions", dist_path, "JSON lines of {role: [probs]}; replaces --backend");
  score_cmd->add_option("--subset", subset_spec, "Mask factors to include, e.g. top,second");
  add_common(score_cmd);

  std::string level = "second", preds_path, corpus_path, corpus_format = "tsv";
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against a corpus");
  eval_cmd->add_option("--level", level, "top or second")->check(CLI::IsMember({"top", "second"}));
  eval_cmd->add_option("--predictions", preds_path, "JSON lines with id, top, second")->required();
  eval_cmd->add_option("--corpus", corpus_path)->required();
  eval_cmd->add_option("--corpus-format", corpus_format)->check(CLI::IsMember({"tsv", "conll"}));
  add_common(eval_cmd);

  std::string config_path, predictions_out;
  auto* run_cmd = app.add_subcommand("run", "Run an evaluation pipeline from a JSON config");
  run_cmd->add_option("--config", config_path)->required();
  run_cmd->add_option("--predictions-out", predictions_out, "Write per-instance predictions (JSON lines)");
  run_cmd->add_option("--format", format)->check(formats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::validation);
  }

  const bool table = format == "table";
  try {
    if (*hier_show) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      if (table) {
        std::printf("%s: %zu top, %zu second, %zu paths\n", h.name().c_str(), h.level(1).size(),
                    h.level(2).size(), h.paths().size());
        for (const auto& p : h.paths()) std::printf("%3d  %s\n", p.id, h.serialize(p).c_str());
      } else {
        json paths = json::array();
        for (const auto& p : h.paths()) paths.push_back(h.serialize(p));
        std::cout << json{{"name", h.name()}, {"paths", paths}, {"config", h.to_json()}}.dump(2) << '\n';
      }
    } else if (*prior_build) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      TsvRecords tsv = read_explicit_tsv(prior_in);
      AccumulateResult acc = accumulate(tsv.records, h, alpha);
      for (const auto& r : tsv.rejects) std::cerr << "line " << r.index << ": " << r.reason << '\n';
      for (const auto& r : acc.rejects) std::cerr << "record " << r.index << ": " << r.reason << '\n';
      std::string dumped = acc.matrix.to_json().dump(1) + "\n";
      if (!out_path.empty()) write_file(out_path, dumped);
      if (table) {
        const PriorMatrix& m = acc.matrix;
        std::printf("%-16s", "connective");
        for (const auto& s : m.senses) std::printf(" %6.6s", s.c_str());
        std::printf("\n");
        for (std::size_t i = 0; i < m.connectives.size(); ++i) {
          std::printf("%-16s", m.connectives[i].c_str());
          for (auto c : m.counts[i]) std::printf(" %6llu", static_cast<unsigned long long>(c));
          std::printf("\n");
        }
      } else {
        std::cout << dumped;
      }
    } else if (*prior_rank) {
      ConnectiveRanking ranking = rank_connectives(PriorMatrix::from_json(read_json_file(matrix_path)));
      if (table) {
        for (std::size_t j = 0; j < ranking.senses.size(); ++j) {
          std::printf("%-16s", ranking.senses[j].c_str());
          const auto& list = ranking.by_sense[j];
          for (std::size_t k = 0; k < list.size() && k < static_cast<std::size_t>(top_k); ++k)
            std::printf("  %s (%.3f)", list[k].connective.c_str(), list[k].probability);
          std::printf("\n");
        }
      } else {
        std::cout << ranking.to_json().dump(2) << '\n';
      }
    } else if (*render_cmd) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      RenderOptions opts;
      if (!connective.empty()) opts.filled_connective = connective;
      RenderedPrompt r =
          render(PromptTemplate::make(parse_variant(variant), soft), instance_from(arg1, arg2), h, opts);
      if (table) std::cout << r.text << '\n';
      else std::cout << r.to_json().dump(2) << '\n';
    } else if (*chat_cmd) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      ChatKind k = parse_chat_kind(kind);
      std::string prompt = chat_prompt(k, instance_from(arg1, arg2), h);
      if (table) std::cout << prompt << '\n';
      else std::cout << json{{"kind", kind}, {"prompt", prompt}, {"candidates", chat_candidates(k, h)}}.dump(2) << '\n';
    } else if (*parse_cmd) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      SensePath p = parse_path(response, h);
      if (table) {
        std::cout << h.serialize(p) << '\n';
      } else {
        json labels = json::array();
        for (int k = 1; k <= h.depth(); ++k) labels.push_back(h.ancestor_at(p, k).label);
        std::cout << json{{"path", h.serialize(p)}, {"id", p.id}, {"labels", labels}}.dump() << '\n';
      }
    } else if (*score_cmd) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      MaskSubset subset = MaskSubset::parse(subset_spec);
      std::vector<json> rows;
      if (!dist_path.empty()) {
        if (!backend.empty()) throw ValidationError("--distributions and --backend are exclusive");
        for (const auto& [lineno, j] : read_json_lines(dist_path)) {
          MaskDistributions d = MaskDistributions::from_json(j);
          validate_distributions(d, h);
          rows.push_back(predict(d, h, subset).to_json(h));
        }
      } else {
        if (backend.empty()) throw ValidationError("score needs --backend or --distributions");
        Variant v = parse_variant(variant);
        if (is_chat(v) || v == Variant::t5_adapt)
          throw ValidationError("score needs a variant with one mask per level", variant);
        ScoreRequest req =
            ScoreRequest::from_rendered(render(PromptTemplate::make(v, soft), instance_from(arg1, arg2), h), "cli");
        std::unique_ptr<MaskScorer> scorer;
        if (backend == "remote") {
          if (endpoint.empty()) throw ValidationError("remote backend needs --endpoint");
          RemoteOptions opts;
          opts.timeout = std::chrono::milliseconds(timeout_ms);
          opts.retries = retries;
          scorer = std::make_unique<RemoteScorer>(endpoint, opts);
        } else {
          if (table_path.empty()) throw ValidationError("mock backend needs --table");
          scorer = std::make_unique<MockScorer>(MockTable::from_json(read_json_file(table_path)));
        }
        MaskDistributions d = scorer->score(req).distributions();
        validate_distributions(d, h);
        json row = predict(d, h, subset).to_json(h);
        row["distributions"] = d.to_json();
        rows.push_back(row);
      }
      for (const json& row : rows) {
        if (table)
          std::printf("%-48s %.6g\n", row["path"].get<std::string>().c_str(), row["score"].get<double>());
        else
          std::cout << row.dump() << '\n';
      }
    } else if (*eval_cmd) {
      LabelHierarchy h = resolve_hierarchy(hierarchy_name);
      IngestResult corpus =
          corpus_format == "conll" ? ingest_conll(corpus_path, h) : ingest_tsv(corpus_path, h);
      std::map<std::string, const Instance*> by_id;
      for (const auto* pool : {&corpus.instances, &corpus.explicit_instances})
        for (const Instance& inst : *pool) by_id[inst.id] = &inst;

      // Instances are the ones named in the predictions file; entries without
      // a label (failed or unparseable) count as wrong.
      Level lv = parse_level(level);
      const char* key = lv == Level::top ? "top" : "second";
      std::vector<std::optional<std::string>> preds;
      std::vector<std::vector<std::string>> golds;
      for (const auto& [lineno, j] : read_json_lines(preds_path)) {
        if (!j.is_object() || !j.contains("id"))
          throw DataError(preds_path + " line " + std::to_string(lineno) + ": missing id");
        std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("prediction for unknown instance '" + id + "'");
        preds.push_back(j.contains(key) && j[key].is_string() ? std::optional(j[key].get<std::string>())
                                                               : std::nullopt);
        std::vector<std::string> g;
        for (const auto& gs : it->second->gold) {
          const std::string& label = lv == Level::top ? gs.top : gs.second;
          if (std::find(g.begin(), g.end(), label) == g.end()) g.push_back(label);
        }
        golds.push_back(std::move(g));
      }
      EvalReport r = evaluate(preds, golds, lv, h);
      if (table) print_eval_table(r, h);
      else std::cout << eval_json(r, h).dump(2) << '\n';
    } else if (*run_cmd) {
      json j = read_json_file(config_path);
      PipelineConfig cfg = PipelineConfig::from_json(j, std::filesystem::path(config_path).parent_path());
      PipelineResult r = run_pipeline(cfg);
      LabelHierarchy h = resolve_hierarchy(cfg.hierarchy);
      if (!predictions_out.empty()) write_file(predictions_out, r.predictions_jsonl(h));
      if (table) {
        print_eval_table(r.top, h);
        std::cout << '\n';
        print_eval_table(r.second, h);
        if (r.backend_failures || r.unparseable)
          std::printf("\nbackend failures %d, unparseable %d\n", r.backend_failures, r.unparseable);
      } else {
        json report = r.report();
        report["top"]["labelwise"] = labelwise_json(r.top, h);
        report["second"]["labelwise"] = labelwise_json(r.second, h);
        std::cout << report.dump(2) << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  }
  return 0;
}
