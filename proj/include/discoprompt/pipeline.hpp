#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "discoprompt/backends.hpp"
#include "discoprompt/corpus.hpp"
#include "discoprompt/error.hpp"
#include "discoprompt/evaluation.hpp"
#include "discoprompt/hierarchy.hpp"
#include "discoprompt/prompting.hpp"
#include "discoprompt/scoring.hpp"

// End-to-end evaluation: ingest -> split -> render -> score -> predict ->
// evaluate.
namespace discoprompt {

enum class BackendKind { mock, remote, generations };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string table_path;  // mock
  std::string endpoint;    // remote
  RemoteOptions remote;
  std::string generations_path;  // JSON lines {"id", "text"}
};

struct PipelineConfig {
  std::string hierarchy = "pdtb2";
  std::string corpus_path;
  std::string corpus_format = "tsv";  // tsv | conll
  std::optional<SplitSpec> split;
  std::string partition = "test";  // train | dev | test
  RelationType relation_type = RelationType::implicit;
  Variant variant = Variant::discoprompt;
  int soft_tokens = 20;
  MaskSubset subset = MaskSubset::full();
  bool edrr = false;  // fill the connective slot with the gold connective
  BackendConfig backend;
  std::size_t workers = 1;

  // Relative paths are resolved against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      return path.string();
    };
    PipelineConfig c;
    try {
      c.hierarchy = j.value("hierarchy", c.hierarchy);
      if (c.hierarchy != "pdtb2" && c.hierarchy != "conll16") c.hierarchy = resolve(c.hierarchy);
      const auto& corpus = j.at("corpus");
      c.corpus_path = resolve(corpus.at("path").get<std::string>());
      c.corpus_format = corpus.value("format", c.corpus_format);
      if (c.corpus_format != "tsv" && c.corpus_format != "conll")
        throw ValidationError("corpus format must be 'tsv' or 'conll'", c.corpus_format);
      if (j.contains("split") && !j["split"].is_null()) c.split = SplitSpec::from_json(j["split"]);
      c.partition = j.value("partition", c.partition);
      if (c.partition != "train" && c.partition != "dev" && c.partition != "test")
        throw ValidationError("partition must be train, dev or test", c.partition);
      std::string rt = j.value("relation_type", std::string("implicit"));
      if (rt == "implicit") c.relation_type = RelationType::implicit;
      else if (rt == "explicit") c.relation_type = RelationType::explicit_relation;
      else throw ValidationError("relation_type must be implicit or explicit", rt);
      if (j.contains("template")) {
        const auto& t = j["template"];
        c.variant = parse_variant(t.value("variant", std::string("discoprompt")));
        c.soft_tokens = t.value("soft_tokens", c.soft_tokens);
      }
      if (j.contains("mask_subset")) c.subset = MaskSubset::parse(j["mask_subset"].get<std::string>());
      c.edrr = j.value("edrr", false);
      c.workers = j.value("workers", std::size_t{1});
      const auto& b = j.at("backend");
      std::string kind = b.at("kind").get<std::string>();
      if (kind == "mock") {
        c.backend.kind = BackendKind::mock;
        c.backend.table_path = resolve(b.at("table").get<std::string>());
      } else if (kind == "remote") {
        c.backend.kind = BackendKind::remote;
        c.backend.endpoint = b.at("endpoint").get<std::string>();
        c.backend.remote.timeout = std::chrono::milliseconds(b.value("timeout_ms", 5000));
        c.backend.remote.retries = b.value("retries", 3);
        c.backend.remote.backoff_base = std::chrono::milliseconds(b.value("backoff_ms", 100));
        c.backend.remote.max_in_flight = b.value("max_in_flight", 8);
      } else if (kind == "generations") {
        c.backend.kind = BackendKind::generations;
        c.backend.generations_path = resolve(b.at("path").get<std::string>());
      } else {
        throw ValidationError("unknown backend kind", kind);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed pipeline config: ") + e.what());
    }
    if (c.edrr && c.relation_type != RelationType::explicit_relation)
      throw ValidationError("edrr runs need relation_type 'explicit'");
    return c;
  }
};

enum class OutcomeStatus { ok, backend_failure, unparseable };

struct InstanceOutcome {
  std::string id;
  OutcomeStatus status = OutcomeStatus::ok;
  std::optional<Prediction> prediction;
  std::string error;
};

struct PipelineResult {
  EvalReport top;
  EvalReport second;
  std::vector<InstanceOutcome> outcomes;
  int backend_failures = 0;
  int unparseable = 0;
  nlohmann::json split_report;

  std::string predictions_jsonl(const LabelHierarchy& h) const {
    std::string out;
    for (const auto& o : outcomes) {
      nlohmann::json line;
      if (o.prediction) {
        line = o.prediction->to_json(h);
        line["id"] = o.id;
      } else {
        line = {{"id", o.id},
                {"status", o.status == OutcomeStatus::unparseable ? "unparseable" : "backend_failure"},
                {"error", o.error}};
      }
      out.append(line.dump()).append("\n");
    }
    return out;
  }

  nlohmann::json report() const {
    return {{"top", top.to_json()},
            {"second", second.to_json()},
            {"backend_failures", backend_failures},
            {"unparseable", unparseable},
            {"split", split_report}};
  }
};

namespace detail {

inline std::map<std::string, std::string> read_generations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read generations file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto& id = j.at("id");
      out[id.is_string() ? id.get<std::string>() : id.dump()] = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("generations line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Argmax over a whole-path distribution; ties go to the smallest path id.
inline Prediction predict_whole_path(const MaskDistributions& d, const LabelHierarchy& h) {
  const auto& v = d.at(Role::whole_path);
  std::vector<PathScore> scores;
  for (const SensePath& p : h.paths()) {
    PathScore ps;
    ps.path_id = p.id;
    ps.score = v.at(p.id);
    ps.log_score = ps.score > 0 ? std::log(ps.score) : -std::numeric_limits<double>::infinity();
    ps.factors[Role::whole_path] = ps.score;
    scores.push_back(ps);
  }
  return best_of(std::move(scores), h);
}

}  // namespace detail

inline std::unique_ptr<MaskScorer> make_scorer(const BackendConfig& b) {
  if (b.kind == BackendKind::mock) {
    std::ifstream in(b.table_path);
    if (!in) throw DataError("cannot read mock table '" + b.table_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("mock table is not valid JSON: ") + e.what(), b.table_path);
    }
    return std::make_unique<MockScorer>(MockTable::from_json(j));
  }
  if (b.kind == BackendKind::remote) return std::make_unique<RemoteScorer>(b.endpoint, b.remote);
  throw ValidationError("backend kind has no mask scorer");
}

// Runs the evaluation loop over `instances` with an already-built scorer
// (null when the backend is a generations file).
inline PipelineResult run_instances(const std::vector<Instance>& instances, const PipelineConfig& cfg,
                                    const LabelHierarchy& h, const MaskScorer* scorer,
                                    const std::map<std::string, std::string>* generations = nullptr) {
  PromptTemplate tmpl = PromptTemplate::make(cfg.variant, cfg.soft_tokens);
  PipelineResult result;
  result.outcomes.resize(instances.size());

  if (generations) {
    PathParser parser(h);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      auto& o = result.outcomes[i];
      o.id = instances[i].id;
      auto it = generations->find(o.id);
      if (it == generations->end()) {
        o.status = OutcomeStatus::backend_failure;
        o.error = "no generation for instance";
        continue;
      }
      try {
        SensePath p = parser.parse(it->second);
        Prediction pred;
        pred.path = p;
        pred.score = 1.0;
        for (int k = 1; k <= h.depth(); ++k) pred.labels.push_back(h.ancestor_at(p, k).label);
        o.prediction = std::move(pred);
      } catch (const ValidationError& e) {
        o.status = OutcomeStatus::unparseable;
        o.error = e.what();
      }
    }
  } else {
    if (!scorer) throw ValidationError("pipeline needs a mask scorer");
    if (is_chat(cfg.variant))
      throw ValidationError("chat templates produce text; use a generations backend",
                            std::string(variant_name(cfg.variant)));
    std::vector<ScoreRequest> requests;
    requests.reserve(instances.size());
    for (const Instance& inst : instances) {
      RenderOptions opts;
      if (cfg.edrr) {
        if (!inst.connective) throw DataError("instance '" + inst.id + "' has no gold connective");
        opts.filled_connective = *inst.connective;
      }
      try {
        requests.push_back(ScoreRequest::from_rendered(render(tmpl, inst, h, opts), inst.id));
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + " (instance '" + inst.id + "')", e.subject());
      }
    }
    auto items = batch_score(*scorer, requests, cfg.workers);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      auto& o = result.outcomes[i];
      o.id = instances[i].id;
      if (!items[i].ok()) {
        o.status = OutcomeStatus::backend_failure;
        o.error = items[i].error;
        continue;
      }
      MaskDistributions d = items[i].response->distributions();
      try {
        validate_distributions(d, h);
        if (cfg.variant == Variant::t5_adapt)
          o.prediction = detail::predict_whole_path(d, h);
        else if (cfg.edrr)
          o.prediction = predict_edrr(d, *instances[i].connective, h);
        else
          o.prediction = predict(d, h, cfg.subset);
        o.prediction->all_scores.clear();
      } catch (const ValidationError& e) {
        o.status = OutcomeStatus::backend_failure;
        o.error = e.what();
      }
    }
  }

  std::vector<std::optional<std::string>> top_preds, second_preds;
  std::vector<std::vector<std::string>> top_golds, second_golds;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& o = result.outcomes[i];
    if (o.status == OutcomeStatus::backend_failure) ++result.backend_failures;
    if (o.status == OutcomeStatus::unparseable) ++result.unparseable;
    top_preds.push_back(o.prediction ? std::optional(o.prediction->top()) : std::nullopt);
    second_preds.push_back(o.prediction ? std::optional(o.prediction->second()) : std::nullopt);
    std::vector<std::string> tg, sg;
    for (const auto& g : instances[i].gold) {
      if (std::find(tg.begin(), tg.end(), g.top) == tg.end()) tg.push_back(g.top);
      sg.push_back(g.second);
    }
    top_golds.push_back(std::move(tg));
    second_golds.push_back(std::move(sg));
  }
  result.top = evaluate(top_preds, top_golds, Level::top, h);
  result.second = evaluate(second_preds, second_golds, Level::second, h);
  return result;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  LabelHierarchy h = resolve_hierarchy(cfg.hierarchy);
  IngestResult ingest = cfg.corpus_format == "conll" ? ingest_conll(cfg.corpus_path, h)
                                                     : ingest_tsv(cfg.corpus_path, h);
  const std::vector<Instance>& pool = cfg.relation_type == RelationType::explicit_relation
                                          ? ingest.explicit_instances
                                          : ingest.instances;
  std::vector<Instance> selected;
  nlohmann::json split_report;
  if (cfg.split) {
    SplitResult split = apply_split(pool, *cfg.split);
    split_report = split.report();
    selected = cfg.partition == "train" ? split.train : cfg.partition == "dev" ? split.dev : split.test;
  } else {
    selected = pool;
    split_report = {{"all", pool.size()}};
  }

  PipelineResult result;
  if (cfg.backend.kind == BackendKind::generations) {
    auto gens = detail::read_generations(cfg.backend.generations_path);
    result = run_instances(selected, cfg, h, nullptr, &gens);
  } else {
    auto scorer = make_scorer(cfg.backend);
    result = run_instances(selected, cfg, h, scorer.get());
  }
  result.split_report = std::move(split_report);
  return result;
}

inline PipelineResult run_pipeline_file(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw DataError("cannot read pipeline config '" + config_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("pipeline config is not valid JSON: ") + e.what(), config_path);
  }
  return run_pipeline(PipelineConfig::from_json(j, std::filesystem::path(config_path).parent_path()));
}

}  // namespace discoprompt
