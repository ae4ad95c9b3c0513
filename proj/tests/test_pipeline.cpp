#include <gtest/gtest.h>

#include <filesystem>

#include "discoprompt/pipeline.hpp"
#include "test_util.hpp"

using namespace discoprompt;
using testutil::fixture;

namespace {

PipelineConfig base_config() {
  return PipelineConfig::from_json(nlohmann::json::parse(testutil::read_file(fixture("pipeline/config.json"))),
                                   fixture("pipeline"));
}

}  // namespace

TEST(Pipeline, FixtureMetrics) {
  PipelineResult r = run_pipeline(base_config());
  EXPECT_EQ(r.split_report["test"], 50);
  EXPECT_EQ(r.split_report["train"], 4);
  EXPECT_EQ(r.second.total, 50);
  EXPECT_DOUBLE_EQ(r.second.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(r.second.macro_f1, 85.0 / 99.0);
  EXPECT_DOUBLE_EQ(r.top.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(r.top.macro_f1, 179.0 / 234.0);
  EXPECT_EQ(r.second.stats("Concession").predicted, 10);
  EXPECT_EQ(r.backend_failures, 0);
}

TEST(Pipeline, RunsAreByteIdentical) {
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  PipelineConfig cfg = base_config();
  PipelineResult a = run_pipeline(cfg);
  cfg.workers = 4;
  PipelineResult b = run_pipeline(cfg);
  EXPECT_EQ(a.predictions_jsonl(h), b.predictions_jsonl(h));
  EXPECT_EQ(a.report().dump(), b.report().dump());
  EXPECT_EQ(run_pipeline_file(fixture("pipeline/config.json")).report().dump(), a.report().dump());
}

TEST(Pipeline, AllGoldPointMass) {
  PipelineConfig cfg = base_config();
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  IngestResult ingest = ingest_tsv(cfg.corpus_path, h);
  std::vector<Instance> gold_only;
  for (const auto& inst : ingest.instances)
    if (inst.section == 23 && inst.gold[0].second != "Cause") gold_only.push_back(inst);
  MockScorer scorer(MockTable::from_json(nlohmann::json::parse(testutil::read_file(cfg.backend.table_path))));
  PipelineResult r = run_instances(gold_only, cfg, h, &scorer);
  EXPECT_EQ(r.second.total, 36);
  EXPECT_EQ(r.second.accuracy, 1.0);
  EXPECT_EQ(r.second.macro_f1, 1.0);
  EXPECT_EQ(r.top.macro_f1, 1.0);
}

TEST(Pipeline, UniformPredictsFirstPath) {
  PipelineConfig cfg = base_config();
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  std::vector<Instance> insts = {testutil::make_instance("u1", "a", "b"), testutil::make_instance("u2", "c", "d")};
  insts[0].gold = {{"Contingency", "Cause"}};
  insts[1].gold = {{"Comparison", "Concession"}};
  MockTable t = MockTable::from_json(nlohmann::json::parse(testutil::read_file(cfg.backend.table_path)));
  MockScorer scorer(t);
  PipelineResult r = run_instances(insts, cfg, h, &scorer);
  for (const auto& o : r.outcomes) EXPECT_EQ(h.serialize(o.prediction->path), "Comparison -> Concession -> if");
  EXPECT_DOUBLE_EQ(r.second.accuracy, 0.5);
  // Cause: support 1, no predictions; Concession: P=1/2, R=1.
  EXPECT_DOUBLE_EQ(r.second.macro_f1, (0.0 + 2.0 / 3.0) / 2.0);
}

TEST(Pipeline, AblationSubsetAndT5Adapt) {
  PipelineConfig cfg = base_config();
  cfg.subset = MaskSubset::of({Role::second});
  PipelineResult r = run_pipeline(cfg);
  EXPECT_DOUBLE_EQ(r.second.accuracy, 0.8);

  // The whole-path mask has no overrides, so every prediction is path 0.
  cfg.variant = Variant::t5_adapt;
  PipelineResult t5 = run_pipeline(cfg);
  for (const auto& o : t5.outcomes) EXPECT_EQ(o.prediction->second(), "Concession");
}

TEST(Pipeline, ConnectiveFilledExplicitRun) {
  PipelineConfig cfg = base_config();
  cfg.relation_type = RelationType::explicit_relation;
  cfg.edrr = true;
  PipelineResult r = run_pipeline(cfg);
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_EQ(r.outcomes[0].prediction->connective(), "although");
  EXPECT_EQ(r.outcomes[1].prediction->second(), "Cause");
  EXPECT_EQ(r.second.accuracy, 1.0);
  EXPECT_NE(r.predictions_jsonl(builtin_hierarchy("pdtb2")).find("\"connective\":\"although\""), std::string::npos);
}

TEST(Pipeline, GenerationsBackend) {
  PipelineConfig cfg = base_config();
  cfg.variant = Variant::chat_structure;
  cfg.backend.kind = BackendKind::generations;
  cfg.backend.generations_path = fixture("pipeline/generations.jsonl");
  PipelineResult r = run_pipeline(cfg);
  int ok = 0;
  for (const auto& o : r.outcomes) ok += o.prediction.has_value();
  EXPECT_EQ(ok, 3);
  EXPECT_EQ(r.unparseable, 1);
  EXPECT_EQ(r.backend_failures, 46);
  EXPECT_EQ(r.second.correct, 1);  // p03 is gold Contrast
  EXPECT_EQ(r.second.n_unparseable, 47);
}

TEST(Pipeline, ChatVariantNeedsGenerations) {
  PipelineConfig cfg = base_config();
  cfg.variant = Variant::chat_label;
  EXPECT_THROW(run_pipeline(cfg), ValidationError);
}

TEST(Pipeline, BackendFailuresAreCountedNotFatal) {
  PipelineConfig cfg = base_config();
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  std::vector<Instance> insts = {testutil::make_instance("ok", "a", "b"), testutil::make_instance("bad", "a", "c")};
  for (auto& i : insts) i.gold = {{"Comparison", "Concession"}};
  MockTable t;
  t.defaults = {{Role::top, std::vector<double>(4, 0.25)}, {Role::second, std::vector<double>(11, 1.0 / 11)},
                {Role::connective, std::vector<double>(11, 1.0 / 11)}};
  t.overrides["bad"] = {{Role::second, {1.0}}};
  MockScorer scorer(t);
  PipelineResult r = run_instances(insts, cfg, h, &scorer);
  EXPECT_EQ(r.backend_failures, 1);
  EXPECT_EQ(r.outcomes[1].status, OutcomeStatus::backend_failure);
  EXPECT_DOUBLE_EQ(r.second.accuracy, 0.5);
  EXPECT_NE(r.predictions_jsonl(h).find("backend_failure"), std::string::npos);
}

TEST(Pipeline, ConfigErrors) {
  auto j = nlohmann::json::parse(testutil::read_file(fixture("pipeline/config.json")));
  auto bad = j;
  bad["backend"]["kind"] = "magic";
  EXPECT_THROW(PipelineConfig::from_json(bad), ValidationError);
  bad = j;
  bad.erase("corpus");
  EXPECT_THROW(PipelineConfig::from_json(bad), ValidationError);
  bad = j;
  bad["edrr"] = true;
  EXPECT_THROW(PipelineConfig::from_json(bad), ValidationError);
  bad = j;
  bad["partition"] = "holdout";
  EXPECT_THROW(PipelineConfig::from_json(bad), ValidationError);
  EXPECT_THROW(run_pipeline_file("/nonexistent/config.json"), DataError);

  PipelineConfig cfg = base_config();
  cfg.corpus_path = "/nonexistent/corpus.tsv";
  EXPECT_THROW(run_pipeline(cfg), DataError);
}
