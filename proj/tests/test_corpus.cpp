#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "discoprompt/corpus.hpp"
#include "test_util.hpp"

using namespace discoprompt;
using testutil::fixture;

namespace {

std::vector<std::size_t> error_lines(const IngestResult& r) {
  std::vector<std::size_t> out;
  for (const auto& e : r.errors) out.push_back(e.line);
  return out;
}

std::vector<std::string> ids(const std::vector<Instance>& v) {
  std::vector<std::string> out;
  for (const auto& i : v) out.push_back(i.id);
  return out;
}

std::vector<Instance> one_per_section(int lo, int hi) {
  std::vector<Instance> out;
  for (int s = lo; s <= hi; ++s) {
    Instance inst = testutil::make_instance("s" + std::to_string(s), "a", "b");
    inst.section = s;
    out.push_back(inst);
  }
  return out;
}

std::set<int> sections_of(const std::vector<Instance>& v) {
  std::set<int> out;
  for (const auto& i : v) out.insert(*i.section);
  return out;
}

}  // namespace

TEST(Corpus, ConllIngest) {
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  IngestResult r = ingest_conll(fixture("conll_small.jsonl"), h);
  EXPECT_EQ(ids(r.instances), (std::vector<std::string>{"3001", "3003", "3005"}));
  EXPECT_EQ(ids(r.explicit_instances), (std::vector<std::string>{"3002", "3008"}));
  EXPECT_EQ(error_lines(r), (std::vector<std::size_t>{7, 8, 10}));
  EXPECT_EQ(r.skipped_types, (std::map<std::string, int>{{"EntRel", 1}}));
  EXPECT_EQ(r.dropped_senses, (std::map<std::string, int>{{"Comparison.Pragmatic contrast", 1}}));

  const Instance& first = r.instances[0];
  EXPECT_EQ(first.section, 22);
  EXPECT_EQ(first.arg1, "The company lost money");
  ASSERT_EQ(first.gold.size(), 1u);
  EXPECT_EQ(first.gold[0].second, "Cause");

  const Instance& multi = r.instances[1];
  ASSERT_EQ(multi.gold.size(), 2u);
  EXPECT_EQ(multi.gold[0].top, "Expansion");
  EXPECT_EQ(multi.gold[1].second, "Synchrony");
  EXPECT_EQ(multi.section, 1);
  EXPECT_EQ(r.instances[2].gold[0].second, "Alternative");

  ASSERT_EQ(r.explicit_records.size(), 2u);
  EXPECT_EQ(r.explicit_records[0].connective, "However");
  EXPECT_EQ(r.explicit_records[0].sense, "Contrast");
  EXPECT_EQ(r.explicit_instances[0].connective, "However");
  EXPECT_EQ(r.summary()["implicit"], 3);
}

TEST(Corpus, ConllIngestAgainstConll16) {
  IngestResult r = ingest_conll(fixture("conll_small.jsonl"), builtin_hierarchy("conll16"));
  ASSERT_EQ(r.instances.size(), 3u);
  EXPECT_EQ(r.instances[0].gold[0].second, "Reason");
  EXPECT_EQ(r.instances[2].gold[0].second, "Chosen");
  EXPECT_EQ(r.explicit_records[1].sense, "Result");
}

TEST(Corpus, TsvIngest) {
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  IngestResult r = ingest_tsv(fixture("corpus_small.tsv"), h);
  EXPECT_EQ(ids(r.instances), (std::vector<std::string>{"t1", "t2", "t4"}));
  EXPECT_EQ(ids(r.explicit_instances), std::vector<std::string>{"t3"});
  EXPECT_EQ(error_lines(r), (std::vector<std::size_t>{5, 6, 7, 8, 9, 10, 11}));
  EXPECT_EQ(r.instances[1].gold.size(), 2u);
  EXPECT_EQ(r.instances[2].gold[0].second, "Restatement");
  EXPECT_EQ(r.instances[2].section, 22);
  ASSERT_EQ(r.explicit_records.size(), 1u);
  EXPECT_EQ(r.explicit_records[0].connective, "because");
  EXPECT_EQ(r.explicit_records[0].sense, "Cause");
  EXPECT_EQ(r.dropped_senses.at("Comparison.Pragmatic contrast"), 1);
}

TEST(Corpus, MissingFilesAreDataErrors) {
  LabelHierarchy h = builtin_hierarchy("pdtb2");
  EXPECT_THROW(ingest_tsv(std::string("/nonexistent/x.tsv"), h), DataError);
  EXPECT_THROW(ingest_conll(std::string("/nonexistent/x.jsonl"), h), DataError);
  std::istringstream empty("");
  IngestResult r = ingest_tsv(empty, h);
  EXPECT_TRUE(r.instances.empty());
  EXPECT_TRUE(r.errors.empty());
}

TEST(Corpus, SectionFromDocId) {
  EXPECT_EQ(detail::section_from_doc_id("wsj_2100"), 21);
  EXPECT_EQ(detail::section_from_doc_id("wsj_0003"), 0);
  EXPECT_EQ(detail::section_from_doc_id("nyt_0001"), std::nullopt);
  EXPECT_EQ(detail::section_from_doc_id("wsj_123"), std::nullopt);
}

TEST(Split, JiAndLinRouting) {
  auto all = one_per_section(0, 24);
  SplitResult ji = apply_split(all, SplitSpec::ji());
  EXPECT_EQ(sections_of(ji.train), SplitSpec::range(2, 20));
  EXPECT_EQ(sections_of(ji.dev), (std::set<int>{0, 1}));
  EXPECT_EQ(sections_of(ji.test), (std::set<int>{21, 22}));
  EXPECT_EQ(sections_of(ji.unassigned), (std::set<int>{23, 24}));

  SplitResult lin = apply_split(all, SplitSpec::lin());
  EXPECT_EQ(sections_of(lin.train), SplitSpec::range(2, 21));
  EXPECT_EQ(sections_of(lin.dev), std::set<int>{22});
  EXPECT_EQ(sections_of(lin.test), std::set<int>{23});
  EXPECT_EQ(sections_of(lin.unassigned), (std::set<int>{0, 1, 24}));
  EXPECT_EQ(lin.report()["unassigned"], 3);
}

TEST(Split, MissingSectionIsDataError) {
  auto all = one_per_section(2, 3);
  all[1].section.reset();
  EXPECT_THROW(apply_split(all, SplitSpec::ji()), DataError);
  EXPECT_EQ(apply_split(all, SplitSpec::conll_blind()).test.size(), 2u);
}

TEST(Split, NamedAndCustom) {
  EXPECT_EQ(SplitSpec::named("conll_test").test_sections, std::set<int>{23});
  EXPECT_THROW(SplitSpec::named("nope"), ValidationError);
  EXPECT_EQ(SplitSpec::from_json("lin").name, "lin");

  auto by_id = SplitSpec::from_json(nlohmann::json::parse(R"({"train": ["s2"], "test": ["s3"]})"));
  EXPECT_FALSE(by_id.by_section);
  SplitResult r = apply_split(one_per_section(2, 4), by_id);
  EXPECT_EQ(ids(r.train), std::vector<std::string>{"s2"});
  EXPECT_EQ(ids(r.test), std::vector<std::string>{"s3"});
  EXPECT_EQ(ids(r.unassigned), std::vector<std::string>{"s4"});

  EXPECT_THROW(SplitSpec::from_json(nlohmann::json::parse(R"({"train": [1, 2], "dev": [2]})")),
               ValidationError);
  EXPECT_THROW(SplitSpec::from_json(nlohmann::json::parse(R"({"train": [1], "dev": ["x"]})")),
               ValidationError);
}

// Every instance lands in exactly one bucket, and order within a bucket
// follows input order.
TEST(Split, IsAPartition) {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> sec(0, 24);
  for (const char* name : {"ji", "lin", "conll_test"}) {
    std::vector<Instance> all;
    for (int i = 0; i < 400; ++i) {
      Instance inst = testutil::make_instance("i" + std::to_string(i), "a", "b");
      inst.section = sec(rng);
      all.push_back(inst);
    }
    SplitResult r = apply_split(all, SplitSpec::named(name));
    std::vector<std::string> seen;
    for (const auto* bucket : {&r.train, &r.dev, &r.test, &r.unassigned}) {
      auto b = ids(*bucket);
      for (std::size_t k = 1; k < b.size(); ++k)
        EXPECT_LT(std::stoi(b[k - 1].substr(1)), std::stoi(b[k].substr(1)));
      seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    auto expected = ids(all);
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(seen, expected) << name;
  }
}
