#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "metasdt/error.hpp"
#include "metasdt/trial_store.hpp"

using namespace metasdt;

namespace {

LoadResult load(const std::string& text, LoadOptions opts = {}) {
  std::istringstream in(text);
  return load_trials(in, opts);
}

}  // namespace

TEST(TrialStore, ParsesJsonLines) {
  const auto r = load(
      R"({"model_id":"m","dataset_id":"d","domain":"geo","temperature":0.7,"question_id":"q1","answer_text":"Paris","nlp":-0.25,"correct":true})"
      "\n"
      R"({"model_id":"m","dataset_id":"d","question_id":"q2","nlp":"-1.5","correct":0})"
      "\n");
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_TRUE(r.skipped.empty());
  EXPECT_EQ(r.records[0].domain, "geo");
  EXPECT_EQ(r.records[0].temperature, 0.7);
  EXPECT_EQ(*r.records[0].answer_text, "Paris");
  EXPECT_TRUE(r.records[0].correct);
  EXPECT_EQ(r.records[1].temperature, 1.0);
  EXPECT_EQ(r.records[1].nlp, -1.5);
  EXPECT_FALSE(r.records[1].correct);
  EXPECT_FALSE(r.records[1].answer_text.has_value());
}

TEST(TrialStore, MalformedLinesAreSkippedWithLineNumbers) {
  const auto r = load(
      "{not json}\n"
      R"({"model_id":"m","dataset_id":"d","question_id":"q1","nlp":-1,"correct":true})"
      "\n"
      R"({"model_id":"m","dataset_id":"d","question_id":"q2","correct":true})"
      "\n"
      R"({"model_id":"m","dataset_id":"d","question_id":"q3","nlp":"abc","correct":true})"
      "\n"
      R"({"model_id":"m","dataset_id":"d","question_id":"q4","nlp":-1,"correct":"maybe"})"
      "\n"
      "[1,2]\n");
  ASSERT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.skipped.size(), 5u);
  EXPECT_EQ(r.skipped[0].line, 1u);
  EXPECT_EQ(r.skipped[1].line, 3u);
  EXPECT_NE(r.skipped[1].reason.find("nlp"), std::string::npos);
  EXPECT_EQ(r.skipped[4].line, 6u);
}

TEST(TrialStore, DuplicateKeyThrowsNamingTheKey) {
  const std::string line =
      R"({"model_id":"m","dataset_id":"d","temperature":0.5,"question_id":"q9","nlp":-1,"correct":true})"
      "\n";
  try {
    load(line + line);
    FAIL() << "expected DuplicateRecord";
  } catch (const DuplicateRecord& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("q9"), std::string::npos);
    EXPECT_NE(what.find("model=m"), std::string::npos);
  }
}

TEST(TrialStore, SameQuestionAtDifferentTemperatureIsNotDuplicate) {
  const auto r = load(
      R"({"model_id":"m","dataset_id":"d","temperature":0.5,"question_id":"q","nlp":-1,"correct":true})"
      "\n"
      R"({"model_id":"m","dataset_id":"d","temperature":0.7,"question_id":"q","nlp":-1,"correct":true})"
      "\n");
  EXPECT_EQ(r.records.size(), 2u);
}

TEST(TrialStore, UngradedRecordsNeedOptIn) {
  const std::string text =
      R"({"model_id":"m","dataset_id":"d","question_id":"q","answer_text":"x","nlp":-1})"
      "\n";
  auto r = load(text);
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.skipped.size(), 1u);

  LoadOptions opts;
  opts.allow_ungraded = true;
  r = load(text, opts);
  ASSERT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.ungraded.size(), 1u);
  EXPECT_EQ(r.ungraded[0], 0u);
}

TEST(TrialStore, DelimitedInputWithMappingAndQuotes) {
  LoadOptions opts;
  opts.format = InputFormat::kDelimited;
  opts.mapping.source_names = {{"model_id", "model"}, {"nlp", "mean_logprob"}};
  const auto r = load(
      "model,dataset_id,question_id,answer_text,mean_logprob,correct\n"
      "m1,d,q1,\"Washington, D.C.\",-0.3,true\n"
      "m1,d,q2,\"say \"\"hi\"\"\",-1.1,0\n"
      "m1,d,q3,short row\n",
      opts);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].model_id, "m1");
  EXPECT_EQ(*r.records[0].answer_text, "Washington, D.C.");
  EXPECT_EQ(*r.records[1].answer_text, "say \"hi\"");
  EXPECT_EQ(r.records[1].nlp, -1.1);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].line, 4u);
}

TEST(TrialStore, TabDelimitedDetection) {
  char delim = 0;
  EXPECT_EQ(format_from_path("x.tsv", &delim), InputFormat::kDelimited);
  EXPECT_EQ(delim, '\t');
  EXPECT_EQ(format_from_path("x.csv", &delim), InputFormat::kDelimited);
  EXPECT_EQ(delim, ',');
  EXPECT_EQ(format_from_path("x.jsonl", &delim), InputFormat::kJsonLines);
}

TEST(TrialStore, RoundTripIsLossless) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(-1.0, 0.8);
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 200; ++i) {
    TrialRecord t;
    t.model_id = "m" + std::to_string(i % 3);
    t.dataset_id = "d";
    t.domain = i % 2 ? "history" : "science";
    t.temperature = 0.1 * (i % 7) + 0.3;
    t.question_id = "q" + std::to_string(i);
    if (i % 5) t.answer_text = "ans \"" + std::to_string(i) + "\"";
    t.nlp = nd(gen);
    t.correct = (i % 3) == 0;
    trials.push_back(t);
  }
  std::stringstream buf;
  write_trials(buf, trials);
  const auto back = load_trials(buf);
  EXPECT_TRUE(back.skipped.empty());
  EXPECT_EQ(back.records, trials);
}

TEST(TrialStore, FilterByFields) {
  std::vector<TrialRecord> trials(4);
  trials[0].model_id = "a";
  trials[0].temperature = 0.3;
  trials[1].model_id = "a";
  trials[1].temperature = 0.30000000000000004;
  trials[2].model_id = "b";
  trials[2].temperature = 0.3;
  trials[3].model_id = "a";
  trials[3].temperature = 0.7;
  TrialFilter f;
  f.model_id = "a";
  f.temperature = 0.3;
  EXPECT_EQ(filter_trials(trials, f).size(), 2u);
  EXPECT_EQ(filter_trials(trials, [](const TrialRecord& t) { return t.model_id == "b"; }).size(),
            1u);
}

TEST(TrialStore, MissingFileThrows) {
  EXPECT_THROW(load_trials_file("/nonexistent/trials.jsonl"), Error);
}
