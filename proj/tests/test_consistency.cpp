#include <doctest.h>

#include <cstdlib>
#include <memory>

#include "confkit/consistency.hpp"
#include "confkit/providers.hpp"
#include "test_doubles.hpp"

using namespace confkit;
using namespace confkit::consistency;
using testing::FlakyLlm;
using testing::make_question;

namespace {

/// Non-transitive oracle: equivalent iff lengths differ by at most one.
/// Exposes whether clustering compares against representatives only.
class LengthOracle : public EquivalenceOracle {
 public:
  bool equivalent(const std::string& a, const std::string& b) override {
    auto d = static_cast<long>(a.size()) - static_cast<long>(b.size());
    return d >= -1 && d <= 1;
  }
  std::string name() const override { return "length"; }
};

std::shared_ptr<const providers::SimProfile> single_answer_profile(
    const std::string& text) {
  auto profile = std::make_shared<providers::SimProfile>();
  profile->seed = 3;
  providers::SimEntry entry;
  entry.answers = {providers::SimAnswer{text, 1.0, std::nullopt}};
  entry.latency = providers::LatencyLaw::fixed(10.0);
  profile->llm["*"] = entry;
  return profile;
}

}  // namespace

TEST_CASE("normalized match oracle folds, trims, and strips punctuation") {
  NormalizedMatchOracle oracle;
  CHECK(oracle.equivalent("Paris", "  paris. "));
  CHECK(oracle.equivalent("New   York", "new york"));
  CHECK(!oracle.equivalent("Paris", "Lyon"));
}

TEST_CASE("clustering joins the first matching representative") {
  NormalizedMatchOracle oracle;
  auto clusters = cluster_answers({"Paris", "paris", "Lyon", "PARIS."}, oracle);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].representative == "Paris");
  CHECK(clusters[0].members.size() == 3);
  CHECK(clusters[1].representative == "Lyon");

  LengthOracle lengths;
  // "ab" joins the cluster founded by "a"; "abc" is 2 away from the
  // representative "a", so it founds its own cluster even though it is
  // within 1 of the member "ab".
  auto chain = cluster_answers({"a", "ab", "abc"}, lengths);
  REQUIRE(chain.size() == 2);
  CHECK(chain[0].members.size() == 2);
  CHECK(chain[1].representative == "abc");

  CHECK_THROWS(cluster_answers({}, oracle));
}

TEST_CASE("missing records share one cluster regardless of wording") {
  NormalizedMatchOracle oracle;
  std::vector<AnswerRecord> records(4);
  records[0].text = "Paris";
  records[1].text = "I am unsure about the answer";
  records[1].is_missing = true;
  records[2].text = "I don't know";
  records[2].is_missing = true;
  records[3].text = "paris";

  auto clusters = cluster_records(records, oracle);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].representative == "Paris");
  CHECK(clusters[0].members.size() == 2);
  CHECK(clusters[1].is_missing);
  CHECK(clusters[1].members.size() == 2);
}

TEST_CASE("consistency score takes the majority cluster") {
  auto cluster = [](std::string rep, size_t n, bool missing) {
    AnswerCluster c;
    c.representative = rep;
    c.members.assign(n, rep);
    c.is_missing = missing;
    return c;
  };

  SUBCASE("majority frequency") {
    auto r = consistency_score({cluster("Paris", 12, false), cluster("Lyon", 8, false)});
    CHECK(r.canonical_answer == "Paris");
    CHECK(r.score == doctest::Approx(0.6));
  }

  SUBCASE("ties keep the earliest-founded cluster") {
    auto r = consistency_score({cluster("Lyon", 10, false), cluster("Paris", 10, false)});
    CHECK(r.canonical_answer == "Lyon");
    CHECK(r.score == doctest::Approx(0.5));
  }

  SUBCASE("missing cluster counts by default") {
    auto r = consistency_score(
        {cluster("Paris", 8, false), cluster("I am unsure about the answer", 12, true)});
    CHECK(r.canonical_answer == "I am unsure about the answer");
    CHECK(r.score == doctest::Approx(0.6));
  }

  SUBCASE("excluding missing rescales over substantive answers") {
    auto r = consistency_score(
        {cluster("Paris", 10, false), cluster("I am unsure about the answer", 10, true)},
        /*include_missing=*/false);
    CHECK(r.canonical_answer == "Paris");
    CHECK(r.score == doctest::Approx(1.0));
  }

  SUBCASE("all refusals with missing excluded score zero") {
    auto r = consistency_score({cluster("I am unsure about the answer", 20, true)},
                               /*include_missing=*/false);
    CHECK(r.score == 0.0);
    CHECK(r.canonical_answer == "I am unsure about the answer");
  }

  CHECK_THROWS(consistency_score({}));
}

TEST_CASE("sample_answers returns exactly n indexed records") {
  providers::SimulatedLlm llm(single_answer_profile("Paris"));
  auto q = make_question("q1", "Capital of France?", {"Paris"});

  SampleOptions options;
  options.n = 20;
  auto records = sample_answers(llm, q, options);
  REQUIRE(records.size() == 20);
  for (int i = 0; i < 20; ++i) {
    CHECK(records[i].sample_index == i);
    CHECK(records[i].text == "Paris");
    CHECK(records[i].question_id == "q1");
  }
}

TEST_CASE("sample_answers retries per sample and reports persistent failure") {
  auto q = make_question("q1", "Q?", {"x"});

  SUBCASE("transient failures are retried") {
    FlakyLlm flaky(2, "Paris");
    SampleOptions options;
    options.n = 3;
    options.max_attempts = 3;
    auto records = sample_answers(flaky, q, options);
    REQUIRE(records.size() == 3);
    CHECK(flaky.call_count() == 5);  // 2 failures + 3 successes
  }

  SUBCASE("persistent failure names the sample and attempt count") {
    FlakyLlm dead(1000, "never");
    SampleOptions options;
    options.n = 5;
    options.max_attempts = 3;
    CHECK_THROWS_WITH_AS(sample_answers(dead, q, options),
                         doctest::Contains("sample 0"), std::runtime_error);
  }
}

TEST_CASE("measure_consistency end to end") {
  auto q = make_question("q1", "Capital of France?", {"Paris"});
  NormalizedMatchOracle oracle;

  SUBCASE("deterministic provider scores 1.0") {
    providers::SimulatedLlm llm(single_answer_profile("Paris"));
    auto r = measure_consistency(llm, q, oracle);
    CHECK(r.score == doctest::Approx(1.0));
    CHECK(r.canonical_answer == "Paris");
    CHECK(r.question_id == "q1");
    REQUIRE(r.clusters.size() == 1);
    CHECK(r.clusters[0].members.size() == 20);
  }

  SUBCASE("split provider keeps score at the majority share") {
    auto profile = std::make_shared<providers::SimProfile>();
    profile->seed = 5;
    providers::SimEntry entry;
    entry.answers = {providers::SimAnswer{"Paris", 0.5, std::nullopt},
                     providers::SimAnswer{"Lyon", 0.5, std::nullopt}};
    entry.latency = providers::LatencyLaw::fixed(1.0);
    profile->llm["*"] = entry;
    providers::SimulatedLlm llm(profile);

    auto r = measure_consistency(llm, q, oracle);
    CHECK(r.score >= 0.5);
    CHECK(r.score <= 1.0);
    size_t total = 0;
    for (const auto& c : r.clusters) total += c.members.size();
    CHECK(total == 20);
  }
}

TEST_CASE("judge-backed equivalence is symmetric") {
  judging::RuleBasedGrader grader;
  JudgeEquivalenceOracle oracle(grader, "q1", "Capital of France?");
  // Containment holds in one direction only; the OR keeps it symmetric.
  CHECK(oracle.equivalent("Paris is the capital", "Paris"));
  CHECK(oracle.equivalent("Paris", "Paris is the capital"));
  CHECK(!oracle.equivalent("Paris", "Lyon"));
}

TEST_CASE("consistency result serializes its clusters") {
  ConsistencyResult r;
  r.question_id = "q1";
  r.canonical_answer = "Paris";
  r.score = 0.75;
  AnswerCluster c;
  c.representative = "Paris";
  c.members = {"Paris", "paris"};
  r.clusters.push_back(c);

  json j = to_json(r);
  CHECK(j["question_id"] == "q1");
  CHECK(j["score"] == doctest::Approx(0.75));
  CHECK(j["clusters"][0]["members"].size() == 2);
  CHECK(j["clusters"][0]["is_missing"] == false);
}
