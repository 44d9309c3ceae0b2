#include <doctest.h>

#include <chrono>
#include <memory>

#include "confkit/providers.hpp"
#include "confkit/router.hpp"
#include "test_doubles.hpp"

using namespace confkit;
using namespace std::chrono_literals;
using testing::SleepyLlm;
using testing::SleepyRag;
using testing::ThrowingLlm;
using testing::ThrowingRag;
using testing::make_question;

TEST_CASE("dynamism classification") {
  auto static_q = make_question("q1", "What is the capital of France?", {"Paris"});
  auto dynamic_q = make_question("q2", "Price of gold?", {}, Dynamism::Dynamic);

  SUBCASE("benchmark mode passes dataset labels through") {
    CHECK(router::classify_dynamism(static_q, nullptr) == Dynamism::Static);
    CHECK(router::classify_dynamism(dynamic_q, nullptr) == Dynamism::Dynamic);
  }

  SUBCASE("keyword classifier matches on word boundaries") {
    router::KeywordDynamismClassifier classifier;
    CHECK(classifier.classify(make_question(
              "a", "What is the stock price of ACME today?", {})) == Dynamism::Dynamic);
    CHECK(classifier.classify(make_question("b", "What is the capital of France?",
                                            {"Paris"})) == Dynamism::Static);
    // "now" inside "knows" must not trigger.
    CHECK(classifier.classify(make_question("c", "Who knows the answer?", {"x"})) ==
          Dynamism::Static);
    CHECK(classifier.classify(make_question("d", "What is the weather tonight?", {})) ==
          Dynamism::Dynamic);
  }

  SUBCASE("a throwing classifier fails toward RAG") {
    class Broken : public router::DynamismClassifier {
     public:
      Dynamism classify(const Question&) override { throw std::runtime_error("nope"); }
      std::string name() const override { return "broken"; }
    };
    Broken broken;
    CHECK(router::classify_dynamism(static_q, &broken) == Dynamism::Dynamic);
  }
}

TEST_CASE("confident llm answers early-stop the rag branch") {
  SleepyLlm llm;
  llm.sleep = 5ms;
  llm.text = "Paris";
  llm.reported_latency_ms = 480.0;
  SleepyRag rag;
  rag.sleep = 3000ms;  // must be cancelled long before this
  rag.reported_latency_ms = 1900.0;

  auto q = make_question("q1", "Capital of France?", {"Paris"});
  auto started = std::chrono::steady_clock::now();
  auto outcome = router::route(q, llm, rag);
  auto wall =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);

  CHECK(outcome.source == Source::Llm);
  CHECK(outcome.early_stopped_rag);
  CHECK(outcome.final_answer == "Paris");
  CHECK(outcome.total_latency_ms == doctest::Approx(480.0));
  CHECK(outcome.llm_latency_ms == doctest::Approx(480.0));
  CHECK(!outcome.rag_latency_ms.has_value());
  CHECK(rag.cancelled_count.load() == 1);
  CHECK(rag.completed_count.load() == 0);
  CHECK(wall.count() < 1500);  // cancellation is prompt, not a 3s wait
}

TEST_CASE("a missing llm answer waits for rag") {
  SleepyLlm llm;
  llm.sleep = 2ms;
  llm.text = "I am unsure about the answer";
  llm.missing = true;
  llm.reported_latency_ms = 50.0;
  SleepyRag rag;
  rag.sleep = 10ms;
  rag.text = "Paris";
  rag.reported_latency_ms = 1900.0;

  auto outcome = router::route(make_question("q1", "Q?", {"Paris"}), llm, rag);
  CHECK(outcome.source == Source::Rag);
  CHECK(!outcome.early_stopped_rag);
  CHECK(outcome.final_answer == "Paris");
  // The adopted answer costs the dependency path, not the sum.
  CHECK(outcome.total_latency_ms == doctest::Approx(1900.0));
  CHECK(outcome.llm_latency_ms == doctest::Approx(50.0));
  CHECK(outcome.rag_latency_ms == doctest::Approx(1900.0));
  CHECK(rag.completed_count.load() == 1);
}

TEST_CASE("dynamic questions skip the llm entirely") {
  SleepyLlm llm;
  SleepyRag rag;
  rag.sleep = 2ms;
  rag.text = "It is raining";
  rag.reported_latency_ms = 800.0;

  auto q = make_question("q1", "Weather in Paris now?", {}, Dynamism::Dynamic);
  auto outcome = router::route(q, llm, rag);
  CHECK(outcome.source == Source::Rag);
  CHECK(!outcome.early_stopped_rag);
  CHECK(!outcome.llm_latency_ms.has_value());
  CHECK(outcome.total_latency_ms == doctest::Approx(800.0));
  CHECK(llm.call_count() == 0);
}

TEST_CASE("llm branch failures fall through to rag") {
  ThrowingLlm llm;
  SleepyRag rag;
  rag.sleep = 2ms;
  rag.text = "Paris";
  rag.reported_latency_ms = 900.0;

  auto outcome = router::route(make_question("q1", "Q?", {"Paris"}), llm, rag);
  CHECK(outcome.source == Source::Rag);
  CHECK(!outcome.llm_latency_ms.has_value());
  CHECK(outcome.final_answer == "Paris");
}

TEST_CASE("rag failures surface with context") {
  SUBCASE("after an llm refusal") {
    SleepyLlm llm;
    llm.missing = true;
    llm.text = "I am unsure about the answer";
    ThrowingRag rag;
    CHECK_THROWS_WITH_AS(router::route(make_question("q1", "Q?", {"x"}), llm, rag),
                         doctest::Contains("declined"), std::runtime_error);
  }

  SUBCASE("when both branches fail") {
    ThrowingLlm llm;
    ThrowingRag rag;
    CHECK_THROWS_WITH_AS(router::route(make_question("q1", "Q?", {"x"}), llm, rag),
                         doctest::Contains("both branches failed"), std::runtime_error);
  }

  SUBCASE("on a dynamic question") {
    SleepyLlm llm;
    ThrowingRag rag;
    auto q = make_question("q1", "Price now?", {}, Dynamism::Dynamic);
    CHECK_THROWS_WITH_AS(router::route(q, llm, rag), doctest::Contains("dynamic"),
                         std::runtime_error);
    CHECK(llm.call_count() == 0);
  }
}

TEST_CASE("an llm that outlives its timeout is treated as missing") {
  auto llm = std::make_shared<SleepyLlm>();
  llm->sleep = 400ms;
  llm->text = "too late";
  SleepyRag rag;
  rag.sleep = 5ms;
  rag.text = "Paris";
  rag.reported_latency_ms = 1900.0;

  router::RouteOptions options;
  options.llm_timeout = 60ms;
  auto started = std::chrono::steady_clock::now();
  auto outcome = router::route(make_question("q1", "Q?", {"Paris"}), *llm, rag, options);
  auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  CHECK(outcome.source == Source::Rag);
  CHECK(outcome.final_answer == "Paris");
  CHECK(!outcome.llm_latency_ms.has_value());
  // Accounting charges the timeout, not the detached call's eventual return.
  CHECK(outcome.total_latency_ms == doctest::Approx(1900.0));
  CHECK(wall.count() < 390);  // returned before the detached llm finished
  std::this_thread::sleep_for(450ms);  // let the detached branch finish cleanly
}

TEST_CASE("bench grades outcomes and aggregates reports") {
  auto profile = std::make_shared<providers::SimProfile>();
  profile->seed = 8;
  providers::SimEntry confident;
  confident.answers = {providers::SimAnswer{"Paris", 1.0, 0.95}};
  confident.latency = providers::LatencyLaw::fixed(480.0);
  providers::SimEntry wrong;
  wrong.answers = {providers::SimAnswer{"Lyon", 1.0, 0.95}};
  wrong.latency = providers::LatencyLaw::fixed(480.0);
  providers::SimEntry shy;
  shy.missing_probability = 1.0;
  shy.latency = providers::LatencyLaw::fixed(300.0);
  profile->llm["q1"] = confident;
  profile->llm["q2"] = wrong;
  profile->llm["q3"] = shy;
  profile->llm["q4"] = shy;
  providers::SimEntry rag;
  rag.answers = {providers::SimAnswer{"Paris", 1.0, std::nullopt}};
  rag.latency = providers::LatencyLaw::fixed(1900.0);
  profile->rag["*"] = rag;

  providers::SimulatedLlm llm(profile);
  providers::SimulatedRagPipeline rag_pipeline(profile);
  judging::RuleBasedGrader judge;

  std::vector<Question> dataset{
      make_question("q1", "Capital of France?", {"Paris"}),
      make_question("q2", "Capital of Spain?", {"Madrid"}),
      make_question("q3", "Capital of Peru?", {"Lima"}),
      make_question("q4", "Price of gold now?", {}, Dynamism::Dynamic),
  };

  router::BenchOptions options;
  options.baselines = true;
  auto result = router::bench(dataset, llm, rag_pipeline, judge, options);

  REQUIRE(result.outcomes.size() == 4);
  CHECK(result.failures.empty());
  for (size_t i = 0; i < 4; ++i) {
    CHECK(result.outcomes[i].question_id == dataset[i].id);
    CHECK(result.judgments[i].question_id == dataset[i].id);
  }

  // q1: llm correct, early stop. q2: llm wrong but confident, early stop,
  // judged incorrect. q3: llm shy, rag answers Paris != Lima -> incorrect.
  // q4: dynamic -> rag, no ground truths -> missing.
  CHECK(result.outcomes[0].source == Source::Llm);
  CHECK(result.outcomes[0].early_stopped_rag);
  CHECK(result.judgments[0].label == Label::Correct);
  CHECK(result.outcomes[1].source == Source::Llm);
  CHECK(result.judgments[1].label == Label::Incorrect);
  CHECK(result.outcomes[2].source == Source::Rag);
  CHECK(result.judgments[2].label == Label::Incorrect);
  CHECK(result.outcomes[3].source == Source::Rag);
  CHECK(!result.outcomes[3].llm_latency_ms.has_value());
  CHECK(result.judgments[3].label == Label::Missing);

  // Static questions: q1, q2, q3. The llm branch hallucinated on q2 only.
  CHECK(result.router.upper_bound == doctest::Approx(100.0 - 100.0 / 3.0));
  CHECK(result.router.retrieval_reduction == doctest::Approx(0.5));

  REQUIRE(result.llm_only.has_value());
  REQUIRE(result.rag_everywhere.has_value());
  CHECK(result.llm_only->retrieval_reduction == doctest::Approx(1.0));
  CHECK(result.llm_only->upper_bound ==
        doctest::Approx(result.llm_only->breakdown.correct_pct));
  CHECK(result.rag_everywhere->retrieval_reduction == doctest::Approx(0.0));
  CHECK(result.rag_everywhere->upper_bound == doctest::Approx(100.0));
  CHECK(result.rag_everywhere->latency.p50_ms == doctest::Approx(1900.0));

  auto table = router::render_table(result);
  CHECK(table.find("scheme") != std::string::npos);
  CHECK(table.find("router") != std::string::npos);
  CHECK(table.find("llm-only") != std::string::npos);
  CHECK(table.find("rag-everywhere") != std::string::npos);

  json report = router::to_json(result);
  CHECK(report.contains("router"));
  CHECK(report.contains("llm_only"));
  CHECK(report["router"]["upper_bound"] ==
        doctest::Approx(result.router.upper_bound));
}

TEST_CASE("bench records per-question failures and keeps going") {
  class FailOnce : public RagPipeline {
   public:
    AnswerRecord answer(const Question& question, CancelToken) override {
      if (question.id == "q2") throw std::runtime_error("backend exploded");
      AnswerRecord rec;
      rec.question_id = question.id;
      rec.text = "Paris";
      rec.latency_ms = 100.0;
      rec.source = Source::Rag;
      return rec;
    }
    std::string name() const override { return "fail-once"; }
  };

  SleepyLlm llm;
  llm.missing = true;
  llm.text = "I am unsure about the answer";
  FailOnce rag;
  judging::RuleBasedGrader judge;

  std::vector<Question> dataset{make_question("q1", "Q1?", {"Paris"}),
                                make_question("q2", "Q2?", {"Paris"})};
  auto result = router::bench(dataset, llm, rag, judge);

  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].find("q2") != std::string::npos);
  CHECK(result.judgments[0].label == Label::Correct);
  CHECK(result.judgments[1].label == Label::Missing);
  CHECK(result.judgments[1].judge_id == "router");
  CHECK(result.outcomes[1].question_id == "q2");
}

TEST_CASE("an llm source always means a substantive answer") {
  // Randomized race timing over a mixed profile: whatever interleaving
  // happens, source == llm implies non-missing text and an early stop.
  auto profile = std::make_shared<providers::SimProfile>();
  profile->seed = 17;
  providers::SimEntry llm_entry;
  llm_entry.answers = {providers::SimAnswer{"Paris", 0.5, 0.9}};
  llm_entry.missing_probability = 0.5;
  llm_entry.latency = providers::LatencyLaw::lognormal(5.0, 12.0);
  profile->llm["*"] = llm_entry;
  providers::SimEntry rag_entry;
  rag_entry.answers = {providers::SimAnswer{"Paris", 1.0, std::nullopt}};
  rag_entry.latency = providers::LatencyLaw::lognormal(10.0, 20.0);
  profile->rag["*"] = rag_entry;

  providers::SimulatedLlm llm(profile);
  providers::SimulatedRagPipeline rag(profile);

  for (int i = 0; i < 40; ++i) {
    auto q = make_question("q" + std::to_string(i), "Q?", {"Paris"});
    auto outcome = router::route(q, llm, rag);
    if (outcome.source == Source::Llm) {
      CHECK(!judging::detect_missing(outcome.final_answer));
      CHECK(outcome.early_stopped_rag);
    } else {
      CHECK(!outcome.early_stopped_rag);
    }
    CHECK(outcome.total_latency_ms > 0.0);
  }
}
