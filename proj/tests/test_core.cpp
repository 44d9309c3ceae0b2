#include <doctest.h>

#include "confkit/core.hpp"
#include "confkit/jsonl.hpp"
#include "test_doubles.hpp"

using namespace confkit;
using confkit::testing::TempDir;

TEST_CASE("enum string forms round-trip") {
  CHECK(to_string(Dynamism::Static) == "static");
  CHECK(to_string(Dynamism::Dynamic) == "dynamic");
  CHECK(dynamism_from_string("static") == Dynamism::Static);
  CHECK(dynamism_from_string("dynamic") == Dynamism::Dynamic);

  for (auto p : {Popularity::Head, Popularity::Torso, Popularity::Tail,
                 Popularity::Web, Popularity::Unknown}) {
    CHECK(popularity_from_string(to_string(p)) == p);
  }
  for (auto s : {Source::Llm, Source::Rag}) {
    CHECK(source_from_string(to_string(s)) == s);
  }
  for (auto l : {Label::Correct, Label::Incorrect, Label::Missing}) {
    CHECK(label_from_string(to_string(l)) == l);
  }

  CHECK_THROWS(dynamism_from_string("sometimes"));
  CHECK_THROWS(popularity_from_string(""));
  CHECK_THROWS(source_from_string("oracle"));
  CHECK_THROWS(label_from_string("maybe"));
}

TEST_CASE("breakdown from counts and validation") {
  auto b = Breakdown::from_counts(1, 1, 2);
  CHECK(b.correct_pct == doctest::Approx(25.0));
  CHECK(b.incorrect_pct == doctest::Approx(25.0));
  CHECK(b.missing_pct == doctest::Approx(50.0));
  CHECK_NOTHROW(b.validate());

  CHECK_THROWS(Breakdown::from_counts(0, 0, 0));

  Breakdown bad{50.0, 30.0, 30.0};
  CHECK_THROWS(bad.validate());
  Breakdown negative{-10.0, 60.0, 50.0};
  CHECK_THROWS(negative.validate());
  Breakdown thirds = Breakdown::from_counts(1, 1, 1);
  CHECK_NOTHROW(thirds.validate());  // repeating decimals stay within tolerance
}

TEST_CASE("question json round-trip") {
  Question q = testing::make_question("q1", "What is the capital of France?", {"Paris"});
  q.domain = "geo";
  q.popularity = Popularity::Head;

  json j = to_json(q);
  CHECK(j["id"] == "q1");
  CHECK(j["dynamism"] == "static");
  CHECK(j["popularity"] == "head");
  CHECK(j["ground_truths"][0] == "Paris");
  CHECK(question_from_json(j) == q);

  Question dynamic = testing::make_question("q2", "Price of X today?", {},
                                            Dynamism::Dynamic);
  CHECK(question_from_json(to_json(dynamic)) == dynamic);
}

TEST_CASE("answer record json round-trip") {
  AnswerRecord r;
  r.question_id = "q1";
  r.text = "Paris";
  r.latency_ms = 480.0;
  r.self_confidence = 0.9;
  r.sample_index = 3;
  r.source = Source::Rag;
  CHECK(answer_from_json(to_json(r)) == r);

  AnswerRecord bare;
  bare.question_id = "q2";
  bare.text = "I am unsure about the answer";
  bare.is_missing = true;
  json j = to_json(bare);
  CHECK(!j.contains("self_confidence"));
  CHECK(!j.contains("sample_index"));
  CHECK(answer_from_json(j) == bare);

  json out_of_range = to_json(r);
  out_of_range["self_confidence"] = 1.5;
  CHECK_THROWS(answer_from_json(out_of_range));
  json negative_latency = to_json(r);
  negative_latency["latency_ms"] = -1.0;
  CHECK_THROWS(answer_from_json(negative_latency));
}

TEST_CASE("judgment and router outcome json round-trip") {
  Judgment j{"q1", Label::Incorrect, "judge:sim"};
  CHECK(judgment_from_json(to_json(j)) == j);

  RouterOutcome o;
  o.question_id = "q1";
  o.final_answer = "Paris";
  o.source = Source::Llm;
  o.early_stopped_rag = true;
  o.total_latency_ms = 480.0;
  o.llm_latency_ms = 480.0;
  CHECK(router_outcome_from_json(to_json(o)) == o);
  CHECK(!to_json(o).contains("rag_latency_ms"));

  RouterOutcome rag_only;
  rag_only.question_id = "q2";
  rag_only.final_answer = "42";
  rag_only.rag_latency_ms = 1900.0;
  rag_only.total_latency_ms = 1900.0;
  CHECK(router_outcome_from_json(to_json(rag_only)) == rag_only);
}

TEST_CASE("load_dataset validates lines") {
  TempDir dir;

  SUBCASE("valid file loads in order") {
    jsonl::write_text_file(
        dir.file("ok.jsonl"),
        R"({"id":"a","text":"Q1?","domain":"d","dynamism":"static","popularity":"head","ground_truths":["x"]})"
        "\n"
        R"({"id":"b","text":"Q2?","domain":"d","dynamism":"dynamic","popularity":"unknown","ground_truths":[]})"
        "\n");
    auto qs = load_dataset(dir.file("ok.jsonl"));
    REQUIRE(qs.size() == 2);
    CHECK(qs[0].id == "a");
    CHECK(qs[1].dynamism == Dynamism::Dynamic);
  }

  SUBCASE("malformed json names the line") {
    jsonl::write_text_file(dir.file("bad.jsonl"),
                           R"({"id":"a","text":"Q1?","domain":"d","dynamism":"static","ground_truths":["x"]})"
                           "\nnot json\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("bad.jsonl")),
                         doctest::Contains("line 2"), std::runtime_error);
  }

  SUBCASE("duplicate ids rejected") {
    jsonl::write_text_file(
        dir.file("dup.jsonl"),
        R"({"id":"a","text":"Q1?","domain":"d","dynamism":"static","ground_truths":["x"]})"
        "\n"
        R"({"id":"a","text":"Q2?","domain":"d","dynamism":"static","ground_truths":["y"]})"
        "\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("dup.jsonl")), doctest::Contains("'a'"),
                         std::runtime_error);
  }

  SUBCASE("static questions need ground truths") {
    jsonl::write_text_file(
        dir.file("nogt.jsonl"),
        R"({"id":"a","text":"Q1?","domain":"d","dynamism":"static","ground_truths":[]})"
        "\n");
    CHECK_THROWS(load_dataset(dir.file("nogt.jsonl")));
  }
}

TEST_CASE("answers and judgments persist through files") {
  TempDir dir;
  std::vector<AnswerRecord> answers(2);
  answers[0].question_id = "a";
  answers[0].text = "Paris";
  answers[0].self_confidence = 0.8;
  answers[1].question_id = "b";
  answers[1].text = "I am unsure about the answer";
  answers[1].is_missing = true;
  save_answers(dir.file("answers.jsonl"), answers);
  CHECK(load_answers(dir.file("answers.jsonl")) == answers);

  std::vector<Judgment> judgments{{"a", Label::Correct, "rule"},
                                  {"b", Label::Missing, "missing-detector"}};
  save_judgments(dir.file("judgments.jsonl"), judgments);
  CHECK(load_judgments(dir.file("judgments.jsonl")) == judgments);
}

TEST_CASE("aggregate counts labels") {
  std::vector<Judgment> judgments{{"a", Label::Correct, "r"},
                                  {"b", Label::Incorrect, "r"},
                                  {"c", Label::Missing, "r"},
                                  {"d", Label::Missing, "r"}};
  auto b = aggregate(judgments);
  CHECK(b.correct_pct == doctest::Approx(25.0));
  CHECK(b.incorrect_pct == doctest::Approx(25.0));
  CHECK(b.missing_pct == doctest::Approx(50.0));

  CHECK_THROWS(aggregate({}));
}
