#include "confkit/core.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "confkit/jsonl.hpp"

namespace confkit {

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& value) {
  throw std::runtime_error(std::string("unknown ") + what + ": '" + value + "'");
}

}  // namespace

std::string to_string(Dynamism v) {
  return v == Dynamism::Static ? "static" : "dynamic";
}

std::string to_string(Popularity v) {
  switch (v) {
    case Popularity::Head: return "head";
    case Popularity::Torso: return "torso";
    case Popularity::Tail: return "tail";
    case Popularity::Web: return "web";
    case Popularity::Unknown: return "unknown";
  }
  return "unknown";
}

std::string to_string(Source v) {
  return v == Source::Llm ? "llm" : "rag";
}

std::string to_string(Label v) {
  switch (v) {
    case Label::Correct: return "correct";
    case Label::Incorrect: return "incorrect";
    case Label::Missing: return "missing";
  }
  return "missing";
}

Dynamism dynamism_from_string(const std::string& s) {
  if (s == "static") return Dynamism::Static;
  if (s == "dynamic") return Dynamism::Dynamic;
  bad_enum("dynamism", s);
}

Popularity popularity_from_string(const std::string& s) {
  if (s == "head") return Popularity::Head;
  if (s == "torso") return Popularity::Torso;
  if (s == "tail") return Popularity::Tail;
  if (s == "web") return Popularity::Web;
  if (s == "unknown") return Popularity::Unknown;
  bad_enum("popularity", s);
}

Source source_from_string(const std::string& s) {
  if (s == "llm") return Source::Llm;
  if (s == "rag") return Source::Rag;
  bad_enum("source", s);
}

Label label_from_string(const std::string& s) {
  if (s == "correct") return Label::Correct;
  if (s == "incorrect") return Label::Incorrect;
  if (s == "missing") return Label::Missing;
  bad_enum("label", s);
}

Breakdown Breakdown::from_counts(size_t correct, size_t incorrect, size_t missing) {
  size_t total = correct + incorrect + missing;
  if (total == 0) {
    throw std::runtime_error("cannot build a breakdown from zero judgments");
  }
  double t = static_cast<double>(total);
  return Breakdown{100.0 * static_cast<double>(correct) / t,
                   100.0 * static_cast<double>(incorrect) / t,
                   100.0 * static_cast<double>(missing) / t};
}

void Breakdown::validate() const {
  auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
  if (!in_range(correct_pct) || !in_range(incorrect_pct) || !in_range(missing_pct)) {
    throw std::runtime_error("breakdown percentages must lie in [0,100]");
  }
  double sum = correct_pct + incorrect_pct + missing_pct;
  if (std::abs(sum - 100.0) > 1e-9) {
    throw std::runtime_error("breakdown percentages must sum to 100, got " +
                             std::to_string(sum));
  }
}

json to_json(const Question& q) {
  return json{{"id", q.id},
              {"text", q.text},
              {"domain", q.domain},
              {"dynamism", to_string(q.dynamism)},
              {"popularity", to_string(q.popularity)},
              {"ground_truths", q.ground_truths}};
}

json to_json(const AnswerRecord& r) {
  json j{{"question_id", r.question_id},
         {"text", r.text},
         {"is_missing", r.is_missing},
         {"latency_ms", r.latency_ms},
         {"source", to_string(r.source)}};
  if (r.self_confidence) j["self_confidence"] = *r.self_confidence;
  if (r.sample_index) j["sample_index"] = *r.sample_index;
  return j;
}

json to_json(const Judgment& j) {
  return json{{"question_id", j.question_id},
              {"label", to_string(j.label)},
              {"judge_id", j.judge_id}};
}

json to_json(const Breakdown& b) {
  return json{{"correct_pct", b.correct_pct},
              {"incorrect_pct", b.incorrect_pct},
              {"missing_pct", b.missing_pct}};
}

json to_json(const RouterOutcome& o) {
  json j{{"question_id", o.question_id},
         {"final_answer", o.final_answer},
         {"source", to_string(o.source)},
         {"early_stopped_rag", o.early_stopped_rag},
         {"total_latency_ms", o.total_latency_ms}};
  if (o.llm_latency_ms) j["llm_latency_ms"] = *o.llm_latency_ms;
  if (o.rag_latency_ms) j["rag_latency_ms"] = *o.rag_latency_ms;
  return j;
}

Question question_from_json(const json& j) {
  Question q;
  q.id = j.at("id").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.domain = j.value("domain", std::string{});
  // Source datasets often lack these annotations; static/unknown are the
  // documented defaults.
  q.dynamism = dynamism_from_string(j.value("dynamism", std::string("static")));
  q.popularity = popularity_from_string(j.value("popularity", std::string("unknown")));
  if (j.contains("ground_truths")) {
    q.ground_truths = j.at("ground_truths").get<std::vector<std::string>>();
  }
  return q;
}

AnswerRecord answer_from_json(const json& j) {
  AnswerRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.is_missing = j.value("is_missing", false);
  if (j.contains("self_confidence") && !j.at("self_confidence").is_null()) {
    double c = j.at("self_confidence").get<double>();
    if (c < 0.0 || c > 1.0) {
      throw std::runtime_error("self_confidence out of [0,1]: " + std::to_string(c));
    }
    r.self_confidence = c;
  }
  r.latency_ms = j.value("latency_ms", 0.0);
  if (r.latency_ms < 0.0) {
    throw std::runtime_error("latency_ms must be non-negative");
  }
  r.source = source_from_string(j.value("source", std::string("llm")));
  if (j.contains("sample_index") && !j.at("sample_index").is_null()) {
    r.sample_index = j.at("sample_index").get<int>();
  }
  return r;
}

Judgment judgment_from_json(const json& j) {
  Judgment out;
  out.question_id = j.at("question_id").get<std::string>();
  out.label = label_from_string(j.at("label").get<std::string>());
  out.judge_id = j.value("judge_id", std::string{});
  return out;
}

Breakdown breakdown_from_json(const json& j) {
  Breakdown b{j.at("correct_pct").get<double>(), j.at("incorrect_pct").get<double>(),
              j.at("missing_pct").get<double>()};
  b.validate();
  return b;
}

RouterOutcome router_outcome_from_json(const json& j) {
  RouterOutcome o;
  o.question_id = j.at("question_id").get<std::string>();
  o.final_answer = j.at("final_answer").get<std::string>();
  o.source = source_from_string(j.at("source").get<std::string>());
  o.early_stopped_rag = j.at("early_stopped_rag").get<bool>();
  o.total_latency_ms = j.at("total_latency_ms").get<double>();
  if (j.contains("llm_latency_ms") && !j.at("llm_latency_ms").is_null()) {
    o.llm_latency_ms = j.at("llm_latency_ms").get<double>();
  }
  if (j.contains("rag_latency_ms") && !j.at("rag_latency_ms").is_null()) {
    o.rag_latency_ms = j.at("rag_latency_ms").get<double>();
  }
  return o;
}

std::vector<Question> load_dataset(const std::filesystem::path& path) {
  std::vector<Question> out;
  std::unordered_set<std::string> seen;
  jsonl::for_each(path, [&](const json& rec, size_t lineno) {
    auto fail = [&](const std::string& msg) {
      throw std::runtime_error(path.string() + " line " + std::to_string(lineno) + ": " + msg);
    };
    Question q;
    try {
      q = question_from_json(rec);
    } catch (const std::exception& e) {
      fail(e.what());
    }
    if (!seen.insert(q.id).second) {
      fail("duplicate question id '" + q.id + "'");
    }
    if (q.dynamism == Dynamism::Static && q.ground_truths.empty()) {
      fail("static question '" + q.id + "' has no ground_truths");
    }
    out.push_back(std::move(q));
  });
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<Question>& qs) {
  std::vector<json> recs;
  recs.reserve(qs.size());
  for (const auto& q : qs) recs.push_back(to_json(q));
  jsonl::write(path, recs);
}

std::vector<AnswerRecord> load_answers(const std::filesystem::path& path) {
  std::vector<AnswerRecord> out;
  jsonl::for_each(path, [&](const json& rec, size_t lineno) {
    try {
      out.push_back(answer_from_json(rec));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  });
  return out;
}

void save_answers(const std::filesystem::path& path, const std::vector<AnswerRecord>& rs) {
  std::vector<json> recs;
  recs.reserve(rs.size());
  for (const auto& r : rs) recs.push_back(to_json(r));
  jsonl::write(path, recs);
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
  std::vector<Judgment> out;
  jsonl::for_each(path, [&](const json& rec, size_t lineno) {
    try {
      out.push_back(judgment_from_json(rec));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  });
  return out;
}

void save_judgments(const std::filesystem::path& path, const std::vector<Judgment>& js) {
  std::vector<json> recs;
  recs.reserve(js.size());
  for (const auto& j : js) recs.push_back(to_json(j));
  jsonl::write(path, recs);
}

Breakdown aggregate(const std::vector<Judgment>& judgments) {
  if (judgments.empty()) {
    throw std::runtime_error("aggregate: judgment list is empty");
  }
  size_t correct = 0, incorrect = 0, missing = 0;
  for (const auto& j : judgments) {
    switch (j.label) {
      case Label::Correct: ++correct; break;
      case Label::Incorrect: ++incorrect; break;
      case Label::Missing: ++missing; break;
    }
  }
  return Breakdown::from_counts(correct, incorrect, missing);
}

}  // namespace confkit
