#include "confkit/router.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include "confkit/concurrency.hpp"
#include "confkit/text.hpp"

namespace confkit::router {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

bool contains_word(const std::string& folded, const std::string& needle) {
  auto is_word = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  };
  size_t pos = 0;
  while ((pos = folded.find(needle, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word(folded[pos - 1]);
    size_t end = pos + needle.size();
    bool right_ok = end == folded.size() || !is_word(folded[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

}  // namespace

std::vector<std::string> KeywordDynamismClassifier::default_keywords() {
  return {"today",    "current", "currently", "now",      "latest",
          "price",    "stock",   "weather",   "tonight",  "yesterday",
          "tomorrow", "recent",  "recently",  "this week", "this year"};
}

Dynamism KeywordDynamismClassifier::classify(const Question& question) {
  std::string folded = text::fold(question.text);
  for (const auto& kw : keywords_) {
    if (contains_word(folded, text::fold(kw))) return Dynamism::Dynamic;
  }
  return Dynamism::Static;
}

Dynamism classify_dynamism(const Question& question, DynamismClassifier* classifier) {
  if (!classifier) return question.dynamism;
  try {
    return classifier->classify(question);
  } catch (...) {
    // A broken classifier must not stop routing; dynamic triggers RAG, which
    // can answer anything.
    return Dynamism::Dynamic;
  }
}

namespace {

struct Branch {
  std::future<AnswerRecord> future;
  std::thread thread;
};

Branch spawn(std::function<AnswerRecord()> fn) {
  std::packaged_task<AnswerRecord()> task(std::move(fn));
  Branch b;
  b.future = task.get_future();
  b.thread = std::thread(std::move(task));
  return b;
}

}  // namespace

RouterOutcome route(const Question& question, LlmBackend& llm, RagPipeline& rag,
                    const RouteOptions& options) {
  RouterOutcome out;
  out.question_id = question.id;

  if (classify_dynamism(question, options.classifier) == Dynamism::Dynamic) {
    AnswerRecord rec;
    try {
      rec = rag.answer(question, CancelToken{});
    } catch (const std::exception& e) {
      throw std::runtime_error("rag branch failed for dynamic question '" +
                               question.id + "': " + e.what());
    }
    out.final_answer = rec.text;
    out.source = Source::Rag;
    out.early_stopped_rag = false;
    out.total_latency_ms = rec.latency_ms;
    out.rag_latency_ms = rec.latency_ms;
    return out;
  }

  CancelToken rag_token;
  Branch rag_branch = spawn([&rag, question, rag_token] {
    return rag.answer(question, rag_token);
  });

  GenerationParams params;
  params.system_prompt = options.system_prompt;
  params.user_prompt = question.text;
  params.temperature = options.temperature;
  params.question_id = question.id;
  auto llm_started = std::chrono::steady_clock::now();
  Branch llm_branch = spawn([&llm, params] { return llm.generate(params); });

  AnswerRecord llm_rec;
  bool llm_ok = false;
  bool llm_timed_out = false;
  std::string llm_error;
  if (llm_branch.future.wait_for(options.llm_timeout) == std::future_status::ready) {
    llm_branch.thread.join();
    try {
      llm_rec = llm_branch.future.get();
      llm_ok = true;
    } catch (const std::exception& e) {
      llm_error = e.what();
    }
  } else {
    // Treated as missing. The call keeps running detached; its result is
    // never read.
    llm_timed_out = true;
    llm_branch.thread.detach();
  }
  double llm_decided_at_ms = elapsed_ms(llm_started);

  if (llm_ok && !llm_rec.is_missing) {
    rag_token.cancel();
    rag_branch.thread.join();
    try {
      (void)rag_branch.future.get();  // discarded: the LLM answer won the race
    } catch (...) {
    }
    out.final_answer = llm_rec.text;
    out.source = Source::Llm;
    out.early_stopped_rag = true;
    out.total_latency_ms = llm_rec.latency_ms;
    out.llm_latency_ms = llm_rec.latency_ms;
    return out;
  }

  rag_branch.thread.join();
  AnswerRecord rag_rec;
  try {
    rag_rec = rag_branch.future.get();
  } catch (const std::exception& e) {
    if (llm_ok) {
      throw std::runtime_error("rag branch failed for question '" + question.id +
                               "' after the llm declined: " + e.what());
    }
    std::string llm_note =
        llm_timed_out ? "timed out after " + std::to_string(options.llm_timeout.count()) +
                            "ms"
                      : llm_error;
    throw std::runtime_error("both branches failed for question '" + question.id +
                             "': llm: " + llm_note + "; rag: " + e.what());
  }

  out.final_answer = rag_rec.text;
  out.source = Source::Rag;
  out.early_stopped_rag = false;
  out.rag_latency_ms = rag_rec.latency_ms;
  if (llm_ok) {
    // The RAG result is adopted only once the LLM verdict is known, so the
    // dependency path is the slower branch, not the sum.
    out.llm_latency_ms = llm_rec.latency_ms;
    out.total_latency_ms = std::max(llm_rec.latency_ms, rag_rec.latency_ms);
  } else if (llm_timed_out) {
    out.total_latency_ms =
        std::max(static_cast<double>(options.llm_timeout.count()), rag_rec.latency_ms);
  } else {
    out.total_latency_ms = std::max(llm_decided_at_ms, rag_rec.latency_ms);
  }
  return out;
}

json to_json(const RouterReport& report) {
  return json{{"label", report.label},
              {"breakdown", confkit::to_json(report.breakdown)},
              {"score", metrics::to_json(report.score)},
              {"latency", metrics::to_json(report.latency)},
              {"retrieval_reduction", report.retrieval_reduction},
              {"upper_bound", report.upper_bound}};
}

json to_json(const BenchResult& result) {
  json j{{"router", to_json(result.router)}, {"failures", result.failures}};
  if (result.llm_only) j["llm_only"] = to_json(*result.llm_only);
  if (result.rag_everywhere) j["rag_everywhere"] = to_json(*result.rag_everywhere);
  return j;
}

std::string render_table(const BenchResult& result) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %7s %6s %6s %6s %7s %7s %7s %10s\n",
                "scheme", "Upper", "Corr", "Miss", "Hall", "Fac", "L-P50", "L-P90",
                "Reduction");
  out << line;
  auto row = [&](const RouterReport& r) {
    std::snprintf(line, sizeof(line),
                  "%-16s %7.1f %6.1f %6.1f %6.1f %7.1f %7.0f %7.0f %10.3f\n",
                  r.label.c_str(), r.upper_bound, r.breakdown.correct_pct,
                  r.breakdown.missing_pct, r.breakdown.incorrect_pct,
                  r.score.factuality, r.latency.p50_ms, r.latency.p90_ms,
                  r.retrieval_reduction);
    out << line;
  };
  row(result.router);
  if (result.llm_only) row(*result.llm_only);
  if (result.rag_everywhere) row(*result.rag_everywhere);
  return out.str();
}

namespace {

Judgment grade_final(const Question& question, const std::string& answer,
                     judging::Grader& judge) {
  if (answer.empty() || judging::detect_missing(answer)) {
    return Judgment{question.id, Label::Missing, "missing-detector"};
  }
  if (question.ground_truths.empty()) {
    // Nothing to grade against (a dynamic question without pinned answers).
    return Judgment{question.id, Label::Missing, "ungradable"};
  }
  return judge.grade(
      judging::GradingRequest{question.id, question.text, question.ground_truths, answer});
}

RouterReport make_report(std::string label, const std::vector<Judgment>& judgments,
                         const std::vector<double>& latencies, double reduction,
                         double upper) {
  RouterReport report;
  report.label = std::move(label);
  report.breakdown = aggregate(judgments);
  report.score = metrics::score(report.breakdown);
  report.latency = metrics::latency_percentiles(latencies);
  report.retrieval_reduction = reduction;
  report.upper_bound = upper;
  return report;
}

/// Shared shape of the two baseline passes: one backend call per question.
RouterReport run_baseline(const std::string& label, const std::vector<Question>& dataset,
                          const std::function<AnswerRecord(const Question&)>& call,
                          judging::Grader& judge, size_t jobs, double reduction,
                          std::optional<double> fixed_upper,
                          std::vector<std::string>& failures) {
  size_t n = dataset.size();
  std::vector<AnswerRecord> records(n);
  std::vector<char> failed(n, 0);
  std::vector<std::string> errors(n);
  parallel_for(n, jobs, [&](size_t i) {
    try {
      records[i] = call(dataset[i]);
    } catch (const std::exception& e) {
      failed[i] = 1;
      errors[i] = e.what();
    }
  });

  std::vector<Judgment> judgments;
  std::vector<double> latencies;
  judgments.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      failures.push_back(label + ": question '" + dataset[i].id + "': " + errors[i]);
      judgments.push_back(Judgment{dataset[i].id, Label::Missing, "router"});
      continue;
    }
    if (records[i].is_missing) {
      judgments.push_back(Judgment{dataset[i].id, Label::Missing, "missing-detector"});
    } else {
      judgments.push_back(grade_final(dataset[i], records[i].text, judge));
    }
    latencies.push_back(records[i].latency_ms);
  }
  double upper = 0.0;
  Breakdown breakdown = aggregate(judgments);
  upper = fixed_upper ? *fixed_upper : breakdown.correct_pct;
  RouterReport report = make_report(label, judgments, latencies, reduction, upper);
  return report;
}

}  // namespace

BenchResult bench(const std::vector<Question>& dataset, LlmBackend& llm,
                  RagPipeline& rag, judging::Grader& judge, const BenchOptions& options) {
  if (dataset.empty()) {
    throw std::runtime_error("benchmark dataset is empty");
  }
  size_t n = dataset.size();
  BenchResult result;
  result.outcomes.resize(n);
  std::vector<char> failed(n, 0);
  std::vector<std::string> errors(n);

  parallel_for(n, options.jobs, [&](size_t i) {
    try {
      result.outcomes[i] = route(dataset[i], llm, rag, options.routing);
    } catch (const std::exception& e) {
      failed[i] = 1;
      errors[i] = e.what();
      RouterOutcome blank;
      blank.question_id = dataset[i].id;
      result.outcomes[i] = blank;
    }
  });

  result.judgments.reserve(n);
  std::vector<double> latencies;
  for (size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      result.failures.push_back("router: question '" + dataset[i].id +
                                "': " + errors[i]);
      result.judgments.push_back(Judgment{dataset[i].id, Label::Missing, "router"});
      continue;
    }
    result.judgments.push_back(grade_final(dataset[i], result.outcomes[i].final_answer, judge));
    latencies.push_back(result.outcomes[i].total_latency_ms);
  }

  // Confident-branch accounting for the upper bound: judged LLM answers on
  // static questions, with declined/failed LLM branches counted as missing.
  size_t static_total = 0;
  size_t static_incorrect = 0;
  for (size_t i = 0; i < n; ++i) {
    if (classify_dynamism(dataset[i], options.routing.classifier) == Dynamism::Dynamic) {
      continue;
    }
    ++static_total;
    if (!failed[i] && result.outcomes[i].source == Source::Llm &&
        result.judgments[i].label == Label::Incorrect) {
      ++static_incorrect;
    }
  }
  double upper = static_total == 0
                     ? 100.0
                     : 100.0 - 100.0 * static_cast<double>(static_incorrect) /
                                   static_cast<double>(static_total);

  result.router = make_report("router", result.judgments, latencies,
                              metrics::retrieval_reduction(result.outcomes), upper);

  if (options.baselines) {
    result.llm_only = run_baseline(
        "llm-only", dataset,
        [&](const Question& q) {
          GenerationParams params;
          params.system_prompt = options.routing.system_prompt;
          params.user_prompt = q.text;
          params.temperature = options.routing.temperature;
          params.question_id = q.id;
          return llm.generate(params);
        },
        judge, options.jobs, 1.0, std::nullopt, result.failures);
    result.rag_everywhere = run_baseline(
        "rag-everywhere", dataset,
        [&](const Question& q) { return rag.answer(q, CancelToken{}); }, judge,
        options.jobs, 0.0, 100.0, result.failures);
  }
  return result;
}

}  // namespace confkit::router
