#pragma once

// Dual-branch orchestration: dynamism gating, parallel LLM-vs-RAG racing
// with cooperative early stop, and the end-to-end benchmark report.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "confkit/backend.hpp"
#include "confkit/core.hpp"
#include "confkit/judging.hpp"
#include "confkit/metrics.hpp"
#include "confkit/prompts.hpp"

namespace confkit::router {

class DynamismClassifier {
 public:
  virtual ~DynamismClassifier() = default;
  virtual Dynamism classify(const Question& question) = 0;
  virtual std::string name() const = 0;
};

/// Stub live classifier: flags questions containing time- or market-
/// sensitive keywords ("today", "current", "price", ...). Word-boundary
/// matched on folded text.
class KeywordDynamismClassifier : public DynamismClassifier {
 public:
  KeywordDynamismClassifier() : keywords_(default_keywords()) {}
  explicit KeywordDynamismClassifier(std::vector<std::string> keywords)
      : keywords_(std::move(keywords)) {}

  static std::vector<std::string> default_keywords();

  Dynamism classify(const Question& question) override;
  std::string name() const override { return "keyword"; }

 private:
  std::vector<std::string> keywords_;
};

/// Benchmark mode (classifier == nullptr) passes through the dataset label.
/// A classifier, when given, decides instead; if it throws, the question is
/// treated as dynamic (the safe side: routes to RAG).
Dynamism classify_dynamism(const Question& question, DynamismClassifier* classifier);

struct RouteOptions {
  std::chrono::milliseconds llm_timeout{10000};
  DynamismClassifier* classifier = nullptr;
  double temperature = 0.0;
  std::string system_prompt = std::string(prompts::kAnswerSystem);
};

/// Routes one question. Static questions start both branches concurrently:
/// a non-missing LLM answer cancels and discards the RAG branch; a missing
/// one awaits RAG. Dynamic questions go straight to RAG. total_latency_ms is
/// the branch-dependency path from the reported branch latencies (an answer
/// adopted from RAG after an LLM refusal costs max(llm, rag), not the sum).
/// An LLM call that outlives llm_timeout is treated as missing and keeps
/// running detached, so the backend must outlive it.
RouterOutcome route(const Question& question, LlmBackend& llm, RagPipeline& rag,
                    const RouteOptions& options = {});

/// One benchmark row: graded quality, latency percentiles, and the routing
/// accounting for a single answering scheme.
struct RouterReport {
  std::string label;
  Breakdown breakdown;
  metrics::ScoreReport score;
  metrics::LatencyStats latency;
  double retrieval_reduction = 0.0;
  double upper_bound = 0.0;
};

json to_json(const RouterReport& report);

struct BenchOptions {
  RouteOptions routing;
  bool baselines = false;  // also run LLM-only and RAG-everywhere rows
  size_t jobs = 8;         // concurrent questions
};

struct BenchResult {
  std::vector<RouterOutcome> outcomes;   // one per question, dataset order
  std::vector<Judgment> judgments;       // grades of the final answers
  RouterReport router;
  std::optional<RouterReport> llm_only;
  std::optional<RouterReport> rag_everywhere;
  std::vector<std::string> failures;     // per-question error notes
};

json to_json(const BenchResult& result);
std::string render_table(const BenchResult& result);

/// Routes every question, grades final answers, and aggregates the report.
/// Per-question failures are recorded and marked missing; the run continues.
/// The upper bound comes from the LLM branch's judged behaviour on static
/// questions: 100 minus its hallucination rate.
BenchResult bench(const std::vector<Question>& dataset, LlmBackend& llm,
                  RagPipeline& rag, judging::Grader& judge,
                  const BenchOptions& options = {});

}  // namespace confkit::router
