#pragma once

// Abstract backends: LLM generation, passage retrieval, and the composed
// retrieve-then-read pipeline. Concrete simulated and live implementations
// live in providers.hpp; the router and datagen depend only on these.

#include <stdexcept>
#include <string>
#include <vector>

#include "confkit/concurrency.hpp"
#include "confkit/core.hpp"

namespace confkit {

struct GenerationParams {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int n_samples = 1;
  // Identifies the question this call serves. Simulated backends key their
  // answer profiles and per-call RNG streams on it; live backends ignore it.
  std::string question_id;

  void validate() const {
    if (temperature < 0.0) {
      throw std::invalid_argument("temperature must be >= 0");
    }
    if (n_samples < 1) {
      throw std::invalid_argument("n_samples must be >= 1");
    }
  }
};

struct Passage {
  std::string text;
  std::string source_url;
  int rank = 1;
};

/// Thrown by a branch that observed its CancelToken fire before completing.
struct CancelledError : std::runtime_error {
  CancelledError() : std::runtime_error("cancelled") {}
};

/// One chat-style completion per call. Implementations fill text, is_missing,
/// latency_ms, and self_confidence when the prompt elicits one. Must be
/// shareable across concurrent callers.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual AnswerRecord generate(const GenerationParams& params, CancelToken token) = 0;
  virtual std::string name() const = 0;

  AnswerRecord generate(const GenerationParams& params) {
    return generate(params, CancelToken{});
  }
};

/// Rank-ordered passage search. Returns at most k passages.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual std::vector<Passage> retrieve(const std::string& query, int k,
                                        CancelToken token) = 0;
  virtual std::string name() const = 0;

  std::vector<Passage> retrieve(const std::string& query, int k) {
    return retrieve(query, k, CancelToken{});
  }
};

/// Full retrieval-augmented answer for one question. Implementations must
/// honor `token` promptly (the router cancels this branch on early stop) and
/// throw CancelledError when abandoned.
class RagPipeline {
 public:
  virtual ~RagPipeline() = default;
  virtual AnswerRecord answer(const Question& question, CancelToken token) = 0;
  virtual std::string name() const = 0;
};

}  // namespace confkit
