#pragma once

// Concrete backends. The seeded simulator makes every routing, calibration,
// and labeling claim testable offline; the live clients talk to real chat
// and search APIs and are disabled unless offline mode is switched off.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "confkit/backend.hpp"
#include "confkit/core.hpp"
#include "confkit/prompts.hpp"
#include "confkit/rng.hpp"

namespace confkit::providers {

// Reader-stage prompts. These are configuration: the pipeline's behaviour
// contract is retrieve-then-read, not this particular wording.
inline constexpr std::string_view kReaderSystem =
    "You answer questions using the provided search results. Keep your "
    "response short and concise and directly provide the answer. If the "
    "results do not contain the answer, respond with 'I am unsure about the "
    "answer'.";
inline constexpr std::string_view kEmptyContextMarker = "(no passages retrieved)";

/// Latency distribution: fixed, or lognormal parameterized by its 50th and
/// 90th percentiles (the two points benchmark tables report).
struct LatencyLaw {
  enum class Kind { Fixed, Lognormal };
  Kind kind = Kind::Fixed;
  double fixed_ms = 0.0;
  double p50_ms = 0.0;
  double p90_ms = 0.0;

  static LatencyLaw fixed(double ms);
  static LatencyLaw lognormal(double p50, double p90);

  void validate() const;
  double sample(rng::Stream& stream) const;
  json to_json() const;
  static LatencyLaw from_json(const json& j);
};

struct SimAnswer {
  std::string text;
  double probability = 0.0;
  std::optional<double> confidence;  // reported as self_confidence when drawn
};

/// Behaviour of one simulated backend for one question: answer distribution,
/// refusal probability, and latency law.
struct SimEntry {
  std::vector<SimAnswer> answers;
  double missing_probability = 0.0;
  LatencyLaw latency;
  std::string missing_text = std::string(prompts::kUnsureAnswer);

  void validate() const;  // probabilities + missing_probability sum to 1
  json to_json() const;
  static SimEntry from_json(const json& j);
};

/// Full simulator configuration: a seed plus per-question entries for the
/// LLM and RAG sides. The key "*" is the fallback for unlisted questions.
struct SimProfile {
  uint64_t seed = 0;
  std::map<std::string, SimEntry> llm;
  std::map<std::string, SimEntry> rag;

  const SimEntry* find_llm(const std::string& question_id) const;
  const SimEntry* find_rag(const std::string& question_id) const;

  void validate() const;
  json to_json() const;
  static SimProfile from_json(const json& j);
  static SimProfile load(const std::filesystem::path& path);
};

/// Deterministic LLM stand-in. Each call draws from a stream keyed by
/// (seed, "llm", question_id, call_index), where call_index counts calls for
/// that question; concurrent callers addressing different questions never
/// perturb each other's draws.
class SimulatedLlm : public LlmBackend {
 public:
  explicit SimulatedLlm(std::shared_ptr<const SimProfile> profile)
      : profile_(std::move(profile)) {}

  AnswerRecord generate(const GenerationParams& params, CancelToken token) override;
  using LlmBackend::generate;
  std::string name() const override { return "sim-llm"; }

 private:
  std::shared_ptr<const SimProfile> profile_;
  std::mutex mu_;
  std::map<std::string, uint64_t> call_counts_;
};

/// Deterministic end-to-end RAG stand-in drawing from the profile's rag
/// section (stream tag "rag"). The call counter advances before any
/// cancellation check, so early-stopped calls still consume exactly one
/// index and later runs stay reproducible.
class SimulatedRagPipeline : public RagPipeline {
 public:
  explicit SimulatedRagPipeline(std::shared_ptr<const SimProfile> profile)
      : profile_(std::move(profile)) {}

  AnswerRecord answer(const Question& question, CancelToken token) override;
  std::string name() const override { return "sim-rag"; }

 private:
  std::shared_ptr<const SimProfile> profile_;
  std::mutex mu_;
  std::map<std::string, uint64_t> call_counts_;
};

/// Canned passage store for retrieve-contract tests.
class SimulatedRetriever : public Retriever {
 public:
  explicit SimulatedRetriever(std::vector<Passage> passages)
      : passages_(std::move(passages)) {}

  std::vector<Passage> retrieve(const std::string& query, int k,
                                CancelToken token) override;
  using Retriever::retrieve;
  std::string name() const override { return "sim-search"; }

 private:
  std::vector<Passage> passages_;
};

/// Retrieve-then-read answer for one question. Stage failures are rethrown
/// with the stage named; an empty retrieval still reaches the reader with an
/// explicit empty-context marker. latency_ms sums retrieval and reading time.
AnswerRecord rag_answer(const Question& question, Retriever& retriever,
                        LlmBackend& reader, int k, CancelToken token);

/// RagPipeline over a retriever and a reader LLM. Counts how often the
/// reader ran with no retrieved passages.
class RetrieverReaderPipeline : public RagPipeline {
 public:
  RetrieverReaderPipeline(Retriever& retriever, LlmBackend& reader, int k = 10)
      : retriever_(retriever), reader_(reader), k_(k) {}

  AnswerRecord answer(const Question& question, CancelToken token) override;
  std::string name() const override;
  size_t empty_context_count() const;

 private:
  Retriever& retriever_;
  LlmBackend& reader_;
  int k_;
  mutable std::mutex mu_;
  size_t empty_context_count_ = 0;
};

struct ConfidenceResponse {
  std::string answer;
  std::optional<double> confidence;
};

/// Extracts {"answer", "confidence_score"} from model output that may wrap
/// the JSON in prose. Unparseable output falls back to the raw text with no
/// confidence; out-of-range scores are clamped to [0,1].
ConfidenceResponse parse_confidence_response(const std::string& raw);

/// OpenAI-style chat completion client. Refuses to run in offline mode; the
/// API key comes from an environment variable, never from flags or files.
class LiveChatLlm : public LlmBackend {
 public:
  struct Options {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string model = "llama-3.1-70b-instruct";
    std::string api_key_env = "LLM_API_KEY";
    int timeout_ms = 30000;
    int max_attempts = 3;
    bool offline = true;
  };

  explicit LiveChatLlm(Options options) : options_(std::move(options)) {}

  AnswerRecord generate(const GenerationParams& params, CancelToken token) override;
  using LlmBackend::generate;
  std::string name() const override { return "live:" + options_.model; }

 private:
  Options options_;
};

/// Web-search client returning ranked snippets as passages.
class LiveSearchRetriever : public Retriever {
 public:
  struct Options {
    std::string base_url = "https://api.bing.microsoft.com";
    std::string path = "/v7.0/search";
    std::string api_key_env = "SEARCH_API_KEY";
    int timeout_ms = 10000;
    int max_attempts = 3;
    bool offline = true;
  };

  explicit LiveSearchRetriever(Options options) : options_(std::move(options)) {}

  std::vector<Passage> retrieve(const std::string& query, int k,
                                CancelToken token) override;
  using Retriever::retrieve;
  std::string name() const override { return "live-search"; }

 private:
  Options options_;
};

}  // namespace confkit::providers
