#pragma once

// Answer-consistency measurement: sample the same question repeatedly,
// cluster semantically equivalent answers, and score the majority cluster.

#include <string>
#include <vector>

#include "confkit/backend.hpp"
#include "confkit/core.hpp"
#include "confkit/judging.hpp"
#include "confkit/prompts.hpp"

namespace confkit::consistency {

struct AnswerCluster {
  std::string representative;  // the answer that founded the cluster
  std::vector<std::string> members;
  bool is_missing = false;
};

struct ConsistencyResult {
  std::string question_id;
  std::string canonical_answer;
  double score = 0.0;
  std::vector<AnswerCluster> clusters;
};

json to_json(const ConsistencyResult& r);

/// Symmetric answer-equivalence test: equivalent(a, b) must equal
/// equivalent(b, a).
class EquivalenceOracle {
 public:
  virtual ~EquivalenceOracle() = default;
  virtual bool equivalent(const std::string& a, const std::string& b) = 0;
  virtual std::string name() const = 0;
};

/// Equality after normalization (fold, trim, collapse whitespace, strip
/// terminal punctuation). Cheap deterministic default.
class NormalizedMatchOracle : public EquivalenceOracle {
 public:
  bool equivalent(const std::string& a, const std::string& b) override;
  std::string name() const override { return "normalized"; }
};

/// Grader-backed equivalence for one question: a matches b iff the grader accepts
/// a as a prediction against ground truth [b] or vice versa. The OR of both
/// directions keeps the decision symmetric.
class JudgeEquivalenceOracle : public EquivalenceOracle {
 public:
  JudgeEquivalenceOracle(judging::Grader& grader, std::string question_id,
                         std::string question)
      : grader_(grader), question_id_(std::move(question_id)),
        question_(std::move(question)) {}
  bool equivalent(const std::string& a, const std::string& b) override;
  std::string name() const override { return "judge"; }

 private:
  judging::Grader& grader_;
  std::string question_id_;
  std::string question_;
};

struct SampleOptions {
  int n = 20;
  double temperature = 1.0;
  int max_attempts = 3;  // per sample, counting the first try
  std::string system_prompt = std::string(prompts::kAnswerSystem);
};

/// Asks the provider the same question n times. Returns exactly n records
/// with sample_index 0..n-1; missing answers are kept and flagged. A sample
/// that still fails after max_attempts raises an error carrying how many
/// samples had been collected.
std::vector<AnswerRecord> sample_answers(LlmBackend& provider, const Question& question,
                                         const SampleOptions& options = {});

/// Greedy single-pass clustering: each answer joins the first existing
/// cluster whose representative it is equivalent to, else founds a new one.
std::vector<AnswerCluster> cluster_answers(const std::vector<std::string>& answers,
                                           EquivalenceOracle& oracle);

/// Like cluster_answers, but missing records form their own cluster (refusal
/// variants must not merge with substantive answers).
std::vector<AnswerCluster> cluster_records(const std::vector<AnswerRecord>& records,
                                           EquivalenceOracle& oracle);

/// Majority answer and its frequency. Ties break toward the
/// earliest-founded cluster. With include_missing = false the missing
/// cluster is excluded from both numerator and denominator; an all-missing
/// sample set then scores 0 with the refusal as canonical answer.
ConsistencyResult consistency_score(const std::vector<AnswerCluster>& clusters,
                                    bool include_missing = true);

struct MeasureOptions {
  SampleOptions sampling;
  bool include_missing = true;
};

/// sample -> cluster -> score for one question.
ConsistencyResult measure_consistency(LlmBackend& provider, const Question& question,
                                      EquivalenceOracle& oracle,
                                      const MeasureOptions& options = {});

}  // namespace confkit::consistency
