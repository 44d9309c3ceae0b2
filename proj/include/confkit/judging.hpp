#pragma once

// Answer correctness: refusal detection, the few-shot LLM judge, and a
// deterministic rule-based grader for offline runs and tests.

#include <string>
#include <vector>

#include "confkit/backend.hpp"
#include "confkit/core.hpp"

namespace confkit::judging {

struct GradingRequest {
  std::string question_id;
  std::string question;
  std::vector<std::string> ground_truths;  // non-empty
  std::string prediction;
};

/// Ordered, case-insensitive substrings that mark an answer as a refusal.
/// The shipped defaults are configuration, not ground truth; only the
/// verbatim refusal string is contractual.
struct MissingPatterns {
  std::vector<std::string> patterns;

  static MissingPatterns defaults();
  void validate() const;  // non-empty and must include "i am unsure"
};

/// True iff any pattern occurs in the folded text.
bool detect_missing(const std::string& text, const MissingPatterns& patterns);
bool detect_missing(const std::string& text);  // defaults()

/// The few-shot grading prompt with the concrete request appended:
///   Question: ...\nGround truth: [...]\nPrediction: ...\nCorrectness:
std::string build_grading_prompt(const GradingRequest& request);

/// Maps raw judge output to a label by the first whole-word occurrence of
/// "correct"/"incorrect" after folding ("Correctness:" itself never reads as
/// a verdict). Throws with the raw output attached when neither appears.
Label parse_verdict(const std::string& raw);

class Grader {
 public:
  virtual ~Grader() = default;
  virtual Judgment grade(const GradingRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// correct iff the normalized prediction contains or equals any normalized
/// ground truth. Deterministic; the offline default.
class RuleBasedGrader : public Grader {
 public:
  Judgment grade(const GradingRequest& request) override;
  std::string id() const override { return "rule"; }
};

/// Prompts `judge` with the grading prompt and parses the verdict. Requests
/// are independent; safe to call concurrently when the backend is.
class LlmGrader : public Grader {
 public:
  explicit LlmGrader(LlmBackend& judge) : judge_(judge) {}
  Judgment grade(const GradingRequest& request) override;
  std::string id() const override;

 private:
  LlmBackend& judge_;
};

/// One-shot forms of the two graders. The prediction must be non-missing;
/// refusals are classified upstream by detect_missing.
Judgment grade(const GradingRequest& request, LlmBackend& judge);
Judgment grade_rule_based(const GradingRequest& request);

}  // namespace confkit::judging
