#include "confkit/judging.hpp"

#include <cctype>
#include <stdexcept>

#include "confkit/prompts.hpp"
#include "confkit/text.hpp"

namespace confkit::judging {

MissingPatterns MissingPatterns::defaults() {
  return MissingPatterns{{
      "i am unsure",
      "i'm unsure",
      "unsure about the answer",
      "i am not sure",
      "i'm not sure",
      "not sure",
      "i don't know",
      "i do not know",
      "cannot answer",
      "can't answer",
      "unable to answer",
      "no answer",
  }};
}

void MissingPatterns::validate() const {
  if (patterns.empty()) {
    throw std::runtime_error("missing-pattern list is empty");
  }
  for (const auto& p : patterns) {
    if (text::fold(p) == "i am unsure") return;
  }
  throw std::runtime_error("missing-pattern list must include \"i am unsure\"");
}

bool detect_missing(const std::string& t, const MissingPatterns& patterns) {
  std::string folded = text::fold(t);
  for (const auto& p : patterns.patterns) {
    if (folded.find(text::fold(p)) != std::string::npos) return true;
  }
  return false;
}

bool detect_missing(const std::string& t) {
  static const MissingPatterns kDefaults = MissingPatterns::defaults();
  return detect_missing(t, kDefaults);
}

std::string build_grading_prompt(const GradingRequest& request) {
  if (request.ground_truths.empty()) {
    throw std::invalid_argument("grading request for '" + request.question_id +
                                "' has no ground truths");
  }
  std::string gts;
  for (size_t i = 0; i < request.ground_truths.size(); ++i) {
    if (i > 0) gts += ", ";
    gts += json(request.ground_truths[i]).dump();
  }
  std::string out(prompts::kGradingPrompt);
  out += "\n\nQuestion: " + request.question;
  out += "\nGround truth: [" + gts + "]";
  out += "\nPrediction: " + request.prediction;
  out += "\nCorrectness:";
  return out;
}

Label parse_verdict(const std::string& raw) {
  std::string folded = text::fold(raw);
  auto alpha_after = [&](size_t pos, size_t len) {
    return pos + len < folded.size() &&
           std::isalpha(static_cast<unsigned char>(folded[pos + len]));
  };
  // First whole-word occurrence decides. The word boundary matters twice
  // over: "Correctness:" must not read as a verdict, and "incorrect" embeds
  // "correct", so the longer token is tested first at each position.
  for (size_t i = 0; i < folded.size(); ++i) {
    if (folded.compare(i, 9, "incorrect") == 0 && !alpha_after(i, 9)) {
      return Label::Incorrect;
    }
    if (folded.compare(i, 7, "correct") == 0 && !alpha_after(i, 7)) {
      return Label::Correct;
    }
  }
  throw std::runtime_error(
      "judge returned neither \"correct\" nor \"incorrect\"; raw output: " + raw);
}

Judgment RuleBasedGrader::grade(const GradingRequest& request) {
  return grade_rule_based(request);
}

Judgment LlmGrader::grade(const GradingRequest& request) {
  return judging::grade(request, judge_);
}

std::string LlmGrader::id() const { return "judge:" + judge_.name(); }

Judgment grade(const GradingRequest& request, LlmBackend& judge) {
  GenerationParams params;
  params.user_prompt = build_grading_prompt(request);
  params.temperature = 0.0;
  params.question_id = request.question_id;
  AnswerRecord verdict = judge.generate(params);
  return Judgment{request.question_id, parse_verdict(verdict.text),
                  "judge:" + judge.name()};
}

Judgment grade_rule_based(const GradingRequest& request) {
  if (request.ground_truths.empty()) {
    throw std::invalid_argument("grading request for '" + request.question_id +
                                "' has no ground truths");
  }
  std::string prediction = text::normalize_answer(request.prediction);
  Label label = Label::Incorrect;
  for (const auto& gt : request.ground_truths) {
    std::string needle = text::normalize_answer(gt);
    if (needle.empty()) continue;  // an empty needle would match everything
    if (prediction.find(needle) != std::string::npos) {
      label = Label::Correct;
      break;
    }
  }
  return Judgment{request.question_id, label, "rule"};
}

}  // namespace confkit::judging
