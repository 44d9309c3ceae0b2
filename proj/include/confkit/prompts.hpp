#pragma once

// Prompt text used across answering, grading, and dataset construction.
// These strings are part of the external contract: grading behaviour and
// produced training labels depend on them byte for byte, so they live here
// as constants rather than in config.

#include <string>
#include <string_view>

namespace confkit::prompts {

// Refusal string models are instructed to emit when not confident.
inline constexpr std::string_view kUnsureAnswer = "I am unsure about the answer";

// The sentence that suppresses low-confidence answers. Appended to the
// answering system prompt; its presence defines the "confqa" style.
inline constexpr std::string_view kDampenerSentence =
    "Answer only if you are confident; otherwise, respond with 'I am unsure "
    "about the answer'.";

// Answering system prompt without the dampener sentence.
inline constexpr std::string_view kAnswerSystemNoDampener =
    "As Assistant AI, you help answer factual questions. Please keep your "
    "responses short and concise and directly provide the answer to the user "
    "question without reasoning.";

// Full answering system prompt: no-dampener text plus the dampener sentence.
inline constexpr std::string_view kAnswerSystem =
    "As Assistant AI, you help answer factual questions. Please keep your "
    "responses short and concise and directly provide the answer to the user "
    "question without reasoning. Answer only if you are confident; otherwise, "
    "respond with 'I am unsure about the answer'.";

// Few-shot grading prompt. A concrete request is appended as
//   Question: ...\nGround truth: [...]\nPrediction: ...\nCorrectness:
inline constexpr std::string_view kGradingPrompt =
    "You need to check whether the prediction of a question-answering system "
    "to a question is correct. You should make the judgment based on a list "
    "of ground truth answers provided to you. Your response should be "
    "\"correct\" if the prediction is correct or \"incorrect\" if the "
    "prediction is wrong.\n"
    "\n"
    "Example 1:\n"
    "Question: Who authored The Taming of the Shrew (published in 2002)?\n"
    "Ground truth: [\"William Shakespeare\", \"Roma Gill\"]\n"
    "Prediction: W Shakespeare\n"
    "Correctness: correct\n"
    "\n"
    "Example 2:\n"
    "Question: Who authored The Taming of the Shrew (published in 2002)?\n"
    "Ground truth: [\"William Shakespeare\", \"Roma Gill\"]\n"
    "Prediction: Roma Gill and W Shakespeare\n"
    "Correctness: correct\n"
    "\n"
    "Example 3:\n"
    "Question: Who authored The Taming of the Shrew (published in 2002)?\n"
    "Ground truth: [\"William Shakespeare\", \"Roma Gill\"]\n"
    "Prediction: Roma Shakespeare\n"
    "Correctness: incorrect\n"
    "\n"
    "Example 4:\n"
    "Question: What country is Maharashtra Metro Rail Corporation Limited "
    "located in?\n"
    "Ground truth: [\"India\"]\n"
    "Prediction: Maharashtra\n"
    "Correctness: incorrect\n"
    "\n"
    "Example 5:\n"
    "Question: What's the job of Song Kang-ho in Parasite (2019)?\n"
    "Ground truth: [\"actor\"]\n"
    "Prediction: He plays the role of Kim Ki-taek, the patriarch of the Kim "
    "family.\n"
    "Correctness: correct";

// Self-reported confidence prompt. The {question} slot is replaced with the
// question text before sending.
inline constexpr std::string_view kSelfConfidencePrompt =
    "Please answer the following question truthfully to your best knowledge. "
    "Provide a confidence score between 0 to 1 representing your confidence "
    "in the answer.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Your response must be in the following JSON format.\n"
    "{\"answer\": \"Your answer here\", \"confidence_score\": float number}\n"
    "Remember, your answer MUST be a valid json string with two keys: "
    "\"answer\", \"confidence_score\".";

// Appended to the user prompt under the r_tuning label strategy.
inline constexpr std::string_view kRTuningQuestion =
    "Are you sure you accurately answered the question based on your internal "
    "knowledge?";

// Label padding under r_tuning, chosen by the judged correctness of the
// model's own answer.
inline constexpr std::string_view kSurePad = "I am sure";
inline constexpr std::string_view kUnsurePad = "I am unsure";

/// Replaces every occurrence of `{slot}` in `tmpl` with `value`.
inline std::string render(std::string_view tmpl, std::string_view slot,
                          std::string_view value) {
  std::string marker = "{" + std::string(slot) + "}";
  std::string out(tmpl);
  size_t pos = 0;
  while ((pos = out.find(marker, pos)) != std::string::npos) {
    out.replace(pos, marker.size(), value);
    pos += value.size();
  }
  return out;
}

}  // namespace confkit::prompts
