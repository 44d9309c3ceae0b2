#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace confkit {

using json = nlohmann::json;

enum class Dynamism { Static, Dynamic };
enum class Popularity { Head, Torso, Tail, Web, Unknown };
enum class Source { Llm, Rag };
enum class Label { Correct, Incorrect, Missing };

std::string to_string(Dynamism v);
std::string to_string(Popularity v);
std::string to_string(Source v);
std::string to_string(Label v);
Dynamism dynamism_from_string(const std::string& s);
Popularity popularity_from_string(const std::string& s);
Source source_from_string(const std::string& s);
Label label_from_string(const std::string& s);

/// A benchmark item. Ground truths are the acceptable answer strings; static
/// questions must carry at least one (dynamic answers drift, so a dynamic
/// question may ship without them).
struct Question {
  std::string id;
  std::string text;
  std::string domain;
  Dynamism dynamism = Dynamism::Static;
  Popularity popularity = Popularity::Unknown;
  std::vector<std::string> ground_truths;

  bool operator==(const Question&) const = default;
};

/// One model or pipeline response. `is_missing` marks refusals; such records
/// are excluded from calibration curves.
struct AnswerRecord {
  std::string question_id;
  std::string text;
  bool is_missing = false;
  std::optional<double> self_confidence;
  double latency_ms = 0.0;
  Source source = Source::Llm;
  std::optional<int> sample_index;

  bool operator==(const AnswerRecord&) const = default;
};

struct Judgment {
  std::string question_id;
  Label label = Label::Missing;
  std::string judge_id;

  bool operator==(const Judgment&) const = default;
};

/// Correct/incorrect/missing percentages on a 0-100 scale; must sum to 100.
struct Breakdown {
  double correct_pct = 0.0;
  double incorrect_pct = 0.0;
  double missing_pct = 0.0;

  static Breakdown from_counts(size_t correct, size_t incorrect, size_t missing);

  /// Throws unless all fields lie in [0,100] and sum to 100 within 1e-9.
  void validate() const;

  bool operator==(const Breakdown&) const = default;
};

/// Final result of routing one question between the LLM and RAG branches.
/// source = llm implies the LLM answered non-missing and the RAG branch was
/// early-stopped; a branch that never produced a usable record leaves its
/// latency unset.
struct RouterOutcome {
  std::string question_id;
  std::string final_answer;
  Source source = Source::Rag;
  bool early_stopped_rag = false;
  double total_latency_ms = 0.0;
  std::optional<double> llm_latency_ms;
  std::optional<double> rag_latency_ms;

  bool operator==(const RouterOutcome&) const = default;
};

json to_json(const Question& q);
json to_json(const AnswerRecord& r);
json to_json(const Judgment& j);
json to_json(const Breakdown& b);
json to_json(const RouterOutcome& o);
Question question_from_json(const json& j);
AnswerRecord answer_from_json(const json& j);
Judgment judgment_from_json(const json& j);
Breakdown breakdown_from_json(const json& j);
RouterOutcome router_outcome_from_json(const json& j);

/// Load a question dataset (one JSON object per line). Order is preserved.
/// Errors name the offending line: malformed JSON, duplicate ids, or a
/// static question without ground truths.
std::vector<Question> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<Question>& qs);

std::vector<AnswerRecord> load_answers(const std::filesystem::path& path);
void save_answers(const std::filesystem::path& path, const std::vector<AnswerRecord>& rs);

std::vector<Judgment> load_judgments(const std::filesystem::path& path);
void save_judgments(const std::filesystem::path& path, const std::vector<Judgment>& js);

/// Percentage breakdown over a non-empty judgment list.
Breakdown aggregate(const std::vector<Judgment>& judgments);

}  // namespace confkit
