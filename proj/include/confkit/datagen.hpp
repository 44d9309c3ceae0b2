#pragma once

// SFT dataset construction from knowledge-graph facts: templated question
// generation, traffic-based popularity strata, self-answer + judge labeling
// under every labeling strategy, and reproducible dataset emission.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confkit/backend.hpp"
#include "confkit/core.hpp"
#include "confkit/judging.hpp"

namespace confkit::datagen {

struct FactTriple {
  std::string entity;
  std::string attribute;
  std::string value;
  double traffic = 0.0;  // popularity proxy; entities are ranked by it
};

/// JSONL input, one {"entity","attribute","value","traffic"} object per
/// line. Errors name the offending line.
std::vector<FactTriple> load_triples(const std::filesystem::path& path);

/// Entity partition by cumulative traffic thirds, in popularity order.
struct Strata {
  std::vector<std::string> head;
  std::vector<std::string> torso;
  std::vector<std::string> tail;
  std::map<std::string, Popularity> by_entity;

  Popularity of(const std::string& entity) const;
};

/// Ranks entities by traffic (descending, ties by first appearance) and
/// splits: head = minimal prefix with cumulative traffic >= 1/3 of total,
/// tail = maximal suffix with cumulative traffic <= 1/3 (never overlapping
/// head), torso = remainder. Entity traffic is the maximum over its triples.
Strata stratify(const std::vector<FactTriple>& triples);

struct GeneratedQuestions {
  std::vector<Question> questions;
  std::vector<std::string> warnings;  // skipped triples, one note each
};

struct TemplateOptions {
  // One template per attribute by default (picked by attribute hash); true
  // expands every template for every triple.
  bool expand_all = false;
};

/// Instantiates question templates over triples. Every template must contain
/// the {entity} and {attribute} slots; triples with an empty field are
/// skipped with a warning. ground_truths = [value]; popularity is stamped
/// from `strata` when given.
GeneratedQuestions generate_questions(const std::vector<FactTriple>& triples,
                                      const std::vector<std::string>& templates,
                                      const TemplateOptions& options = {},
                                      const Strata* strata = nullptr);

struct LabelStrategy {
  enum class Kind {
    ConfQa,      // correct -> ground truth, else the verbatim unsure string
    NoDampener,  // confqa labels, system prompt without the dampener sentence
    GenAsLabel,  // correct -> the model's own generation
    GtAsLabel,   // ground truth unconditionally, no model query
    RTuning,     // sureness question appended, label padded I am sure/unsure
    Idk,         // ground truth only when >= idk_k of idk_n samples agree correctly
    FactFeeding  // confqa output plus mix-in examples from mixin_path
  };

  Kind kind = Kind::ConfQa;
  int idk_k = 4;
  int idk_n = 5;
  std::optional<std::filesystem::path> mixin_path;

  static LabelStrategy parse(const std::string& name);
  std::string name() const;
  void validate() const;  // idk requires 1 <= idk_k <= idk_n
};

struct SftExample {
  std::string system_prompt;
  std::string user_prompt;
  std::string label;
  std::string strategy;
  Popularity stratum = Popularity::Unknown;
};

json to_json(const SftExample& e);
SftExample sft_from_json(const json& j);

std::vector<SftExample> load_sft(const std::filesystem::path& path);

struct LabelBuildResult {
  std::vector<SftExample> examples;
  // Aligned with examples: the judgment that decided each label, when the
  // strategy consulted one. Replaying this log checks label soundness.
  std::vector<std::optional<Judgment>> judged;
  std::vector<std::string> failures;  // skipped pairs, one note each
};

struct BuildOptions {
  size_t jobs = 4;  // concurrent pairs
};

/// Labels every question under the strategy. Model or judge failures skip
/// the pair and are recorded, never silently dropped.
LabelBuildResult build_labels(const std::vector<Question>& pairs, LlmBackend& target,
                              judging::Grader& judge, const LabelStrategy& strategy,
                              const BuildOptions& options = {});

struct TrainConfig {
  int epochs = 1;
  double learning_rate = 1e-6;
  int batch_size = 1;
  int head_count = 1000;
  int torso_count = 1000;
  int tail_count = 1000;

  void validate() const;
};

/// Writes sft.jsonl and train_config.txt under out_dir. Exactly the
/// configured number of examples is sampled (seeded, reproducible) from each
/// of head/torso/tail; examples in other strata (mix-ins) pass through
/// unsampled. Errors name the stratum that is short.
void emit_dataset(const std::vector<SftExample>& examples, const TrainConfig& config,
                  const std::filesystem::path& out_dir, uint64_t seed);

}  // namespace confkit::datagen
