#include "confkit/consistency.hpp"

#include <stdexcept>

#include "confkit/text.hpp"

namespace confkit::consistency {

json to_json(const ConsistencyResult& r) {
  json clusters = json::array();
  for (const auto& c : r.clusters) {
    clusters.push_back(json{{"representative", c.representative},
                            {"members", c.members},
                            {"is_missing", c.is_missing}});
  }
  return json{{"question_id", r.question_id},
              {"canonical_answer", r.canonical_answer},
              {"score", r.score},
              {"clusters", clusters}};
}

bool NormalizedMatchOracle::equivalent(const std::string& a, const std::string& b) {
  return text::normalize_answer(a) == text::normalize_answer(b);
}

bool JudgeEquivalenceOracle::equivalent(const std::string& a, const std::string& b) {
  judging::GradingRequest forward{question_id_, question_, {b}, a};
  if (grader_.grade(forward).label == Label::Correct) return true;
  judging::GradingRequest backward{question_id_, question_, {a}, b};
  return grader_.grade(backward).label == Label::Correct;
}

std::vector<AnswerRecord> sample_answers(LlmBackend& provider, const Question& question,
                                         const SampleOptions& options) {
  if (options.n < 1) {
    throw std::invalid_argument("sample count must be >= 1");
  }
  if (options.temperature < 0.0) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (options.max_attempts < 1) {
    throw std::invalid_argument("max_attempts must be >= 1");
  }
  std::vector<AnswerRecord> records;
  records.reserve(static_cast<size_t>(options.n));
  for (int i = 0; i < options.n; ++i) {
    GenerationParams params;
    params.system_prompt = options.system_prompt;
    params.user_prompt = question.text;
    params.temperature = options.temperature;
    params.question_id = question.id;
    std::string last_error;
    bool got = false;
    for (int attempt = 0; attempt < options.max_attempts && !got; ++attempt) {
      try {
        AnswerRecord rec = provider.generate(params);
        rec.question_id = question.id;
        rec.sample_index = i;
        records.push_back(std::move(rec));
        got = true;
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    if (!got) {
      throw std::runtime_error(
          "sampling question '" + question.id + "' failed at sample " +
          std::to_string(i) + " after " + std::to_string(options.max_attempts) +
          " attempts (" + std::to_string(records.size()) +
          " samples collected): " + last_error);
    }
  }
  return records;
}

namespace {

struct ClusterBuilder {
  std::vector<AnswerCluster> clusters;
  long missing_at = -1;

  void add(const std::string& answer, bool is_missing, EquivalenceOracle& oracle) {
    if (is_missing) {
      if (missing_at < 0) {
        missing_at = static_cast<long>(clusters.size());
        clusters.push_back(AnswerCluster{answer, {}, true});
      }
      clusters[static_cast<size_t>(missing_at)].members.push_back(answer);
      return;
    }
    for (auto& c : clusters) {
      if (c.is_missing) continue;
      if (oracle.equivalent(answer, c.representative)) {
        c.members.push_back(answer);
        return;
      }
    }
    clusters.push_back(AnswerCluster{answer, {answer}, false});
  }
};

}  // namespace

std::vector<AnswerCluster> cluster_answers(const std::vector<std::string>& answers,
                                           EquivalenceOracle& oracle) {
  if (answers.empty()) {
    throw std::runtime_error("no answers to cluster");
  }
  ClusterBuilder builder;
  for (const auto& a : answers) builder.add(a, false, oracle);
  return builder.clusters;
}

std::vector<AnswerCluster> cluster_records(const std::vector<AnswerRecord>& records,
                                           EquivalenceOracle& oracle) {
  if (records.empty()) {
    throw std::runtime_error("no records to cluster");
  }
  ClusterBuilder builder;
  for (const auto& r : records) builder.add(r.text, r.is_missing, oracle);
  return builder.clusters;
}

ConsistencyResult consistency_score(const std::vector<AnswerCluster>& clusters,
                                    bool include_missing) {
  if (clusters.empty()) {
    throw std::runtime_error("no clusters to score");
  }
  size_t total = 0;
  size_t missing_total = 0;
  for (const auto& c : clusters) {
    total += c.members.size();
    if (c.is_missing) missing_total += c.members.size();
  }
  const AnswerCluster* best = nullptr;
  for (const auto& c : clusters) {
    if (!include_missing && c.is_missing) continue;
    if (!best || c.members.size() > best->members.size()) best = &c;
  }
  size_t denom = include_missing ? total : total - missing_total;

  ConsistencyResult result;
  result.clusters = clusters;
  if (!best) {
    // Every sample was a refusal and refusals are excluded.
    result.canonical_answer = clusters.front().representative;
    result.score = 0.0;
    return result;
  }
  result.canonical_answer = best->representative;
  result.score = static_cast<double>(best->members.size()) / static_cast<double>(denom);
  return result;
}

ConsistencyResult measure_consistency(LlmBackend& provider, const Question& question,
                                      EquivalenceOracle& oracle,
                                      const MeasureOptions& options) {
  auto records = sample_answers(provider, question, options.sampling);
  auto clusters = cluster_records(records, oracle);
  ConsistencyResult result = consistency_score(clusters, options.include_missing);
  result.question_id = question.id;
  return result;
}

}  // namespace confkit::consistency
