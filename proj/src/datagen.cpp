#include "confkit/datagen.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "confkit/concurrency.hpp"
#include "confkit/consistency.hpp"
#include "confkit/jsonl.hpp"
#include "confkit/prompts.hpp"
#include "confkit/rng.hpp"

namespace confkit::datagen {

std::vector<FactTriple> load_triples(const std::filesystem::path& path) {
  std::vector<FactTriple> out;
  jsonl::for_each(path, [&](const json& rec, size_t lineno) {
    try {
      FactTriple t;
      t.entity = rec.at("entity").get<std::string>();
      t.attribute = rec.at("attribute").get<std::string>();
      t.value = rec.at("value").get<std::string>();
      t.traffic = rec.value("traffic", 0.0);
      if (t.traffic < 0.0) {
        throw std::runtime_error("traffic must be non-negative");
      }
      out.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  });
  return out;
}

Popularity Strata::of(const std::string& entity) const {
  auto it = by_entity.find(entity);
  return it == by_entity.end() ? Popularity::Unknown : it->second;
}

Strata stratify(const std::vector<FactTriple>& triples) {
  // Entity traffic = max over its triples; rank order breaks ties by first
  // appearance so the partition is reproducible.
  std::vector<std::string> order;
  std::map<std::string, double> traffic;
  for (const auto& t : triples) {
    auto [it, inserted] = traffic.emplace(t.entity, t.traffic);
    if (inserted) {
      order.push_back(t.entity);
    } else {
      it->second = std::max(it->second, t.traffic);
    }
  }
  if (order.empty()) {
    throw std::runtime_error("no triples to stratify");
  }
  double total = 0.0;
  for (const auto& e : order) total += traffic[e];
  if (total <= 0.0) {
    throw std::runtime_error("all entity traffic is zero; no popularity ranking possible");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) {
                     return traffic[a] > traffic[b];
                   });

  const double third = total / 3.0;
  const double eps = 1e-9;
  size_t n = order.size();

  size_t head_end = 0;  // exclusive
  double cum = 0.0;
  while (head_end < n && cum < third - eps) {
    cum += traffic[order[head_end]];
    ++head_end;
  }

  size_t tail_begin = n;  // inclusive
  cum = 0.0;
  while (tail_begin > head_end && cum + traffic[order[tail_begin - 1]] <= third + eps) {
    cum += traffic[order[tail_begin - 1]];
    --tail_begin;
  }

  Strata strata;
  for (size_t i = 0; i < n; ++i) {
    Popularity p = i < head_end          ? Popularity::Head
                   : i >= tail_begin     ? Popularity::Tail
                                         : Popularity::Torso;
    strata.by_entity.emplace(order[i], p);
    (p == Popularity::Head    ? strata.head
     : p == Popularity::Torso ? strata.torso
                              : strata.tail)
        .push_back(order[i]);
  }
  return strata;
}

GeneratedQuestions generate_questions(const std::vector<FactTriple>& triples,
                                      const std::vector<std::string>& templates,
                                      const TemplateOptions& options,
                                      const Strata* strata) {
  if (templates.empty()) {
    throw std::invalid_argument("no question templates given");
  }
  for (size_t t = 0; t < templates.size(); ++t) {
    for (const char* slot : {"{entity}", "{attribute}"}) {
      if (templates[t].find(slot) == std::string::npos) {
        throw std::invalid_argument("template #" + std::to_string(t) + " is missing the " +
                                    slot + " slot: '" + templates[t] + "'");
      }
    }
  }

  GeneratedQuestions out;
  for (size_t i = 0; i < triples.size(); ++i) {
    const auto& triple = triples[i];
    auto skip = [&](const char* what) {
      out.warnings.push_back("triple " + std::to_string(i) + " (" + triple.entity +
                             ", " + triple.attribute + "): empty " + what + ", skipped");
    };
    if (triple.value.empty()) {
      skip("value");
      continue;
    }
    if (triple.entity.empty()) {
      skip("entity");
      continue;
    }
    if (triple.attribute.empty()) {
      skip("attribute");
      continue;
    }
    std::vector<size_t> selected;
    if (options.expand_all) {
      for (size_t t = 0; t < templates.size(); ++t) selected.push_back(t);
    } else {
      selected.push_back(rng::fnv1a64(triple.attribute) % templates.size());
    }
    for (size_t t : selected) {
      Question q;
      q.id = "kg:" + std::to_string(i);
      if (options.expand_all) q.id += ":" + std::to_string(t);
      q.text = prompts::render(
          prompts::render(templates[t], "entity", triple.entity), "attribute",
          triple.attribute);
      q.domain = "kg";
      q.dynamism = Dynamism::Static;
      q.popularity = strata ? strata->of(triple.entity) : Popularity::Unknown;
      q.ground_truths = {triple.value};
      out.questions.push_back(std::move(q));
    }
  }
  return out;
}

LabelStrategy LabelStrategy::parse(const std::string& name) {
  LabelStrategy s;
  if (name == "confqa") s.kind = Kind::ConfQa;
  else if (name == "no_dampener") s.kind = Kind::NoDampener;
  else if (name == "gen_as_label") s.kind = Kind::GenAsLabel;
  else if (name == "gt_as_label") s.kind = Kind::GtAsLabel;
  else if (name == "r_tuning") s.kind = Kind::RTuning;
  else if (name == "idk") s.kind = Kind::Idk;
  else if (name == "fact_feeding") s.kind = Kind::FactFeeding;
  else throw std::invalid_argument("unknown label strategy '" + name + "'");
  return s;
}

std::string LabelStrategy::name() const {
  switch (kind) {
    case Kind::ConfQa: return "confqa";
    case Kind::NoDampener: return "no_dampener";
    case Kind::GenAsLabel: return "gen_as_label";
    case Kind::GtAsLabel: return "gt_as_label";
    case Kind::RTuning: return "r_tuning";
    case Kind::Idk: return "idk";
    case Kind::FactFeeding: return "fact_feeding";
  }
  return "confqa";
}

void LabelStrategy::validate() const {
  if (kind == Kind::Idk && (idk_k < 1 || idk_k > idk_n)) {
    throw std::invalid_argument("idk requires 1 <= idk_k <= idk_n, got " +
                                std::to_string(idk_k) + "/" + std::to_string(idk_n));
  }
  if (kind == Kind::FactFeeding && !mixin_path) {
    throw std::invalid_argument("fact_feeding requires a mixin path");
  }
}

json to_json(const SftExample& e) {
  return json{{"system", e.system_prompt},
              {"user", e.user_prompt},
              {"label", e.label},
              {"strategy", e.strategy},
              {"stratum", to_string(e.stratum)}};
}

SftExample sft_from_json(const json& j) {
  SftExample e;
  e.system_prompt = j.at("system").get<std::string>();
  e.user_prompt = j.at("user").get<std::string>();
  e.label = j.at("label").get<std::string>();
  e.strategy = j.value("strategy", std::string("fact_feeding"));
  e.stratum = popularity_from_string(j.value("stratum", std::string("unknown")));
  return e;
}

std::vector<SftExample> load_sft(const std::filesystem::path& path) {
  std::vector<SftExample> out;
  jsonl::for_each(path, [&](const json& rec, size_t lineno) {
    try {
      out.push_back(sft_from_json(rec));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  });
  return out;
}

namespace {

struct PairOutcome {
  std::optional<SftExample> example;
  std::optional<Judgment> judgment;
  std::string failure;
};

PairOutcome label_pair(const Question& q, LlmBackend& target, judging::Grader& judge,
                       const LabelStrategy& strategy) {
  using Kind = LabelStrategy::Kind;
  PairOutcome out;
  if (q.ground_truths.empty()) {
    out.failure = "question '" + q.id + "' has no ground truths";
    return out;
  }
  const std::string& gt = q.ground_truths.front();

  SftExample example;
  example.user_prompt = q.text;
  example.strategy = strategy.kind == Kind::FactFeeding ? "confqa" : strategy.name();
  example.stratum = q.popularity;
  example.system_prompt = strategy.kind == Kind::NoDampener ||
                                  strategy.kind == Kind::RTuning
                              ? std::string(prompts::kAnswerSystemNoDampener)
                              : std::string(prompts::kAnswerSystem);

  if (strategy.kind == Kind::GtAsLabel) {
    example.label = gt;
    out.example = std::move(example);
    return out;
  }

  if (strategy.kind == Kind::Idk) {
    std::vector<std::string> correct_texts;
    for (int s = 0; s < strategy.idk_n; ++s) {
      GenerationParams params;
      params.system_prompt = example.system_prompt;
      params.user_prompt = q.text;
      params.temperature = 1.0;
      params.question_id = q.id;
      AnswerRecord rec;
      try {
        rec = target.generate(params);
      } catch (const std::exception& e) {
        out.failure = "question '" + q.id + "' sample " + std::to_string(s) +
                      " failed: " + e.what();
        return out;
      }
      if (rec.is_missing) continue;
      Judgment verdict;
      try {
        verdict = judge.grade(
            judging::GradingRequest{q.id, q.text, q.ground_truths, rec.text});
      } catch (const std::exception& e) {
        out.failure = "question '" + q.id + "' judge failed: " + e.what();
        return out;
      }
      if (verdict.label == Label::Correct) {
        correct_texts.push_back(rec.text);
      }
    }
    // "Consistently correct" = the largest cluster of judged-correct answers
    // reaches the threshold, not merely the correct count.
    size_t largest = 0;
    if (!correct_texts.empty()) {
      consistency::NormalizedMatchOracle oracle;
      for (const auto& c : consistency::cluster_answers(correct_texts, oracle)) {
        largest = std::max(largest, c.members.size());
      }
    }
    bool keep = largest >= static_cast<size_t>(strategy.idk_k);
    example.label = keep ? gt : std::string(prompts::kUnsureAnswer);
    out.judgment = Judgment{q.id, keep ? Label::Correct : Label::Incorrect,
                            "idk:" + std::to_string(strategy.idk_k) + "/" +
                                std::to_string(strategy.idk_n)};
    out.example = std::move(example);
    return out;
  }

  // The remaining strategies query the model once and judge the answer.
  GenerationParams params;
  params.system_prompt = example.system_prompt;
  params.user_prompt = q.text;
  params.temperature = 0.0;
  params.question_id = q.id;
  AnswerRecord rec;
  try {
    rec = target.generate(params);
  } catch (const std::exception& e) {
    out.failure = "question '" + q.id + "' generation failed: " + e.what();
    return out;
  }

  Judgment verdict{q.id, Label::Missing, "missing-detector"};
  if (!rec.is_missing) {
    try {
      verdict =
          judge.grade(judging::GradingRequest{q.id, q.text, q.ground_truths, rec.text});
    } catch (const std::exception& e) {
      out.failure = "question '" + q.id + "' judge failed: " + e.what();
      return out;
    }
  }
  bool correct = verdict.label == Label::Correct;

  switch (strategy.kind) {
    case Kind::ConfQa:
    case Kind::NoDampener:
    case Kind::FactFeeding:
      example.label = correct ? gt : std::string(prompts::kUnsureAnswer);
      break;
    case Kind::GenAsLabel:
      example.label = correct ? rec.text : std::string(prompts::kUnsureAnswer);
      break;
    case Kind::RTuning:
      example.user_prompt = q.text + "\n" + std::string(prompts::kRTuningQuestion);
      example.label = gt + "\n" +
                      std::string(correct ? prompts::kSurePad : prompts::kUnsurePad);
      break;
    default:
      break;
  }
  out.judgment = verdict;
  out.example = std::move(example);
  return out;
}

}  // namespace

LabelBuildResult build_labels(const std::vector<Question>& pairs, LlmBackend& target,
                              judging::Grader& judge, const LabelStrategy& strategy,
                              const BuildOptions& options) {
  if (pairs.empty()) {
    throw std::invalid_argument("no question-answer pairs to label");
  }
  strategy.validate();

  std::vector<PairOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), options.jobs, [&](size_t i) {
    outcomes[i] = label_pair(pairs[i], target, judge, strategy);
  });

  LabelBuildResult result;
  for (auto& o : outcomes) {
    if (!o.failure.empty()) {
      result.failures.push_back(std::move(o.failure));
      continue;
    }
    result.examples.push_back(std::move(*o.example));
    result.judged.push_back(std::move(o.judgment));
  }

  if (strategy.kind == LabelStrategy::Kind::FactFeeding) {
    for (auto& mixin : load_sft(*strategy.mixin_path)) {
      result.examples.push_back(std::move(mixin));
      result.judged.push_back(std::nullopt);
    }
  }
  return result;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || learning_rate <= 0.0) {
    throw std::invalid_argument("train config requires positive epochs, batch size, "
                                "and learning rate");
  }
  if (head_count < 0 || torso_count < 0 || tail_count < 0) {
    throw std::invalid_argument("per-stratum sample counts must be non-negative");
  }
}

namespace {

/// %g with the exponent's leading zeros stripped, so 1e-06 prints as 1e-6.
std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  std::string s(buf);
  size_t e = s.find('e');
  if (e == std::string::npos) return s;
  size_t digits = e + 1;
  if (digits < s.size() && (s[digits] == '+' || s[digits] == '-')) ++digits;
  size_t first_digit = digits;
  while (first_digit + 1 < s.size() && s[first_digit] == '0') ++first_digit;
  return s.substr(0, digits) + s.substr(first_digit);
}

std::vector<size_t> sample_without_replacement(const std::vector<size_t>& pool,
                                               size_t k, rng::Stream& stream) {
  std::vector<size_t> indices = pool;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(stream.below(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  std::sort(indices.begin(), indices.end());
  return indices;
}

}  // namespace

void emit_dataset(const std::vector<SftExample>& examples, const TrainConfig& config,
                  const std::filesystem::path& out_dir, uint64_t seed) {
  config.validate();

  std::map<Popularity, std::vector<size_t>> buckets;
  std::vector<size_t> passthrough;
  for (size_t i = 0; i < examples.size(); ++i) {
    switch (examples[i].stratum) {
      case Popularity::Head:
      case Popularity::Torso:
      case Popularity::Tail:
        buckets[examples[i].stratum].push_back(i);
        break;
      default:
        passthrough.push_back(i);
    }
  }

  std::vector<size_t> selected = passthrough;
  const std::pair<Popularity, int> wanted[] = {{Popularity::Head, config.head_count},
                                               {Popularity::Torso, config.torso_count},
                                               {Popularity::Tail, config.tail_count}};
  for (const auto& [stratum, count] : wanted) {
    const auto& pool = buckets[stratum];
    if (pool.size() < static_cast<size_t>(count)) {
      throw std::runtime_error("insufficient examples in stratum '" +
                               to_string(stratum) + "': need " + std::to_string(count) +
                               ", have " + std::to_string(pool.size()));
    }
    rng::Stream stream(seed, "emit", to_string(stratum), 0);
    auto picks = sample_without_replacement(pool, static_cast<size_t>(count), stream);
    selected.insert(selected.end(), picks.begin(), picks.end());
  }
  std::sort(selected.begin(), selected.end());

  std::vector<json> records;
  records.reserve(selected.size());
  for (size_t i : selected) records.push_back(to_json(examples[i]));
  jsonl::write(out_dir / "sft.jsonl", records);

  std::string cfg;
  cfg += "epochs=" + std::to_string(config.epochs) + "\n";
  cfg += "learning_rate=" + format_real(config.learning_rate) + "\n";
  cfg += "batch_size=" + std::to_string(config.batch_size) + "\n";
  cfg += "samples_head=" + std::to_string(config.head_count) + "\n";
  cfg += "samples_torso=" + std::to_string(config.torso_count) + "\n";
  cfg += "samples_tail=" + std::to_string(config.tail_count) + "\n";
  cfg += "seed=" + std::to_string(seed) + "\n";
  jsonl::write_text_file(out_dir / "train_config.txt", cfg);
}

}  // namespace confkit::datagen
