#include "confkit/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "confkit/concurrency.hpp"
#include "confkit/consistency.hpp"
#include "confkit/core.hpp"
#include "confkit/datagen.hpp"
#include "confkit/judging.hpp"
#include "confkit/jsonl.hpp"
#include "confkit/metrics.hpp"
#include "confkit/prompts.hpp"
#include "confkit/providers.hpp"
#include "confkit/router.hpp"
#include "confkit/service.hpp"

namespace confkit::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct GlobalOptions {
  uint64_t seed = 42;
  std::string out_dir = "out";
  bool live = false;
  size_t jobs = 8;
};

struct LiveOptions {
  std::string model = "llama-3.1-70b-instruct";
  std::string base_url = "https://api.openai.com";
};

void add_global(CLI::App* cmd, GlobalOptions& g) {
  cmd->add_option("--seed", g.seed,
                  "Base seed; fixes all offline randomness and overrides the "
                  "profile's seed")
      ->capture_default_str();
  cmd->add_option("--out", g.out_dir, "Output directory (created if needed)")
      ->capture_default_str();
  cmd->add_flag("--live", g.live,
                "Allow live network calls (offline is the default)");
  cmd->add_option("--jobs", g.jobs, "Max questions in flight")->capture_default_str();
}

void add_live(CLI::App* cmd, LiveOptions& l) {
  cmd->add_option("--model", l.model, "Chat model for --live runs")
      ->capture_default_str();
  cmd->add_option("--base-url", l.base_url, "Chat API base URL for --live runs")
      ->capture_default_str();
}

/// Every command leaves a manifest next to its artifacts. The output
/// directory itself is deliberately not recorded, so runs into different
/// directories stay byte-identical.
void write_manifest(const GlobalOptions& g, const std::string& command,
                    const json& inputs, const json& params) {
  json manifest{{"command", command},
                {"inputs", inputs},
                {"params", params},
                {"seed", g.seed},
                {"version", kVersion}};
  jsonl::write_text_file(fs::path(g.out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

struct Backends {
  std::shared_ptr<const providers::SimProfile> profile;
  std::unique_ptr<LlmBackend> llm;
  std::unique_ptr<Retriever> retriever;
  std::unique_ptr<RagPipeline> rag;
  std::unique_ptr<judging::Grader> grader;
  std::unique_ptr<LlmBackend> judge_llm;
};

std::shared_ptr<const providers::SimProfile> load_profile(const std::string& path,
                                                          uint64_t seed) {
  auto profile =
      std::make_shared<providers::SimProfile>(providers::SimProfile::load(path));
  profile->seed = seed;
  return profile;
}

/// Offline wires the seeded simulator and the rule-based grader; --live wires
/// the chat client, web-search RAG, and the LLM judge.
Backends make_backends(const GlobalOptions& g, const LiveOptions& live,
                       const std::string& profile_path, bool need_rag) {
  Backends b;
  if (g.live) {
    providers::LiveChatLlm::Options chat;
    chat.model = live.model;
    chat.base_url = live.base_url;
    chat.offline = false;
    b.llm = std::make_unique<providers::LiveChatLlm>(chat);
    if (need_rag) {
      providers::LiveSearchRetriever::Options search;
      search.offline = false;
      b.retriever = std::make_unique<providers::LiveSearchRetriever>(search);
      b.rag = std::make_unique<providers::RetrieverReaderPipeline>(*b.retriever, *b.llm);
    }
    b.judge_llm = std::make_unique<providers::LiveChatLlm>(chat);
    b.grader = std::make_unique<judging::LlmGrader>(*b.judge_llm);
    return b;
  }
  if (profile_path.empty()) {
    throw std::runtime_error("offline runs need --profile (or pass --live)");
  }
  b.profile = load_profile(profile_path, g.seed);
  b.llm = std::make_unique<providers::SimulatedLlm>(b.profile);
  if (need_rag) b.rag = std::make_unique<providers::SimulatedRagPipeline>(b.profile);
  b.grader = std::make_unique<judging::RuleBasedGrader>();
  return b;
}

/// Judge-only wiring for commands that never sample an answering model.
Backends make_grader_only(const GlobalOptions& g, const LiveOptions& live) {
  Backends b;
  if (g.live) {
    providers::LiveChatLlm::Options chat;
    chat.model = live.model;
    chat.base_url = live.base_url;
    chat.offline = false;
    b.judge_llm = std::make_unique<providers::LiveChatLlm>(chat);
    b.grader = std::make_unique<judging::LlmGrader>(*b.judge_llm);
  } else {
    b.grader = std::make_unique<judging::RuleBasedGrader>();
  }
  return b;
}

Judgment grade_answer(const Question& question, const AnswerRecord& record,
                      judging::Grader& grader) {
  if (record.is_missing || record.text.empty() || judging::detect_missing(record.text)) {
    return Judgment{question.id, Label::Missing, "missing-detector"};
  }
  if (question.ground_truths.empty()) {
    return Judgment{question.id, Label::Missing, "ungradable"};
  }
  return grader.grade(
      judging::GradingRequest{question.id, question.text, question.ground_truths,
                              record.text});
}

std::map<std::string, Question> index_questions(const std::vector<Question>& dataset) {
  std::map<std::string, Question> by_id;
  for (const auto& q : dataset) by_id.emplace(q.id, q);
  return by_id;
}

const Question& find_question(const std::map<std::string, Question>& by_id,
                              const std::string& id) {
  auto it = by_id.find(id);
  if (it == by_id.end()) {
    throw std::runtime_error("answer references unknown question '" + id + "'");
  }
  return it->second;
}

std::string format_fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string profile;
  std::string dataset;
  int n = 1;
  double temperature = 0.0;
  bool self_confidence = false;
};

int run_simulate(const SimulateOptions& opt) {
  auto questions = load_dataset(opt.dataset);
  Backends b = make_backends(opt.g, opt.live, opt.profile, /*need_rag=*/false);

  std::vector<std::vector<AnswerRecord>> per_question(questions.size());
  parallel_for(questions.size(), opt.g.jobs, [&](size_t i) {
    const Question& q = questions[i];
    if (opt.self_confidence) {
      // Self-contained elicitation prompt; the reply carries its own
      // confidence score.
      std::vector<AnswerRecord> records;
      for (int s = 0; s < opt.n; ++s) {
        GenerationParams params;
        params.user_prompt =
            prompts::render(std::string(prompts::kSelfConfidencePrompt), "question",
                            q.text);
        params.temperature = opt.temperature;
        params.question_id = q.id;
        AnswerRecord rec = b.llm->generate(params);
        auto parsed = providers::parse_confidence_response(rec.text);
        rec.text = parsed.answer;
        if (parsed.confidence) rec.self_confidence = parsed.confidence;
        rec.is_missing = judging::detect_missing(rec.text);
        rec.sample_index = s;
        records.push_back(std::move(rec));
      }
      per_question[i] = std::move(records);
      return;
    }
    consistency::SampleOptions sampling;
    sampling.n = opt.n;
    sampling.temperature = opt.temperature;
    per_question[i] = consistency::sample_answers(*b.llm, q, sampling);
  });

  std::vector<AnswerRecord> all;
  for (auto& records : per_question) {
    for (auto& r : records) all.push_back(std::move(r));
  }

  fs::create_directories(opt.g.out_dir);
  save_answers(fs::path(opt.g.out_dir) / "answers.jsonl", all);
  json inputs{{"dataset", opt.dataset}};
  if (!opt.profile.empty()) inputs["profile"] = opt.profile;
  write_manifest(opt.g, "simulate", inputs,
                 json{{"n", opt.n},
                      {"temperature", opt.temperature},
                      {"self_confidence", opt.self_confidence},
                      {"jobs", opt.g.jobs},
                      {"live", opt.g.live}});
  std::cout << "wrote " << all.size() << " answers for " << questions.size()
            << " questions -> " << (fs::path(opt.g.out_dir) / "answers.jsonl").string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string answers;
  std::string judgments;
  std::string dataset;
  int bins = 10;
};

std::string render_calibration_table(const metrics::CalibrationCurve& curve,
                                     double gap) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%4s %8s %8s %11s %9s %7s\n", "bin", "lo", "hi",
                "mean_conf", "accuracy", "count");
  out << line;
  int i = 1;
  for (const auto& b : curve.bins) {
    std::snprintf(line, sizeof(line), "%4d %8.3f %8.3f %11.3f %9.3f %7zu\n", i++, b.lo,
                  b.hi, b.mean_confidence, b.accuracy, b.count);
    out << line;
  }
  out << "expected_calibration_gap " << format_fixed(gap, 4) << "\n";
  return out.str();
}

int run_calibrate(const CalibrateOptions& opt) {
  auto answers = load_answers(opt.answers);

  std::vector<Judgment> judgments;
  bool judged_here = false;
  if (!opt.judgments.empty()) {
    judgments = load_judgments(opt.judgments);
  } else if (!opt.dataset.empty()) {
    Backends b = make_grader_only(opt.g, opt.live);
    auto by_id = index_questions(load_dataset(opt.dataset));
    judgments.resize(answers.size());
    parallel_for(answers.size(), opt.g.jobs, [&](size_t i) {
      judgments[i] =
          grade_answer(find_question(by_id, answers[i].question_id), answers[i],
                       *b.grader);
    });
    judged_here = true;
  } else {
    throw std::runtime_error("calibrate needs --judgments, or --dataset to judge "
                             "the answers here");
  }

  // Refusals carry no confidence statement to calibrate; drop them up front
  // and report how many were dropped.
  std::vector<AnswerRecord> confident;
  std::map<std::string, bool> missing_ids;
  for (const auto& a : answers) {
    if (a.is_missing) {
      missing_ids[a.question_id] = true;
    } else {
      confident.push_back(a);
    }
  }
  std::vector<Judgment> kept_judgments;
  for (const auto& j : judgments) {
    if (!missing_ids.count(j.question_id)) kept_judgments.push_back(j);
  }
  size_t skipped = answers.size() - confident.size();
  if (skipped > 0) {
    std::cerr << "note: skipped " << skipped << " missing answers\n";
  }

  auto samples = metrics::to_calibration_samples(confident, kept_judgments);
  auto curve = metrics::calibration_curve(samples, opt.bins);
  double gap = metrics::expected_calibration_gap(curve);

  fs::create_directories(opt.g.out_dir);
  json curve_json = metrics::to_json(curve);
  std::vector<json> bin_records(curve_json["bins"].begin(), curve_json["bins"].end());
  jsonl::write(fs::path(opt.g.out_dir) / "calibration.jsonl", bin_records);
  json report{{"expected_calibration_gap", gap},
              {"n_bins", curve.n_bins},
              {"n_records", samples.size()},
              {"skipped_missing", skipped},
              {"bins", curve_json["bins"]}};
  jsonl::write_text_file(fs::path(opt.g.out_dir) / "report.json",
                         report.dump(2) + "\n");
  if (judged_here) {
    save_judgments(fs::path(opt.g.out_dir) / "judgments.jsonl", judgments);
  }
  std::string table = render_calibration_table(curve, gap);
  jsonl::write_text_file(fs::path(opt.g.out_dir) / "table.txt", table);

  json inputs{{"answers", opt.answers}};
  if (!opt.judgments.empty()) inputs["judgments"] = opt.judgments;
  if (!opt.dataset.empty()) inputs["dataset"] = opt.dataset;
  write_manifest(opt.g, "calibrate", inputs,
                 json{{"bins", opt.bins}, {"jobs", opt.g.jobs}, {"live", opt.g.live}});
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------------------
// consistency

struct ConsistencyOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string profile;
  std::string dataset;
  int n = 20;
  double temperature = 1.0;
  std::string oracle = "normalized";
  bool exclude_missing = false;
};

int run_consistency(const ConsistencyOptions& opt) {
  auto questions = load_dataset(opt.dataset);
  Backends b = make_backends(opt.g, opt.live, opt.profile, /*need_rag=*/false);

  consistency::MeasureOptions measure;
  measure.sampling.n = opt.n;
  measure.sampling.temperature = opt.temperature;
  measure.include_missing = !opt.exclude_missing;

  std::vector<consistency::ConsistencyResult> results(questions.size());
  parallel_for(questions.size(), opt.g.jobs, [&](size_t i) {
    const Question& q = questions[i];
    if (opt.oracle == "judge") {
      consistency::JudgeEquivalenceOracle oracle(*b.grader, q.id, q.text);
      results[i] = consistency::measure_consistency(*b.llm, q, oracle, measure);
    } else {
      consistency::NormalizedMatchOracle oracle;
      results[i] = consistency::measure_consistency(*b.llm, q, oracle, measure);
    }
  });

  fs::create_directories(opt.g.out_dir);
  std::vector<json> records;
  records.reserve(results.size());
  for (const auto& r : results) records.push_back(consistency::to_json(r));
  jsonl::write(fs::path(opt.g.out_dir) / "consistency.jsonl", records);

  json inputs{{"dataset", opt.dataset}};
  if (!opt.profile.empty()) inputs["profile"] = opt.profile;
  write_manifest(opt.g, "consistency", inputs,
                 json{{"n", opt.n},
                      {"temperature", opt.temperature},
                      {"oracle", opt.oracle},
                      {"include_missing", !opt.exclude_missing},
                      {"jobs", opt.g.jobs},
                      {"live", opt.g.live}});
  std::cout << "measured " << results.size() << " questions -> "
            << (fs::path(opt.g.out_dir) / "consistency.jsonl").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// datagen

struct DatagenOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string triples;
  std::string profile;
  std::string strategy = "confqa";
  std::string idk = "4/5";
  std::string mixin;
  std::string counts = "1000,1000,1000";
  std::vector<std::string> templates;
  bool expand_all = false;
  int epochs = 1;
  double learning_rate = 1e-6;
  int batch_size = 1;
};

std::array<int, 3> parse_counts(const std::string& text) {
  std::array<int, 3> counts{};
  std::stringstream ss(text);
  std::string part;
  size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) break;
    counts[i++] = std::stoi(part);
  }
  if (i != 3) {
    throw std::runtime_error("--counts wants head,torso,tail (e.g. 1000,1000,1000), "
                             "got '" + text + "'");
  }
  return counts;
}

std::pair<int, int> parse_idk(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) {
    throw std::runtime_error("--idk wants K/N (e.g. 4/5), got '" + text + "'");
  }
  return {std::stoi(text.substr(0, slash)), std::stoi(text.substr(slash + 1))};
}

int run_datagen(const DatagenOptions& opt) {
  auto strategy = datagen::LabelStrategy::parse(opt.strategy);
  auto [idk_k, idk_n] = parse_idk(opt.idk);
  strategy.idk_k = idk_k;
  strategy.idk_n = idk_n;
  if (!opt.mixin.empty()) strategy.mixin_path = opt.mixin;
  strategy.validate();

  auto triples = datagen::load_triples(opt.triples);
  auto strata = datagen::stratify(triples);

  std::vector<std::string> templates = opt.templates;
  if (templates.empty()) {
    templates.push_back("What is the {attribute} of {entity}?");
  }
  datagen::TemplateOptions template_options;
  template_options.expand_all = opt.expand_all;
  auto generated =
      datagen::generate_questions(triples, templates, template_options, &strata);
  for (const auto& w : generated.warnings) std::cerr << "note: " << w << "\n";

  // gt_as_label never queries the model, so a profile is optional there.
  Backends b;
  if (strategy.kind == datagen::LabelStrategy::Kind::GtAsLabel && !opt.g.live &&
      opt.profile.empty()) {
    auto empty = std::make_shared<providers::SimProfile>();
    empty->seed = opt.g.seed;
    b.profile = empty;
    b.llm = std::make_unique<providers::SimulatedLlm>(b.profile);
    b.grader = std::make_unique<judging::RuleBasedGrader>();
  } else {
    b = make_backends(opt.g, opt.live, opt.profile, /*need_rag=*/false);
  }

  datagen::BuildOptions build;
  build.jobs = opt.g.jobs;
  auto built = datagen::build_labels(generated.questions, *b.llm, *b.grader, strategy,
                                     build);
  for (const auto& f : built.failures) std::cerr << "note: " << f << "\n";

  auto counts = parse_counts(opt.counts);
  datagen::TrainConfig config;
  config.epochs = opt.epochs;
  config.learning_rate = opt.learning_rate;
  config.batch_size = opt.batch_size;
  config.head_count = counts[0];
  config.torso_count = counts[1];
  config.tail_count = counts[2];

  fs::create_directories(opt.g.out_dir);
  datagen::emit_dataset(built.examples, config, opt.g.out_dir, opt.g.seed);

  std::vector<Judgment> judged;
  for (const auto& j : built.judged) {
    if (j) judged.push_back(*j);
  }
  save_judgments(fs::path(opt.g.out_dir) / "judged.jsonl", judged);

  json inputs{{"triples", opt.triples}};
  if (!opt.profile.empty()) inputs["profile"] = opt.profile;
  if (!opt.mixin.empty()) inputs["mixin"] = opt.mixin;
  write_manifest(opt.g, "datagen", inputs,
                 json{{"strategy", strategy.name()},
                      {"idk_k", strategy.idk_k},
                      {"idk_n", strategy.idk_n},
                      {"counts", {counts[0], counts[1], counts[2]}},
                      {"templates", templates},
                      {"expand_all", opt.expand_all},
                      {"epochs", opt.epochs},
                      {"learning_rate", opt.learning_rate},
                      {"batch_size", opt.batch_size},
                      {"jobs", opt.g.jobs},
                      {"live", opt.g.live}});
  std::cout << "built " << built.examples.size() << " labeled examples ("
            << built.failures.size() << " failures) -> "
            << (fs::path(opt.g.out_dir) / "sft.jsonl").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string answers;
  std::string judgments;
  std::string dataset;
};

std::string render_score_table(const metrics::ScoreReport& score, size_t judged) {
  std::ostringstream out;
  auto row = [&](const char* key, double value) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-14s %8.1f\n", key, value);
    out << line;
  };
  row("correct_pct", score.breakdown.correct_pct);
  row("missing_pct", score.breakdown.missing_pct);
  row("incorrect_pct", score.breakdown.incorrect_pct);
  row("factuality", score.factuality);
  row("precision", score.precision);
  row("recall", score.recall);
  row("f1", score.f1);
  out << "judged         " << judged << "\n";
  return out.str();
}

int run_eval(const EvalOptions& opt) {
  std::vector<Judgment> judgments;
  bool judged_here = false;
  if (!opt.judgments.empty()) {
    judgments = load_judgments(opt.judgments);
  } else if (!opt.answers.empty() && !opt.dataset.empty()) {
    Backends b = make_grader_only(opt.g, opt.live);
    auto answers = load_answers(opt.answers);
    auto by_id = index_questions(load_dataset(opt.dataset));
    judgments.resize(answers.size());
    parallel_for(answers.size(), opt.g.jobs, [&](size_t i) {
      judgments[i] =
          grade_answer(find_question(by_id, answers[i].question_id), answers[i],
                       *b.grader);
    });
    judged_here = true;
  } else {
    throw std::runtime_error("eval needs --judgments, or --answers with --dataset");
  }

  auto breakdown = aggregate(judgments);
  auto score = metrics::score(breakdown);

  fs::create_directories(opt.g.out_dir);
  if (judged_here) {
    save_judgments(fs::path(opt.g.out_dir) / "judgments.jsonl", judgments);
  }
  json score_json = metrics::to_json(score);
  score_json["judged"] = judgments.size();
  jsonl::write_text_file(fs::path(opt.g.out_dir) / "score.json",
                         score_json.dump(2) + "\n");
  std::string table = render_score_table(score, judgments.size());
  jsonl::write_text_file(fs::path(opt.g.out_dir) / "table.txt", table);

  json inputs = json::object();
  if (!opt.answers.empty()) inputs["answers"] = opt.answers;
  if (!opt.judgments.empty()) inputs["judgments"] = opt.judgments;
  if (!opt.dataset.empty()) inputs["dataset"] = opt.dataset;
  write_manifest(opt.g, "eval", inputs,
                 json{{"jobs", opt.g.jobs}, {"live", opt.g.live}});
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------------------
// route-bench

struct RouteBenchOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string profile;
  std::string dataset;
  bool baselines = false;
  bool keyword_classifier = false;
  int llm_timeout_ms = 10000;
};

int run_route_bench(const RouteBenchOptions& opt) {
  auto questions = load_dataset(opt.dataset);
  Backends b = make_backends(opt.g, opt.live, opt.profile, /*need_rag=*/true);

  router::KeywordDynamismClassifier keyword;
  router::BenchOptions bench;
  bench.routing.llm_timeout = std::chrono::milliseconds(opt.llm_timeout_ms);
  bench.routing.classifier = opt.keyword_classifier ? &keyword : nullptr;
  bench.baselines = opt.baselines;
  bench.jobs = opt.g.jobs;

  auto result = router::bench(questions, *b.llm, *b.rag, *b.grader, bench);
  for (const auto& f : result.failures) std::cerr << "note: " << f << "\n";

  fs::create_directories(opt.g.out_dir);
  std::vector<json> outcome_records;
  outcome_records.reserve(result.outcomes.size());
  for (const auto& o : result.outcomes) outcome_records.push_back(to_json(o));
  jsonl::write(fs::path(opt.g.out_dir) / "outcomes.jsonl", outcome_records);
  save_judgments(fs::path(opt.g.out_dir) / "judgments.jsonl", result.judgments);
  jsonl::write_text_file(fs::path(opt.g.out_dir) / "report.json",
                         router::to_json(result).dump(2) + "\n");
  std::string table = router::render_table(result);
  jsonl::write_text_file(fs::path(opt.g.out_dir) / "table.txt", table);

  write_manifest(opt.g, "route-bench",
                 json{{"profile", opt.profile}, {"dataset", opt.dataset}},
                 json{{"baselines", opt.baselines},
                      {"keyword_classifier", opt.keyword_classifier},
                      {"llm_timeout_ms", opt.llm_timeout_ms},
                      {"jobs", opt.g.jobs},
                      {"live", opt.g.live}});
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------------------
// serve

struct ServeOptions {
  GlobalOptions g;
  LiveOptions live;
  std::string profile;
  std::string host = "127.0.0.1";
  int port = 8080;
  int llm_timeout_ms = 10000;
  bool keyword_classifier = false;
  int duration_ms = 0;        // 0 = serve until killed
  std::string port_file;      // written once listening; handy for scripts
};

int run_serve(const ServeOptions& opt) {
  Backends b = make_backends(opt.g, opt.live, opt.profile, /*need_rag=*/true);

  router::KeywordDynamismClassifier keyword;
  router::RouteOptions routing;
  routing.llm_timeout = std::chrono::milliseconds(opt.llm_timeout_ms);
  routing.classifier = opt.keyword_classifier ? &keyword : nullptr;

  service::RouteServer server(*b.llm, *b.rag, routing);
  int bound = server.start(opt.host, opt.port);

  fs::create_directories(opt.g.out_dir);
  json inputs = json::object();
  if (!opt.profile.empty()) inputs["profile"] = opt.profile;
  write_manifest(opt.g, "serve", inputs,
                 json{{"host", opt.host},
                      {"port", opt.port},
                      {"llm_timeout_ms", opt.llm_timeout_ms},
                      {"keyword_classifier", opt.keyword_classifier},
                      {"duration_ms", opt.duration_ms},
                      {"live", opt.g.live}});
  if (!opt.port_file.empty()) {
    jsonl::write_text_file(opt.port_file, std::to_string(bound) + "\n");
  }
  std::cout << "listening on http://" << opt.host << ":" << bound
            << " (POST /route, GET /healthz)\n";

  if (opt.duration_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(opt.duration_ms));
    server.stop();
  } else {
    while (server.running()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
  }
  return 0;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"Factual-confidence toolkit: calibration, answer consistency, "
               "admit-when-unsure SFT data, and dual-route benchmarking"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SimulateOptions simulate;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Sample answers for a dataset into answers.jsonl");
  add_global(simulate_cmd, simulate.g);
  add_live(simulate_cmd, simulate.live);
  simulate_cmd->add_option("--profile", simulate.profile,
                           "Simulator profile (offline runs)");
  simulate_cmd->add_option("--dataset", simulate.dataset, "Question JSONL")->required();
  simulate_cmd->add_option("--n", simulate.n, "Samples per question")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--temperature", simulate.temperature, "Sampling temperature")
      ->capture_default_str();
  simulate_cmd->add_flag("--self-confidence", simulate.self_confidence,
                         "Elicit a JSON answer + confidence score per sample");

  CalibrateOptions calibrate;
  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "Bin confidence against judged accuracy (equal-count quantiles)");
  add_global(calibrate_cmd, calibrate.g);
  add_live(calibrate_cmd, calibrate.live);
  calibrate_cmd->add_option("--answers", calibrate.answers, "Answer JSONL")->required();
  calibrate_cmd->add_option("--judgments", calibrate.judgments,
                            "Judgment JSONL (skip to judge here)");
  calibrate_cmd->add_option("--dataset", calibrate.dataset,
                            "Question JSONL with ground truths, for judging here");
  calibrate_cmd->add_option("--bins", calibrate.bins, "Number of quantile bins")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  ConsistencyOptions consistency_opt;
  auto* consistency_cmd = app.add_subcommand(
      "consistency", "Sample each question repeatedly and score answer agreement");
  add_global(consistency_cmd, consistency_opt.g);
  add_live(consistency_cmd, consistency_opt.live);
  consistency_cmd->add_option("--profile", consistency_opt.profile,
                              "Simulator profile (offline runs)");
  consistency_cmd->add_option("--dataset", consistency_opt.dataset, "Question JSONL")
      ->required();
  consistency_cmd->add_option("--n", consistency_opt.n, "Samples per question")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  consistency_cmd
      ->add_option("--temperature", consistency_opt.temperature, "Sampling temperature")
      ->capture_default_str();
  consistency_cmd->add_option("--oracle", consistency_opt.oracle,
                              "Answer-equivalence oracle")
      ->capture_default_str()
      ->check(CLI::IsMember({"normalized", "judge"}));
  consistency_cmd->add_flag("--exclude-missing", consistency_opt.exclude_missing,
                            "Score over substantive answers only");

  DatagenOptions datagen_opt;
  auto* datagen_cmd = app.add_subcommand(
      "datagen", "Build an admit-when-unsure SFT dataset from fact triples");
  add_global(datagen_cmd, datagen_opt.g);
  add_live(datagen_cmd, datagen_opt.live);
  datagen_cmd->add_option("--triples", datagen_opt.triples, "Fact triple JSONL")
      ->required();
  datagen_cmd->add_option("--profile", datagen_opt.profile,
                          "Simulator profile for the target model (offline runs)");
  datagen_cmd->add_option("--strategy", datagen_opt.strategy, "Labeling strategy")
      ->capture_default_str()
      ->check(CLI::IsMember({"confqa", "no_dampener", "gen_as_label", "gt_as_label",
                             "r_tuning", "idk", "fact_feeding"}));
  datagen_cmd->add_option("--idk", datagen_opt.idk,
                          "K/N agreement threshold for the idk strategy")
      ->capture_default_str();
  datagen_cmd->add_option("--mixin", datagen_opt.mixin,
                          "SFT JSONL mixed in by the fact_feeding strategy");
  datagen_cmd->add_option("--counts", datagen_opt.counts,
                          "head,torso,tail samples emitted")
      ->capture_default_str();
  datagen_cmd->add_option("--template", datagen_opt.templates,
                          "Question template with {entity} and {attribute} slots "
                          "(repeatable)");
  datagen_cmd->add_flag("--expand-all", datagen_opt.expand_all,
                        "Instantiate every template for every triple");
  datagen_cmd->add_option("--epochs", datagen_opt.epochs, "Training epochs")
      ->capture_default_str();
  datagen_cmd->add_option("--lr", datagen_opt.learning_rate, "Learning rate")
      ->capture_default_str();
  datagen_cmd->add_option("--batch", datagen_opt.batch_size, "Batch size")
      ->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand(
      "eval", "Judge answers and score correct/missing/incorrect quality");
  add_global(eval_cmd, eval.g);
  add_live(eval_cmd, eval.live);
  eval_cmd->add_option("--answers", eval.answers, "Answer JSONL");
  eval_cmd->add_option("--judgments", eval.judgments, "Pre-judged JSONL (skips judging)");
  eval_cmd->add_option("--dataset", eval.dataset,
                       "Question JSONL with ground truths, for judging here");

  RouteBenchOptions route_bench;
  auto* route_bench_cmd = app.add_subcommand(
      "route-bench", "Race LLM vs RAG per question and report the routing table");
  add_global(route_bench_cmd, route_bench.g);
  add_live(route_bench_cmd, route_bench.live);
  route_bench_cmd->add_option("--profile", route_bench.profile,
                              "Simulator profile (offline runs)");
  route_bench_cmd->add_option("--dataset", route_bench.dataset, "Question JSONL")
      ->required();
  route_bench_cmd->add_flag("--baselines", route_bench.baselines,
                            "Also run LLM-only and RAG-everywhere rows");
  route_bench_cmd->add_flag("--keyword-classifier", route_bench.keyword_classifier,
                            "Classify dynamism by keywords instead of dataset labels");
  route_bench_cmd
      ->add_option("--llm-timeout-ms", route_bench.llm_timeout_ms,
                   "LLM branch timeout before falling back to RAG")
      ->capture_default_str();

  ServeOptions serve;
  auto* serve_cmd =
      app.add_subcommand("serve", "HTTP routing service (POST /route, GET /healthz)");
  add_global(serve_cmd, serve.g);
  add_live(serve_cmd, serve.live);
  serve_cmd->add_option("--profile", serve.profile, "Simulator profile (offline runs)");
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)")
      ->capture_default_str();
  serve_cmd
      ->add_option("--llm-timeout-ms", serve.llm_timeout_ms,
                   "LLM branch timeout before falling back to RAG")
      ->capture_default_str();
  serve_cmd->add_flag("--keyword-classifier", serve.keyword_classifier,
                      "Classify dynamism by keywords instead of request labels");
  serve_cmd->add_option("--duration-ms", serve.duration_ms,
                        "Stop after this long (0 = serve until killed)")
      ->capture_default_str();
  serve_cmd->add_option("--port-file", serve.port_file,
                        "Write the bound port here once listening");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(simulate_cmd)) return run_simulate(simulate);
    if (app.got_subcommand(calibrate_cmd)) return run_calibrate(calibrate);
    if (app.got_subcommand(consistency_cmd)) return run_consistency(consistency_opt);
    if (app.got_subcommand(datagen_cmd)) return run_datagen(datagen_opt);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval);
    if (app.got_subcommand(route_bench_cmd)) return run_route_bench(route_bench);
    if (app.got_subcommand(serve_cmd)) return run_serve(serve);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace confkit::cli
