#include "confkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace confkit::metrics {

json to_json(const ScoreReport& r) {
  return json{{"breakdown", confkit::to_json(r.breakdown)},
              {"factuality", r.factuality},
              {"precision", r.precision},
              {"recall", r.recall},
              {"f1", r.f1}};
}

ScoreReport score(const Breakdown& breakdown) {
  breakdown.validate();
  ScoreReport r;
  r.breakdown = breakdown;
  double c = breakdown.correct_pct;
  double i = breakdown.incorrect_pct;
  r.factuality = c - i;
  r.recall = c;
  double attempted = c + i;
  r.precision = attempted > 0.0 ? 100.0 * c / attempted : 0.0;
  double pr = r.precision + r.recall;
  r.f1 = pr > 0.0 ? 2.0 * r.precision * r.recall / pr : 0.0;
  return r;
}

ScoreReport score_from_counts(size_t correct, size_t incorrect, size_t missing) {
  return score(Breakdown::from_counts(correct, incorrect, missing));
}

json to_json(const CalibrationCurve& c) {
  json bins = json::array();
  for (const auto& b : c.bins) {
    bins.push_back(json{{"lo", b.lo},
                        {"hi", b.hi},
                        {"mean_confidence", b.mean_confidence},
                        {"accuracy", b.accuracy},
                        {"count", b.count}});
  }
  return json{{"bins", bins}, {"n_bins", c.n_bins}};
}

CalibrationCurve calibration_curve(const std::vector<CalibrationSample>& samples,
                                   int n_bins) {
  if (n_bins < 1) {
    throw std::invalid_argument("n_bins must be >= 1");
  }
  if (samples.size() < static_cast<size_t>(n_bins)) {
    throw std::runtime_error("fewer records (" + std::to_string(samples.size()) +
                             ") than bins (" + std::to_string(n_bins) +
                             "); reduce --bins");
  }
  for (const auto& s : samples) {
    if (s.confidence < 0.0 || s.confidence > 1.0) {
      throw std::runtime_error("confidence out of [0,1] for record '" + s.id + "'");
    }
  }
  std::vector<CalibrationSample> sorted = samples;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CalibrationSample& a, const CalibrationSample& b) {
                     if (a.confidence != b.confidence) return a.confidence < b.confidence;
                     return a.id < b.id;
                   });

  CalibrationCurve curve;
  curve.n_bins = n_bins;
  size_t n = sorted.size();
  size_t base = n / static_cast<size_t>(n_bins);
  size_t rem = n % static_cast<size_t>(n_bins);
  size_t pos = 0;
  for (int b = 0; b < n_bins; ++b) {
    size_t len = base + (static_cast<size_t>(b) < rem ? 1 : 0);
    CalibrationBin bin;
    bin.count = len;
    bin.lo = sorted[pos].confidence;
    bin.hi = sorted[pos + len - 1].confidence;
    double conf_sum = 0.0;
    size_t correct = 0;
    for (size_t k = pos; k < pos + len; ++k) {
      conf_sum += sorted[k].confidence;
      if (sorted[k].correct) ++correct;
    }
    bin.mean_confidence = conf_sum / static_cast<double>(len);
    bin.accuracy = static_cast<double>(correct) / static_cast<double>(len);
    curve.bins.push_back(bin);
    pos += len;
  }
  return curve;
}

std::vector<CalibrationSample> to_calibration_samples(
    const std::vector<AnswerRecord>& answers, const std::vector<Judgment>& judgments) {
  std::map<std::string, Label> by_id;
  for (const auto& j : judgments) {
    if (!by_id.emplace(j.question_id, j.label).second) {
      throw std::runtime_error("multiple judgments for question '" + j.question_id +
                               "'; calibration expects one per question");
    }
  }
  std::vector<CalibrationSample> out;
  out.reserve(answers.size());
  for (const auto& a : answers) {
    if (a.is_missing) {
      throw std::runtime_error("record '" + a.question_id +
                               "' is missing; remove missing answers before calibration");
    }
    if (!a.self_confidence) {
      throw std::runtime_error("record '" + a.question_id + "' has no self_confidence");
    }
    auto it = by_id.find(a.question_id);
    if (it == by_id.end()) {
      throw std::runtime_error("no judgment for question '" + a.question_id + "'");
    }
    out.push_back(CalibrationSample{a.question_id, *a.self_confidence,
                                    it->second == Label::Correct});
  }
  return out;
}

double expected_calibration_gap(const CalibrationCurve& curve) {
  if (curve.bins.empty()) {
    throw std::runtime_error("calibration curve has no bins");
  }
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& b : curve.bins) {
    weighted += (b.mean_confidence - b.accuracy) * static_cast<double>(b.count);
    total += static_cast<double>(b.count);
  }
  return weighted / total;
}

json to_json(const LatencyStats& s) {
  return json{{"p50_ms", s.p50_ms}, {"p90_ms", s.p90_ms}, {"count", s.count}};
}

namespace {

double nearest_rank(const std::vector<double>& sorted, double percentile) {
  size_t n = sorted.size();
  auto rank = static_cast<size_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

}  // namespace

LatencyStats latency_percentiles(std::vector<double> latencies_ms) {
  if (latencies_ms.empty()) {
    throw std::runtime_error("latency list is empty");
  }
  for (double v : latencies_ms) {
    if (v < 0.0) {
      throw std::runtime_error("negative latency " + std::to_string(v));
    }
  }
  std::sort(latencies_ms.begin(), latencies_ms.end());
  LatencyStats s;
  s.count = latencies_ms.size();
  s.p50_ms = nearest_rank(latencies_ms, 50.0);
  s.p90_ms = nearest_rank(latencies_ms, 90.0);
  return s;
}

double upper_bound_accuracy(const Breakdown& confident_branch) {
  confident_branch.validate();
  return 100.0 - confident_branch.incorrect_pct;
}

double retrieval_reduction(const std::vector<RouterOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw std::runtime_error("no outcomes to compute retrieval reduction over");
  }
  size_t stopped = 0;
  for (const auto& o : outcomes) {
    if (o.early_stopped_rag) ++stopped;
  }
  return static_cast<double>(stopped) / static_cast<double>(outcomes.size());
}

}  // namespace confkit::metrics
