#pragma once

// Quantitative scoring: factuality/precision/recall/F1 over judgment
// breakdowns, quantile-binned calibration curves, nearest-rank latency
// percentiles, routing upper bound, and retrieval reduction.

#include <string>
#include <vector>

#include "confkit/core.hpp"

namespace confkit::metrics {

struct ScoreReport {
  Breakdown breakdown;
  double factuality = 0.0;  // correct% - incorrect%, in [-100, 100]
  double precision = 0.0;   // 100 * correct / (correct + incorrect), 0 when nothing attempted
  double recall = 0.0;      // correct%
  double f1 = 0.0;          // harmonic mean of precision and recall, 0 when both vanish
};

json to_json(const ScoreReport& r);

ScoreReport score(const Breakdown& breakdown);
ScoreReport score_from_counts(size_t correct, size_t incorrect, size_t missing);

/// One graded, non-missing answer with a reported confidence. The id only
/// breaks sort ties, keeping bin assignment reproducible.
struct CalibrationSample {
  std::string id;
  double confidence = 0.0;
  bool correct = false;
};

struct CalibrationBin {
  double lo = 0.0;  // lowest observed confidence in the bin
  double hi = 0.0;  // highest observed confidence in the bin
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  size_t count = 0;
};

struct CalibrationCurve {
  std::vector<CalibrationBin> bins;
  int n_bins = 0;
};

json to_json(const CalibrationCurve& c);

/// Equal-count quantile binning: samples are stable-sorted by
/// (confidence, id) and split into n_bins contiguous chunks whose sizes
/// differ by at most one. Errors when there are fewer samples than bins.
CalibrationCurve calibration_curve(const std::vector<CalibrationSample>& samples,
                                   int n_bins);

/// Joins answers with their judgments for calibration. Preconditions from
/// the curve contract are enforced here: every record must be non-missing,
/// carry a confidence, and have exactly one judgment.
std::vector<CalibrationSample> to_calibration_samples(
    const std::vector<AnswerRecord>& answers, const std::vector<Judgment>& judgments);

/// Count-weighted mean of (mean_confidence - accuracy); positive means
/// over-confident.
double expected_calibration_gap(const CalibrationCurve& curve);

struct LatencyStats {
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  size_t count = 0;
};

json to_json(const LatencyStats& s);

/// Nearest-rank percentiles (no interpolation): the ceil(p/100 * n)-th
/// smallest value.
LatencyStats latency_percentiles(std::vector<double> latencies_ms);

/// Accuracy ceiling of the routing scheme: 100 - incorrect_pct of the
/// confident (dampened LLM) branch, i.e. the score if RAG answered every
/// non-confident question perfectly.
double upper_bound_accuracy(const Breakdown& confident_branch);

/// Fraction of routed questions whose RAG branch was early-stopped. Dynamic
/// questions never early-stop, so an all-dynamic run scores 0.
double retrieval_reduction(const std::vector<RouterOutcome>& outcomes);

}  // namespace confkit::metrics
