#include "rcp1/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcp1/errors.hpp"

namespace rcp1 {
namespace {

constexpr double kVacuousEps = 1e-12;

std::vector<double> true_label_scores(const ScoreTable& table) {
  if (!table.has_labels()) {
    throw LabelError("calibration requires a labeled score table");
  }
  std::vector<double> s(table.n_examples());
  for (std::size_t i = 0; i < table.n_examples(); ++i) {
    s[i] = table.at(i, table.label(i));
  }
  return s;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must be in (0, 1)");
  }
}

}  // namespace

bool PredictionSet::contains(std::size_t label) const {
  return std::binary_search(members.begin(), members.end(), label);
}

double corrected_quantile(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw DomainError("corrected_quantile of an empty list");
  check_alpha(alpha);
  const auto n = static_cast<double>(scores.size());
  double level = alpha * (1.0 - 1.0 / (n + 1.0));
  auto k = static_cast<std::size_t>(
      std::max(1.0, std::ceil(level * n - 1e-12)));
  k = std::min(k, scores.size());
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  return sorted[k - 1];
}

CalibrationResult calibrate_vanilla(const ScoreTable& cal,
                                    const ScoreKind& score_kind, double alpha) {
  check_alpha(alpha);
  ScoreTable scored = apply_score_kind(cal, score_kind);
  CalibrationResult out;
  out.threshold_q = corrected_quantile(true_label_scores(scored), alpha);
  out.nominal_level = 1.0 - alpha;
  out.adjusted_level = 1.0 - alpha;
  out.n_calibration = cal.n_examples();
  out.n_labels = cal.n_labels();
  out.vacuous = false;
  return out;
}

CalibrationResult calibrate_rcp1(const ScoreTable& cal_augmented,
                                 const ScoreKind& score_kind, double alpha,
                                 const SmoothingSpec& smoothing,
                                 const ThreatModel& threat) {
  check_alpha(alpha);
  CertifiedBound adjusted = upper_bound(1.0 - alpha, smoothing, threat);

  // The level inflation assumes the certificate pair round-trips; that holds
  // for the implemented symmetric schemes but is checked rather than assumed.
  // Tolerance leaves room for quantile noise when the level nears saturation.
  if (!adjusted.vacuous) {
    double back = lower_bound(adjusted.value, smoothing, threat).value;
    if (std::fabs(back - (1.0 - alpha)) > 1e-4) {
      throw Error("certificate round trip failed for " + smoothing.describe() +
                  "; the adjusted level would not restore nominal coverage");
    }
  }

  CalibrationResult out;
  out.nominal_level = 1.0 - alpha;
  out.adjusted_level = adjusted.value;
  out.n_calibration = cal_augmented.n_examples();
  out.n_labels = cal_augmented.n_labels();
  out.smoothing = smoothing;
  out.threat = threat;
  if (adjusted.vacuous || adjusted.value >= 1.0 - kVacuousEps) {
    out.vacuous = true;
    out.adjusted_level = 1.0;
    out.threshold_q = -std::numeric_limits<double>::infinity();
    return out;
  }
  ScoreTable scored = apply_score_kind(cal_augmented, score_kind);
  out.threshold_q =
      corrected_quantile(true_label_scores(scored), 1.0 - adjusted.value);
  return out;
}

PredictionSet predict_set(std::span<const double> test_scores_row,
                          const CalibrationResult& calib,
                          std::size_t example_id) {
  if (calib.n_labels != 0 && test_scores_row.size() != calib.n_labels) {
    throw ShapeError("test row has " + std::to_string(test_scores_row.size()) +
                     " scores, calibration expects " +
                     std::to_string(calib.n_labels));
  }
  PredictionSet set;
  set.example_id = example_id;
  set.members.reserve(test_scores_row.size());
  for (std::size_t y = 0; y < test_scores_row.size(); ++y) {
    if (calib.vacuous || test_scores_row[y] >= calib.threshold_q) {
      set.members.push_back(y);
    }
  }
  return set;
}

EvalMetrics evaluate(const std::vector<PredictionSet>& sets,
                     std::span<const std::size_t> labels,
                     std::span<const std::size_t> size_thresholds) {
  if (sets.size() != labels.size()) {
    throw ShapeError("evaluate: sets and labels must be aligned");
  }
  if (sets.empty()) throw DomainError("evaluate: empty input");

  EvalMetrics m;
  double covered = 0.0, total_size = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    covered += sets[i].contains(labels[i]) ? 1.0 : 0.0;
    total_size += static_cast<double>(sets[i].members.size());
  }
  const auto n = static_cast<double>(sets.size());
  m.coverage = covered / n;
  m.mean_size = total_size / n;

  for (std::size_t k : size_thresholds) {
    SizeThresholdStat stat;
    stat.threshold = k;
    double count = 0.0, covered_small = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (sets[i].members.size() <= k) {
        count += 1.0;
        covered_small += sets[i].contains(labels[i]) ? 1.0 : 0.0;
      }
    }
    stat.proportion = count / n;
    stat.coverage = count > 0.0 ? covered_small / count : 0.0;
    m.per_threshold.push_back(stat);
  }
  return m;
}

}  // namespace rcp1
