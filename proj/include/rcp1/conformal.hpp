#pragma once

#include <span>
#include <vector>

#include "rcp1/certificates.hpp"
#include "rcp1/scores.hpp"

namespace rcp1 {

// Output of a calibration run. `threshold_q` is -inf (with `vacuous` set)
// when the adjusted level saturated at 1, in which case every prediction
// set is the full label set. adjusted_level >= nominal_level always.
struct CalibrationResult {
  double threshold_q = 0.0;
  double nominal_level = 0.0;   // 1 - alpha
  double adjusted_level = 0.0;  // 1 - alpha'
  std::size_t n_calibration = 0;
  std::size_t n_labels = 0;     // 0 when constructed outside calibration
  SmoothingSpec smoothing = SmoothingSpec::gaussian(1.0);
  ThreatModel threat = ThreatModel::l2(0.0);
  bool vacuous = false;
};

struct PredictionSet {
  std::vector<std::size_t> members;  // ascending label indices
  std::size_t example_id = 0;

  bool contains(std::size_t label) const;
};

// Finite-sample-corrected empirical quantile: the k-th smallest score with
// k = max(1, ceil(l * n)) at level l = alpha * (1 - 1/(n+1)). This single
// convention is the source of truth for every calibration path.
double corrected_quantile(std::span<const double> scores, double alpha);

// Plain split-conformal calibration on the true-label conformity scores.
CalibrationResult calibrate_vanilla(const ScoreTable& cal,
                                    const ScoreKind& score_kind, double alpha);

// Single-sample robust calibration: inflate the level to
// 1 - alpha' = c_up[1 - alpha, ball] and take the corrected quantile of the
// noise-augmented true-label scores at alpha'. The input table must hold
// scores of singly-augmented inputs (one noise draw per row).
CalibrationResult calibrate_rcp1(const ScoreTable& cal_augmented,
                                 const ScoreKind& score_kind, double alpha,
                                 const SmoothingSpec& smoothing,
                                 const ThreatModel& threat);

// {y : s >= q}; the boundary is included. Vacuous calibration admits all
// labels; empty sets are legal and returned as such.
PredictionSet predict_set(std::span<const double> test_scores_row,
                          const CalibrationResult& calib,
                          std::size_t example_id = 0);

struct SizeThresholdStat {
  std::size_t threshold = 0;
  double proportion = 0.0;  // fraction of sets with |C| <= threshold
  double coverage = 0.0;    // coverage restricted to those sets (0 if none)
};

struct EvalMetrics {
  double coverage = 0.0;
  double mean_size = 0.0;
  std::vector<SizeThresholdStat> per_threshold;
};

EvalMetrics evaluate(const std::vector<PredictionSet>& sets,
                     std::span<const std::size_t> labels,
                     std::span<const std::size_t> size_thresholds);

}  // namespace rcp1
