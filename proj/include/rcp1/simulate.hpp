#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rcp1/certificates.hpp"
#include "rcp1/conformal.hpp"

namespace rcp1 {

// Linear-score model: every label y scores s(z, y) = w.z - offset_y. Under
// Gaussian smoothing the smoothed indicator of {s >= q} has an exact closed
// form, and its worst case over an L2 ball is attained by sliding the point
// along -w. Certificates can therefore be checked against an exact oracle.
struct HalfspaceModel {
  std::vector<double> weight;    // nonzero
  std::vector<double> offsets;   // one per label
  double sigma_data = 1.0;       // label-conditional spread of the inputs

  double weight_norm() const;
  double score(std::span<const double> point, std::size_t label) const;
};

// Exact Pr_eps[s(point + eps, label) >= q] for eps ~ N(0, sigma^2 I).
double halfspace_smooth_prob(const HalfspaceModel& model,
                             std::span<const double> point, std::size_t label,
                             double sigma, double q_threshold);

// Exact worst-case smoothed probability over the L2 ball of the given
// radius: the adversary shifts the point by radius along -w/|w|.
double halfspace_worst_case(const HalfspaceModel& model,
                            std::span<const double> point, std::size_t label,
                            double sigma, double q_threshold, double radius);

// Conditional-coverage law of split conformal calibration.
struct CoverageDistribution {
  std::size_t n_calibration = 0;
  double alpha = 0.0;
  std::vector<double> samples;  // in [0, 1]
};

// I.i.d. draws from Beta((1-alpha)(n+1), alpha(n+1)), reproducible from seed.
CoverageDistribution beta_coverage_samples(std::size_t n_calibration,
                                           double alpha, std::size_t n_samples,
                                           uint64_t seed);

// Maps each coverage sample beta to the certified worst case c_down[beta].
CoverageDistribution pushforward_worst_coverage(const CoverageDistribution& dist,
                                                const SmoothingSpec& smoothing,
                                                const ThreatModel& threat);

struct ExperimentConfig {
  std::size_t dim = 16;
  std::size_t n_labels = 10;
  std::size_t n_cal = 200;
  std::size_t n_test = 100;
  double alpha = 0.1;
  double sigma = 0.5;
  double radius = 0.25;
  std::size_t trials = 100;
  uint64_t seed = 1;
};

// Key=value experiment config file: keys d, labels, n_cal, n_test, alpha,
// sigma, radius, trials, seed. Unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);

struct ExperimentResult {
  ExperimentConfig config;
  double adjusted_level = 0.0;      // 1 - alpha' used by the robust pipeline
  // Means over trials; each trial averages its test rows.
  double clean_coverage_rcp1 = 0.0;
  double worst_coverage_rcp1 = 0.0;
  double clean_coverage_vanilla = 0.0;
  double worst_coverage_vanilla = 0.0;
  double mean_size_rcp1 = 0.0;
  double mean_size_vanilla = 0.0;
  // Standard errors of the trial means.
  double se_clean_rcp1 = 0.0;
  double se_worst_rcp1 = 0.0;
  double se_clean_vanilla = 0.0;
  double se_worst_vanilla = 0.0;
};

// Monte Carlo coverage experiment. Per trial: draws a halfspace model and an
// exchangeable dataset, augments every row once, calibrates both the robust
// (level alpha') and the vanilla (level alpha) thresholds on the same
// augmented scores, then records empirical clean coverage and the exact
// analytic worst-case coverage of the test rows. Trials run in parallel
// (capped by RCP1_THREADS); aggregation is a deterministic pairwise
// reduction, so results are byte-stable for a fixed config and seed.
ExperimentResult run_coverage_experiment(const ExperimentConfig& config);

}  // namespace rcp1
