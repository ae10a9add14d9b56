#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rcp1/conformal.hpp"

namespace rcp1 {

inline constexpr const char* kToolVersion = "rcp1 0.1.0";

// Calibration artifact: human-readable key=value text carrying the threshold
// together with everything needed to reproduce it. A vacuous threshold is
// serialized as the literal token VACUOUS, never as a float.
struct CalibrationArtifact {
  CalibrationResult calib;
  ScoreKind score_kind;
  double alpha = 0.0;  // the level as the user typed it
  uint64_t seed = 0;
};

void write_calibration(const std::filesystem::path& path,
                       const CalibrationArtifact& artifact);
CalibrationArtifact read_calibration(const std::filesystem::path& path);

// Prediction sets: one line of ascending member indices per example.
void write_prediction_sets(const std::filesystem::path& path,
                           const std::vector<PredictionSet>& sets);
std::vector<PredictionSet> read_prediction_sets(
    const std::filesystem::path& path);

// One row of the shared metrics CSV, keyed by (alpha, sigma, radius, seed).
struct MetricsRow {
  double alpha = 0.0;
  double sigma = 0.0;
  double radius = 0.0;
  uint64_t seed = 0;
  double coverage = 0.0;
  double mean_size = 0.0;
  std::vector<SizeThresholdStat> per_threshold;
};

// Appends `row`, writing a header first when the file does not exist yet.
void append_metrics_row(const std::filesystem::path& path,
                        const MetricsRow& row);

std::string format_double(double v);  // shortest round-trippable decimal

}  // namespace rcp1
