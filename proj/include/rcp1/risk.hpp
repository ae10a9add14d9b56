#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "rcp1/certificates.hpp"

namespace rcp1 {

// Dense grid of pixel scores for one image; values row-major.
struct PixelGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Boolean pixel set over the same grid domain.
struct PixelMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<uint8_t> values;

  bool at(std::size_t r, std::size_t c) const { return values[r * cols + c] != 0; }
};

PixelGrid load_pixel_grid(const std::filesystem::path& path);
void write_pixel_mask(const std::filesystem::path& path, const PixelMask& mask);

// Per-example losses tabulated on a sorted lambda grid, row-major
// n_examples x grid size. Every row must be non-increasing along the grid
// (masks grow with lambda, so the FNR loss can only fall).
struct LossMatrix {
  std::size_t n_examples = 0;
  std::vector<double> lambda_grid;
  std::vector<double> losses;

  double at(std::size_t example, std::size_t grid_index) const {
    return losses[example * lambda_grid.size() + grid_index];
  }
};

// A monotone bounded loss curve; tabulate() materializes the LossMatrix the
// calibration operations consume.
struct RiskCurve {
  std::function<double(std::size_t example, double lambda)> eval;
  RiskBounds bounds;
  std::vector<double> lambda_grid;

  LossMatrix tabulate(std::size_t n_examples) const;
};

// Uniform grid of n points on [0, 1] (the default CRC search grid).
std::vector<double> uniform_lambda_grid(std::size_t n = 512);

struct CrcResult {
  double lambda = 0.0;
  bool unsatisfiable = false;  // no grid point met the level; lambda = grid max
};

// Conformal risk control: the smallest grid lambda with
// (sum_i L(x_i, lambda) + hi) / (n + 1) <= alpha.
CrcResult crc_lambda(const LossMatrix& cal_losses, const RiskBounds& bounds,
                     double alpha);

// Robust variant: deflates alpha to the largest t with
// confidence_upper(t) <= alpha (bisection), then runs crc_lambda at that
// level. The losses must come from singly noise-augmented inputs.
CrcResult robust_crc_lambda(const LossMatrix& cal_losses_augmented,
                            const RiskBounds& bounds, double alpha,
                            const SmoothingSpec& smoothing,
                            const ThreatModel& threat);

// Largest t in [lo, hi] with confidence_upper(t, ...) <= alpha; the deflated
// risk target used by robust_crc_lambda.
double deflated_risk_level(double alpha, const RiskBounds& bounds,
                           const SmoothingSpec& smoothing, double radius);

// |truth \ mask| / |truth|; 0 when truth is empty.
double fnr_loss(const PixelMask& mask, const PixelMask& truth);

// Pixels with score >= 1 - lambda. Non-shrinking in lambda, which is what
// makes the FNR loss monotone.
PixelMask threshold_mask(const PixelGrid& pixel_scores, double lambda);

}  // namespace rcp1
