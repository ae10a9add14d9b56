#include "rcp1/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rcp1/errors.hpp"

namespace rcp1 {
namespace {

constexpr double kMonotoneSlack = 1e-12;

void check_matrix(const LossMatrix& m, const RiskBounds& b) {
  if (m.lambda_grid.empty() || m.n_examples == 0) {
    throw DomainError("loss matrix must be nonempty");
  }
  if (!std::is_sorted(m.lambda_grid.begin(), m.lambda_grid.end())) {
    throw DomainError("lambda grid must be sorted ascending");
  }
  if (m.losses.size() != m.n_examples * m.lambda_grid.size()) {
    throw ShapeError("loss matrix size mismatch");
  }
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    for (std::size_t g = 0; g < m.lambda_grid.size(); ++g) {
      double v = m.at(i, g);
      if (!std::isfinite(v) || v < b.lo - kMonotoneSlack ||
          v > b.hi + kMonotoneSlack) {
        throw ValueError("loss outside [lo, hi] at example " + std::to_string(i));
      }
      if (g > 0 && v > m.at(i, g - 1) + kMonotoneSlack) {
        throw ValueError("loss not non-increasing in lambda at example " +
                         std::to_string(i));
      }
    }
  }
}

}  // namespace

PixelGrid load_pixel_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open pixel grid " + path.string());
  PixelGrid grid;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::istringstream fields(line);
    std::string f;
    std::size_t col = 0;
    while (std::getline(fields, f, ',')) {
      double v = 0.0;
      try {
        v = std::stod(f);
      } catch (const std::exception&) {
        throw ValueError("cannot parse pixel value '" + f + "'", row, col);
      }
      if (!std::isfinite(v)) throw ValueError("non-finite pixel", row, col);
      grid.values.push_back(v);
      ++col;
    }
    if (grid.cols == 0) {
      grid.cols = col;
    } else if (col != grid.cols) {
      throw ParseError("ragged pixel row", row);
    }
    ++grid.rows;
  }
  if (grid.values.empty()) throw ParseError("empty pixel grid", 0);
  return grid;
}

void write_pixel_mask(const std::filesystem::path& path, const PixelMask& mask) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mask " + path.string());
  for (std::size_t r = 0; r < mask.rows; ++r) {
    for (std::size_t c = 0; c < mask.cols; ++c) {
      if (c) out << ',';
      out << (mask.at(r, c) ? 1 : 0);
    }
    out << '\n';
  }
}

LossMatrix RiskCurve::tabulate(std::size_t n_examples) const {
  LossMatrix m;
  m.n_examples = n_examples;
  m.lambda_grid = lambda_grid;
  m.losses.resize(n_examples * lambda_grid.size());
  for (std::size_t i = 0; i < n_examples; ++i) {
    for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
      m.losses[i * lambda_grid.size() + g] = eval(i, lambda_grid[g]);
    }
  }
  return m;
}

std::vector<double> uniform_lambda_grid(std::size_t n) {
  if (n < 2) throw DomainError("lambda grid needs at least 2 points");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return grid;
}

CrcResult crc_lambda(const LossMatrix& cal_losses, const RiskBounds& bounds,
                     double alpha) {
  if (!(bounds.lo < bounds.hi)) throw DomainError("risk bounds need lo < hi");
  if (!(alpha >= bounds.lo && alpha <= bounds.hi)) {
    throw DomainError("risk level alpha must be within [lo, hi]");
  }
  check_matrix(cal_losses, bounds);

  const double n1 = static_cast<double>(cal_losses.n_examples) + 1.0;
  for (std::size_t g = 0; g < cal_losses.lambda_grid.size(); ++g) {
    double sum = bounds.hi;
    for (std::size_t i = 0; i < cal_losses.n_examples; ++i) {
      sum += cal_losses.at(i, g);
    }
    if (sum / n1 <= alpha) return {cal_losses.lambda_grid[g], false};
  }
  return {cal_losses.lambda_grid.back(), true};
}

double deflated_risk_level(double alpha, const RiskBounds& bounds,
                           const SmoothingSpec& smoothing, double radius) {
  if (!(alpha >= bounds.lo && alpha <= bounds.hi)) {
    throw DomainError("risk level alpha must be within [lo, hi]");
  }
  // confidence_upper is continuous and nondecreasing with
  // confidence_upper(lo) = lo <= alpha, so the supremum is well defined.
  double lo = bounds.lo, hi = bounds.hi;
  if (confidence_upper(hi, bounds, smoothing, radius) <= alpha) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (bounds.hi - bounds.lo); ++i) {
    double mid = 0.5 * (lo + hi);
    if (confidence_upper(mid, bounds, smoothing, radius) <= alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

CrcResult robust_crc_lambda(const LossMatrix& cal_losses_augmented,
                            const RiskBounds& bounds, double alpha,
                            const SmoothingSpec& smoothing,
                            const ThreatModel& threat) {
  double target = deflated_risk_level(alpha, bounds, smoothing, threat.radius);
  if (target < bounds.lo) {
    return {cal_losses_augmented.lambda_grid.back(), true};
  }
  return crc_lambda(cal_losses_augmented, bounds, target);
}

double fnr_loss(const PixelMask& mask, const PixelMask& truth) {
  if (mask.rows != truth.rows || mask.cols != truth.cols) {
    throw ShapeError("fnr_loss: mask and truth domains differ");
  }
  std::size_t positives = 0, missed = 0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    if (truth.values[i]) {
      ++positives;
      if (!mask.values[i]) ++missed;
    }
  }
  if (positives == 0) return 0.0;  // no positives, no false negatives
  return static_cast<double>(missed) / static_cast<double>(positives);
}

PixelMask threshold_mask(const PixelGrid& pixel_scores, double lambda) {
  PixelMask mask;
  mask.rows = pixel_scores.rows;
  mask.cols = pixel_scores.cols;
  mask.values.resize(pixel_scores.values.size());
  for (std::size_t i = 0; i < pixel_scores.values.size(); ++i) {
    mask.values[i] = pixel_scores.values[i] >= 1.0 - lambda ? 1 : 0;
  }
  return mask;
}

}  // namespace rcp1
