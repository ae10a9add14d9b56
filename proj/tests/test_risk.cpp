#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "rcp1/errors.hpp"
#include "rcp1/risk.hpp"
#include "rcp1/rng.hpp"

using namespace rcp1;

namespace {

const RiskBounds kUnit{0.0, 1.0};

LossMatrix constant_losses(std::size_t n, std::size_t grid_n, double value) {
  LossMatrix m;
  m.n_examples = n;
  m.lambda_grid = uniform_lambda_grid(grid_n);
  m.losses.assign(n * grid_n, value);
  return m;
}

}  // namespace

TEST_CASE("crc: degenerate single example with maximal loss") {
  // n = 1, losses always hi: the condition is (hi + hi)/2 <= alpha, so a
  // lambda exists only when alpha >= hi.
  LossMatrix m = constant_losses(1, 8, 1.0);
  CrcResult at_hi = crc_lambda(m, kUnit, 1.0);
  CHECK_FALSE(at_hi.unsatisfiable);
  CHECK(at_hi.lambda == m.lambda_grid.front());
  CrcResult below = crc_lambda(m, kUnit, 0.8);
  CHECK(below.unsatisfiable);
  CHECK(below.lambda == m.lambda_grid.back());
}

TEST_CASE("crc: hand evaluation with zero losses") {
  // losses identically 0, n = 9, alpha = 0.15: (0 + 1)/10 = 0.1 <= 0.15
  // everywhere, so lambda* is the grid minimum.
  LossMatrix m = constant_losses(9, 16, 0.0);
  CrcResult r = crc_lambda(m, kUnit, 0.15);
  CHECK_FALSE(r.unsatisfiable);
  CHECK(r.lambda == m.lambda_grid.front());
}

TEST_CASE("crc: alpha at the upper bound is vacuously satisfiable") {
  RandomStream s(3);
  LossMatrix m = constant_losses(5, 8, 0.0);
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    double level = s.next_uniform();
    for (std::size_t g = 0; g < m.lambda_grid.size(); ++g) {
      m.losses[i * m.lambda_grid.size() + g] =
          level * (1.0 - m.lambda_grid[g]);
    }
  }
  CrcResult r = crc_lambda(m, kUnit, 1.0);
  CHECK_FALSE(r.unsatisfiable);
  CHECK(r.lambda == m.lambda_grid.front());
}

TEST_CASE("crc validates its inputs") {
  LossMatrix m = constant_losses(4, 8, 0.5);
  CHECK_THROWS_AS(crc_lambda(m, kUnit, 1.5), DomainError);
  CHECK_THROWS_AS(crc_lambda(m, kUnit, -0.1), DomainError);
  m.losses[2] = 0.9;  // example 0 increases along the grid
  CHECK_THROWS_AS(crc_lambda(m, kUnit, 0.5), ValueError);
  m.losses[2] = 1.9;  // outside [lo, hi]
  CHECK_THROWS_AS(crc_lambda(m, kUnit, 0.5), ValueError);
}

TEST_CASE("robust crc at r = 0 equals vanilla") {
  RandomStream s(11);
  LossMatrix m = constant_losses(30, 64, 0.0);
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    double scale = s.next_uniform();
    for (std::size_t g = 0; g < m.lambda_grid.size(); ++g) {
      m.losses[i * m.lambda_grid.size() + g] =
          scale * std::pow(1.0 - m.lambda_grid[g], 2.0);
    }
  }
  CrcResult vanilla = crc_lambda(m, kUnit, 0.2);
  CrcResult robust = robust_crc_lambda(m, kUnit, 0.2,
                                       SmoothingSpec::gaussian(0.25),
                                       ThreatModel::l2(0.0));
  CHECK(vanilla.lambda == robust.lambda);
  CHECK(vanilla.unsatisfiable == robust.unsatisfiable);
}

TEST_CASE("deflated risk level matches the frozen oracle value") {
  // [lo,hi]=[0,1], sigma=0.25, r=0.06: Phi(Phi^-1(0.15) - 0.24).
  double target = deflated_risk_level(0.15, kUnit,
                                      SmoothingSpec::gaussian(0.25), 0.06);
  CHECK(std::fabs(target - 0.10090117971236110409) < 1e-9);
}

TEST_CASE("robust crc: deflation is monotone and saturates to unsatisfiable") {
  LossMatrix m = constant_losses(20, 128, 0.0);
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    for (std::size_t g = 0; g < m.lambda_grid.size(); ++g) {
      m.losses[i * m.lambda_grid.size() + g] = 0.3 * (1.0 - m.lambda_grid[g]);
    }
  }
  // Radii kept small enough that the deflated target stays above the
  // (0 + hi)/(n+1) floor of the CRC display.
  double prev = -1.0;
  for (double r : {0.0, 0.03, 0.06, 0.1, 0.12}) {
    CrcResult res = robust_crc_lambda(m, kUnit, 0.15,
                                      SmoothingSpec::gaussian(0.25),
                                      ThreatModel::l2(r));
    CHECK_FALSE(res.unsatisfiable);
    CHECK(res.lambda >= prev);
    prev = res.lambda;
  }
  // Deflated target falls below the attainable (0 + 1)/(n+1) floor.
  CrcResult res = robust_crc_lambda(m, kUnit, 0.15,
                                    SmoothingSpec::gaussian(0.25),
                                    ThreatModel::l2(3.0));
  CHECK(res.unsatisfiable);
  CHECK(res.lambda == m.lambda_grid.back());
}

TEST_CASE("fnr loss: trivial and counted cases") {
  PixelMask truth{2, 2, {1, 1, 1, 1}};
  PixelMask all{2, 2, {1, 1, 1, 1}};
  PixelMask none{2, 2, {0, 0, 0, 0}};
  PixelMask three{2, 2, {1, 1, 1, 0}};
  CHECK(fnr_loss(all, truth) == 0.0);
  CHECK(fnr_loss(none, truth) == 1.0);
  CHECK(fnr_loss(three, truth) == 0.25);

  PixelMask no_truth{2, 2, {0, 0, 0, 0}};
  CHECK(fnr_loss(none, no_truth) == 0.0);  // empty truth contributes 0

  PixelMask other{1, 4, {1, 1, 1, 1}};
  CHECK_THROWS_AS(fnr_loss(other, truth), ShapeError);
}

TEST_CASE("threshold mask: boundary arithmetic") {
  PixelGrid scores{1, 2, {0.3, 0.9}};
  CHECK(threshold_mask(scores, 1.0).values == std::vector<uint8_t>{1, 1});
  PixelMask at_zero = threshold_mask(scores, 0.0);  // only score >= 1 exactly
  CHECK(at_zero.values == std::vector<uint8_t>{0, 0});
  PixelMask mid = threshold_mask(scores, 0.2);
  CHECK(mid.values == std::vector<uint8_t>{0, 1});

  PixelGrid exact{1, 1, {1.0}};
  CHECK(threshold_mask(exact, 0.0).values == std::vector<uint8_t>{1});
}

TEST_CASE("fnr is non-increasing in lambda on random score maps") {
  RandomStream s(21);
  for (int image = 0; image < 30; ++image) {
    RandomStream is = s.fork(image);
    PixelGrid scores{8, 8, {}};
    PixelMask truth{8, 8, {}};
    scores.values.resize(64);
    truth.values.resize(64);
    for (int p = 0; p < 64; ++p) {
      scores.values[p] = is.next_uniform();
      truth.values[p] = is.next_uniform() < 0.3 ? 1 : 0;
    }
    double prev = 1.0;
    for (int g = 0; g <= 50; ++g) {
      double lambda = g / 50.0;
      double fnr = fnr_loss(threshold_mask(scores, lambda), truth);
      CHECK(fnr <= prev + 1e-12);
      prev = fnr;
    }
  }
}

TEST_CASE("pixel grid io round trip") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "rcp1_grid.csv";
  {
    std::ofstream out(p);
    out << "0.25,0.5\n0.75,1\n";
  }
  PixelGrid g = load_pixel_grid(p);
  CHECK(g.rows == 2);
  CHECK(g.cols == 2);
  CHECK(g.at(1, 0) == 0.75);

  PixelMask m = threshold_mask(g, 0.5);
  fs::path mp = fs::temp_directory_path() / "rcp1_mask.csv";
  write_pixel_mask(mp, m);
  PixelGrid back = load_pixel_grid(mp);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.values[i] == (m.values[i] ? 1.0 : 0.0));
  }
  CHECK_THROWS_AS(load_pixel_grid("/nonexistent/grid.csv"), MissingArtifact);
}

TEST_CASE("risk validity and robust dominance on synthetic pixel scores") {
  // Exchangeable images: truth pixels Bernoulli, scores higher on truth.
  // CRC at alpha = 0.15 must keep mean test FNR under alpha + 3 se, and the
  // robust lambda can never fall below the vanilla one on the same draw.
  const std::size_t n_images = 60, n_cal = 40, pixels = 36;
  const double alpha = 0.15;
  const std::size_t resamples = 400;
  RandomStream root(77);

  auto draw_image = [&](RandomStream is, PixelGrid& g, PixelMask& t) {
    g = PixelGrid{6, 6, std::vector<double>(pixels)};
    t = PixelMask{6, 6, std::vector<uint8_t>(pixels)};
    for (std::size_t p = 0; p < pixels; ++p) {
      bool truth = is.next_uniform() < 0.35;
      t.values[p] = truth ? 1 : 0;
      double u = is.next_uniform();
      g.values[p] = truth ? 0.4 + 0.6 * u : 0.6 * u;
    }
  };

  double fnr_sum = 0.0, fnr_sum2 = 0.0;
  std::size_t dominance_violations = 0;
  double mask_vanilla = 0.0, mask_robust = 0.0;
  for (std::size_t rep = 0; rep < resamples; ++rep) {
    RandomStream rs = root.fork(rep);
    std::vector<PixelGrid> grids(n_images);
    std::vector<PixelMask> truths(n_images);
    for (std::size_t i = 0; i < n_images; ++i) {
      draw_image(rs.fork(i), grids[i], truths[i]);
    }
    RiskCurve curve;
    curve.bounds = kUnit;
    curve.lambda_grid = uniform_lambda_grid(128);
    curve.eval = [&](std::size_t i, double lambda) {
      return fnr_loss(threshold_mask(grids[i], lambda), truths[i]);
    };
    LossMatrix cal = curve.tabulate(n_cal);
    CrcResult vanilla = crc_lambda(cal, kUnit, alpha);
    CrcResult robust = robust_crc_lambda(cal, kUnit, alpha,
                                         SmoothingSpec::gaussian(0.25),
                                         ThreatModel::l2(0.06));
    if (robust.lambda < vanilla.lambda) ++dominance_violations;

    double fnr = 0.0;
    for (std::size_t i = n_cal; i < n_images; ++i) {
      fnr += fnr_loss(threshold_mask(grids[i], vanilla.lambda), truths[i]);
    }
    fnr /= static_cast<double>(n_images - n_cal);
    fnr_sum += fnr;
    fnr_sum2 += fnr * fnr;

    for (std::size_t i = n_cal; i < n_images; ++i) {
      auto count = [&](const PixelMask& m) {
        double on = 0;
        for (uint8_t v : m.values) on += v;
        return on / static_cast<double>(pixels);
      };
      mask_vanilla += count(threshold_mask(grids[i], vanilla.lambda));
      mask_robust += count(threshold_mask(grids[i], robust.lambda));
    }
  }
  CHECK(dominance_violations == 0);
  double mean = fnr_sum / resamples;
  double var = fnr_sum2 / resamples - mean * mean;
  double se = std::sqrt(var / resamples);
  CHECK(mean <= alpha + 3.0 * se);
  CHECK(mask_robust > mask_vanilla);  // larger masks, direction of the trade
}
