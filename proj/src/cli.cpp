#include "rcp1/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcp1/artifacts.hpp"
#include "rcp1/certificates.hpp"
#include "rcp1/conformal.hpp"
#include "rcp1/errors.hpp"
#include "rcp1/risk.hpp"
#include "rcp1/rng.hpp"
#include "rcp1/scores.hpp"
#include "rcp1/simulate.hpp"

namespace rcp1 {
namespace {

constexpr uint64_t kDefaultSeed = 1;  // fixed default, never wall-clock

struct SchemeFlags {
  std::string scheme = "gaussian";
  double sigma = 0.5;
  double scale = 0.5;
  double half_width = 0.5;
  bool sigma_matched = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scheme", scheme, "Smoothing scheme")
        ->check(CLI::IsMember({"gaussian", "laplace", "uniform"}))
        ->capture_default_str();
    cmd->add_option("--sigma", sigma, "Gaussian sigma")->capture_default_str();
    cmd->add_option("--scale", scale, "Laplace scale")->capture_default_str();
    cmd->add_option("--half-width", half_width, "Uniform half-width")
        ->capture_default_str();
    cmd->add_flag("--sigma-matched", sigma_matched,
                  "Uniform only: derive the half-width as sigma * sqrt(3) "
                  "(equal standard deviation)");
  }

  SmoothingSpec build() const {
    if (scheme == "gaussian") return SmoothingSpec::gaussian(sigma);
    if (scheme == "laplace") return SmoothingSpec::laplace(scale);
    double a = sigma_matched ? sigma * std::sqrt(3.0) : half_width;
    return SmoothingSpec::uniform(a);
  }
};

ThreatModel build_threat(const std::string& norm, double radius) {
  return norm == "l1" ? ThreatModel::l1(radius) : ThreatModel::l2(radius);
}

TableFormat parse_format(const std::string& f) {
  return f == "tsv" ? TableFormat::Tsv : TableFormat::Csv;
}

ScoreKind build_score_kind(const std::string& name, uint64_t aps_seed) {
  if (name == "tps") return ScoreKind::tps();
  if (name == "logit") return ScoreKind::logit();
  return ScoreKind::aps(aps_seed);
}

void print_bound(const char* label, const CertifiedBound& b) {
  std::printf("%s=%.12g vacuous=%d\n", label, b.value, b.vacuous ? 1 : 0);
}

int cmd_certify(double beta, const SchemeFlags& scheme, const std::string& norm,
                double radius) {
  SmoothingSpec smoothing = scheme.build();
  ThreatModel threat = build_threat(norm, radius);
  print_bound("c_down", lower_bound(beta, smoothing, threat));
  print_bound("c_up", upper_bound(beta, smoothing, threat));
  return 0;
}

// Test-time APS draws must stay independent of the calibration draws made
// with the same seed, so each stage mixes in its own role constant.
ScoreKind stage_kind(const ScoreKind& kind, uint64_t role) {
  ScoreKind k = kind;
  if (k.aps_seed) k.aps_seed = mix_key(*k.aps_seed, role);
  return k;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Single-sample robust conformal prediction"};
  app.require_subcommand(1);

  // certify ---------------------------------------------------------------
  auto* certify = app.add_subcommand("certify", "Print c_down and c_up");
  double beta = 0.9, radius = 0.0;
  std::string norm = "l2";
  SchemeFlags certify_scheme;
  certify->add_option("--beta", beta, "Clean smoothed value")->required();
  certify_scheme.add_to(certify);
  certify->add_option("--norm", norm, "Threat norm")
      ->check(CLI::IsMember({"l1", "l2"}))
      ->capture_default_str();
  certify->add_option("--r", radius, "Perturbation radius")->capture_default_str();

  // calibrate ---------------------------------------------------------------
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a threshold");
  std::string cal_scores, cal_out, cal_format = "csv", cal_kind = "tps";
  double cal_alpha = 0.1, cal_radius = 0.0;
  std::string cal_norm = "l2";
  uint64_t cal_seed = kDefaultSeed;
  SchemeFlags cal_scheme;
  calibrate->add_option("--scores", cal_scores, "Calibration score file")->required();
  calibrate->add_option("--format", cal_format)->check(CLI::IsMember({"csv", "tsv"}));
  calibrate->add_option("--score-kind", cal_kind)
      ->check(CLI::IsMember({"tps", "aps", "logit"}))
      ->capture_default_str();
  calibrate->add_option("--alpha", cal_alpha, "Miscoverage level")
      ->capture_default_str();
  cal_scheme.add_to(calibrate);
  calibrate->add_option("--norm", cal_norm)->check(CLI::IsMember({"l1", "l2"}));
  calibrate->add_option("--r", cal_radius, "Certified radius (0 = vanilla)")
      ->capture_default_str();
  calibrate->add_option("--seed", cal_seed, "RNG seed (APS randomizer)")
      ->capture_default_str();
  calibrate->add_option("--out", cal_out, "Calibration artifact path")->required();

  // predict -----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Write prediction sets");
  std::string pred_scores, pred_calib, pred_out, pred_format = "csv";
  predict->add_option("--scores", pred_scores, "Test score file")->required();
  predict->add_option("--format", pred_format)->check(CLI::IsMember({"csv", "tsv"}));
  predict->add_option("--calibration", pred_calib, "Calibration artifact")->required();
  predict->add_option("--out", pred_out, "Output sets file")->required();

  // evaluate ------------------------------------------------------------
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score prediction sets");
  std::string eval_sets, eval_scores, eval_calib, eval_out, eval_format = "csv";
  std::vector<std::size_t> eval_thresholds;
  evaluate_cmd->add_option("--sets", eval_sets, "Prediction sets file")->required();
  evaluate_cmd->add_option("--scores", eval_scores, "Labeled score file")->required();
  evaluate_cmd->add_option("--format", eval_format)
      ->check(CLI::IsMember({"csv", "tsv"}));
  evaluate_cmd->add_option("--calibration", eval_calib, "Calibration artifact")
      ->required();
  evaluate_cmd->add_option("--thresholds", eval_thresholds,
                           "Set-size thresholds for prop/cov columns");
  evaluate_cmd->add_option("--out", eval_out, "Metrics CSV")->required();

  // risk ----------------------------------------------------------------
  auto* risk_cmd = app.add_subcommand("risk", "Conformal risk control on pixel grids");
  std::string risk_dir, risk_out, risk_masks;
  std::size_t risk_ncal = 100, risk_grid = 512;
  double risk_alpha = 0.15, risk_radius = 0.0;
  uint64_t risk_seed = kDefaultSeed;
  SchemeFlags risk_scheme;
  risk_cmd->add_option("--data", risk_dir,
                       "Directory with scores_<i>.csv / truth_<i>.csv pairs")
      ->required();
  risk_cmd->add_option("--n-cal", risk_ncal, "Calibration images")
      ->capture_default_str();
  risk_cmd->add_option("--alpha", risk_alpha, "Risk level")->capture_default_str();
  risk_cmd->add_option("--grid-size", risk_grid, "Lambda grid points")
      ->capture_default_str();
  risk_scheme.add_to(risk_cmd);
  risk_cmd->add_option("--r", risk_radius, "Certified radius (0 = vanilla)")
      ->capture_default_str();
  risk_cmd->add_option("--seed", risk_seed)->capture_default_str();
  risk_cmd->add_option("--out", risk_out, "Metrics CSV")->required();
  risk_cmd->add_option("--masks-out", risk_masks, "Directory for test masks");

  // simulate --------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage experiment");
  std::string sim_config, sim_out;
  simulate->add_option("--config", sim_config, "key=value experiment config")
      ->required();
  simulate->add_option("--out", sim_out, "Metrics CSV to append to");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;
    }

    if (app.got_subcommand(certify)) {
      return cmd_certify(beta, certify_scheme, norm, radius);
    }

    if (app.got_subcommand(calibrate)) {
      ScoreTable table = load_score_table(cal_scores, parse_format(cal_format));
      ScoreKind kind = stage_kind(build_score_kind(cal_kind, cal_seed), 0);
      CalibrationResult result =
          calibrate_rcp1(table, kind, cal_alpha, cal_scheme.build(),
                         build_threat(cal_norm, cal_radius));
      write_calibration(cal_out, {result, kind, cal_alpha, cal_seed});
      std::printf("threshold=%s adjusted_level=%.12g vacuous=%d\n",
                  result.vacuous ? "VACUOUS" : format_double(result.threshold_q).c_str(),
                  result.adjusted_level, result.vacuous ? 1 : 0);
      return 0;
    }

    if (app.got_subcommand(predict)) {
      CalibrationArtifact art = read_calibration(pred_calib);
      ScoreTable table = load_score_table(pred_scores, parse_format(pred_format));
      ScoreTable scored = apply_score_kind(table, stage_kind(art.score_kind, 1));
      std::vector<PredictionSet> sets;
      sets.reserve(scored.n_examples());
      for (std::size_t i = 0; i < scored.n_examples(); ++i) {
        sets.push_back(predict_set(scored.row(i), art.calib, i));
      }
      write_prediction_sets(pred_out, sets);
      return 0;
    }

    if (app.got_subcommand(evaluate_cmd)) {
      CalibrationArtifact art = read_calibration(eval_calib);
      std::vector<PredictionSet> sets = read_prediction_sets(eval_sets);
      ScoreTable table = load_score_table(eval_scores, parse_format(eval_format));
      if (!table.has_labels()) {
        throw LabelError("evaluate requires a labeled score file");
      }
      EvalMetrics metrics = evaluate(sets, table.labels(), eval_thresholds);
      MetricsRow row;
      row.alpha = art.alpha;
      row.sigma = art.calib.smoothing.param;
      row.radius = art.calib.threat.radius;
      row.seed = art.seed;
      row.coverage = metrics.coverage;
      row.mean_size = metrics.mean_size;
      row.per_threshold = metrics.per_threshold;
      append_metrics_row(eval_out, row);
      std::printf("coverage=%.12g mean_size=%.12g\n", metrics.coverage,
                  metrics.mean_size);
      return 0;
    }

    if (app.got_subcommand(risk_cmd)) {
      namespace fs = std::filesystem;
      std::vector<PixelGrid> scores;
      std::vector<PixelMask> truths;
      for (std::size_t i = 0;; ++i) {
        fs::path s = fs::path(risk_dir) / ("scores_" + std::to_string(i) + ".csv");
        fs::path t = fs::path(risk_dir) / ("truth_" + std::to_string(i) + ".csv");
        if (!fs::exists(s)) break;
        scores.push_back(load_pixel_grid(s));
        PixelGrid tg = load_pixel_grid(t);
        PixelMask tm;
        tm.rows = tg.rows;
        tm.cols = tg.cols;
        tm.values.resize(tg.values.size());
        for (std::size_t p = 0; p < tg.values.size(); ++p) {
          tm.values[p] = tg.values[p] > 0.5 ? 1 : 0;
        }
        truths.push_back(std::move(tm));
      }
      if (scores.size() < 2 || risk_ncal == 0 || risk_ncal >= scores.size()) {
        throw DomainError("risk needs n-cal in [1, n_images)");
      }

      RiskBounds bounds{0.0, 1.0};
      RiskCurve curve;
      curve.bounds = bounds;
      curve.lambda_grid = uniform_lambda_grid(risk_grid);
      curve.eval = [&](std::size_t i, double lambda) {
        return fnr_loss(threshold_mask(scores[i], lambda), truths[i]);
      };
      LossMatrix cal_losses = curve.tabulate(risk_ncal);

      CrcResult pick =
          risk_radius > 0.0
              ? robust_crc_lambda(cal_losses, bounds, risk_alpha,
                                  risk_scheme.build(),
                                  build_threat("l2", risk_radius))
              : crc_lambda(cal_losses, bounds, risk_alpha);

      double fnr_sum = 0.0, fnr_sum2 = 0.0, mask_prop = 0.0;
      std::size_t n_test = scores.size() - risk_ncal;
      for (std::size_t i = risk_ncal; i < scores.size(); ++i) {
        PixelMask mask = threshold_mask(scores[i], pick.lambda);
        double fnr = fnr_loss(mask, truths[i]);
        fnr_sum += fnr;
        fnr_sum2 += fnr * fnr;
        double on = 0.0;
        for (uint8_t v : mask.values) on += v;
        mask_prop += on / static_cast<double>(mask.values.size());
        if (!risk_masks.empty()) {
          fs::create_directories(risk_masks);
          write_pixel_mask(
              fs::path(risk_masks) / ("mask_" + std::to_string(i) + ".csv"), mask);
        }
      }
      MetricsRow row;
      row.alpha = risk_alpha;
      row.sigma = risk_scheme.build().param;
      row.radius = risk_radius;
      row.seed = risk_seed;
      row.coverage = 1.0 - fnr_sum / static_cast<double>(n_test);
      row.mean_size = mask_prop / static_cast<double>(n_test);
      append_metrics_row(risk_out, row);
      // The guarantee is an expectation over the exchangeable bundle; the
      // per-image spread is reported alongside, as a separate quantity.
      double mean_fnr = fnr_sum / static_cast<double>(n_test);
      double var_images =
          std::max(0.0, fnr_sum2 / static_cast<double>(n_test) - mean_fnr * mean_fnr);
      std::printf(
          "lambda=%.12g unsatisfiable=%d mean_fnr=%.12g fnr_sd_images=%.12g "
          "mask_prop=%.12g\n",
          pick.lambda, pick.unsatisfiable ? 1 : 0, mean_fnr,
          std::sqrt(var_images), mask_prop / static_cast<double>(n_test));
      return 0;
    }

    if (app.got_subcommand(simulate)) {
      ExperimentConfig cfg = parse_experiment_config(sim_config);
      ExperimentResult res = run_coverage_experiment(cfg);
      std::printf("adjusted_level=%.12g\n", res.adjusted_level);
      std::printf("clean_coverage_rcp1=%.12g se=%.6g\n", res.clean_coverage_rcp1,
                  res.se_clean_rcp1);
      std::printf("worst_coverage_rcp1=%.12g se=%.6g\n", res.worst_coverage_rcp1,
                  res.se_worst_rcp1);
      std::printf("clean_coverage_vanilla=%.12g se=%.6g\n",
                  res.clean_coverage_vanilla, res.se_clean_vanilla);
      std::printf("worst_coverage_vanilla=%.12g se=%.6g\n",
                  res.worst_coverage_vanilla, res.se_worst_vanilla);
      std::printf("mean_size_rcp1=%.12g mean_size_vanilla=%.12g\n",
                  res.mean_size_rcp1, res.mean_size_vanilla);
      if (!sim_out.empty()) {
        MetricsRow row;
        row.alpha = cfg.alpha;
        row.sigma = cfg.sigma;
        row.radius = cfg.radius;
        row.seed = cfg.seed;
        row.coverage = res.worst_coverage_rcp1;
        row.mean_size = res.mean_size_rcp1;
        append_metrics_row(sim_out, row);
      }
      return 0;
    }

    return 2;
  } catch (const MissingArtifact& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const UnsupportedCertificate& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ValueError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const LabelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}

}  // namespace rcp1
