#include "rcp1/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "rcp1/errors.hpp"
#include "rcp1/normal.hpp"
#include "rcp1/rng.hpp"
#include "rcp1/scores.hpp"

namespace rcp1 {
namespace {

// Stream roles; keeps every trial replayable in isolation.
enum Role : uint64_t {
  kRoleModel = 1,
  kRoleData = 2,
  kRoleAugmentCal = 3,
  kRoleAugmentTest = 4,
};

std::size_t thread_budget(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t n = hw == 0 ? 1 : hw;
  if (const char* env = std::getenv("RCP1_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Pairwise summation over a trial-indexed vector: the reduction tree depends
// only on the length, never on thread scheduling.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(std::span<const double> v) {
  const auto n = static_cast<double>(v.size());
  double mean = pairwise_sum(v) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

struct TrialOutcome {
  double clean_rcp1 = 0.0;
  double worst_rcp1 = 0.0;
  double clean_vanilla = 0.0;
  double worst_vanilla = 0.0;
  double size_rcp1 = 0.0;
  double size_vanilla = 0.0;
};

struct Dataset {
  std::vector<double> points;  // row-major n x d
  std::vector<std::size_t> labels;
};

// Exchangeable synthetic draw: label uniform over K, point centered so the
// true-label margin is kMargin plus isotropic N(0, sigma_data^2) noise.
constexpr double kMargin = 1.0;

Dataset draw_dataset(const HalfspaceModel& model, std::size_t n,
                     RandomStream stream) {
  const std::size_t d = model.weight.size();
  const std::size_t k = model.offsets.size();
  const double w2 = model.weight_norm() * model.weight_norm();
  Dataset data;
  data.points.resize(n * d);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream row = stream.fork(i);
    auto y = static_cast<std::size_t>(row.next_uniform() * static_cast<double>(k));
    y = std::min(y, k - 1);
    data.labels[i] = y;
    double c = (model.offsets[y] + kMargin) / w2;
    for (std::size_t j = 0; j < d; ++j) {
      data.points[i * d + j] =
          c * model.weight[j] + model.sigma_data * row.next_gaussian();
    }
  }
  return data;
}

HalfspaceModel draw_model(std::size_t d, std::size_t k, RandomStream stream) {
  HalfspaceModel model;
  model.weight.resize(d);
  model.offsets.resize(k);
  model.sigma_data = 1.0;
  for (auto& w : model.weight) w = stream.next_gaussian();
  for (auto& o : model.offsets) o = stream.next_gaussian();
  return model;
}

// Scores of the noise-augmented row i for every label. The smoothing noise
// enters only through w.eps, drawn coordinate-wise from the NoiseDraw.
ScoreTable augment_dataset(const HalfspaceModel& model, const Dataset& data,
                           const SmoothingSpec& smoothing, uint64_t key) {
  const std::size_t d = model.weight.size();
  const std::size_t k = model.offsets.size();
  RowScoreFn fn = [&](std::size_t i, const NoiseDraw& draw) {
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += model.weight[j] * (data.points[i * d + j] + draw.component(j));
    }
    std::vector<double> row(k);
    for (std::size_t y = 0; y < k; ++y) row[y] = dot - model.offsets[y];
    return row;
  };
  return augment_once(data.labels.size(), fn, smoothing, key, data.labels);
}

TrialOutcome run_trial(const ExperimentConfig& cfg, uint64_t trial) {
  RandomStream trial_stream = RandomStream(cfg.seed).fork(trial);
  HalfspaceModel model =
      draw_model(cfg.dim, cfg.n_labels, trial_stream.fork(kRoleModel));
  Dataset cal = draw_dataset(model, cfg.n_cal,
                             trial_stream.fork(kRoleData).fork(0));
  Dataset test = draw_dataset(model, cfg.n_test,
                              trial_stream.fork(kRoleData).fork(1));

  SmoothingSpec smoothing = SmoothingSpec::gaussian(cfg.sigma);
  ThreatModel threat = ThreatModel::l2(cfg.radius);
  uint64_t cal_key = mix_key(mix_key(cfg.seed, trial), kRoleAugmentCal);
  uint64_t test_key = mix_key(mix_key(cfg.seed, trial), kRoleAugmentTest);

  ScoreTable cal_aug = augment_dataset(model, cal, smoothing, cal_key);
  ScoreTable test_aug = augment_dataset(model, test, smoothing, test_key);

  CalibrationResult robust =
      calibrate_rcp1(cal_aug, ScoreKind::logit(), cfg.alpha, smoothing, threat);
  CalibrationResult vanilla =
      calibrate_vanilla(cal_aug, ScoreKind::logit(), cfg.alpha);

  TrialOutcome out;
  const auto n = static_cast<double>(cfg.n_test);
  for (std::size_t i = 0; i < cfg.n_test; ++i) {
    std::span<const double> point(test.points.data() + i * cfg.dim, cfg.dim);
    std::size_t y = test.labels[i];
    double s = test_aug.at(i, y);

    out.clean_rcp1 += (robust.vacuous || s >= robust.threshold_q) ? 1.0 : 0.0;
    out.clean_vanilla += s >= vanilla.threshold_q ? 1.0 : 0.0;
    out.worst_rcp1 +=
        robust.vacuous
            ? 1.0
            : halfspace_worst_case(model, point, y, cfg.sigma,
                                   robust.threshold_q, cfg.radius);
    out.worst_vanilla += halfspace_worst_case(model, point, y, cfg.sigma,
                                              vanilla.threshold_q, cfg.radius);
    out.size_rcp1 += static_cast<double>(
        predict_set(test_aug.row(i), robust, i).members.size());
    out.size_vanilla += static_cast<double>(
        predict_set(test_aug.row(i), vanilla, i).members.size());
  }
  out.clean_rcp1 /= n;
  out.worst_rcp1 /= n;
  out.clean_vanilla /= n;
  out.worst_vanilla /= n;
  out.size_rcp1 /= n;
  out.size_vanilla /= n;
  return out;
}

}  // namespace

double HalfspaceModel::weight_norm() const {
  double s = 0.0;
  for (double w : weight) s += w * w;
  return std::sqrt(s);
}

double HalfspaceModel::score(std::span<const double> point,
                             std::size_t label) const {
  double dot = std::inner_product(weight.begin(), weight.end(), point.begin(), 0.0);
  return dot - offsets[label];
}

double halfspace_smooth_prob(const HalfspaceModel& model,
                             std::span<const double> point, std::size_t label,
                             double sigma, double q_threshold) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
  double norm = model.weight_norm();
  if (!(norm > 0.0)) throw DomainError("halfspace weight must be nonzero");
  // w.(x + eps) - offset >= q  <=>  N(margin, (sigma |w|)^2) >= 0.
  double margin = model.score(point, label) - q_threshold;
  return normal_cdf(margin, sigma * norm);
}

double halfspace_worst_case(const HalfspaceModel& model,
                            std::span<const double> point, std::size_t label,
                            double sigma, double q_threshold, double radius) {
  if (!(radius >= 0.0)) throw DomainError("radius must be >= 0");
  double norm = model.weight_norm();
  double margin = model.score(point, label) - q_threshold - radius * norm;
  return normal_cdf(margin, sigma * norm);
}

CoverageDistribution beta_coverage_samples(std::size_t n_calibration,
                                           double alpha, std::size_t n_samples,
                                           uint64_t seed) {
  if (n_calibration < 1) throw DomainError("need at least one calibration point");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must be in (0, 1)");
  const double n1 = static_cast<double>(n_calibration) + 1.0;
  const double a = (1.0 - alpha) * n1;
  const double b = alpha * n1;
  CoverageDistribution dist;
  dist.n_calibration = n_calibration;
  dist.alpha = alpha;
  dist.samples.resize(n_samples);
  RandomStream root(seed);
  for (std::size_t i = 0; i < n_samples; ++i) {
    RandomStream s = root.fork(i);
    dist.samples[i] = s.next_beta(a, b);
  }
  return dist;
}

CoverageDistribution pushforward_worst_coverage(const CoverageDistribution& dist,
                                                const SmoothingSpec& smoothing,
                                                const ThreatModel& threat) {
  CoverageDistribution out = dist;
  for (double& s : out.samples) {
    s = lower_bound(s, smoothing, threat).value;
  }
  return out;
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open config " + path.string());
  ExperimentConfig cfg;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", row);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    try {
      if (key == "d") cfg.dim = std::stoul(value);
      else if (key == "labels") cfg.n_labels = std::stoul(value);
      else if (key == "n_cal") cfg.n_cal = std::stoul(value);
      else if (key == "n_test") cfg.n_test = std::stoul(value);
      else if (key == "alpha") cfg.alpha = std::stod(value);
      else if (key == "sigma") cfg.sigma = std::stod(value);
      else if (key == "radius") cfg.radius = std::stod(value);
      else if (key == "trials") cfg.trials = std::stoul(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else throw ParseError("unknown config key '" + key + "'", row);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ValueError("cannot parse value for '" + key + "'", row, 0);
    }
  }
  return cfg;
}

ExperimentResult run_coverage_experiment(const ExperimentConfig& cfg) {
  if (cfg.dim == 0 || cfg.n_labels == 0 || cfg.n_cal == 0 || cfg.n_test == 0 ||
      cfg.trials == 0) {
    throw DomainError("all experiment counts must be positive");
  }
  std::vector<TrialOutcome> outcomes(cfg.trials);
  std::atomic<std::size_t> next{0};
  std::size_t workers = thread_budget(cfg.trials);
  auto work = [&] {
    for (;;) {
      std::size_t t = next.fetch_add(1);
      if (t >= cfg.trials) break;
      outcomes[t] = run_trial(cfg, t);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  auto column = [&](double TrialOutcome::* field) {
    std::vector<double> v(cfg.trials);
    for (std::size_t t = 0; t < cfg.trials; ++t) v[t] = outcomes[t].*field;
    return v;
  };

  ExperimentResult res;
  res.config = cfg;
  res.adjusted_level =
      upper_bound(1.0 - cfg.alpha, SmoothingSpec::gaussian(cfg.sigma),
                  ThreatModel::l2(cfg.radius))
          .value;
  auto cr = mean_se(column(&TrialOutcome::clean_rcp1));
  auto wr = mean_se(column(&TrialOutcome::worst_rcp1));
  auto cv = mean_se(column(&TrialOutcome::clean_vanilla));
  auto wv = mean_se(column(&TrialOutcome::worst_vanilla));
  res.clean_coverage_rcp1 = cr.mean;
  res.se_clean_rcp1 = cr.se;
  res.worst_coverage_rcp1 = wr.mean;
  res.se_worst_rcp1 = wr.se;
  res.clean_coverage_vanilla = cv.mean;
  res.se_clean_vanilla = cv.se;
  res.worst_coverage_vanilla = wv.mean;
  res.se_worst_vanilla = wv.se;
  res.mean_size_rcp1 = mean_se(column(&TrialOutcome::size_rcp1)).mean;
  res.mean_size_vanilla = mean_se(column(&TrialOutcome::size_vanilla)).mean;
  return res;
}

}  // namespace rcp1
