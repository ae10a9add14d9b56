#include "rcp1/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rcp1/errors.hpp"

namespace rcp1 {
namespace {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Gaussian: return "gaussian";
    case Scheme::Laplace: return "laplace";
    case Scheme::Uniform: return "uniform";
  }
  return "?";
}

Scheme scheme_from(const std::string& s) {
  if (s == "gaussian") return Scheme::Gaussian;
  if (s == "laplace") return Scheme::Laplace;
  if (s == "uniform") return Scheme::Uniform;
  throw ValueError("unknown scheme '" + s + "'");
}

std::string kind_name(ScoreKindVariant v) {
  switch (v) {
    case ScoreKindVariant::Tps: return "tps";
    case ScoreKindVariant::Aps: return "aps";
    case ScoreKindVariant::Logit: return "logit";
  }
  return "?";
}

ScoreKindVariant kind_from(const std::string& s) {
  if (s == "tps") return ScoreKindVariant::Tps;
  if (s == "aps") return ScoreKindVariant::Aps;
  if (s == "logit") return ScoreKindVariant::Logit;
  throw ValueError("unknown score kind '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

void write_calibration(const std::filesystem::path& path,
                       const CalibrationArtifact& artifact) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write calibration artifact " + path.string());
  const CalibrationResult& c = artifact.calib;
  out << "tool=" << kToolVersion << '\n';
  out << "threshold=" << (c.vacuous ? "VACUOUS" : format_double(c.threshold_q))
      << '\n';
  out << "alpha=" << format_double(artifact.alpha) << '\n';
  out << "nominal_level=" << format_double(c.nominal_level) << '\n';
  out << "adjusted_level=" << format_double(c.adjusted_level) << '\n';
  out << "n_calibration=" << c.n_calibration << '\n';
  out << "n_labels=" << c.n_labels << '\n';
  out << "scheme=" << scheme_name(c.smoothing.scheme) << '\n';
  out << "param=" << format_double(c.smoothing.param) << '\n';
  out << "norm=" << (c.threat.norm == Norm::L1 ? "l1" : "l2") << '\n';
  out << "radius=" << format_double(c.threat.radius) << '\n';
  out << "score_kind=" << kind_name(artifact.score_kind.variant) << '\n';
  if (artifact.score_kind.aps_seed) {
    out << "aps_seed=" << *artifact.score_kind.aps_seed << '\n';
  }
  out << "seed=" << artifact.seed << '\n';
}

CalibrationArtifact read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("missing calibration artifact " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", row);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw ValueError("calibration artifact missing key '" + key + "'");
    }
    return it->second;
  };

  CalibrationArtifact art;
  CalibrationResult& c = art.calib;
  std::string threshold = need("threshold");
  c.vacuous = threshold == "VACUOUS";
  c.threshold_q = c.vacuous ? -std::numeric_limits<double>::infinity()
                            : std::stod(threshold);
  art.alpha = std::stod(need("alpha"));
  c.nominal_level = std::stod(need("nominal_level"));
  c.adjusted_level = std::stod(need("adjusted_level"));
  c.n_calibration = std::stoul(need("n_calibration"));
  c.n_labels = std::stoul(need("n_labels"));
  c.smoothing.scheme = scheme_from(need("scheme"));
  c.smoothing.param = std::stod(need("param"));
  c.threat.norm = need("norm") == "l1" ? Norm::L1 : Norm::L2;
  c.threat.radius = std::stod(need("radius"));
  art.score_kind.variant = kind_from(need("score_kind"));
  if (auto it = kv.find("aps_seed"); it != kv.end()) {
    art.score_kind.aps_seed = std::stoull(it->second);
  }
  art.seed = std::stoull(need("seed"));
  return art;
}

void write_prediction_sets(const std::filesystem::path& path,
                           const std::vector<PredictionSet>& sets) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write prediction sets " + path.string());
  for (const auto& set : sets) {
    for (std::size_t i = 0; i < set.members.size(); ++i) {
      if (i) out << ' ';
      out << set.members[i];
    }
    out << '\n';
  }
}

std::vector<PredictionSet> read_prediction_sets(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("missing prediction sets " + path.string());
  std::vector<PredictionSet> sets;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    PredictionSet set;
    set.example_id = sets.size();
    std::istringstream fields(line);
    std::size_t y = 0;
    while (fields >> y) set.members.push_back(y);
    sets.push_back(std::move(set));
  }
  return sets;
}

void append_metrics_row(const std::filesystem::path& path,
                        const MetricsRow& row) {
  bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot write metrics file " + path.string());
  if (fresh) {
    out << "alpha,sigma,radius,seed,coverage,mean_size";
    for (const auto& t : row.per_threshold) {
      out << ",prop_le_" << t.threshold << ",cov_le_" << t.threshold;
    }
    out << '\n';
  }
  out << format_double(row.alpha) << ',' << format_double(row.sigma) << ','
      << format_double(row.radius) << ',' << row.seed << ','
      << format_double(row.coverage) << ',' << format_double(row.mean_size);
  for (const auto& t : row.per_threshold) {
    out << ',' << format_double(t.proportion) << ',' << format_double(t.coverage);
  }
  out << '\n';
}

}  // namespace rcp1
