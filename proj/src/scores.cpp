#include "rcp1/scores.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rcp1/errors.hpp"
#include "rcp1/normal.hpp"
#include "rcp1/rng.hpp"

namespace rcp1 {
namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r')) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValueError("cannot parse number '" + s + "'", row, col);
  }
}

}  // namespace

ScoreTable::ScoreTable(std::size_t n_labels, std::vector<double> values,
                       std::optional<std::vector<std::size_t>> labels)
    : n_labels_(n_labels), values_(std::move(values)), labels_(std::move(labels)) {
  if (n_labels_ == 0) throw ShapeError("score table needs at least one label column");
  if (values_.size() % n_labels_ != 0) {
    throw ShapeError("score values are not a multiple of n_labels");
  }
  n_examples_ = values_.size() / n_labels_;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValueError("non-finite score", i / n_labels_, i % n_labels_);
    }
  }
  if (labels_) {
    if (labels_->size() != n_examples_) {
      throw ShapeError("label count does not match example count");
    }
    for (std::size_t y : *labels_) {
      if (y >= n_labels_) {
        throw LabelError("label index " + std::to_string(y) +
                         " out of range [0, " + std::to_string(n_labels_) + ")");
      }
    }
  }
}

ScoreTable load_score_table(const std::filesystem::path& path,
                            TableFormat format) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open score file " + path.string());
  const char sep = format == TableFormat::Csv ? ',' : '\t';

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_fields(line, sep);
  bool with_labels = !header.empty() && header.back() == "label";
  std::size_t n_labels = header.size() - (with_labels ? 1 : 0);
  if (n_labels == 0) throw ParseError("header declares no score columns", 0);

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto fields = split_fields(line, sep);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       row);
    }
    for (std::size_t c = 0; c < n_labels; ++c) {
      double v = parse_double(fields[c], row, c);
      if (!std::isfinite(v)) throw ValueError("non-finite score", row, c);
      values.push_back(v);
    }
    if (with_labels) {
      double y = parse_double(fields[n_labels], row, n_labels);
      if (y < 0 || y != std::floor(y) || y >= static_cast<double>(n_labels)) {
        throw LabelError("label out of range in row " + std::to_string(row));
      }
      labels.push_back(static_cast<std::size_t>(y));
    }
  }
  if (values.empty()) throw ParseError("no data rows", 0);
  return ScoreTable(n_labels, std::move(values),
                    with_labels ? std::optional(std::move(labels)) : std::nullopt);
}

void write_score_table(const std::filesystem::path& path,
                       const ScoreTable& table, TableFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write score file " + path.string());
  const char sep = format == TableFormat::Csv ? ',' : '\t';
  for (std::size_t c = 0; c < table.n_labels(); ++c) {
    if (c) out << sep;
    out << "score_" << c;
  }
  if (table.has_labels()) out << sep << "label";
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < table.n_examples(); ++i) {
    for (std::size_t c = 0; c < table.n_labels(); ++c) {
      if (c) out << sep;
      std::snprintf(buf, sizeof buf, "%.17g", table.at(i, c));
      out << buf;
    }
    if (table.has_labels()) out << sep << table.label(i);
    out << '\n';
  }
}

ScoreTable softmax_scores(const ScoreTable& logits) {
  std::vector<double> out(logits.n_examples() * logits.n_labels());
  for (std::size_t i = 0; i < logits.n_examples(); ++i) {
    auto row = logits.row(i);
    double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      double e = std::exp(row[c] - m);
      out[i * row.size() + c] = e;
      z += e;
    }
    for (std::size_t c = 0; c < row.size(); ++c) out[i * row.size() + c] /= z;
  }
  auto labels = logits.has_labels() ? std::optional(logits.labels()) : std::nullopt;
  return ScoreTable(logits.n_labels(), std::move(out), std::move(labels));
}

ScoreTable aps_scores(const ScoreTable& probs, uint64_t seed) {
  const std::size_t k = probs.n_labels();
  std::vector<double> out(probs.n_examples() * k);
  for (std::size_t i = 0; i < probs.n_examples(); ++i) {
    auto row = probs.row(i);
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValueError("aps_scores requires probability rows");
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw ValueError("aps_scores requires rows summing to 1");
    }
    double u = uniform_at(seed, i);
    for (std::size_t c = 0; c < k; ++c) {
      double above = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (row[j] > row[c]) above += row[j];
      }
      out[i * k + c] = -(row[c] * u + above);
    }
  }
  auto labels = probs.has_labels() ? std::optional(probs.labels()) : std::nullopt;
  return ScoreTable(k, std::move(out), std::move(labels));
}

ScoreTable apply_score_kind(const ScoreTable& table, const ScoreKind& kind) {
  switch (kind.variant) {
    case ScoreKindVariant::Logit:
      return table;
    case ScoreKindVariant::Tps:
      return softmax_scores(table);
    case ScoreKindVariant::Aps: {
      if (!kind.aps_seed) {
        throw DomainError("aps score kind requires a seed for replay");
      }
      return aps_scores(softmax_scores(table), *kind.aps_seed);
    }
  }
  throw Error("unreachable score kind");
}

double NoiseDraw::component(std::size_t j) const {
  double u = uniform_at(key_, j);
  switch (smoothing_.scheme) {
    case Scheme::Gaussian:
      return smoothing_.param * normal_quantile(u);
    case Scheme::Laplace: {
      double c = u - 0.5;
      return -smoothing_.param *
             std::copysign(std::log(1.0 - 2.0 * std::fabs(c)), c);
    }
    case Scheme::Uniform:
      return smoothing_.param * (2.0 * u - 1.0);
  }
  throw Error("unreachable scheme");
}

ScoreTable augment_once(std::size_t n_examples, const RowScoreFn& clean_scores_fn,
                        const SmoothingSpec& smoothing, uint64_t seed,
                        std::optional<std::vector<std::size_t>> labels) {
  if (n_examples == 0) throw DomainError("augment_once needs at least one example");
  std::vector<double> values;
  std::size_t n_labels = 0;
  for (std::size_t i = 0; i < n_examples; ++i) {
    NoiseDraw draw(smoothing, mix_key(seed, i));
    std::vector<double> row;
    try {
      row = clean_scores_fn(i, draw);
    } catch (const std::exception& e) {
      throw Error("score callback failed at example " + std::to_string(i) +
                  ": " + e.what());
    }
    if (i == 0) {
      n_labels = row.size();
      values.reserve(n_examples * n_labels);
    } else if (row.size() != n_labels) {
      throw ShapeError("score callback returned inconsistent row width at example " +
                       std::to_string(i));
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return ScoreTable(n_labels, std::move(values), std::move(labels));
}

}  // namespace rcp1
