#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcp1/certificates.hpp"

namespace rcp1 {

// Per-example, per-label conformity scores (or raw logits) with optional
// true labels; the artifact's stand-in for model inference. Immutable after
// construction: all entries finite, labels (when present) in [0, n_labels).
class ScoreTable {
 public:
  ScoreTable(std::size_t n_labels, std::vector<double> values,
             std::optional<std::vector<std::size_t>> labels = std::nullopt);

  std::size_t n_examples() const { return n_examples_; }
  std::size_t n_labels() const { return n_labels_; }
  bool has_labels() const { return labels_.has_value(); }

  double at(std::size_t example, std::size_t label) const {
    return values_[example * n_labels_ + label];
  }
  std::span<const double> row(std::size_t example) const {
    return {values_.data() + example * n_labels_, n_labels_};
  }
  std::size_t label(std::size_t example) const { return (*labels_)[example]; }
  const std::vector<std::size_t>& labels() const { return *labels_; }

 private:
  std::size_t n_examples_;
  std::size_t n_labels_;
  std::vector<double> values_;  // row-major
  std::optional<std::vector<std::size_t>> labels_;
};

enum class ScoreKindVariant { Tps, Aps, Logit };

// Which conformity score to derive from raw model outputs. TPS applies a
// softmax; APS additionally accumulates the softmax mass of strictly
// higher-ranked labels with a per-example randomizer u seeded by aps_seed.
struct ScoreKind {
  ScoreKindVariant variant = ScoreKindVariant::Tps;
  std::optional<uint64_t> aps_seed;

  static ScoreKind tps() { return {ScoreKindVariant::Tps, std::nullopt}; }
  static ScoreKind aps(uint64_t seed) { return {ScoreKindVariant::Aps, seed}; }
  static ScoreKind logit() { return {ScoreKindVariant::Logit, std::nullopt}; }
};

enum class TableFormat { Csv, Tsv };

// Reads a score file: header `score_0,...,score_{K-1}[,label]`, '.' decimal
// separator, LF or CRLF. Row order is preserved.
ScoreTable load_score_table(const std::filesystem::path& path,
                            TableFormat format);
void write_score_table(const std::filesystem::path& path,
                       const ScoreTable& table, TableFormat format);

// Row-wise softmax with per-row max subtraction; rows of the result are
// probability vectors summing to 1 within 1e-12.
ScoreTable softmax_scores(const ScoreTable& logits);

// APS conformity scores from probability rows:
//   s(x, y) = -[ pi(x, y) * u + sum_k pi(x, y_k) * 1[pi(x, y_k) > pi(x, y)] ]
// with one u ~ Uniform[0, 1] per example derived from (seed, example).
// Ties are excluded by the strict inequality.
ScoreTable aps_scores(const ScoreTable& probs, uint64_t seed);

// Applies the score kind to a table of raw model outputs.
ScoreTable apply_score_kind(const ScoreTable& table, const ScoreKind& kind);

// Lazy view of one noise vector epsilon drawn from the smoothing scheme.
// component(j) is deterministic in (seed, example, j), so reading order and
// row order never change the draw.
class NoiseDraw {
 public:
  NoiseDraw(const SmoothingSpec& smoothing, uint64_t key)
      : smoothing_(smoothing), key_(key) {}
  double component(std::size_t j) const;

 private:
  SmoothingSpec smoothing_;
  uint64_t key_;
};

using RowScoreFn =
    std::function<std::vector<double>(std::size_t example, const NoiseDraw&)>;

// Single-sample augmentation: invokes the callback exactly once per example
// with that example's noise draw, and assembles the returned rows into a
// table. Draws are independent across examples and reproducible from seed.
// Callback failures are rethrown with the example index attached.
ScoreTable augment_once(std::size_t n_examples, const RowScoreFn& clean_scores_fn,
                        const SmoothingSpec& smoothing, uint64_t seed,
                        std::optional<std::vector<std::size_t>> labels = std::nullopt);

}  // namespace rcp1
