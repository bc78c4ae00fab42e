#pragma once

// Query strategies. Retraining-based strategies hypothetically label each
// pool candidate with each class, retrain on L + {(x, y)}, score the retrained
// model with a criterion V(x, y), collapse the two scores into one number and
// query the candidate with the smallest result.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uncertal/dataset.hpp"
#include "uncertal/errors.hpp"
#include "uncertal/model.hpp"
#include "uncertal/pool.hpp"
#include "uncertal/rng.hpp"

namespace uncertal {

enum class Criterion { none, eer_logloss, mli };
enum class Aggregation { average, worst, best, uncertainty_weighted };
enum class SelectorKind { random, uncertainty, retraining };

struct StrategySpec {
  std::string name;
  Criterion criterion = Criterion::none;
  Aggregation aggregation = Aggregation::average;
  bool include_regularizer = false;  // mli only
  SelectorKind selector = SelectorKind::random;
  /// Sum the EER entropy over the candidate itself as well (sensitivity check).
  bool eer_include_candidate = false;
  /// Start every retrain from the current base model instead of w = 0.
  bool warm_start = true;

  void validate() const {
    if ((selector == SelectorKind::retraining) != (criterion != Criterion::none))
      throw InputError("strategy '" + name +
                       "': retraining selectors need a criterion and other selectors must not have one");
  }

  /// Accepted names: random, uncertainty, eer, ueer, eer-worst, mli, umli, mli-avg.
  static StrategySpec from_name(std::string_view name) {
    StrategySpec s;
    s.name = std::string(name);
    if (name == "random") {
      s.selector = SelectorKind::random;
    } else if (name == "uncertainty") {
      s.selector = SelectorKind::uncertainty;
    } else if (name == "eer" || name == "ueer" || name == "eer-worst") {
      s.selector = SelectorKind::retraining;
      s.criterion = Criterion::eer_logloss;
      s.aggregation = name == "eer"    ? Aggregation::average
                      : name == "ueer" ? Aggregation::uncertainty_weighted
                                       : Aggregation::worst;
    } else if (name == "mli" || name == "umli" || name == "mli-avg") {
      s.selector = SelectorKind::retraining;
      s.criterion = Criterion::mli;
      s.aggregation = name == "mli"    ? Aggregation::worst
                      : name == "umli" ? Aggregation::uncertainty_weighted
                                       : Aggregation::average;
      s.include_regularizer = name != "umli";
    } else {
      throw InputError("unknown strategy '" + std::string(name) +
                       "' (expected random, uncertainty, eer, ueer, eer-worst, mli, umli, mli-avg)");
    }
    return s;
  }
};

inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"random", "uncertainty", "eer",  "ueer",
                                              "eer-worst", "mli",       "umli", "mli-avg"};
  return names;
}

/// Per-label values are indexed by label_slot(): [0] = +1, [1] = -1.
using PerLabel = std::array<double, 2>;

struct CandidateScore {
  Index pool_index = 0;
  PerLabel per_label_v{};
  Posterior posterior;
  double aggregated = 0.0;
};

/// Solver statistics over all retrains made while scoring.
struct RetrainStats {
  std::size_t retrains = 0;
  std::size_t nonconverged = 0;
  double max_gradient_norm = 0.0;

  void record(const Model& m) {
    ++retrains;
    if (!m.converged()) ++nonconverged;
    max_gradient_norm = std::max(max_gradient_norm, m.report().gradient_norm);
  }
  RetrainStats& operator+=(const RetrainStats& o) {
    retrains += o.retrains;
    nonconverged += o.nonconverged;
    max_gradient_norm = std::max(max_gradient_norm, o.max_gradient_norm);
    return *this;
  }
};

/// Collapses per-label criterion values using the base posterior.
[[nodiscard]] inline double aggregate(const Posterior& p, const PerLabel& v, Aggregation mode) {
  const double pp = p.positive;
  const double pn = p.negative;
  switch (mode) {
    case Aggregation::average:
      return pp * v[0] + pn * v[1];
    case Aggregation::worst:
      return std::max(v[0], v[1]);
    case Aggregation::best:
      return std::min(v[0], v[1]);
    case Aggregation::uncertainty_weighted:
      return std::max(pp * v[0], pn * v[1]);
  }
  throw InputError("aggregate: unknown mode");
}

/// Scores are compared after rounding to this grid; equal keys go to the
/// smaller pool index.
inline constexpr double kTieResolution = 1e-9;

[[nodiscard]] inline double tie_key(double score) noexcept {
  return std::round(score / kTieResolution);
}

/// Summed binary entropy (nats) of the model's posteriors over the rows of a
/// bias-augmented pool matrix, skipping row `skip_row` when given.
[[nodiscard]] inline double pool_entropy(const Model& model, const Matrix& pool_rows,
                                         std::optional<Eigen::Index> skip_row) {
  const Vector margins = pool_rows * model.weights();
  double total = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    if (skip_row && *skip_row == i) continue;
    total += binary_entropy(sigmoid(margins(i)));
  }
  return total;
}

/// EER criterion: expected log-loss of the retrained model over the pool,
/// estimated by its own entropy on U \ {candidate}.
[[nodiscard]] inline double v_eer(const PoolState& pool, const Model& model_plus, Index candidate,
                                  const Dataset& data, bool include_candidate = false) {
  if (!pool.is_unlabeled(candidate))
    throw StateError("v_eer: candidate " + std::to_string(candidate) + " is not in the pool");
  const Matrix rows = data.augmented_rows(pool.unlabeled);
  const auto pos = static_cast<Eigen::Index>(
      std::lower_bound(pool.unlabeled.begin(), pool.unlabeled.end(), candidate) -
      pool.unlabeled.begin());
  return pool_entropy(model_plus, rows, include_candidate ? std::nullopt : std::optional(pos));
}

/// MLI criterion: training log-loss of the retrained model on L+, optionally regularized.
[[nodiscard]] inline double v_mli(const Model& model_plus, const TrainingSet& labeled_plus,
                                  bool include_regularizer) {
  return objective_value(model_plus, labeled_plus, include_regularizer);
}

/// Everything a criterion may look at for one hypothesized labeling.
struct Hypothesis {
  const Model& model_plus;         // trained on L + {(x, y)}
  const TrainingSet& labeled_plus;  // L + {(x, y)}
  const Matrix& pool_rows;         // bias-augmented rows of U, sorted by index
  Eigen::Index candidate_row;      // position of x within pool_rows
  Label label;
};

/// Runs the double loop over candidates and labels with an arbitrary criterion.
/// `criterion(const Hypothesis&) -> double` must return a finite value.
template <class CriterionFn>
std::vector<CandidateScore> score_with(const PoolState& pool, const Dataset& data,
                                       const Model& base_model, const TrainConfig& train_cfg,
                                       Aggregation mode, bool warm_start, CriterionFn&& criterion,
                                       RetrainStats* stats = nullptr) {
  if (pool.unlabeled.empty()) throw StateError("scoring: the unlabeled pool is empty");
  if (pool.labeled.empty()) throw PreconditionError("scoring: the labeled set is empty");

  TrainConfig cfg = train_cfg;
  cfg.warm_start.reset();
  if (warm_start) cfg.warm_start = base_model;

  const Matrix pool_rows = data.augmented_rows(pool.unlabeled);
  TrainingSet plus = labeled_set(data, pool);
  const Eigen::Index last = plus.count();
  plus.add(data.row(pool.unlabeled.front()), Label::positive);

  std::vector<CandidateScore> table;
  table.reserve(pool.unlabeled.size());
  for (std::size_t k = 0; k < pool.unlabeled.size(); ++k) {
    const Index idx = pool.unlabeled[k];
    const auto row = static_cast<Eigen::Index>(k);
    CandidateScore score;
    score.pool_index = idx;
    score.posterior = posterior(base_model, data.row(idx));
    for (const Label y : kLabels) {
      plus.set_row(last, pool_rows.row(row).head(data.dim()).transpose(), y);
      const Model model_plus = train(plus, cfg);
      if (stats) stats->record(model_plus);
      const double v = criterion(Hypothesis{model_plus, plus, pool_rows, row, y});
      if (!std::isfinite(v)) throw NumericalError("scoring: criterion produced a non-finite value");
      score.per_label_v[label_slot(y)] = v;
    }
    score.aggregated = aggregate(score.posterior, score.per_label_v, mode);
    table.push_back(score);
  }
  return table;
}

/// Full score table for a strategy. Uncertainty sampling reports max_y P(y|x)
/// with V = 1 on both labels; random sampling has no scores (aggregated = NaN).
inline std::vector<CandidateScore> score_all(const StrategySpec& spec, const PoolState& pool,
                                             const Dataset& data, const Model& base_model,
                                             const TrainConfig& train_cfg,
                                             RetrainStats* stats = nullptr) {
  spec.validate();
  if (pool.unlabeled.empty()) throw StateError("score_all: the unlabeled pool is empty");
  if (spec.selector != SelectorKind::retraining) {
    std::vector<CandidateScore> table;
    table.reserve(pool.unlabeled.size());
    for (const Index idx : pool.unlabeled) {
      CandidateScore s;
      s.pool_index = idx;
      s.posterior = posterior(base_model, data.row(idx));
      if (spec.selector == SelectorKind::uncertainty) {
        s.per_label_v = {1.0, 1.0};
        s.aggregated = s.posterior.max();
      } else {
        s.per_label_v = {std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};
        s.aggregated = std::numeric_limits<double>::quiet_NaN();
      }
      table.push_back(s);
    }
    return table;
  }

  if (spec.criterion == Criterion::eer_logloss) {
    const bool include = spec.eer_include_candidate;
    return score_with(pool, data, base_model, train_cfg, spec.aggregation, spec.warm_start,
                      [include](const Hypothesis& h) {
                        return pool_entropy(h.model_plus, h.pool_rows,
                                            include ? std::nullopt : std::optional(h.candidate_row));
                      },
                      stats);
  }
  const bool reg = spec.include_regularizer;
  return score_with(pool, data, base_model, train_cfg, spec.aggregation, spec.warm_start,
                    [reg](const Hypothesis& h) { return v_mli(h.model_plus, h.labeled_plus, reg); },
                    stats);
}

/// Position of the smallest aggregated score (after tie rounding); the table
/// is in ascending pool-index order so the first minimum is the smallest index.
[[nodiscard]] inline std::size_t argmin_position(const std::vector<CandidateScore>& table) {
  if (table.empty()) throw StateError("argmin over an empty score table");
  std::size_t best = 0;
  double best_key = tie_key(table[0].aggregated);
  for (std::size_t k = 1; k < table.size(); ++k) {
    const double key = tie_key(table[k].aggregated);
    if (key < best_key || (key == best_key && table[k].pool_index < table[best].pool_index)) {
      best = k;
      best_key = key;
    }
  }
  return best;
}

/// Picks the next query. Returns a dataset row index that is in pool.unlabeled.
inline Index select(const StrategySpec& spec, const PoolState& pool, const Dataset& data,
                    const Model& base_model, Rng& rng, const TrainConfig& train_cfg,
                    RetrainStats* stats = nullptr) {
  spec.validate();
  if (pool.unlabeled.empty()) throw StateError("select: the unlabeled pool is empty");
  if (spec.selector == SelectorKind::random)
    return pool.unlabeled[rng.uniform_index(pool.unlabeled.size())];
  const auto table = score_all(spec, pool, data, base_model, train_cfg, stats);
  return table[argmin_position(table)].pool_index;
}

}  // namespace uncertal
