#pragma once

// Benchmark protocol: repeated random splits with a two-instance seed set,
// a query loop scored on the held-out half, ALC per trial, and the
// per-dataset comparison table (mean ALC, average rank, paired t-tests).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "uncertal/dataset.hpp"
#include "uncertal/errors.hpp"
#include "uncertal/model.hpp"
#include "uncertal/pool.hpp"
#include "uncertal/rng.hpp"
#include "uncertal/stats.hpp"
#include "uncertal/strategy.hpp"

namespace uncertal {

/// Number of queries per trial. `automatic` means min(100, |U0|).
struct Budget {
  enum class Kind { automatic, full, fixed };
  Kind kind = Kind::automatic;
  std::size_t queries = 0;  // only for Kind::fixed

  static Budget fixed(std::size_t n) { return {Kind::fixed, n}; }
  static Budget full() { return {Kind::full, 0}; }

  /// Resolves against the initial pool size; sets `clipped` when a fixed
  /// budget had to be reduced.
  [[nodiscard]] std::size_t resolve(std::size_t pool_size, bool* clipped = nullptr) const {
    if (clipped) *clipped = false;
    switch (kind) {
      case Kind::automatic: return std::min<std::size_t>(100, pool_size);
      case Kind::full: return pool_size;
      case Kind::fixed:
        if (queries > pool_size) {
          if (clipped) *clipped = true;
          return pool_size;
        }
        return queries;
    }
    return 0;
  }
};

struct ExperimentConfig {
  std::vector<std::string> strategies{"random", "eer", "ueer", "mli", "umli"};
  int trials = 20;
  Budget budget;
  double lambda = 100.0;
  std::uint64_t base_seed = 0;
  double significance = 0.05;
  /// Worker threads for independent trials; 0 = hardware concurrency.
  unsigned threads = 0;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (budget.kind == Budget::Kind::fixed && budget.queries < 1)
      throw ConfigError("budget must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(significance > 0.0 && significance < 1.0))
      throw ConfigError("significance must lie in (0, 1)");
    if (strategies.empty()) throw ConfigError("at least one strategy is required");
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      const auto& s = strategies[i];
      if (std::find(strategies.begin(), strategies.begin() + static_cast<std::ptrdiff_t>(i), s) !=
          strategies.begin() + static_cast<std::ptrdiff_t>(i))
        throw ConfigError("strategy '" + s + "' listed twice");
      try {
        (void)StrategySpec::from_name(s);
      } catch (const InputError& e) {
        throw ConfigError(e.what());
      }
    }
  }

  [[nodiscard]] TrainConfig train_config() const {
    TrainConfig t;
    t.lambda = lambda;
    return t;
  }
};

/// Entry k = test accuracy after k queries (entry 0 = the seed-set model).
struct LearningCurve {
  std::vector<double> accuracies;
};

/// Normalized area under a learning curve: the mean of its entries.
inline double alc(const LearningCurve& curve) {
  if (curve.accuracies.empty()) throw PreconditionError("alc: empty learning curve");
  return std::accumulate(curve.accuracies.begin(), curve.accuracies.end(), 0.0) /
         static_cast<double>(curve.accuracies.size());
}

struct TrialResult {
  std::string dataset;
  std::string strategy;
  int trial = 0;
  LearningCurve curve;
  double alc = 0.0;
  std::vector<Index> selected;
  RetrainStats solver;  // every training run in the trial, base models included
  bool budget_clipped = false;
};

/// Fraction of rows of a bias-augmented matrix classified correctly
/// (predict +1 iff P(+1|x) >= 1/2).
inline double accuracy(const Model& model, const Matrix& augmented,
                       const std::vector<Label>& labels) {
  if (labels.empty()) throw PreconditionError("accuracy: empty evaluation set");
  const Vector margins = augmented * model.weights();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const Label predicted = margins(i) >= 0.0 ? Label::positive : Label::negative;
    if (predicted == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

/// Stream shared by every strategy for a (dataset, trial): the split and the seed set.
inline Rng split_stream(std::uint64_t base_seed, const std::string& dataset, int trial) {
  return Rng::stream(base_seed, "split", dataset, trial);
}

/// Stream private to one strategy within a trial (random selection draws).
inline Rng selection_stream(std::uint64_t base_seed, const std::string& dataset,
                            const std::string& strategy, int trial) {
  return Rng::stream(base_seed, "select", dataset, strategy, trial);
}

/// Hook invoked after every selection with the pool state before acquisition,
/// the base model, the full score table and the chosen index (used for traces).
struct TrialObserver {
  virtual ~TrialObserver() = default;
  virtual void on_query(std::size_t step, const Dataset& standardized, const PoolState& before,
                        const Model& base_model, const std::vector<CandidateScore>& scores,
                        Index chosen) = 0;
};

/// Runs one trial of one strategy. Deterministic in (base_seed, dataset name,
/// strategy name, trial index).
inline TrialResult run_trial(const Dataset& ds, const StrategySpec& spec,
                             const ExperimentConfig& cfg, int trial_idx,
                             TrialObserver* observer = nullptr) {
  spec.validate();
  validate(ds);
  Rng split_rng = split_stream(cfg.base_seed, ds.name, trial_idx);
  PoolState pool = split_and_seed(ds, split_rng);
  const auto [standardizer, data] = standardize(ds, pool.train);
  (void)standardizer;
  pool.check_invariants(data.size());

  TrialResult result;
  result.dataset = ds.name;
  result.strategy = spec.name;
  result.trial = trial_idx;
  const std::size_t budget = cfg.budget.resolve(pool.unlabeled.size(), &result.budget_clipped);

  Rng select_rng = selection_stream(cfg.base_seed, ds.name, spec.name, trial_idx);
  const TrainConfig train_cfg = cfg.train_config();
  const Matrix test_rows = data.augmented_rows(pool.test);
  std::vector<Label> test_labels;
  test_labels.reserve(pool.test.size());
  for (const Index i : pool.test) test_labels.push_back(data.labels[i]);

  result.curve.accuracies.reserve(budget + 1);
  result.selected.reserve(budget);
  for (std::size_t step = 0;; ++step) {
    const Model base = train(labeled_set(data, pool), train_cfg);
    result.solver.record(base);
    result.curve.accuracies.push_back(accuracy(base, test_rows, test_labels));
    if (step == budget) break;
    Index chosen = 0;
    if (observer) {
      // Same decision as select(), with the score table kept for the observer.
      const auto table = score_all(spec, pool, data, base, train_cfg, &result.solver);
      chosen = spec.selector == SelectorKind::random
                   ? pool.unlabeled[select_rng.uniform_index(pool.unlabeled.size())]
                   : table[argmin_position(table)].pool_index;
      observer->on_query(step, data, pool, base, table, chosen);
    } else {
      chosen = select(spec, pool, data, base, select_rng, train_cfg, &result.solver);
    }
    pool.acquire(chosen);
    pool.check_invariants(data.size());
    result.selected.push_back(chosen);
  }
  result.alc = alc(result.curve);
  return result;
}

/// Worker count from UNCERTAL_THREADS (unset or 0 = automatic).
inline unsigned threads_from_env() {
  const char* v = std::getenv("UNCERTAL_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (end == v || *end != '\0') throw ConfigError("UNCERTAL_THREADS must be a non-negative integer");
  return static_cast<unsigned>(n);
}

/// Runs `count` independent tasks on up to `threads` workers. Results are
/// written by index, so the outcome does not depend on scheduling. The first
/// failing task (by index) has its exception rethrown.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// All trials of every (dataset, strategy) pair, ordered dataset-major, then
/// strategy (config order), then trial.
inline std::vector<TrialResult> run_experiment(const std::vector<Dataset>& datasets,
                                               const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<StrategySpec> specs;
  for (const auto& name : cfg.strategies) specs.push_back(StrategySpec::from_name(name));
  const std::size_t per_dataset = specs.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<TrialResult> results(datasets.size() * per_dataset);
  parallel_for(results.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t d = i / per_dataset;
    const std::size_t s = (i % per_dataset) / static_cast<std::size_t>(cfg.trials);
    const int t = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
    results[i] = run_trial(datasets[d], specs[s], cfg, t);
  });
  return results;
}

struct PairwiseComparison {
  std::string method;
  std::string baseline;
  std::vector<PairedTTest> per_dataset;  // aligned with ComparisonTable::datasets
  int wins = 0;
  int ties = 0;
  int losses = 0;
};

struct ComparisonTable {
  std::vector<std::string> datasets;
  std::vector<std::string> strategies;
  std::vector<std::vector<double>> mean_alc;  // [dataset][strategy]
  std::vector<std::vector<double>> ranks;     // [dataset][strategy], 1 = best
  std::vector<double> mean_row;               // mean ALC over datasets
  std::vector<double> average_rank;
  std::vector<PairwiseComparison> pairwise;
};

/// Ranks descending by value; equal values share the average of their ranks.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

/// Default pairings: each uncertainty-weighted method against its original.
inline std::vector<std::pair<std::string, std::string>> default_pairings(
    const std::vector<std::string>& strategies) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto has = [&](const std::string& s) {
    return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
  };
  for (const auto& [method, baseline] :
       {std::pair<std::string, std::string>{"ueer", "eer"}, {"umli", "mli"}})
    if (has(method) && has(baseline)) out.emplace_back(method, baseline);
  return out;
}

/// Aggregates per-trial results. `dataset_order` fixes the row order; every
/// (dataset, strategy) cell must hold exactly cfg.trials results.
inline ComparisonTable build_table(const std::vector<TrialResult>& results,
                                   const ExperimentConfig& cfg,
                                   const std::vector<std::string>& dataset_order) {
  ComparisonTable table;
  table.datasets = dataset_order;
  table.strategies = cfg.strategies;
  const std::size_t nd = table.datasets.size();
  const std::size_t ns = table.strategies.size();
  if (nd == 0 || ns == 0) throw ValidationError("build_table: nothing to tabulate");

  // alc[d][s][trial]
  std::map<std::pair<std::string, std::string>, std::vector<std::optional<double>>> cells;
  for (const auto& r : results) {
    auto& cell = cells[{r.dataset, r.strategy}];
    if (cell.empty()) cell.resize(static_cast<std::size_t>(cfg.trials));
    if (r.trial < 0 || r.trial >= cfg.trials)
      throw ValidationError("build_table: trial index out of range for " + r.dataset + "/" + r.strategy);
    auto& slot = cell[static_cast<std::size_t>(r.trial)];
    if (slot) throw ValidationError("build_table: duplicate result for " + r.dataset + "/" + r.strategy);
    slot = r.alc;
  }
  std::vector<std::vector<std::vector<double>>> alcs(nd, std::vector<std::vector<double>>(ns));
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto it = cells.find({table.datasets[d], table.strategies[s]});
      if (it == cells.end())
        throw ValidationError("build_table: missing results for " + table.datasets[d] + "/" +
                              table.strategies[s]);
      for (const auto& v : it->second) {
        if (!v)
          throw ValidationError("build_table: missing trial for " + table.datasets[d] + "/" +
                                table.strategies[s]);
        alcs[d][s].push_back(*v);
      }
    }
  }

  table.mean_alc.assign(nd, std::vector<double>(ns, 0.0));
  table.ranks.assign(nd, {});
  table.mean_row.assign(ns, 0.0);
  table.average_rank.assign(ns, 0.0);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& v = alcs[d][s];
      table.mean_alc[d][s] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
    table.ranks[d] = average_ranks(table.mean_alc[d]);
    for (std::size_t s = 0; s < ns; ++s) {
      table.mean_row[s] += table.mean_alc[d][s] / static_cast<double>(nd);
      table.average_rank[s] += table.ranks[d][s] / static_cast<double>(nd);
    }
  }

  const auto column = [&](const std::string& name) {
    return static_cast<std::size_t>(
        std::find(table.strategies.begin(), table.strategies.end(), name) - table.strategies.begin());
  };
  if (cfg.trials >= 2) {
    for (const auto& [method, baseline] : default_pairings(table.strategies)) {
      PairwiseComparison cmp{method, baseline, {}, 0, 0, 0};
      const std::size_t m = column(method);
      const std::size_t b = column(baseline);
      for (std::size_t d = 0; d < nd; ++d) {
        const auto test = paired_t_test(alcs[d][m], alcs[d][b], cfg.significance);
        cmp.per_dataset.push_back(test);
        switch (test.decision) {
          case Decision::win: ++cmp.wins; break;
          case Decision::tie: ++cmp.ties; break;
          case Decision::loss: ++cmp.losses; break;
        }
      }
      table.pairwise.push_back(std::move(cmp));
    }
  }
  return table;
}

}  // namespace uncertal
