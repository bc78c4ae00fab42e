#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "uncertal/dataset.hpp"
#include "uncertal/errors.hpp"
#include "uncertal/rng.hpp"

namespace uncertal {

/// Train/test split plus the labeled / unlabeled partition of the training part.
/// `train`, `test` and `unlabeled` are kept sorted; `labeled` is in acquisition order.
struct PoolState {
  std::vector<Index> train;
  std::vector<Index> test;
  std::vector<Index> labeled;
  std::vector<Index> unlabeled;

  [[nodiscard]] bool is_unlabeled(Index i) const {
    return std::binary_search(unlabeled.begin(), unlabeled.end(), i);
  }

  /// Moves a queried index from the pool into the labeled set.
  void acquire(Index i) {
    const auto it = std::lower_bound(unlabeled.begin(), unlabeled.end(), i);
    if (it == unlabeled.end() || *it != i)
      throw StateError("acquire: index " + std::to_string(i) + " is not in the unlabeled pool");
    unlabeled.erase(it);
    labeled.push_back(i);
  }

  /// Throws StateError if any partition invariant is broken; n = dataset size.
  void check_invariants(Index n) const {
    std::vector<int> seen(n, 0);
    const auto mark = [&](const std::vector<Index>& part, int bit, const char* what) {
      for (const Index i : part) {
        if (i >= n) throw StateError(std::string(what) + " index out of range");
        if (seen[i] & bit) throw StateError(std::string(what) + " contains a duplicate index");
        seen[i] |= bit;
      }
    };
    mark(train, 1, "train");
    mark(test, 2, "test");
    mark(labeled, 4, "labeled");
    mark(unlabeled, 8, "unlabeled");
    for (Index i = 0; i < n; ++i) {
      const int s = seen[i];
      const bool in_train = s & 1;
      const bool in_test = s & 2;
      if (in_train == in_test) throw StateError("train and test must partition all indices");
      const bool in_l = s & 4;
      const bool in_u = s & 8;
      if (in_l && in_u) throw StateError("labeled and unlabeled sets overlap");
      if (in_train != (in_l || in_u)) throw StateError("labeled and unlabeled must partition train");
    }
  }
};

/// Random half split (the training part gets the extra instance when n is odd)
/// and a class-balanced two-instance seed drawn uniformly from the training part.
///
/// Requires at least two instances per class. Splits whose training half
/// misses a class are redrawn from the same stream.
inline PoolState split_and_seed(const Dataset& ds, Rng& rng) {
  if (ds.count(Label::positive) < 2 || ds.count(Label::negative) < 2)
    throw ValidationError("dataset '" + ds.name +
                          "': each class needs at least 2 instances for split and seeding");
  const Index n = ds.size();
  const Index n_train = (n + 1) / 2;

  std::vector<Index> order(n);
  PoolState pool;
  for (;;) {
    for (Index i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    pool.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    const auto has = [&](Label y) {
      return std::any_of(pool.train.begin(), pool.train.end(),
                         [&](Index i) { return ds.labels[i] == y; });
    };
    if (has(Label::positive) && has(Label::negative)) break;
  }
  pool.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(pool.train.begin(), pool.train.end());
  std::sort(pool.test.begin(), pool.test.end());

  for (const Label y : kLabels) {
    std::vector<Index> members;
    for (const Index i : pool.train)
      if (ds.labels[i] == y) members.push_back(i);
    pool.labeled.push_back(members[rng.uniform_index(members.size())]);
  }
  for (const Index i : pool.train)
    if (std::find(pool.labeled.begin(), pool.labeled.end(), i) == pool.labeled.end())
      pool.unlabeled.push_back(i);
  return pool;
}

/// Training set over the labeled indices, in acquisition order.
inline TrainingSet labeled_set(const Dataset& ds, const PoolState& pool) {
  TrainingSet set(ds.dim());
  set.reserve(static_cast<Eigen::Index>(pool.labeled.size()) + 1);
  for (const Index i : pool.labeled) set.add(ds.row(i), ds.labels[i]);
  return set;
}

}  // namespace uncertal
