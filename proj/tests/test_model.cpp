#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "oracles/naive.hpp"
#include "uncertal/model.hpp"
#include "uncertal/rng.hpp"

using namespace uncertal;

namespace {

TrainingSet random_set(Rng& rng, Eigen::Index dim, int count) {
  TrainingSet set(dim);
  for (int i = 0; i < count; ++i) {
    Vector x(dim);
    for (Eigen::Index j = 0; j < dim; ++j) x(j) = 2.0 * rng.normal();
    set.add(x, rng.uniform() < 0.5 ? Label::positive : Label::negative);
  }
  return set;
}

std::vector<oracle::Example> to_oracle(const TrainingSet& set) {
  std::vector<oracle::Example> out;
  const auto rows = set.augmented();
  for (Eigen::Index i = 0; i < set.count(); ++i) {
    oracle::Row r(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index j = 0; j < rows.cols(); ++j) r[static_cast<std::size_t>(j)] = rows(i, j);
    out.push_back({r, set.labels()[static_cast<std::size_t>(i)] == Label::positive ? 1 : -1});
  }
  return out;
}

oracle::Row to_row(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector random_weights(Rng& rng, Eigen::Index p, double scale) {
  Vector w(p);
  for (Eigen::Index j = 0; j < p; ++j) w(j) = scale * rng.normal();
  return w;
}

}  // namespace

TEST(Posterior, ZeroWeightsGiveOneHalf) {
  const Model m = Model::zeros(3, 100.0);
  const Vector x = Vector::Constant(3, 7.0);
  const auto p = posterior(m, x);
  EXPECT_DOUBLE_EQ(p.positive, 0.5);
  EXPECT_DOUBLE_EQ(p.negative, 0.5);
}

TEST(Posterior, SumsToOneAcrossMargins) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double margin = 80.0 * (rng.uniform() - 0.5);
    const auto p = posterior_from_margin(margin);
    EXPECT_EQ(p.positive + p.negative, 1.0) << "margin " << margin;
    EXPECT_GE(p.positive, 0.0);
    EXPECT_LE(p.positive, 1.0);
  }
}

TEST(Posterior, ExtremeMarginsStayFinite) {
  const auto hi = posterior_from_margin(1e4);
  const auto lo = posterior_from_margin(-1e4);
  EXPECT_EQ(hi.positive, 1.0);
  EXPECT_EQ(lo.negative, 1.0);
  EXPECT_TRUE(std::isfinite(softplus(1e4)));
  EXPECT_DOUBLE_EQ(softplus(1e4), 1e4);
}

TEST(Posterior, RejectsDimensionMismatch) {
  const Model m = Model::zeros(2, 100.0);
  EXPECT_THROW((void)posterior(m, Vector::Zero(3)), InputError);
}

TEST(Objective, ZeroWeightsIsCountTimesLog2) {
  TrainingSet set(2);
  set.add(Vector::Zero(2), Label::positive);
  set.add(Vector::Ones(2), Label::negative);
  set.add(Vector::Constant(2, -3.0), Label::positive);
  const Model m = Model::zeros(2, 100.0);
  EXPECT_NEAR(objective_value(m, set, true), 3.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(objective_value(m, set, false), 3.0 * std::log(2.0), 1e-15);
}

TEST(Objective, RegularizerDifferenceIsExact) {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto set = random_set(rng, 3, 6);
    const Model m(random_weights(rng, 4, 1.5), 100.0);
    const double diff = objective_value(m, set, true) - objective_value(m, set, false);
    EXPECT_NEAR(diff, m.weights().squaredNorm() / 200.0, 1e-12);
  }
}

TEST(Objective, MatchesLongDoubleOracle) {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const auto set = random_set(rng, 1 + static_cast<Eigen::Index>(rng.uniform_index(5)), 3 + k % 20);
    const Model m(random_weights(rng, set.dim() + 1, 2.0), 100.0);
    const double expected = oracle::objective(to_row(m.weights()), to_oracle(set), 100.0);
    EXPECT_NEAR(objective_value(m, set, true), expected, 1e-10 * std::max(1.0, expected));
  }
}

TEST(Objective, EmptySetIsPrecondition) {
  TrainingSet set(2);
  EXPECT_THROW((void)objective_value(Model::zeros(2, 100.0), set, true), PreconditionError);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    const auto set = random_set(rng, 1 + static_cast<Eigen::Index>(rng.uniform_index(4)), 2 + k % 15);
    const Model m(random_weights(rng, set.dim() + 1, 1.0), 100.0);
    const Vector g = gradient(m, set);
    const auto fd = oracle::numeric_gradient(to_row(m.weights()), to_oracle(set), 100.0);
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double scale = std::max(1.0, std::abs(fd[static_cast<std::size_t>(j)]));
      EXPECT_NEAR(g(j), fd[static_cast<std::size_t>(j)], 1e-5 * scale) << "instance " << k;
    }
  }
}

TEST(Train, SymmetricPairHasZeroBias) {
  TrainingSet set(1);
  set.add(Vector::Constant(1, 1.0), Label::positive);
  set.add(Vector::Constant(1, -1.0), Label::negative);
  const Model m = train(set, TrainConfig{});
  EXPECT_TRUE(m.converged());
  EXPECT_GT(m.weights()(0), 0.0);
  EXPECT_NEAR(m.weights()(1), 0.0, 1e-10);
}

TEST(Train, MinimumMatchesGridSearch) {
  // Two parameters (slope and bias): refine a grid around the best cell.
  Rng rng(31);
  for (int k = 0; k < 5; ++k) {
    const auto set = random_set(rng, 1, 8);
    const auto data = to_oracle(set);
    const Model m = train(set, TrainConfig{});
    double best = std::numeric_limits<double>::infinity();
    double cx = 0.0, cy = 0.0, span = 20.0;
    for (int level = 0; level < 8; ++level) {
      double bx = cx, by = cy;
      for (int i = -20; i <= 20; ++i) {
        for (int j = -20; j <= 20; ++j) {
          const double a = cx + span * i / 20.0;
          const double b = cy + span * j / 20.0;
          const double f = oracle::objective({a, b}, data, 100.0);
          if (f < best) {
            best = f;
            bx = a;
            by = b;
          }
        }
      }
      cx = bx;
      cy = by;
      span /= 10.0;
    }
    const double trained = objective_value(m, set, true);
    EXPECT_LE(trained, best + 1e-9);
    EXPECT_NEAR(m.weights()(0), cx, 1e-4);
    EXPECT_NEAR(m.weights()(1), cy, 1e-4);
  }
}

TEST(Train, ReachesGradientTolerance) {
  Rng rng(37);
  for (int k = 0; k < 200; ++k) {
    const auto set = random_set(rng, 1 + static_cast<Eigen::Index>(rng.uniform_index(8)), 2 + k % 40);
    const Model m = train(set, TrainConfig{});
    EXPECT_TRUE(m.converged());
    EXPECT_LE(gradient(m, set).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(Train, SeparableDataStaysBounded) {
  TrainingSet set(2);
  for (int i = 0; i < 10; ++i) {
    set.add(Vector::Constant(2, 5.0 + i), Label::positive);
    set.add(Vector::Constant(2, -5.0 - i), Label::negative);
  }
  const Model m = train(set, TrainConfig{});
  EXPECT_TRUE(m.converged());
  EXPECT_TRUE(m.weights().allFinite());
}

TEST(Train, FlippingLabelsNegatesWeights) {
  Rng rng(41);
  for (int k = 0; k < 30; ++k) {
    auto set = random_set(rng, 3, 10);
    const Model a = train(set, TrainConfig{});
    for (Eigen::Index i = 0; i < set.count(); ++i)
      set.set_label(i, flip(set.labels()[static_cast<std::size_t>(i)]));
    const Model b = train(set, TrainConfig{});
    EXPECT_LE((a.weights() + b.weights()).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Train, WarmStartConvergesToSameMinimum) {
  Rng rng(43);
  for (int k = 0; k < 50; ++k) {
    const auto set = random_set(rng, 4, 12);
    TrainConfig cold;
    TrainConfig warm;
    warm.warm_start = Model(random_weights(rng, 5, 3.0), 100.0);
    const Model a = train(set, cold);
    const Model b = train(set, warm);
    EXPECT_LE((a.weights() - b.weights()).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_NEAR(objective_value(a, set, true), objective_value(b, set, true), 10 * cold.grad_tol);
  }
}

TEST(Train, MatchesNaiveNewton) {
  Rng rng(47);
  for (int k = 0; k < 30; ++k) {
    const auto set = random_set(rng, 3, 5 + k);
    const Model m = train(set, TrainConfig{});
    const auto w = oracle::fit(to_oracle(set), 100.0, 4);
    for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(m.weights()(j), w[static_cast<std::size_t>(j)], 1e-7);
  }
}

TEST(Train, RejectsBadConfig) {
  TrainingSet set(1);
  set.add(Vector::Zero(1), Label::positive);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_THROW((void)train(set, cfg), InputError);
  EXPECT_THROW((void)train(TrainingSet(1), TrainConfig{}), PreconditionError);
}

TEST(TrainingSet, RejectsNonFiniteAndWrongLength) {
  TrainingSet set(2);
  EXPECT_THROW(set.add(Vector::Zero(3), Label::positive), InputError);
  Vector bad = Vector::Zero(2);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(set.add(bad, Label::positive), InputError);
}

TEST(Entropy, MatchesDirectFormula) {
  for (double p : {1e-15, 1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-6, 1.0}) {
    EXPECT_NEAR(binary_entropy(p), oracle::entropy(p), 1e-15) << p;
  }
  EXPECT_NEAR(binary_entropy(0.5), std::log(2.0), 1e-16);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(1, "split", "heart", 3);
  Rng b = Rng::stream(1, "split", "heart", 3);
  Rng c = Rng::stream(1, "split", "heart", 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformIndexIsUnbiased) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[rng.uniform_index(7)];
  for (const int c : counts) EXPECT_NEAR(c, draws / 7.0, 5.0 * std::sqrt(draws / 7.0));
}
