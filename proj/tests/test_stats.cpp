#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "uncertal/rng.hpp"
#include "uncertal/stats.hpp"

using namespace uncertal;

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 9.5, 40.0}) {
    for (double b : {0.5, 1.0, 3.0, 20.0}) {
      for (double x : {0.0, 1e-6, 0.1, 0.37, 0.5, 0.8, 0.999, 1.0}) {
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-13)
            << a << " " << b << " " << x;
      }
    }
  }
}

TEST(IncompleteBeta, RejectsBadArguments) {
  EXPECT_THROW((void)regularized_incomplete_beta(0.0, 1.0, 0.5), InputError);
  EXPECT_THROW((void)regularized_incomplete_beta(1.0, 1.0, 1.5), InputError);
}

TEST(StudentT, CdfAndQuantileMatchBoost) {
  for (double dof : {1.0, 2.0, 5.0, 19.0, 100.0}) {
    const boost::math::students_t dist(dof);
    for (double t : {-8.0, -2.0, -0.3, 0.0, 0.7, 2.093, 5.0}) {
      EXPECT_NEAR(student_t_cdf(t, dof), boost::math::cdf(dist, t), 1e-13) << dof << " " << t;
    }
    for (double p : {0.001, 0.05, 0.5, 0.9, 0.975, 0.9995}) {
      EXPECT_NEAR(student_t_quantile(p, dof), boost::math::quantile(dist, p),
                  1e-9 * std::max(1.0, std::abs(boost::math::quantile(dist, p))))
          << dof << " " << p;
    }
  }
}

TEST(StudentT, CriticalValueForNineteenDof) {
  const double c = t_critical(0.05, 19.0);
  EXPECT_NEAR(c, 2.093024054, 1e-8);
}

TEST(PairedTTest, IdenticalSamplesTie) {
  const std::vector<double> a{0.8, 0.7, 0.9, 0.85};
  const auto r = paired_t_test(a, a, 0.05);
  EXPECT_EQ(r.decision, Decision::tie);
  EXPECT_EQ(r.mean_difference, 0.0);
}

TEST(PairedTTest, ConstantNonzeroDifferenceDecidesBySign) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> y{0.5, 1.5, 2.5};
  EXPECT_EQ(paired_t_test(x, y, 0.05).decision, Decision::win);
  EXPECT_EQ(paired_t_test(y, x, 0.05).decision, Decision::loss);
  EXPECT_TRUE(std::isinf(paired_t_test(x, y, 0.05).t_statistic));
}

TEST(PairedTTest, KnownStatisticThreeIsAWinAtTwentyPairs) {
  // Differences with mean m and sample sd s give t = m / (s / sqrt(20)).
  // Build zero-mean unit-sd noise, then scale so t = 3 exactly.
  Rng rng(12);
  std::vector<double> noise(20);
  for (auto& v : noise) v = rng.normal();
  double mean = 0.0;
  for (const double v : noise) mean += v;
  mean /= 20.0;
  double ss = 0.0;
  for (auto& v : noise) {
    v -= mean;
    ss += v * v;
  }
  const double sd = std::sqrt(ss / 19.0);
  const double target_mean = 3.0 / std::sqrt(20.0) * 0.01;
  std::vector<double> a(20), b(20);
  for (int i = 0; i < 20; ++i) {
    b[static_cast<std::size_t>(i)] = 0.8;
    a[static_cast<std::size_t>(i)] = 0.8 + target_mean + 0.01 * noise[static_cast<std::size_t>(i)] / sd;
  }
  const auto r = paired_t_test(a, b, 0.05);
  EXPECT_NEAR(r.t_statistic, 3.0, 1e-9);
  EXPECT_NEAR(r.critical, boost::math::quantile(boost::math::students_t(19.0), 0.975), 1e-9);
  EXPECT_EQ(r.decision, Decision::win);
  EXPECT_EQ(paired_t_test(b, a, 0.05).decision, Decision::loss);
}

TEST(PairedTTest, SmallEffectIsATie) {
  const std::vector<double> a{0.80, 0.82, 0.79, 0.81};
  const std::vector<double> b{0.81, 0.80, 0.80, 0.80};
  EXPECT_EQ(paired_t_test(a, b, 0.05).decision, Decision::tie);
}

TEST(PairedTTest, Preconditions) {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  EXPECT_THROW((void)paired_t_test(a, b, 0.05), InputError);
  EXPECT_THROW((void)paired_t_test(b, b, 0.05), PreconditionError);
}
