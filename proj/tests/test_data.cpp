#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "uncertal/dataset.hpp"
#include "uncertal/pool.hpp"

using namespace uncertal;

namespace {

Dataset parse_text(const std::string& text, FileFormat fmt, const std::string& name = "t") {
  std::istringstream in(text);
  return parse(in, fmt, name);
}

Dataset tiny(int per_class, std::uint64_t seed = 0) {
  SyntheticSpec spec;
  spec.per_class = per_class;
  spec.seed = seed;
  spec.name = "tiny";
  return make_synthetic(spec);
}

}  // namespace

TEST(Libsvm, ParsesSparseRowsDensely) {
  const auto ds = parse_text("+1 1:0.5 3:2\n-1 2:-1\n# comment\n\n1 1:1e-3\n", FileFormat::libsvm);
  ASSERT_EQ(ds.size(), 3u);
  ASSERT_EQ(ds.dim(), 3);
  EXPECT_EQ(ds.features(0, 0), 0.5);
  EXPECT_EQ(ds.features(0, 1), 0.0);
  EXPECT_EQ(ds.features(0, 2), 2.0);
  EXPECT_EQ(ds.features(1, 1), -1.0);
  EXPECT_EQ(ds.labels[1], Label::negative);
  EXPECT_FALSE(ds.label_remap);
}

TEST(Libsvm, ErrorsNameTheLine) {
  try {
    (void)parse_text("+1 1:0.5\n-1 x:2\n", FileFormat::libsvm);
    FAIL() << "expected a parse error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)parse_text("+1 0:1\n-1 1:1\n", FileFormat::libsvm), InputError);
  EXPECT_THROW((void)parse_text("abc 1:1\n", FileFormat::libsvm), InputError);
}

TEST(Libsvm, RemapsZeroOneAndOneTwo) {
  const auto a = parse_text("0 1:1\n1 1:2\n", FileFormat::libsvm);
  EXPECT_EQ(a.labels[0], Label::negative);
  EXPECT_EQ(a.labels[1], Label::positive);
  EXPECT_TRUE(a.label_remap);
  const auto b = parse_text("1 1:1\n2 1:2\n", FileFormat::libsvm);
  EXPECT_EQ(b.labels[0], Label::positive);
  EXPECT_EQ(b.labels[1], Label::negative);
}

TEST(Libsvm, RejectsSingleClassAndMulticlass) {
  EXPECT_THROW((void)parse_text("1 1:1\n1 1:2\n", FileFormat::libsvm), ValidationError);
  EXPECT_THROW((void)parse_text("1 1:1\n2 1:2\n3 1:0\n", FileFormat::libsvm), ValidationError);
}

TEST(Libsvm, RejectsNaN) {
  EXPECT_THROW((void)parse_text("1 1:nan\n-1 1:2\n", FileFormat::libsvm), ValidationError);
}

TEST(Csv, HeaderIsOptional) {
  const auto a = parse_text("f1,f2,label\n1,2,1\n3,4,-1\n", FileFormat::csv);
  const auto b = parse_text("1,2,1\n3,4,-1\n", FileFormat::csv);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.features(1, 1), 4.0);
}

TEST(Csv, RaggedRowsFail) {
  EXPECT_THROW((void)parse_text("1,2,1\n3,-1\n", FileFormat::csv), InputError);
}

TEST(Libsvm, WriteThenReadRoundTrips) {
  SyntheticSpec spec;
  spec.per_class = 40;
  spec.seed = 9;
  const auto ds = make_synthetic(spec);
  std::ostringstream out;
  write_libsvm(out, ds);
  const auto back = parse_text(out.str(), FileFormat::libsvm, ds.name);
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(Bundled, TableOneShapes) {
  const std::map<std::string, std::pair<Index, Eigen::Index>> shapes{
      {"australian", {690, 14}}, {"breast", {683, 9}}, {"heart", {270, 13}},
      {"ionosphere", {351, 33}}, {"pima", {768, 8}},   {"sonar", {208, 60}},
      {"wdbc", {569, 30}},       {"wine", {178, 13}}};
  for (const auto& [name, shape] : shapes) {
    const auto path = std::filesystem::path(UNCERTAL_DATA_DIR) / (name + ".libsvm");
    const auto ds = load(path.string(), FileFormat::libsvm);
    EXPECT_EQ(ds.name, name);
    EXPECT_EQ(ds.size(), shape.first) << name;
    EXPECT_EQ(ds.dim(), shape.second) << name;
    EXPECT_GT(ds.count(Label::positive), 0u);
    EXPECT_GT(ds.count(Label::negative), 0u);
  }
}

TEST(Standardize, TrainingMomentsAreZeroAndOne) {
  const auto ds = tiny(50, 4);
  std::vector<Index> rows;
  for (Index i = 0; i < ds.size(); i += 2) rows.push_back(i);
  const auto [st, out] = standardize(ds, rows);
  for (Eigen::Index c = 0; c < ds.dim(); ++c) {
    double mean = 0.0, sq = 0.0;
    for (const Index i : rows) mean += out.features(static_cast<Eigen::Index>(i), c);
    mean /= static_cast<double>(rows.size());
    for (const Index i : rows) {
      const double r = out.features(static_cast<Eigen::Index>(i), c) - mean;
      sq += r * r;
    }
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / static_cast<double>(rows.size()), 1.0, 1e-12);
  }
}

TEST(Standardize, ConstantColumnBecomesZero) {
  const auto ds = parse_text("1 1:3 2:1\n-1 1:3 2:2\n1 1:3 2:5\n", FileFormat::libsvm);
  const std::vector<Index> rows{0, 1, 2};
  const auto out = standardize(ds, rows).second;
  for (Eigen::Index r = 0; r < 3; ++r) EXPECT_EQ(out.features(r, 0), 0.0);
}

TEST(Synthetic, MomentsFollowTheSpec) {
  SyntheticSpec spec;
  spec.per_class = 20000;
  spec.seed = 2;
  spec.covariance = (Matrix(2, 2) << 2.0, 0.6, 0.6, 1.0).finished();
  const auto ds = make_synthetic(spec);
  Vector mean_pos = Vector::Zero(2);
  Matrix cov = Matrix::Zero(2, 2);
  int n = 0;
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] != Label::positive) continue;
    mean_pos += ds.row(i);
    ++n;
  }
  mean_pos /= n;
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] != Label::positive) continue;
    const Vector r = ds.row(i) - mean_pos;
    cov += r * r.transpose();
  }
  cov /= n;
  EXPECT_EQ(n, 20000);
  const double se = std::sqrt(2.0 / n);
  EXPECT_NEAR(mean_pos(0), 2.0, 4 * se);
  EXPECT_NEAR(mean_pos(1), 0.0, 4 * se);
  EXPECT_NEAR(cov(0, 0), 2.0, 0.06);
  EXPECT_NEAR(cov(0, 1), 0.6, 0.04);
  EXPECT_NEAR(cov(1, 1), 1.0, 0.03);
}

TEST(Synthetic, RejectsIndefiniteCovariance) {
  SyntheticSpec spec;
  spec.covariance = (Matrix(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
  EXPECT_THROW((void)make_synthetic(spec), ValidationError);
}

TEST(Synthetic, SameSeedSameData) {
  EXPECT_EQ(tiny(30, 8).features, tiny(30, 8).features);
  EXPECT_NE(tiny(30, 8).features, tiny(30, 9).features);
}

TEST(BayesDistance, SymmetricBlobsUseTheMidline) {
  SyntheticSpec spec;
  EXPECT_NEAR(bayes_boundary_distance(spec, Vector::Zero(2)), 0.0, 1e-15);
  EXPECT_NEAR(bayes_boundary_distance(spec, (Vector(2) << -1.5, 7.0).finished()), 1.5, 1e-15);
}

TEST(Split, PartitionsAndSeedsOnePerClass) {
  const auto ds = tiny(15, 1);
  for (int t = 0; t < 200; ++t) {
    Rng rng = Rng::stream(0, "split", "tiny", t);
    const auto pool = split_and_seed(ds, rng);
    pool.check_invariants(ds.size());
    EXPECT_EQ(pool.train.size(), 15u);
    EXPECT_EQ(pool.test.size(), 15u);
    ASSERT_EQ(pool.labeled.size(), 2u);
    EXPECT_EQ(ds.labels[pool.labeled[0]], Label::positive);
    EXPECT_EQ(ds.labels[pool.labeled[1]], Label::negative);
    EXPECT_EQ(pool.unlabeled.size(), 13u);
  }
}

TEST(Split, OddSizeGivesTrainTheExtra) {
  auto ds = tiny(5, 1);
  ds.features.conservativeResize(9, Eigen::NoChange);
  ds.labels.resize(9);
  Rng rng(4);
  const auto pool = split_and_seed(ds, rng);
  EXPECT_EQ(pool.train.size(), 5u);
  EXPECT_EQ(pool.test.size(), 4u);
}

TEST(Split, MembershipFrequencyIsUniform) {
  // Each index lands in train with probability 1/2 (conditioned on train
  // holding both classes, which is almost sure here).
  const auto ds = tiny(10, 3);
  const int splits = 10000;
  std::vector<int> in_train(ds.size(), 0);
  std::vector<int> seeded(ds.size(), 0);
  for (int t = 0; t < splits; ++t) {
    Rng rng = Rng::stream(7, "freq", t);
    const auto pool = split_and_seed(ds, rng);
    for (const Index i : pool.train) ++in_train[i];
    for (const Index i : pool.labeled) ++seeded[i];
  }
  const double sd = std::sqrt(splits * 0.25);
  for (Index i = 0; i < ds.size(); ++i) EXPECT_NEAR(in_train[i], splits / 2.0, 3.5 * sd) << i;
  // Seed membership: P = 1/2 (in train) * E[1 / #class members in train] ~ 1/10.
  int total = 0;
  for (const int s : seeded) total += s;
  EXPECT_EQ(total, 2 * splits);
}

TEST(Split, TooFewPerClassIsRejected) {
  const auto ds = parse_text("1 1:1\n-1 1:2\n-1 1:3\n", FileFormat::libsvm);
  Rng rng(1);
  EXPECT_THROW((void)split_and_seed(ds, rng), ValidationError);
}

TEST(Pool, AcquireOutsidePoolIsStateError) {
  const auto ds = tiny(6, 1);
  Rng rng(2);
  auto pool = split_and_seed(ds, rng);
  EXPECT_THROW(pool.acquire(pool.labeled[0]), StateError);
  EXPECT_THROW(pool.acquire(pool.test[0]), StateError);
  const Index first = pool.unlabeled.front();
  pool.acquire(first);
  EXPECT_EQ(pool.labeled.back(), first);
  EXPECT_THROW(pool.acquire(first), StateError);
  pool.check_invariants(ds.size());
}
