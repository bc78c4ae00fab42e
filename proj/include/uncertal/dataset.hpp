#pragma once

// Dense binary datasets: loading (libsvm / csv), writing libsvm, feature
// standardization and the Gaussian-blob generator.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uncertal/errors.hpp"
#include "uncertal/model.hpp"
#include "uncertal/rng.hpp"

namespace uncertal {

using Index = std::size_t;

struct Dataset {
  std::string name;
  Matrix features;  // n x d, row i = instance i
  std::vector<Label> labels;
  /// Set when the file's labels were not already +1/-1, e.g. "{0,1} -> {-1,+1}".
  std::optional<std::string> label_remap;

  [[nodiscard]] Index size() const noexcept { return labels.size(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return features.cols(); }

  [[nodiscard]] std::size_t count(Label y) const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), y));
  }

  /// Bias-augmented copy of the listed rows, in the given order.
  [[nodiscard]] Matrix augmented_rows(std::span<const Index> rows) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), dim() + 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.row(static_cast<Eigen::Index>(r)).head(dim()) =
          features.row(static_cast<Eigen::Index>(rows[r]));
    }
    out.col(dim()).setOnes();
    return out;
  }

  [[nodiscard]] auto row(Index i) const {
    return features.row(static_cast<Eigen::Index>(i)).transpose();
  }
};

/// Checks the dataset invariants that loading and generation must establish.
inline void validate(const Dataset& ds) {
  const auto where = [&] { return "dataset '" + ds.name + "': "; };
  if (static_cast<Eigen::Index>(ds.labels.size()) != ds.features.rows())
    throw ValidationError(where() + "label count does not match row count");
  if (ds.labels.empty()) throw ValidationError(where() + "no instances");
  if (!ds.features.allFinite()) throw ValidationError(where() + "non-finite feature values");
  if (ds.count(Label::positive) == 0 || ds.count(Label::negative) == 0)
    throw ValidationError(where() + "both classes must be present");
}

enum class FileFormat { libsvm, csv };

inline FileFormat parse_format(std::string_view text) {
  if (text == "libsvm") return FileFormat::libsvm;
  if (text == "csv") return FileFormat::csv;
  throw InputError("unknown dataset format '" + std::string(text) + "' (expected libsvm or csv)");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line_no,
                                    const std::string& what) {
  throw InputError(path + ":" + std::to_string(line_no) + ": " + what);
}

/// Maps raw numeric labels to +1/-1. Accepted encodings: {-1,+1}, {0,1}
/// (0 -> -1, 1 -> +1) and {1,2} (1 -> +1, 2 -> -1).
inline std::vector<Label> remap_labels(const std::vector<double>& raw, const std::string& name,
                                       std::optional<std::string>& note) {
  std::set<double> distinct(raw.begin(), raw.end());
  if (distinct.size() < 2)
    throw ValidationError("dataset '" + name + "': both classes must be present");
  const auto subset_of = [&](std::initializer_list<double> allowed) {
    return std::all_of(distinct.begin(), distinct.end(), [&](double v) {
      return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    });
  };
  std::map<double, Label> mapping;
  if (subset_of({-1.0, 1.0})) {
    mapping = {{-1.0, Label::negative}, {1.0, Label::positive}};
  } else if (subset_of({0.0, 1.0})) {
    mapping = {{0.0, Label::negative}, {1.0, Label::positive}};
    note = "labels {0,1} remapped to {-1,+1}";
  } else if (subset_of({1.0, 2.0})) {
    mapping = {{1.0, Label::positive}, {2.0, Label::negative}};
    note = "labels {1,2} remapped to {+1,-1}";
  } else {
    throw ValidationError("dataset '" + name +
                          "': labels must be binary and encoded as {-1,+1}, {0,1} or {1,2}");
  }
  std::vector<Label> labels;
  labels.reserve(raw.size());
  for (double v : raw) labels.push_back(mapping.at(v));
  return labels;
}

inline std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos || dot == 0 ? base : base.substr(0, dot);
}

inline Dataset parse_libsvm(std::istream& in, const std::string& path, const std::string& name) {
  std::vector<double> raw_labels;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  Eigen::Index dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_whitespace(view);
    if (tokens.empty()) continue;
    const auto label = parse_double(tokens[0]);
    if (!label) parse_fail(path, line_no, "cannot parse label '" + std::string(tokens[0]) + "'");
    std::vector<std::pair<Eigen::Index, double>> entries;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos)
        parse_fail(path, line_no, "expected <index>:<value>, got '" + std::string(tokens[t]) + "'");
      long long idx = 0;
      const auto key = tokens[t].substr(0, colon);
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size() || idx < 1)
        parse_fail(path, line_no, "feature index must be a positive integer");
      const auto value = parse_double(tokens[t].substr(colon + 1));
      if (!value) parse_fail(path, line_no, "cannot parse feature value");
      if (!std::isfinite(*value))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": non-finite feature value");
      entries.emplace_back(static_cast<Eigen::Index>(idx - 1), *value);
      dim = std::max(dim, static_cast<Eigen::Index>(idx));
    }
    raw_labels.push_back(*label);
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw ValidationError(path + ": no instances");

  Dataset ds;
  ds.name = name;
  ds.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [c, v] : rows[r]) ds.features(static_cast<Eigen::Index>(r), c) = v;
  ds.labels = remap_labels(raw_labels, name, ds.label_remap);
  return ds;
}

inline Dataset parse_csv(std::istream& in, const std::string& path, const std::string& name) {
  std::vector<double> raw_labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view, ',');
    std::vector<double> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (const auto f : fields) {
      const auto v = parse_double(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (first_content) {
      first_content = false;
      if (!numeric) {  // header line
        width = fields.size();
        continue;
      }
    }
    if (!numeric) parse_fail(path, line_no, "non-numeric field");
    if (width == 0) width = values.size();
    if (values.size() != width)
      parse_fail(path, line_no,
                 "expected " + std::to_string(width) + " columns, got " + std::to_string(values.size()));
    if (width < 2) parse_fail(path, line_no, "need at least one feature column and a label column");
    for (std::size_t c = 0; c + 1 < values.size(); ++c)
      if (!std::isfinite(values[c]))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": non-finite feature value");
    raw_labels.push_back(values.back());
    values.pop_back();
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ValidationError(path + ": no instances");

  Dataset ds;
  ds.name = name;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  ds.labels = remap_labels(raw_labels, name, ds.label_remap);
  return ds;
}

}  // namespace detail

/// Parses a dataset from a stream. `origin` is only used in error messages.
inline Dataset parse(std::istream& in, FileFormat format, const std::string& name,
                     const std::string& origin = "<stream>") {
  Dataset ds = format == FileFormat::libsvm ? detail::parse_libsvm(in, origin, name)
                                            : detail::parse_csv(in, origin, name);
  validate(ds);
  return ds;
}

/// Loads a file; row i of the file becomes instance i. The dataset name
/// defaults to the file stem.
inline Dataset load(const std::string& path, FileFormat format, std::optional<std::string> name = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file '" + path + "'");
  return parse(in, format, name.value_or(detail::stem_of(path)), path);
}

/// Writes libsvm text with full round-trip precision (17 significant digits).
/// Zero entries are omitted, as is conventional for the format.
inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  char buf[64];
  for (Index i = 0; i < ds.size(); ++i) {
    out << (ds.labels[i] == Label::positive ? "+1" : "-1");
    for (Eigen::Index c = 0; c < ds.dim(); ++c) {
      const double v = ds.features(static_cast<Eigen::Index>(i), c);
      if (v == 0.0) continue;
      const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
      out << ' ' << (c + 1) << ':' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

/// Per-feature affine map fitted on a training slice.
struct Standardizer {
  Vector mean;
  Vector scale;  // population std; 0 marks a constant feature

  /// Columns whose spread is below this (relative to their magnitude) count as constant.
  static constexpr double kConstantTol = 1e-12;

  static Standardizer fit(const Dataset& ds, std::span<const Index> rows) {
    if (rows.empty()) throw PreconditionError("standardize: training slice is empty");
    const Eigen::Index d = ds.dim();
    Standardizer st{Vector::Zero(d), Vector::Zero(d)};
    const auto n = static_cast<double>(rows.size());
    for (const Index r : rows) st.mean += ds.features.row(static_cast<Eigen::Index>(r)).transpose();
    st.mean /= n;
    for (const Index r : rows) {
      st.scale += (ds.features.row(static_cast<Eigen::Index>(r)).transpose() - st.mean)
                      .cwiseAbs2();
    }
    st.scale = (st.scale / n).cwiseSqrt();
    for (Eigen::Index c = 0; c < d; ++c)
      if (st.scale(c) <= kConstantTol * (1.0 + std::abs(st.mean(c)))) st.scale(c) = 0.0;
    return st;
  }

  [[nodiscard]] Matrix apply(const Matrix& features) const {
    Matrix out(features.rows(), features.cols());
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (scale(c) == 0.0)
        out.col(c).setZero();
      else
        out.col(c) = (features.col(c).array() - mean(c)) / scale(c);
    }
    return out;
  }
};

/// Fits on `train_rows` and transforms every row of the dataset with those
/// statistics (so held-out rows see training means and scales).
inline std::pair<Standardizer, Dataset> standardize(const Dataset& ds,
                                                    std::span<const Index> train_rows) {
  auto st = Standardizer::fit(ds, train_rows);
  Dataset out = ds;
  out.features = st.apply(ds.features);
  return {std::move(st), std::move(out)};
}

/// Two Gaussian classes sharing one covariance.
struct SyntheticSpec {
  std::size_t per_class = 100;
  Vector mean_positive = (Vector(2) << 2.0, 0.0).finished();
  Vector mean_negative = (Vector(2) << -2.0, 0.0).finished();
  Matrix covariance = Matrix::Identity(2, 2);
  std::uint64_t seed = 0;
  std::string name = "synthetic";
};

/// Positive instances first, then negative ones; reproducible from spec.seed.
inline Dataset make_synthetic(const SyntheticSpec& spec) {
  const Eigen::Index d = spec.mean_positive.size();
  if (spec.per_class < 1) throw InputError("make_synthetic: per_class must be >= 1");
  if (spec.mean_negative.size() != d || spec.covariance.rows() != d || spec.covariance.cols() != d)
    throw InputError("make_synthetic: means and covariance disagree on dimensionality");
  if (!spec.covariance.isApprox(spec.covariance.transpose(), 1e-12))
    throw ValidationError("make_synthetic: covariance must be symmetric");
  const Eigen::LLT<Matrix> llt(spec.covariance);
  if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0.0).any())
    throw ValidationError("make_synthetic: covariance must be positive definite");
  const Matrix chol = llt.matrixL();

  Rng rng = Rng::stream(spec.seed, "synthetic");
  const auto n = static_cast<Eigen::Index>(2 * spec.per_class);
  Dataset ds;
  ds.name = spec.name;
  ds.features.resize(n, d);
  ds.labels.reserve(static_cast<std::size_t>(n));
  Vector z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool positive = i < static_cast<Eigen::Index>(spec.per_class);
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.normal();
    ds.features.row(i) = ((positive ? spec.mean_positive : spec.mean_negative) + chol * z).transpose();
    ds.labels.push_back(positive ? Label::positive : Label::negative);
  }
  return ds;
}

/// Euclidean distance from x to the Bayes decision boundary of a synthetic
/// spec (equal priors, shared covariance: a hyperplane).
template <class Derived>
[[nodiscard]] double bayes_boundary_distance(const SyntheticSpec& spec,
                                             const Eigen::MatrixBase<Derived>& x) {
  const Vector normal = spec.covariance.ldlt().solve(spec.mean_positive - spec.mean_negative);
  const double offset = -0.5 * normal.dot(spec.mean_positive + spec.mean_negative);
  return std::abs(normal.dot(x.derived().template cast<double>()) + offset) / normal.norm();
}

}  // namespace uncertal
