#pragma once

// L2-regularized binary logistic regression over bias-augmented inputs:
//
//   g(w) = ||w||^2 / (2 lambda) + sum_i log(1 + exp(-y_i w^T x~_i)),  x~ = (x, 1)
//
// The bias weight is the last coordinate and is regularized like the others.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uncertal/errors.hpp"

namespace uncertal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Label : std::int8_t { negative = -1, positive = 1 };

inline constexpr std::array<Label, 2> kLabels{Label::positive, Label::negative};

[[nodiscard]] inline constexpr double sign(Label y) noexcept {
  return y == Label::positive ? 1.0 : -1.0;
}
[[nodiscard]] inline constexpr Label flip(Label y) noexcept {
  return y == Label::positive ? Label::negative : Label::positive;
}
[[nodiscard]] inline constexpr std::size_t label_slot(Label y) noexcept {
  return y == Label::positive ? 0 : 1;
}

inline Label label_from_int(int v) {
  if (v == 1) return Label::positive;
  if (v == -1) return Label::negative;
  throw InputError("label must be +1 or -1, got " + std::to_string(v));
}

/// Probabilities clamped into [kProbFloor, 1 - kProbFloor] before any log.
inline constexpr double kProbFloor = 1e-12;

[[nodiscard]] inline double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

/// log(1 + exp(z)) without overflow.
[[nodiscard]] inline double softplus(double z) noexcept {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

[[nodiscard]] inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Binary entropy in nats of a clamped probability.
[[nodiscard]] inline double binary_entropy(double p) noexcept {
  const double q = clamp_probability(p);
  return -(q * std::log(q) + (1.0 - q) * std::log(1.0 - q));
}

/// Row-wise design matrix with a trailing constant-1 column plus labels.
class TrainingSet {
 public:
  explicit TrainingSet(Eigen::Index dim) : rows_(0, dim + 1) {}

  TrainingSet(Matrix augmented_rows, std::vector<Label> labels)
      : rows_(std::move(augmented_rows)), labels_(std::move(labels)) {
    if (rows_.rows() != static_cast<Eigen::Index>(labels_.size()))
      throw InputError("TrainingSet: row count and label count differ");
    if (rows_.cols() < 1) throw InputError("TrainingSet: augmented rows need a bias column");
  }

  /// Builds from (features, label) pairs; all feature vectors must share one length.
  static TrainingSet from_pairs(std::span<const std::pair<Vector, Label>> pairs) {
    if (pairs.empty()) throw PreconditionError("TrainingSet: no labeled instances");
    TrainingSet set(pairs.front().first.size());
    set.reserve(static_cast<Eigen::Index>(pairs.size()));
    for (const auto& [x, y] : pairs) set.add(x, y);
    return set;
  }

  void reserve(Eigen::Index capacity) {
    if (capacity > rows_.rows()) {
      Matrix grown(capacity, rows_.cols());
      grown.topRows(count()) = rows_.topRows(count());
      rows_ = std::move(grown);
    }
  }

  template <class Derived>
  void add(const Eigen::MatrixBase<Derived>& x, Label y) {
    if (x.size() != dim())
      throw InputError("TrainingSet: feature vector has length " + std::to_string(x.size()) +
                       ", expected " + std::to_string(dim()));
    if (!x.allFinite()) throw InputError("TrainingSet: non-finite feature value");
    const Eigen::Index m = count();
    if (m == rows_.rows()) reserve(std::max<Eigen::Index>(4, 2 * m));
    rows_.row(m).head(dim()) = x.transpose();
    rows_(m, dim()) = 1.0;
    labels_.push_back(y);
  }

  void set_label(Eigen::Index i, Label y) { labels_.at(static_cast<std::size_t>(i)) = y; }

  /// Overwrites live row i in place.
  template <class Derived>
  void set_row(Eigen::Index i, const Eigen::MatrixBase<Derived>& x, Label y) {
    if (x.size() != dim()) throw InputError("TrainingSet: feature vector length mismatch");
    rows_.row(i).head(dim()) = x.transpose();
    rows_(i, dim()) = 1.0;
    set_label(i, y);
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return rows_.cols() - 1; }
  [[nodiscard]] Eigen::Index count() const noexcept {
    return static_cast<Eigen::Index>(labels_.size());
  }
  [[nodiscard]] bool empty() const noexcept { return labels_.empty(); }

  [[nodiscard]] auto augmented() const { return rows_.topRows(count()); }
  [[nodiscard]] const std::vector<Label>& labels() const noexcept { return labels_; }

  [[nodiscard]] Vector signs() const {
    Vector s(count());
    for (Eigen::Index i = 0; i < count(); ++i) s(i) = sign(labels_[static_cast<std::size_t>(i)]);
    return s;
  }

 private:
  Matrix rows_;  // capacity rows; only the first count() are live
  std::vector<Label> labels_;
};

/// How the solver finished; attached to every trained Model.
struct SolverReport {
  bool converged = true;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Trained weights (last entry = bias) with the lambda they were fit under.
class Model {
 public:
  Model(Vector weights, double lambda, SolverReport report = {})
      : weights_(std::move(weights)), lambda_(lambda), report_(report) {
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
      throw InputError("Model: lambda must be a positive finite number");
    if (weights_.size() < 1) throw InputError("Model: weights need at least the bias entry");
    if (!weights_.allFinite()) throw NumericalError("Model: non-finite weights");
  }

  static Model zeros(Eigen::Index dim, double lambda) { return {Vector::Zero(dim + 1), lambda}; }

  [[nodiscard]] const Vector& weights() const noexcept { return weights_; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return weights_.size() - 1; }

  // Meaningful only for models returned by train().
  [[nodiscard]] const SolverReport& report() const noexcept { return report_; }
  [[nodiscard]] bool converged() const noexcept { return report_.converged; }

  [[nodiscard]] Model negated() const { return {-weights_, lambda_}; }

 private:
  Vector weights_;
  double lambda_;
  SolverReport report_;
};

struct TrainConfig {
  double lambda = 100.0;
  double grad_tol = 1e-8;
  int max_iter = 200;
  std::optional<Model> warm_start;

  void validate() const {
    if (!(lambda > 0.0)) throw InputError("TrainConfig: lambda must be > 0");
    if (!(grad_tol > 0.0)) throw InputError("TrainConfig: grad_tol must be > 0");
    if (max_iter < 1) throw InputError("TrainConfig: max_iter must be >= 1");
  }
};

struct Posterior {
  double positive = 0.5;
  double negative = 0.5;

  [[nodiscard]] double of(Label y) const noexcept {
    return y == Label::positive ? positive : negative;
  }
  [[nodiscard]] double max() const noexcept { return std::max(positive, negative); }
};

[[nodiscard]] inline Posterior posterior_from_margin(double margin) noexcept {
  const double p = sigmoid(margin);
  return {p, 1.0 - p};
}

namespace detail {

inline void check_dims(const Model& model, Eigen::Index dim) {
  if (model.dim() != dim)
    throw InputError("dimensionality mismatch: model has " + std::to_string(model.dim()) +
                     " features, input has " + std::to_string(dim));
}

inline void check_nonempty(const TrainingSet& set) {
  if (set.empty()) throw PreconditionError("labeled set is empty");
}

/// Regularized objective and y-scaled margins for weights w.
inline double objective_at(const Vector& w, double lambda, const TrainingSet& set,
                           const Vector& signs, Vector& margins) {
  margins = (set.augmented() * w).cwiseProduct(signs);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-margins(i));
  return loss + w.squaredNorm() / (2.0 * lambda);
}

}  // namespace detail

/// Posterior of the model at one raw (non-augmented) feature vector.
template <class Derived>
[[nodiscard]] Posterior posterior(const Model& model, const Eigen::MatrixBase<Derived>& x) {
  detail::check_dims(model, x.size());
  const auto& w = model.weights();
  const double margin = w.head(model.dim()).dot(x.derived().template cast<double>()) + w(model.dim());
  return posterior_from_margin(margin);
}

/// P(+1|x) for every row of a bias-augmented matrix.
template <class Derived>
[[nodiscard]] Vector positive_probabilities(const Model& model,
                                            const Eigen::MatrixBase<Derived>& augmented) {
  detail::check_dims(model, augmented.cols() - 1);
  Vector margins = augmented * model.weights();
  for (Eigen::Index i = 0; i < margins.size(); ++i) margins(i) = sigmoid(margins(i));
  return margins;
}

/// Sum of -log P(y_i|x_i) over the set, plus ||w||^2/(2 lambda) when requested.
[[nodiscard]] inline double objective_value(const Model& model, const TrainingSet& set,
                                            bool include_regularizer) {
  detail::check_nonempty(set);
  detail::check_dims(model, set.dim());
  const Vector margins = (set.augmented() * model.weights()).cwiseProduct(set.signs());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-margins(i));
  if (include_regularizer) loss += model.weights().squaredNorm() / (2.0 * model.lambda());
  return loss;
}

/// Analytic gradient of g at the model's weights.
[[nodiscard]] inline Vector gradient(const Model& model, const TrainingSet& set) {
  detail::check_nonempty(set);
  detail::check_dims(model, set.dim());
  const Vector signs = set.signs();
  const Vector margins = (set.augmented() * model.weights()).cwiseProduct(signs);
  Vector coeff(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) coeff(i) = -signs(i) * sigmoid(-margins(i));
  return set.augmented().transpose() * coeff + model.weights() / model.lambda();
}

/// Newton's method with Armijo backtracking; falls back to a steepest-descent
/// step whenever the Hessian factorization is unusable.
[[nodiscard]] inline Model train(const TrainingSet& set, const TrainConfig& config) {
  config.validate();
  detail::check_nonempty(set);

  const Eigen::Index p = set.dim() + 1;
  const double lambda = config.lambda;
  Vector w = Vector::Zero(p);
  if (config.warm_start) {
    detail::check_dims(*config.warm_start, set.dim());
    w = config.warm_start->weights();
  }

  constexpr double kArmijo = 1e-4;
  constexpr double kMaxCondition = 1e12;
  constexpr int kMaxHalvings = 60;

  const auto X = set.augmented();
  const Vector signs = set.signs();
  Vector margins;
  double f = detail::objective_at(w, lambda, set, signs, margins);

  Vector grad(p);
  Vector curvature(margins.size());
  Vector coeff(margins.size());
  Matrix hessian(p, p);
  Matrix scaled(margins.size(), p);
  Vector trial_margins;

  bool converged = false;
  double grad_norm = 0.0;
  int iter = 0;
  for (;; ++iter) {
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      const double s = sigmoid(-margins(i));  // 1 - P(y_i|x_i)
      coeff(i) = -signs(i) * s;
      curvature(i) = s * (1.0 - s);
    }
    grad.noalias() = X.transpose() * coeff;
    grad += w / lambda;
    grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(grad_norm)) throw NumericalError("train: non-finite gradient");
    if (grad_norm <= config.grad_tol) {
      converged = true;
      break;
    }
    if (iter >= config.max_iter) break;

    scaled = curvature.cwiseSqrt().asDiagonal() * X;
    hessian.setIdentity();
    hessian /= lambda;
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());

    Vector direction;
    const Eigen::LDLT<Matrix> ldlt(hessian.selfadjointView<Eigen::Lower>());
    const auto d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    if (ldlt.info() == Eigen::Success && dmin > 0.0 && dmax / dmin <= kMaxCondition) {
      direction = -ldlt.solve(grad);
    } else {
      direction = -grad;
    }

    const double slope = grad.dot(direction);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      const Vector trial = w + step * direction;
      const double f_trial = detail::objective_at(trial, lambda, set, signs, trial_margins);
      // Slack of a few ulps of f: near the optimum the true decrease is below
      // the rounding noise of the objective.
      if (f_trial <= f + kArmijo * step * slope + 8.0 * 2.22e-16 * std::abs(f)) {
        w = trial;
        f = f_trial;
        std::swap(margins, trial_margins);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  return {std::move(w), lambda, SolverReport{converged, iter, grad_norm}};
}

}  // namespace uncertal
