#include "pfm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <numeric>
#include <random>
#include <string>

#include "pfm/error.hpp"

namespace pfm {

namespace {

struct BinaryResult {
  Eigen::VectorXd alpha;
  BinaryTrainInfo info;
};

// Dual coordinate descent on the linear kernel matrix `gram` (bias column included).
// g caches the decision values w . x_i, so each coordinate step costs O(n).
BinaryResult train_binary(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, const SvmParams& params) {
  const Eigen::Index n = gram.rows();
  const double c = params.c;
  BinaryResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(params.seed);

  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const Eigen::Index i : order) {
      const double q = gram(i, i);
      double& a = r.alpha(i);
      if (q <= 0.0) {
        a = c;  // zero feature: the coordinate only lowers the objective by its own term
        continue;
      }
      const double grad = y(i) * g(i) - 1.0;
      const double pg = a <= 0.0 ? std::min(grad, 0.0) : (a >= c ? std::max(grad, 0.0) : grad);
      if (std::abs(pg) <= 1e-14) continue;
      const double next = std::clamp(a - grad / q, 0.0, c);
      const double delta = (next - a) * y(i);
      if (delta != 0.0) g.noalias() += delta * gram.col(i);
      a = next;
    }
    const double w2 = (r.alpha.array() * y.array() * g.array()).sum();
    const double dual = 0.5 * w2 - r.alpha.sum();
    const double hinge = (1.0 - y.array() * g.array()).max(0.0).sum();
    const double primal = 0.5 * w2 + c * hinge;
    r.info.objective.push_back(dual);
    r.info.epochs = epoch + 1;
    r.info.gap = (primal + dual) / std::max(primal, 1e-12);
    if (r.info.gap <= params.tol) {
      r.info.converged = true;
      break;
    }
  }
  return r;
}

void validate(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels, const SvmParams& params) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature rows and labels differ in count");
  }
  if (!features.allFinite()) throw Error(ErrorKind::InvalidArgument, "non-finite SVM features");
  if (!(params.c > 0.0)) throw Error(ErrorKind::InvalidArgument, "SVM C must be positive");
}

std::vector<int> class_table(std::span<const int> labels) {
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error(ErrorKind::InsufficientData, "SVM training needs at least two classes");
  return classes;
}

Eigen::MatrixXd kernel(const Eigen::Ref<const Eigen::MatrixXd>& x, double bias_multiplier) {
  Eigen::MatrixXd gram = x * x.transpose();
  gram.array() += bias_multiplier * bias_multiplier;
  return gram;
}

SvmTraining train_with_gram(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                            const Eigen::MatrixXd& gram, const SvmParams& params) {
  SvmTraining out;
  OvaSvmModel& m = out.model;
  m.labels = class_table(labels);
  m.c = params.c;
  const auto p = static_cast<Eigen::Index>(m.labels.size());
  const Eigen::Index n = features.rows();
  m.weights.resize(p, features.cols());
  m.biases.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == m.labels[k] ? 1.0 : -1.0;
    SvmParams binary = params;
    binary.seed = params.seed + static_cast<std::uint64_t>(k);
    BinaryResult r = train_binary(gram, y, binary);
    const Eigen::VectorXd ay = r.alpha.cwiseProduct(y);
    m.weights.row(k) = (features.transpose() * ay).transpose();
    m.biases(k) = params.bias_multiplier * params.bias_multiplier * ay.sum();
    if (!r.info.converged) {
      warn("SVM class " + std::to_string(m.labels[k]) + " stopped at relative gap " + std::to_string(r.info.gap));
    }
    out.info.push_back(std::move(r.info));
  }
  return out;
}

}  // namespace

int OvaSvmModel::class_index(int label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) throw Error(ErrorKind::InvalidArgument, "unknown class label");
  return static_cast<int>(it - labels.begin());
}

SvmTraining train_ova(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                      const SvmParams& params) {
  validate(features, labels, params);
  class_table(labels);
  return train_with_gram(features, labels, kernel(features, params.bias_multiplier), params);
}

Eigen::VectorXd predict_scores(const OvaSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature) {
  if (feature.size() != model.weights.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "feature dimension " + std::to_string(feature.size()) +
                                                  " does not match model dimension " +
                                                  std::to_string(model.weights.cols()));
  }
  return model.weights * feature + model.biases;
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  if (scores.size() == 0) throw Error(ErrorKind::InvalidArgument, "argmax of an empty score vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return static_cast<int>(best);
}

int predict_label(const OvaSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature) {
  return model.labels[static_cast<std::size_t>(argmax(predict_scores(model, feature)))];
}

double select_c(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                std::span<const int> folds, std::span<const double> candidates, const SvmParams& base) {
  validate(features, labels, base);
  if (folds.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "fold ids and labels differ in count");
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no C candidates");
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> fold_ids(folds.begin(), folds.end());
  std::sort(fold_ids.begin(), fold_ids.end());
  fold_ids.erase(std::unique(fold_ids.begin(), fold_ids.end()), fold_ids.end());
  if (fold_ids.size() < 2) return sorted.front();

  const Eigen::MatrixXd gram = kernel(features, base.bias_multiplier);
  double best_c = sorted.front();
  long best_correct = -1;
  for (const double c : sorted) {
    long correct = 0;
    for (const int fold : fold_ids) {
      std::vector<Eigen::Index> train, test;
      for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == fold ? test : train).push_back(static_cast<Eigen::Index>(i));
      std::vector<int> train_labels;
      for (const auto i : train) train_labels.push_back(labels[static_cast<std::size_t>(i)]);
      if (std::set<int>(train_labels.begin(), train_labels.end()).size() < 2) continue;
      const Eigen::MatrixXd x = features(train, Eigen::all);
      const Eigen::MatrixXd sub = gram(train, train);
      SvmParams params = base;
      params.c = c;
      const OvaSvmModel model = train_with_gram(x, train_labels, sub, params).model;
      for (const auto i : test) correct += predict_label(model, features.row(i).transpose()) == labels[static_cast<std::size_t>(i)];
    }
    if (correct > best_correct) {
      best_correct = correct;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace pfm
