#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pfm/geometry.hpp"
#include "pfm/videoio.hpp"

namespace pfm {

struct SvmParams {
  double c = 1.0;
  double bias_multiplier = 1.0;  // 0 trains a bias-free model
  double tol = 1e-4;             // relative duality gap
  int max_epochs = 2000;
  std::uint64_t seed = 0;
};

/// One-vs-all linear SVM; row p of `weights` scores class `labels[p]`.
struct OvaSvmModel {
  Eigen::MatrixXd weights;  // P x dim
  Eigen::VectorXd biases;   // P
  std::vector<int> labels;  // ascending
  double c = 1.0;

  int classes() const noexcept { return static_cast<int>(labels.size()); }
  int dim() const noexcept { return static_cast<int>(weights.cols()); }
  int class_index(int label) const;
};

struct BinaryTrainInfo {
  std::vector<double> objective;  // dual objective 1/2|w|^2 - sum(alpha) after each epoch
  int epochs = 0;
  double gap = 0.0;               // final relative duality gap
  bool converged = false;
};

struct SvmTraining {
  OvaSvmModel model;
  std::vector<BinaryTrainInfo> info;  // per class
};

/// L2-regularized hinge-loss classifiers (class vs rest) by dual coordinate descent.
/// Features are rows of `features`.
SvmTraining train_ova(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                      const SvmParams& params = {});

/// w_p . x + b_p for each class.
Eigen::VectorXd predict_scores(const OvaSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature);

/// Index of the largest score, ties to the lowest index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& scores);
int predict_label(const OvaSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature);

/// Cross-validated choice of C: the candidate with the most correct held-out predictions
/// over the given folds; ties go to the smaller value.
double select_c(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                std::span<const int> folds, std::span<const double> candidates, const SvmParams& base = {});

struct ViewPrediction {
  int label = 0;
  Eigen::VectorXd scores;  // indexed by label, may be empty
};

struct VoteResult {
  int predicted = 0;
  std::vector<int> view_labels;
  std::vector<Eigen::VectorXd> view_scores;
  bool tie_broken = false;
};

/// Most frequent label; ties go to the largest summed score of the tied labels, then to
/// the lowest label.
VoteResult majority_vote(std::span<const ViewPrediction> views);

Box mirror_box(const Box& box, int width);
GrayImage mirror_image(const GrayImage& image);

/// Horizontal reflection of every frame and box.
std::pair<FrameSequence, std::vector<PersonTrack>> mirror_sequence(const FrameSequence& sequence,
                                                                   std::span<const PersonTrack> tracks);

}  // namespace pfm
