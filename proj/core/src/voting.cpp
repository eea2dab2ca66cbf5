#include <algorithm>
#include <limits>
#include <map>

#include "pfm/classify.hpp"
#include "pfm/error.hpp"

namespace pfm {

VoteResult majority_vote(std::span<const ViewPrediction> views) {
  if (views.empty()) throw Error(ErrorKind::InvalidArgument, "majority vote needs at least one view");
  VoteResult result;
  std::map<int, int> counts;
  for (const auto& v : views) {
    result.view_labels.push_back(v.label);
    result.view_scores.push_back(v.scores);
    ++counts[v.label];
  }
  int top = 0;
  for (const auto& [label, n] : counts) top = std::max(top, n);
  std::vector<int> tied;
  for (const auto& [label, n] : counts) {
    if (n == top) tied.push_back(label);
  }
  result.predicted = tied.front();
  if (tied.size() == 1) return result;

  result.tie_broken = true;
  double best = -std::numeric_limits<double>::infinity();
  for (const int label : tied) {
    double sum = 0.0;
    for (const auto& v : views) {
      if (label >= 0 && label < v.scores.size()) sum += v.scores(label);
    }
    if (sum > best) {
      best = sum;
      result.predicted = label;
    }
  }
  return result;
}

}  // namespace pfm
