#pragma once

#include <span>
#include <string>
#include <vector>

namespace pfm {

struct ResultRow {
  std::string experiment;
  std::string partition;
  double multiview_acc = 0.0;  // fraction in [0, 1]
  double video_acc = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// `experiment=<name> partition=<id> multiview_acc=<float> video_acc=<float>` per line.
std::string format_results(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results(const std::string& text);

/// Percentages with at most one decimal: 1.0, 0.975 -> "100 (97.5)".
std::string format_cell(double multiview_acc, double video_acc);

/// One row per experiment, one column per partition plus an Avg column holding the
/// arithmetic means. No rows gives just the header.
std::string format_table(std::span<const ResultRow> rows);

}  // namespace pfm
