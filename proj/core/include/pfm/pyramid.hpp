#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pfm/bow.hpp"
#include "pfm/descriptor.hpp"
#include "pfm/geometry.hpp"
#include "pfm/gmm.hpp"
#include "pfm/pca.hpp"

namespace pfm {

struct GridLevel {
  int rows = 1;
  int cols = 1;

  int cells() const noexcept { return rows * cols; }
  friend bool operator==(const GridLevel&, const GridLevel&) = default;
};

/// Spatial grids over the person box. `cells` optionally restricts the output to a
/// subset of the level-major, row-major cell indices (e.g. only the lower half).
struct PyramidConfig {
  std::vector<GridLevel> levels;
  std::vector<int> cells;

  int total_cells() const noexcept;
  std::vector<int> selected_cells() const;
  friend bool operator==(const PyramidConfig&, const PyramidConfig&) = default;
};

/// Parses "2x1" or "1x1,2x1" (rows x cols per level).
PyramidConfig parse_pyramid(std::string_view levels);
std::string format_pyramid(const PyramidConfig& config);

/// Named configurations: pfm-fb [1x1], pfm [2x1], pfm-h1 / pfm-h2 (upper / lower cell of 2x1),
/// pfm-pyr [1x1, 2x1], bow [2x1].
PyramidConfig pyramid_preset(std::string_view name);

struct CellIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform partition of the box; boundaries belong to the higher-index cell and positions
/// outside the box clamp to the nearest cell. Degenerate boxes yield nothing.
std::optional<CellIndex> assign_cell(const Point2& position, const Box& box, const GridLevel& grid);

/// Local descriptors of one video, one per row, with the pooling keys of each row.
struct LocalFeatures {
  Eigen::MatrixXd values;
  std::vector<Point2> positions;  // mean trajectory position, base pixels
  std::vector<int> middle_frames;

  Eigen::Index size() const noexcept { return values.rows(); }
};

LocalFeatures to_local_features(std::span<const TrajectoryDescriptor> descriptors);

/// Row indices of `features` per selected cell, in selected-cell order. The box used for a
/// row is the track's box at its middle frame (or the nearest one in time).
std::vector<std::vector<Eigen::Index>> pool_cells(const LocalFeatures& features, const PersonTrack& track,
                                                  const PyramidConfig& config);

struct GaitMetadata {
  int subject = -1;
  int trajectory = -1;
  int view = -1;
  bool mirrored = false;
};

struct GaitDescriptor {
  Eigen::VectorXd values;
  GaitMetadata meta;
  std::vector<bool> empty_cells;  // per selected cell
  Eigen::Index cell_dim = 0;      // before any high-level PCA
};

/// Per-cell normalized Fisher Vectors, concatenated; `low_pca` applies to the local
/// descriptors first and `high_pca` to the concatenation.
GaitDescriptor build_pfm(const LocalFeatures& features, const PersonTrack& track, const PyramidConfig& config,
                         const GaussianMixture& gmm, const PcaModel* low_pca = nullptr,
                         const PcaModel* high_pca = nullptr);

/// Bag-of-words counterpart with the same pooling.
GaitDescriptor build_bow(const LocalFeatures& features, const PersonTrack& track, const PyramidConfig& config,
                         const Codebook& codebook, const PcaModel* low_pca = nullptr);

}  // namespace pfm
