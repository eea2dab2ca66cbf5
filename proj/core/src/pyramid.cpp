#include "pfm/pyramid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "pfm/error.hpp"
#include "pfm/fisher.hpp"

namespace pfm {

int PyramidConfig::total_cells() const noexcept {
  int n = 0;
  for (const auto& l : levels) n += l.cells();
  return n;
}

std::vector<int> PyramidConfig::selected_cells() const {
  if (!cells.empty()) return cells;
  std::vector<int> all(total_cells());
  for (int i = 0; i < total_cells(); ++i) all[i] = i;
  return all;
}

PyramidConfig parse_pyramid(std::string_view text) {
  PyramidConfig config;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    const std::size_t x = item.find('x');
    GridLevel level;
    const auto bad = [&] { return Error(ErrorKind::Parse, "pyramid level '" + std::string(item) + "' is not RxC"); };
    if (x == std::string_view::npos) throw bad();
    const auto r1 = std::from_chars(item.data(), item.data() + x, level.rows);
    const auto r2 = std::from_chars(item.data() + x + 1, item.data() + item.size(), level.cols);
    if (r1.ptr != item.data() + x || r2.ptr != item.data() + item.size() || r1.ec != std::errc{} ||
        r2.ec != std::errc{} || level.rows < 1 || level.cols < 1) {
      throw bad();
    }
    config.levels.push_back(level);
    pos = comma + 1;
  }
  return config;
}

std::string format_pyramid(const PyramidConfig& config) {
  std::string out;
  for (const auto& l : config.levels) {
    if (!out.empty()) out += ',';
    out += std::to_string(l.rows) + "x" + std::to_string(l.cols);
  }
  return out;
}

PyramidConfig pyramid_preset(std::string_view name) {
  if (name == "pfm-fb") return {{{1, 1}}, {}};
  if (name == "pfm" || name == "bow") return {{{2, 1}}, {}};
  if (name == "pfm-h1") return {{{2, 1}}, {0}};
  if (name == "pfm-h2") return {{{2, 1}}, {1}};
  if (name == "pfm-pyr") return {{{1, 1}, {2, 1}}, {}};
  throw Error(ErrorKind::InvalidArgument, "unknown pipeline preset '" + std::string(name) + "'");
}

std::optional<CellIndex> assign_cell(const Point2& p, const Box& box, const GridLevel& grid) {
  if (box.x_max <= box.x_min || box.y_max <= box.y_min) {
    warn("degenerate bounding box, descriptor skipped");
    return std::nullopt;
  }
  const double nx = (p.x - box.x_min) / static_cast<double>(box.x_max - box.x_min);
  const double ny = (p.y - box.y_min) / static_cast<double>(box.y_max - box.y_min);
  const auto bin = [](double t, int n) { return std::clamp(static_cast<int>(std::floor(t * n)), 0, n - 1); };
  return CellIndex{bin(ny, grid.rows), bin(nx, grid.cols)};
}

LocalFeatures to_local_features(std::span<const TrajectoryDescriptor> descriptors) {
  LocalFeatures f;
  f.values.resize(static_cast<Eigen::Index>(descriptors.size()), kDescriptorDim);
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    for (int j = 0; j < kDescriptorDim; ++j) f.values(static_cast<Eigen::Index>(i), j) = descriptors[i].values[j];
    f.positions.push_back(descriptors[i].mean_position);
    f.middle_frames.push_back(descriptors[i].middle_frame);
  }
  return f;
}

std::vector<std::vector<Eigen::Index>> pool_cells(const LocalFeatures& features, const PersonTrack& track,
                                                  const PyramidConfig& config) {
  if (config.levels.empty()) throw Error(ErrorKind::InvalidArgument, "pyramid needs at least one level");
  if (features.positions.size() != static_cast<std::size_t>(features.size()) ||
      features.middle_frames.size() != static_cast<std::size_t>(features.size())) {
    throw Error(ErrorKind::DimensionMismatch, "local feature keys do not match rows");
  }
  const std::vector<int> selected = config.selected_cells();
  std::vector<int> slot(config.total_cells(), -1);
  for (std::size_t s = 0; s < selected.size(); ++s) {
    if (selected[s] < 0 || selected[s] >= config.total_cells()) {
      throw Error(ErrorKind::InvalidArgument, "pyramid cell subset index out of range");
    }
    slot[selected[s]] = static_cast<int>(s);
  }
  std::vector<std::vector<Eigen::Index>> members(selected.size());
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    const FrameBox* fb = track.nearest(features.middle_frames[i]);
    if (!fb) continue;
    int offset = 0;
    for (const auto& level : config.levels) {
      const auto cell = assign_cell(features.positions[i], fb->box, level);
      if (!cell) break;
      const int global = offset + cell->row * level.cols + cell->col;
      if (slot[global] >= 0) members[slot[global]].push_back(i);
      offset += level.cells();
    }
  }
  return members;
}

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& values, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
  return out;
}

template <typename Encode>
GaitDescriptor build_pooled(const LocalFeatures& features, const PersonTrack& track, const PyramidConfig& config,
                            const PcaModel* low_pca, Eigen::Index cell_dim, Encode&& encode) {
  if (features.size() == 0) throw Error(ErrorKind::InsufficientData, "video has no local descriptors");
  const auto members = pool_cells(features, track, config);
  const Eigen::MatrixXd local = low_pca ? apply_pca_rows(*low_pca, features.values) : features.values;

  GaitDescriptor g;
  g.cell_dim = cell_dim;
  g.values = Eigen::VectorXd::Zero(cell_dim * static_cast<Eigen::Index>(members.size()));
  for (std::size_t c = 0; c < members.size(); ++c) {
    g.empty_cells.push_back(members[c].empty());
    if (members[c].empty()) continue;
    g.values.segment(static_cast<Eigen::Index>(c) * cell_dim, cell_dim) = encode(gather(local, members[c]));
  }
  return g;
}

}  // namespace

GaitDescriptor build_pfm(const LocalFeatures& features, const PersonTrack& track, const PyramidConfig& config,
                         const GaussianMixture& gmm, const PcaModel* low_pca, const PcaModel* high_pca) {
  const Eigen::Index in_dim = low_pca ? low_pca->output_dim() : features.values.cols();
  if (in_dim != gmm.dim()) throw Error(ErrorKind::DimensionMismatch, "GMM dimension does not match local descriptors");
  const auto cell_dim = static_cast<Eigen::Index>(fisher_dimension(gmm.components(), gmm.dim()));
  GaitDescriptor g = build_pooled(features, track, config, low_pca, cell_dim,
                                  [&](const Eigen::MatrixXd& x) { return fisher_vector(x, gmm).values; });
  if (high_pca) g.values = apply_pca(*high_pca, g.values);
  return g;
}

GaitDescriptor build_bow(const LocalFeatures& features, const PersonTrack& track, const PyramidConfig& config,
                         const Codebook& codebook, const PcaModel* low_pca) {
  const Eigen::Index in_dim = low_pca ? low_pca->output_dim() : features.values.cols();
  if (in_dim != codebook.dim()) throw Error(ErrorKind::DimensionMismatch, "codebook dimension does not match local descriptors");
  return build_pooled(features, track, config, low_pca, codebook.size(),
                      [&](const Eigen::MatrixXd& x) { return bow_encode(x, codebook).values; });
}

}  // namespace pfm
