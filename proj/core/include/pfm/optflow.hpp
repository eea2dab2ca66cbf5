#pragma once

#include <memory>

#include "pfm/image.hpp"

namespace pfm {

/// Two-frame polynomial-expansion flow parameters.
struct FlowParams {
  int levels = 3;            // pyramid levels including the full-resolution one
  double pyr_scale = 0.5;    // size ratio between consecutive levels
  int window = 15;           // averaging window of the displacement solve
  int iterations = 3;        // solver iterations per level
  int poly_n = 5;            // half-width of the polynomial expansion neighborhood
  double poly_sigma = 1.1;   // Gaussian applicability of the expansion
  int min_level_size = 16;   // coarser levels are skipped below this many pixels
};

/// Dense displacement from one frame to the next, in pixels per frame.
struct FlowField {
  FloatImage u;
  FloatImage v;

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }
};

struct FlowGradients {
  FloatImage du_dx;
  FloatImage du_dy;
  FloatImage dv_dx;
  FloatImage dv_dy;
};

inline constexpr int kMinFlowSize = 32;

FloatImage to_float(const GrayImage& image);

/// Bilinear resampling with pixel-center alignment and replicated edges.
FloatImage resize_bilinear(const FloatImage& src, int width, int height);

/// Separable Gaussian blur, replicated edges. `radius` <= 0 picks ceil(3 sigma).
FloatImage gaussian_blur(const FloatImage& src, double sigma, int radius = 0);

struct FlowFrameData;

/// A frame with its per-level polynomial expansions, so consecutive pairs share the work.
struct FlowFrame {
  int width = 0;
  int height = 0;
  bool constant = false;
  std::shared_ptr<const FlowFrameData> data;
};

FlowFrame prepare_flow_frame(const FloatImage& image, const FlowParams& params = {});

/// Both frames must have been prepared with the same parameters.
FlowField compute_flow(const FlowFrame& prev, const FlowFrame& next, const FlowParams& params = {});
FlowField compute_flow(const FloatImage& prev, const FloatImage& next, const FlowParams& params = {});
FlowField compute_flow(const GrayImage& prev, const GrayImage& next, const FlowParams& params = {});

/// Central differences inside, one-sided differences on the outermost rows/columns.
FlowGradients flow_gradients(const FlowField& flow);

}  // namespace pfm
