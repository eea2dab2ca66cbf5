#include "pfm/optflow.hpp"

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pfm/error.hpp"

namespace pfm {

FloatImage to_float(const GrayImage& image) {
  FloatImage out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) out.data()[i] = image.data()[i];
  return out;
}

FloatImage resize_bilinear(const FloatImage& src, int width, int height) {
  if (width == src.width() && height == src.height()) return src;
  FloatImage dst(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;

  std::vector<int> x0(width), x1(width);
  std::vector<float> ax(width);
  for (int x = 0; x < width; ++x) {
    const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
    const int ix = static_cast<int>(fx);
    x0[x] = std::min(ix, src.width() - 1);
    x1[x] = std::min(ix + 1, src.width() - 1);
    ax[x] = static_cast<float>(fx - ix);
  }
  for (int y = 0; y < height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int iy = static_cast<int>(fy);
    const auto r0 = src.row(std::min(iy, src.height() - 1));
    const auto r1 = src.row(std::min(iy + 1, src.height() - 1));
    const float ay = static_cast<float>(fy - iy);
    auto out = dst.row(y);
    for (int x = 0; x < width; ++x) {
      const float top = r0[x0[x]] + ax[x] * (r0[x1[x]] - r0[x0[x]]);
      const float bottom = r1[x0[x]] + ax[x] * (r1[x1[x]] - r1[x0[x]]);
      out[x] = top + ay * (bottom - top);
    }
  }
  return dst;
}

FloatImage gaussian_blur(const FloatImage& src, double sigma, int radius) {
  if (sigma <= 0.0) return src;
  if (radius <= 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = static_cast<float>(std::exp(-0.5 * k * k / (sigma * sigma)));
    sum += kernel[k + radius];
  }
  for (auto& k : kernel) k = static_cast<float>(k / sum);

  const int w = src.width(), h = src.height();
  FloatImage tmp(w, h), dst(w, h);
  for (int y = 0; y < h; ++y) {
    const auto in = src.row(y);
    auto out = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * in[std::clamp(x + k, 0, w - 1)];
      out[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    auto out = dst.row(y);
    for (int k = -radius; k <= radius; ++k) {
      const auto in = tmp.row(std::clamp(y + k, 0, h - 1));
      const float c = kernel[k + radius];
      for (int x = 0; x < w; ++x) out[x] += c * in[x];
    }
  }
  return dst;
}

namespace {

// Per-pixel quadratic model f(p) ~ c + bx x + by y + axx x^2 + ayy y^2 + axy x y,
// stored interleaved as {bx, by, axx, ayy, axy}.
struct Expansion {
  int width = 0;
  int height = 0;
  std::vector<float> coef;

  const float* at(int x, int y) const { return coef.data() + (static_cast<std::size_t>(y) * width + x) * 5; }
};

struct ExpansionKernel {
  int n = 0;
  std::vector<float> g, xg, xxg;  // indexed by offset + n
  double ig11 = 0, ig03 = 0, ig33 = 0, ig55 = 0;
};

// Weighted least-squares fit of the 6-term quadratic basis under a separable Gaussian
// applicability; only the entries of the inverse Gram matrix that the separable
// correlations need are kept.
ExpansionKernel make_expansion_kernel(int n, double sigma) {
  ExpansionKernel k;
  k.n = n;
  k.g.resize(2 * n + 1);
  k.xg.resize(2 * n + 1);
  k.xxg.resize(2 * n + 1);
  double s = 0.0;
  std::vector<double> gd(2 * n + 1);
  for (int x = -n; x <= n; ++x) {
    gd[x + n] = std::exp(-x * x / (2.0 * sigma * sigma));
    s += gd[x + n];
  }
  for (int x = -n; x <= n; ++x) {
    gd[x + n] /= s;
    k.g[x + n] = static_cast<float>(gd[x + n]);
    k.xg[x + n] = static_cast<float>(x * gd[x + n]);
    k.xxg[x + n] = static_cast<float>(x * x * gd[x + n]);
  }
  // basis order: 1, x, y, x^2, y^2, xy
  Eigen::Matrix<double, 6, 6> gram = Eigen::Matrix<double, 6, 6>::Zero();
  for (int y = -n; y <= n; ++y) {
    for (int x = -n; x <= n; ++x) {
      const double w = gd[y + n] * gd[x + n];
      const std::array<double, 6> b{1.0, double(x), double(y), double(x) * x, double(y) * y, double(x) * y};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) gram(i, j) += w * b[i] * b[j];
    }
  }
  const Eigen::Matrix<double, 6, 6> inv = gram.llt().solve(Eigen::Matrix<double, 6, 6>::Identity());
  k.ig11 = inv(1, 1);
  k.ig03 = inv(0, 3);
  k.ig33 = inv(3, 3);
  k.ig55 = inv(5, 5);
  return k;
}

Expansion polynomial_expansion(const FloatImage& src, const ExpansionKernel& k) {
  const int w = src.width(), h = src.height(), n = k.n;
  Expansion out{w, h, std::vector<float>(static_cast<std::size_t>(w) * h * 5)};
  // row holds, per column, the vertical correlations with g, y*g and y^2*g,
  // padded by n replicated columns on both sides.
  std::vector<float> rowbuf((w + 2 * n) * 3);
  float* row = rowbuf.data() + n * 3;
  const float* g = k.g.data() + n;
  const float* xg = k.xg.data() + n;
  const float* xxg = k.xxg.data() + n;

  for (int y = 0; y < h; ++y) {
    const auto s0 = src.row(y);
    for (int x = 0; x < w; ++x) {
      row[x * 3] = s0[x] * g[0];
      row[x * 3 + 1] = 0.f;
      row[x * 3 + 2] = 0.f;
    }
    for (int j = 1; j <= n; ++j) {
      const auto up = src.row(std::max(y - j, 0));
      const auto dn = src.row(std::min(y + j, h - 1));
      const float g0 = g[j], g1 = xg[j], g2 = xxg[j];
      for (int x = 0; x < w; ++x) {
        const float p = up[x] + dn[x];
        row[x * 3] += g0 * p;
        row[x * 3 + 1] += g1 * (dn[x] - up[x]);
        row[x * 3 + 2] += g2 * p;
      }
    }
    for (int j = 1; j <= n; ++j) {
      for (int c = 0; c < 3; ++c) {
        row[-j * 3 + c] = row[c];
        row[(w - 1 + j) * 3 + c] = row[(w - 1) * 3 + c];
      }
    }
    float* dst = out.coef.data() + static_cast<std::size_t>(y) * w * 5;
    for (int x = 0; x < w; ++x) {
      double r_g = row[x * 3] * g[0];      // 1
      double r_x = 0.0;                    // x
      double r_y = row[x * 3 + 1] * g[0];  // y
      double r_xx = 0.0;                   // x^2
      double r_yy = row[x * 3 + 2] * g[0]; // y^2
      double r_xy = 0.0;                   // xy
      for (int j = 1; j <= n; ++j) {
        const float* a = row + (x + j) * 3;
        const float* b = row + (x - j) * 3;
        const double t = a[0] + b[0];
        r_g += t * g[j];
        r_xx += t * xxg[j];
        r_x += (a[0] - b[0]) * xg[j];
        r_y += (a[1] + b[1]) * g[j];
        r_xy += (a[1] - b[1]) * xg[j];
        r_yy += (a[2] + b[2]) * g[j];
      }
      dst[x * 5 + 0] = static_cast<float>(r_x * k.ig11);
      dst[x * 5 + 1] = static_cast<float>(r_y * k.ig11);
      dst[x * 5 + 2] = static_cast<float>(r_g * k.ig03 + r_xx * k.ig33);
      dst[x * 5 + 3] = static_cast<float>(r_g * k.ig03 + r_yy * k.ig33);
      dst[x * 5 + 4] = static_cast<float>(r_xy * k.ig55);
    }
  }
  return out;
}

// Per-pixel normal equations {Gxx, Gxy, Gyy, hx, hy} of the displacement solve.
void update_matrices(const Expansion& r0, const Expansion& r1, const FlowField& flow, std::vector<float>& m) {
  constexpr int kBorder = 5;
  constexpr float kBorderWeight[kBorder] = {0.14f, 0.14f, 0.4472f, 0.8315f, 0.9657f};
  const int w = r0.width, h = r0.height;
  m.resize(static_cast<std::size_t>(w) * h * 5);
  for (int y = 0; y < h; ++y) {
    const auto fu = flow.u.row(y);
    const auto fv = flow.v.row(y);
    for (int x = 0; x < w; ++x) {
      const float dx = fu[x], dy = fv[x];
      float fx = x + dx, fy = y + dy;
      const int x1 = static_cast<int>(std::floor(fx)), y1 = static_cast<int>(std::floor(fy));
      fx -= x1;
      fy -= y1;
      const float* a = r0.at(x, y);
      float bx, by, axx, ayy, axy;
      if (x1 >= 0 && y1 >= 0 && x1 < w - 1 && y1 < h - 1) {
        const float w00 = (1.f - fx) * (1.f - fy), w01 = fx * (1.f - fy), w10 = (1.f - fx) * fy, w11 = fx * fy;
        const float* p00 = r1.at(x1, y1);
        const float* p01 = p00 + 5;
        const float* p10 = r1.at(x1, y1 + 1);
        const float* p11 = p10 + 5;
        float s[5];
        for (int c = 0; c < 5; ++c) s[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
        bx = s[0];
        by = s[1];
        axx = (a[2] + s[2]) * 0.5f;
        ayy = (a[3] + s[3]) * 0.5f;
        axy = (a[4] + s[4]) * 0.25f;
      } else {
        bx = by = 0.f;
        axx = a[2];
        ayy = a[3];
        axy = a[4] * 0.5f;
      }
      // delta b = (b_prev - b_next)/2 + A d
      float hx = (a[0] - bx) * 0.5f + axx * dx + axy * dy;
      float hy = (a[1] - by) * 0.5f + axy * dx + ayy * dy;
      if (x < kBorder || y < kBorder || x >= w - kBorder || y >= h - kBorder) {
        const float scale = (x < kBorder ? kBorderWeight[x] : 1.f) * (x >= w - kBorder ? kBorderWeight[w - x - 1] : 1.f) *
                            (y < kBorder ? kBorderWeight[y] : 1.f) * (y >= h - kBorder ? kBorderWeight[h - y - 1] : 1.f);
        hx *= scale;
        hy *= scale;
        axx *= scale;
        ayy *= scale;
        axy *= scale;
      }
      float* out = m.data() + (static_cast<std::size_t>(y) * w + x) * 5;
      out[0] = axx * axx + axy * axy;
      out[1] = (axx + ayy) * axy;
      out[2] = ayy * ayy + axy * axy;
      out[3] = axx * hx + axy * hy;
      out[4] = axy * hx + ayy * hy;
    }
  }
}

// Box-averages the normal equations over `window` and solves for the displacement.
void solve_flow(const std::vector<float>& m, int w, int h, int window, FlowField& flow) {
  const int r = window / 2;
  std::vector<double> vsum(static_cast<std::size_t>(w) * 5, 0.0);
  std::vector<double> colsum(static_cast<std::size_t>(w + 2 * r) * 5);
  const double scale = 1.0 / (static_cast<double>(2 * r + 1) * (2 * r + 1));
  auto row_ptr = [&](int y) { return m.data() + static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w * 5; };

  for (int j = -r; j <= r; ++j) {
    const float* src = row_ptr(j);
    for (int i = 0; i < w * 5; ++i) vsum[i] += src[i];
  }
  for (int y = 0; y < h; ++y) {
    if (y > 0) {
      const float* add = row_ptr(y + r);
      const float* sub = row_ptr(y - r - 1);
      for (int i = 0; i < w * 5; ++i) vsum[i] += static_cast<double>(add[i]) - sub[i];
    }
    for (int x = -r; x < w + r; ++x) {
      const int cx = std::clamp(x, 0, w - 1);
      for (int c = 0; c < 5; ++c) colsum[(x + r) * 5 + c] = vsum[cx * 5 + c];
    }
    double acc[5] = {0, 0, 0, 0, 0};
    for (int x = 0; x < 2 * r + 1; ++x)
      for (int c = 0; c < 5; ++c) acc[c] += colsum[x * 5 + c];
    auto fu = flow.u.row(y);
    auto fv = flow.v.row(y);
    for (int x = 0; x < w; ++x) {
      if (x > 0) {
        for (int c = 0; c < 5; ++c) acc[c] += colsum[(x + 2 * r) * 5 + c] - colsum[(x - 1) * 5 + c];
      }
      const double gxx = acc[0] * scale, gxy = acc[1] * scale, gyy = acc[2] * scale;
      const double hx = acc[3] * scale, hy = acc[4] * scale;
      const double idet = 1.0 / (gxx * gyy - gxy * gxy + 1e-3);
      fu[x] = static_cast<float>((gyy * hx - gxy * hy) * idet);
      fv[x] = static_cast<float>((gxx * hy - gxy * hx) * idet);
    }
  }
}

bool is_constant(const FloatImage& img) {
  const auto px = img.pixels();
  return std::all_of(px.begin(), px.end(), [v = px.front()](float p) { return p == v; });
}

}  // namespace

struct FlowFrameData {
  std::vector<Expansion> levels;  // finest first
};

namespace {

void validate_params(const FlowParams& params) {
  if (params.levels < 1 || params.iterations < 1 || params.window < 1 || params.poly_n < 1 ||
      !(params.pyr_scale > 0.0 && params.pyr_scale < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid flow parameters");
  }
}

int level_count(int width, int height, const FlowParams& params) {
  int levels = 1;
  for (double s = params.pyr_scale; levels < params.levels; s *= params.pyr_scale, ++levels) {
    if (width * s < params.min_level_size || height * s < params.min_level_size) break;
  }
  return levels;
}

}  // namespace

FlowFrame prepare_flow_frame(const FloatImage& image, const FlowParams& params) {
  validate_params(params);
  if (image.width() < kMinFlowSize || image.height() < kMinFlowSize) {
    throw Error(ErrorKind::InvalidArgument, "flow frames must be at least 32x32");
  }
  FlowFrame frame{image.width(), image.height(), is_constant(image), nullptr};
  auto data = std::make_shared<FlowFrameData>();
  const ExpansionKernel kernel = make_expansion_kernel(params.poly_n, params.poly_sigma);
  const int levels = level_count(frame.width, frame.height, params);
  for (int k = 0; k < levels; ++k) {
    const double scale = std::pow(params.pyr_scale, k);
    const int w = static_cast<int>(std::lround(frame.width * scale));
    const int h = static_cast<int>(std::lround(frame.height * scale));
    const double sigma = (1.0 / scale - 1.0) * 0.5;
    data->levels.push_back(
        polynomial_expansion(k == 0 ? image : resize_bilinear(gaussian_blur(image, sigma), w, h), kernel));
  }
  frame.data = std::move(data);
  return frame;
}

FlowField compute_flow(const FlowFrame& prev, const FlowFrame& next, const FlowParams& params) {
  if (prev.width != next.width || prev.height != next.height) {
    throw Error(ErrorKind::DimensionMismatch, "flow frames differ in size");
  }
  validate_params(params);
  if (!prev.data || !next.data || prev.data->levels.size() != next.data->levels.size()) {
    throw Error(ErrorKind::InvalidArgument, "flow frames prepared with different parameters");
  }
  const int width = prev.width, height = prev.height;
  if (prev.constant || next.constant) {
    warn("constant-intensity frame pair, returning zero flow (low confidence)");
    return {FloatImage(width, height), FloatImage(width, height)};
  }

  const int levels = static_cast<int>(prev.data->levels.size());
  FlowField flow;
  std::vector<float> m;
  for (int k = levels - 1; k >= 0; --k) {
    const Expansion& r0 = prev.data->levels[k];
    const Expansion& r1 = next.data->levels[k];
    const int w = r0.width, h = r0.height;
    if (flow.u.empty()) {
      flow = {FloatImage(w, h), FloatImage(w, h)};
    } else {
      FlowField up{resize_bilinear(flow.u, w, h), resize_bilinear(flow.v, w, h)};
      const float f = static_cast<float>(1.0 / params.pyr_scale);
      for (auto& p : up.u.pixels()) p *= f;
      for (auto& p : up.v.pixels()) p *= f;
      flow = std::move(up);
    }
    for (int it = 0; it < params.iterations; ++it) {
      update_matrices(r0, r1, flow, m);
      solve_flow(m, w, h, params.window, flow);
    }
  }
  return flow;
}

FlowField compute_flow(const FloatImage& prev, const FloatImage& next, const FlowParams& params) {
  if (!prev.same_size(next)) throw Error(ErrorKind::DimensionMismatch, "flow frames differ in size");
  return compute_flow(prepare_flow_frame(prev, params), prepare_flow_frame(next, params), params);
}

FlowField compute_flow(const GrayImage& prev, const GrayImage& next, const FlowParams& params) {
  return compute_flow(to_float(prev), to_float(next), params);
}

FlowGradients flow_gradients(const FlowField& flow) {
  const int w = flow.width(), h = flow.height();
  FlowGradients g{FloatImage(w, h), FloatImage(w, h), FloatImage(w, h), FloatImage(w, h)};
  const auto d_dx = [w](const FloatImage& f, int x, int y) -> float {
    if (w < 2) return 0.f;
    if (x == 0) return f(1, y) - f(0, y);
    if (x == w - 1) return f(w - 1, y) - f(w - 2, y);
    return (f(x + 1, y) - f(x - 1, y)) * 0.5f;
  };
  const auto d_dy = [h](const FloatImage& f, int x, int y) -> float {
    if (h < 2) return 0.f;
    if (y == 0) return f(x, 1) - f(x, 0);
    if (y == h - 1) return f(x, h - 1) - f(x, h - 2);
    return (f(x, y + 1) - f(x, y - 1)) * 0.5f;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      g.du_dx(x, y) = d_dx(flow.u, x, y);
      g.du_dy(x, y) = d_dy(flow.u, x, y);
      g.dv_dx(x, y) = d_dx(flow.v, x, y);
      g.dv_dy(x, y) = d_dy(flow.v, x, y);
    }
  }
  return g;
}

}  // namespace pfm
