// Copyright 2026 The tgrasta Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file synth.hpp
///
/// Synthetic low-rank scenes, simulated camera jitter and alignment-quality
/// metrics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tgrasta/error.hpp"
#include "tgrasta/imaging.hpp"

namespace tgrasta::synth {

struct SceneSpec {
  int width = 64;
  int height = 64;
  int rank = 3;
  int n_frames = 30;
  double foreground_sparsity = 0.05;  // fraction of pixels covered by patches
  double foreground_magnitude = 1.0;  // patch intensity
  double gain_min = 1.0;              // multiplicative illumination gain range
  double gain_max = 1.0;
  double smoothness = 4.0;            // Gaussian blur sigma of the basis images, px
  double variation = 0.1;             // relative weight of basis images 2..r
  std::uint64_t seed = 1;

  void validate() const {
    require(width >= 2 && height >= 2, ErrorCode::InvalidArgument, "scene must be at least 2x2");
    require(rank >= 1, ErrorCode::InvalidArgument, "scene rank must be >= 1");
    require(n_frames >= 1, ErrorCode::InvalidArgument, "scene needs at least one frame");
    require(foreground_sparsity >= 0.0 && foreground_sparsity < 1.0, ErrorCode::InvalidArgument,
            "foreground sparsity must lie in [0, 1)");
    require(foreground_magnitude >= 0.0 && foreground_magnitude <= 1.0,
            ErrorCode::InvalidArgument, "foreground magnitude must lie in [0, 1]");
    require(gain_min > 0.0 && gain_min <= gain_max, ErrorCode::InvalidArgument,
            "illumination gain range must satisfy 0 < min <= max");
    require(smoothness >= 0.0, ErrorCode::InvalidArgument, "smoothness must be non-negative");
    require(variation > 0.0 && variation <= 1.0, ErrorCode::InvalidArgument,
            "variation must lie in (0, 1]");
  }
};

struct Scene {
  std::vector<Image> frames;
  Eigen::MatrixXd basis;    // U_true, n x r: vectorized basis images
  Eigen::MatrixXd weights;  // W_true, r x N: background = basis * weights
  std::vector<std::vector<bool>> foreground_masks;
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with clamped borders.
inline std::vector<double> blur(const std::vector<double>& src, int w, int h, double sigma) {
  if (sigma <= 0.0) return src;
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src[y * w + std::clamp(x + i, 0, w - 1)];
      tmp[y * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
      out[y * w + x] = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Frames = gain * (basis images x convex weights) with constant-intensity
/// foreground patches pasted on top. Each basis image is smoothed Gaussian
/// noise rescaled to [0, 1], so the background stays in [0, gain]. The first
/// basis image is a static backdrop with weight 1 before normalization; the
/// others enter with weights drawn from U(0, variation).
inline Scene make_scene(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width, h = spec.height, r = spec.rank, count = spec.n_frames;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scene scene;
  scene.basis.resize(static_cast<Eigen::Index>(n), r);
  for (int k = 0; k < r; ++k) {
    std::vector<double> noise(n);
    for (double& v : noise) v = gauss(rng);
    std::vector<double> smooth = detail::blur(noise, w, h, spec.smoothness);
    const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
    const double lo_v = *lo, span = std::max(*hi - *lo, 1e-300);
    for (std::size_t i = 0; i < n; ++i) scene.basis(static_cast<Eigen::Index>(i), k) = (smooth[i] - lo_v) / span;
  }

  scene.weights.resize(r, count);
  for (int j = 0; j < count; ++j) {
    double total = 0.0;
    for (int k = 0; k < r; ++k) total += (scene.weights(k, j) = k == 0 ? 1.0 : spec.variation * unit(rng));
    const double gain = spec.gain_min + (spec.gain_max - spec.gain_min) * unit(rng);
    scene.weights.col(j) *= gain / total;
  }

  const int side = std::max(2, std::min(w, h) / 8);
  const double per_patch = static_cast<double>(side) * side;
  // Round down so the covered fraction never exceeds the request (overlaps
  // only lower it), but keep one patch for any positive sparsity.
  const int patches = spec.foreground_sparsity > 0.0
                          ? std::max(1, static_cast<int>(spec.foreground_sparsity * n / per_patch))
                          : 0;
  std::uniform_int_distribution<int> px(0, std::max(0, w - side));
  std::uniform_int_distribution<int> py(0, std::max(0, h - side));

  scene.frames.reserve(count);
  scene.foreground_masks.reserve(count);
  for (int j = 0; j < count; ++j) {
    const Eigen::VectorXd bg = scene.basis * scene.weights.col(j);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = std::clamp(bg[static_cast<Eigen::Index>(i)], 0.0, 1.0);
    std::vector<bool> mask(n, false);
    for (int k = 0; k < patches; ++k) {
      const int x0 = px(rng), y0 = py(rng);
      for (int y = y0; y < std::min(h, y0 + side); ++y) {
        for (int x = x0; x < std::min(w, x0 + side); ++x) {
          data[static_cast<std::size_t>(y) * w + x] = spec.foreground_magnitude;
          mask[static_cast<std::size_t>(y) * w + x] = true;
        }
      }
    }
    scene.frames.emplace_back(w, h, std::move(data));
    scene.foreground_masks.push_back(std::move(mask));
  }
  return scene;
}

/// Full perturbation ranges: rotations are drawn from [-theta0/2, theta0/2]
/// degrees and translations from [-x0/2, x0/2] x [-y0/2, y0/2] pixels.
struct JitterSpec {
  double x0 = 0.0;
  double y0 = 0.0;
  double theta0_deg = 0.0;
  std::uint64_t seed = 1;

  void validate() const {
    require(x0 >= 0.0 && y0 >= 0.0 && theta0_deg >= 0.0, ErrorCode::InvalidArgument,
            "jitter ranges must be non-negative");
  }
};

struct JitteredFrames {
  std::vector<Image> perturbed;
  std::vector<TransformParams> tau_true;  // Euclidean; warping perturbed[i] by it undoes the jitter
};

/// Draws one Euclidean perturbation per frame, in the order theta, tx, ty.
inline std::vector<TransformParams> draw_jitter(const JitterSpec& spec, std::size_t count) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<TransformParams> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = unit(rng) * spec.theta0_deg * std::numbers::pi / 180.0;
    const double tx = unit(rng) * spec.x0;
    const double ty = unit(rng) * spec.y0;
    out.emplace_back(TransformGroup::Euclidean, Eigen::Vector3d{theta, tx, ty});
  }
  return out;
}

/// Renders frame P with P(tau(x)) = frame(x) for the canonical-to-source map
/// of tau. Rendering runs at 2x resolution on a pixel-replicated copy of the
/// frame and is box-filtered back down, so it does not share the aligner's
/// interpolation path. The identity reproduces the frame exactly.
inline Image render_perturbed(const Image& frame, const TransformParams& tau) {
  const int w = frame.width(), h = frame.height();
  const int w2 = 2 * w, h2 = 2 * h;
  std::vector<double> hi(static_cast<std::size_t>(w2) * h2);
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) hi[static_cast<std::size_t>(y) * w2 + x] = frame(x / 2, y / 2);
  }
  const ::tgrasta::detail::BilinearSampler sample(w2, h2, hi, BoundaryPolicy::Clamp);
  const Eigen::Matrix2d a_inv = tau.linear_part().inverse();
  const Eigen::Vector2d c{0.5 * (w - 1), 0.5 * (h - 1)};
  const Eigen::Vector2d t = tau.translation();

  auto render_hi = [&](int hx, int hy) {
    const Eigen::Vector2d z{(hx - 0.5) / 2.0, (hy - 0.5) / 2.0};
    const Eigen::Vector2d s = a_inv * (z - c - t) + c;
    return sample(2.0 * s.x() + 0.5, 2.0 * s.y() + 0.5).value;
  };

  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = render_hi(2 * x, 2 * y), b = render_hi(2 * x + 1, 2 * y);
      const double cc = render_hi(2 * x, 2 * y + 1), d = render_hi(2 * x + 1, 2 * y + 1);
      out[static_cast<std::size_t>(y) * w + x] = std::clamp(((a + b) + (cc + d)) * 0.25, 0.0, 1.0);
    }
  }
  return Image(w, h, std::move(out));
}

/// Jitters every frame. `frame` is the canonical frame the aligner will use;
/// its corners must stay inside each source frame under the drawn transforms.
inline JitteredFrames jitter(const std::vector<Image>& frames, const JitterSpec& spec,
                             const CanonicalFrame& frame) {
  JitteredFrames out;
  out.tau_true = draw_jitter(spec, frames.size());
  out.perturbed.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Image& f = frames[i];
    for (const Eigen::Vector2d& corner : frame.corners()) {
      const Eigen::Vector2d s = map_point(out.tau_true[i], frame, f.width(), f.height(), corner);
      require(s.x() >= 0.0 && s.x() <= f.width() - 1.0 && s.y() >= 0.0 && s.y() <= f.height() - 1.0,
              ErrorCode::OutOfBounds, "jittered canonical frame leaves source frame " + std::to_string(i));
    }
    out.perturbed.push_back(render_perturbed(f, out.tau_true[i]));
  }
  return out;
}

struct PixelTraceStats {
  double max_error = 0.0;
  double mean_error = 0.0;
  std::vector<double> std_dev;  // x1, y1, x2, y2, ... per traced point
};

/// Default trace points: the canonical frame's two third-points.
inline std::vector<Eigen::Vector2d> default_trace_points(const CanonicalFrame& frame) {
  const double xr = frame.width - 1.0, yb = frame.height - 1.0;
  return {Eigen::Vector2d{xr / 3.0, yb / 3.0}, Eigen::Vector2d{2.0 * xr / 3.0, 2.0 * yb / 3.0}};
}

namespace detail {

// Displacement (est o true^-1)(u) - u for a frame-centered point u, written
// as (A_est - A_true) pre + (t_est - t_true) with pre = true^-1(u) so that
// identical transforms give exactly zero.
inline Eigen::Vector2d relative_displacement(const TransformParams& est,
                                             const TransformParams& truth,
                                             const Eigen::Vector2d& u) {
  const Eigen::Vector2d pre = truth.linear_part().inverse() * (u - truth.translation());
  return (est.linear_part() - truth.linear_part()) * pre + (est.translation() - truth.translation());
}

}  // namespace detail

/// Traces canonical points through (estimated) o (true)^-1 per frame and
/// reports their scatter about the per-point statistical center: max and
/// mean distance to the center, and the population standard deviation of
/// each coordinate.
inline PixelTraceStats pixel_trace_stats(const std::vector<TransformParams>& tau_est,
                                         const std::vector<TransformParams>& tau_true,
                                         const CanonicalFrame& frame,
                                         const std::vector<Eigen::Vector2d>& trace_points) {
  require(tau_est.size() == tau_true.size() && !tau_est.empty(), ErrorCode::DimensionMismatch,
          "estimated and true transform lists must have equal, non-zero length");
  const std::size_t count = tau_est.size();
  const Eigen::Vector2d cc = frame.center();

  PixelTraceStats stats;
  double total = 0.0;
  std::size_t samples = 0;
  for (const Eigen::Vector2d& point : trace_points) {
    std::vector<Eigen::Vector2d> traced(count);
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < count; ++i) {
      traced[i] = detail::relative_displacement(tau_est[i], tau_true[i], point - cc);
      center += traced[i];
    }
    center /= static_cast<double>(count);
    Eigen::Vector2d var = Eigen::Vector2d::Zero();
    for (const Eigen::Vector2d& q : traced) {
      const Eigen::Vector2d diff = q - center;
      const double dist = diff.norm();
      stats.max_error = std::max(stats.max_error, dist);
      total += dist;
      ++samples;
      var += diff.cwiseAbs2();
    }
    var /= static_cast<double>(count);
    stats.std_dev.push_back(std::sqrt(var.x()));
    stats.std_dev.push_back(std::sqrt(var.y()));
  }
  stats.mean_error = samples > 0 ? total / static_cast<double>(samples) : 0.0;
  return stats;
}

inline PixelTraceStats pixel_trace_stats(const std::vector<TransformParams>& tau_est,
                                         const std::vector<TransformParams>& tau_true,
                                         const CanonicalFrame& frame) {
  return pixel_trace_stats(tau_est, tau_true, frame, default_trace_points(frame));
}

/// RMS over the four canonical corners of |tau_est(c) - tau_true(c)|.
inline double corner_error(const TransformParams& est, const TransformParams& truth,
                           const CanonicalFrame& frame) {
  double sum = 0.0;
  for (const Eigen::Vector2d& corner : frame.corners()) {
    const Eigen::Vector2d u = corner - frame.center();
    const Eigen::Vector2d diff = (est.linear_part() - truth.linear_part()) * u +
                                 (est.translation() - truth.translation());
    sum += diff.squaredNorm();
  }
  return std::sqrt(sum / 4.0);
}

inline std::vector<double> corner_error(const std::vector<TransformParams>& tau_est,
                                        const std::vector<TransformParams>& tau_true,
                                        const CanonicalFrame& frame) {
  require(tau_est.size() == tau_true.size(), ErrorCode::DimensionMismatch,
          "estimated and true transform lists must have equal length");
  std::vector<double> out(tau_est.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = corner_error(tau_est[i], tau_true[i], frame);
  return out;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace tgrasta::synth
