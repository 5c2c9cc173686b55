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

/// \file imaging.hpp
///
/// Grayscale images, parametric warps onto a canonical frame and the
/// Jacobian of the normalized warped vector with respect to the transform
/// parameters.
///
/// Coordinate convention: canonical pixel centers sit at integer
/// coordinates (0..w_c-1, 0..h_c-1). A canonical point x maps to the source
/// point A (x - c_c) + t + c_s, where c_c and c_s are the centers of the
/// canonical frame and of the source image.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tgrasta/error.hpp"

namespace tgrasta {

class Image {
 public:
  Image() = default;

  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    require(width > 0 && height > 0, ErrorCode::InvalidArgument,
            "image dimensions must be positive");
    require(std::isfinite(fill) && fill >= 0.0 && fill <= 1.0, ErrorCode::InvalidArgument,
            "image intensities must be finite and lie in [0, 1]");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  Image(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    require(width > 0 && height > 0, ErrorCode::InvalidArgument,
            "image dimensions must be positive");
    require(data_.size() == static_cast<std::size_t>(width) * height,
            ErrorCode::DimensionMismatch,
            "image data length must equal width * height");
    for (double v : data_) {
      require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::InvalidArgument,
              "image intensities must be finite and lie in [0, 1]");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double& operator()(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Row-major vectorization.
  Eigen::VectorXd vectorized() const {
    return Eigen::Map<const Eigen::VectorXd>(data_.data(),
                                             static_cast<Eigen::Index>(data_.size()));
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct CanonicalFrame {
  int width = 0;
  int height = 0;

  CanonicalFrame() = default;
  CanonicalFrame(int w, int h) : width(w), height(h) {
    require(w >= 2 && h >= 2, ErrorCode::InvalidArgument,
            "canonical frame must be at least 2x2");
  }

  /// Ambient dimension of every warped vector.
  Eigen::Index n() const noexcept { return static_cast<Eigen::Index>(width) * height; }

  Eigen::Vector2d center() const noexcept {
    return {0.5 * (width - 1), 0.5 * (height - 1)};
  }

  std::array<Eigen::Vector2d, 4> corners() const noexcept {
    const double xr = width - 1.0, yb = height - 1.0;
    return {Eigen::Vector2d{0.0, 0.0}, Eigen::Vector2d{xr, 0.0},
            Eigen::Vector2d{0.0, yb}, Eigen::Vector2d{xr, yb}};
  }

  bool operator==(const CanonicalFrame&) const = default;
};

enum class TransformGroup { Translation, Euclidean, Affine };

constexpr int param_count(TransformGroup group) noexcept {
  switch (group) {
    case TransformGroup::Translation: return 2;
    case TransformGroup::Euclidean: return 3;
    case TransformGroup::Affine: return 6;
  }
  return 0;
}

constexpr std::string_view group_name(TransformGroup group) noexcept {
  switch (group) {
    case TransformGroup::Translation: return "translation";
    case TransformGroup::Euclidean: return "euclidean";
    case TransformGroup::Affine: return "affine";
  }
  return "unknown";
}

inline TransformGroup parse_group(std::string_view name) {
  if (name == "translation") return TransformGroup::Translation;
  if (name == "euclidean") return TransformGroup::Euclidean;
  if (name == "affine") return TransformGroup::Affine;
  raise(ErrorCode::InvalidArgument, "unknown transform group '" + std::string(name) + "'");
}

/// Column names used for the parameters of each group in CSV files.
inline std::vector<std::string> param_names(TransformGroup group) {
  switch (group) {
    case TransformGroup::Translation: return {"tx", "ty"};
    case TransformGroup::Euclidean: return {"theta", "tx", "ty"};
    case TransformGroup::Affine: return {"a11", "a12", "a21", "a22", "tx", "ty"};
  }
  return {};
}

/// A point in one of the supported transformation groups.
///
/// Translation: (tx, ty). Euclidean: (theta [rad], tx, ty).
/// Affine: (a11, a12, a21, a22, tx, ty).
class TransformParams {
 public:
  TransformParams() : TransformParams(TransformGroup::Translation) {}

  explicit TransformParams(TransformGroup group)
      : group_(group), params_(identity_params(group)) {}

  TransformParams(TransformGroup group, Eigen::VectorXd params)
      : group_(group), params_(std::move(params)) {
    require(params_.size() == param_count(group), ErrorCode::DimensionMismatch,
            "parameter vector length does not match the transform group");
    require(params_.allFinite(), ErrorCode::NonFinite, "transform parameters must be finite");
  }

  static TransformParams identity(TransformGroup group) { return TransformParams(group); }

  TransformGroup group() const noexcept { return group_; }
  int p() const noexcept { return param_count(group_); }
  const Eigen::VectorXd& params() const noexcept { return params_; }

  Eigen::Matrix2d linear_part() const {
    Eigen::Matrix2d a;
    switch (group_) {
      case TransformGroup::Translation:
        a.setIdentity();
        break;
      case TransformGroup::Euclidean: {
        const double c = std::cos(params_[0]), s = std::sin(params_[0]);
        a << c, -s, s, c;
        break;
      }
      case TransformGroup::Affine:
        a << params_[0], params_[1], params_[2], params_[3];
        break;
    }
    return a;
  }

  Eigen::Vector2d translation() const {
    const Eigen::Index p = params_.size();
    return {params_[p - 2], params_[p - 1]};
  }

  bool operator==(const TransformParams& other) const {
    return group_ == other.group_ && params_ == other.params_;
  }

 private:
  static Eigen::VectorXd identity_params(TransformGroup group) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(param_count(group));
    if (group == TransformGroup::Affine) v[0] = v[3] = 1.0;
    return v;
  }

  TransformGroup group_;
  Eigen::VectorXd params_;
};

/// tau + delta, componentwise. No group composition, no angle wrapping.
inline TransformParams apply_delta(const TransformParams& tau, const Eigen::VectorXd& delta) {
  require(delta.size() == tau.p(), ErrorCode::DimensionMismatch,
          "delta length must equal the number of transform parameters");
  return TransformParams(tau.group(), tau.params() + delta);
}

enum class BoundaryPolicy { Clamp, Strict };

struct WarpedVector {
  Eigen::VectorXd values;
  double norm = 0.0;  // l2 norm of the samples before normalization
};

using JacobianMatrix = Eigen::MatrixXd;

/// Returns (v / |v|, |v|).
inline std::pair<Eigen::VectorXd, double> normalize(const Eigen::VectorXd& v) {
  const double nrm = v.norm();
  require(nrm >= 1e-14, ErrorCode::ZeroNorm, "cannot normalize a vector with zero norm");
  return {v / nrm, nrm};
}

/// Maps a canonical point to source coordinates.
inline Eigen::Vector2d map_point(const TransformParams& tau, const CanonicalFrame& frame,
                                 int source_width, int source_height,
                                 const Eigen::Vector2d& canonical) {
  const Eigen::Vector2d source_center{0.5 * (source_width - 1), 0.5 * (source_height - 1)};
  return tau.linear_part() * (canonical - frame.center()) + tau.translation() + source_center;
}

/// Central-difference spatial gradients, one-sided on the border. Stored
/// as plain grids since gradients are signed.
struct SpatialGradient {
  int width = 0;
  int height = 0;
  std::vector<double> gx;
  std::vector<double> gy;
};

namespace detail {

struct Sample {
  double value;
  bool clamped_x;
  bool clamped_y;
};

class BilinearSampler {
 public:
  BilinearSampler(int width, int height, std::span<const double> grid, BoundaryPolicy policy)
      : w_(width), h_(height), grid_(grid), policy_(policy) {}
  BilinearSampler(const Image& image, BoundaryPolicy policy)
      : BilinearSampler(image.width(), image.height(), image.data(), policy) {}

  Sample operator()(double x, double y) const {
    const int w = w_, h = h_;
    const double xmax = w - 1.0, ymax = h - 1.0;
    const bool out_x = !(x >= 0.0 && x <= xmax);
    const bool out_y = !(y >= 0.0 && y <= ymax);
    if ((out_x || out_y) && policy_ == BoundaryPolicy::Strict) {
      raise(ErrorCode::OutOfBounds, "sample (" + std::to_string(x) + ", " + std::to_string(y) +
                                        ") lies outside the source image");
    }
    if (out_x) x = x < 0.0 ? 0.0 : xmax;
    if (out_y) y = y < 0.0 ? 0.0 : ymax;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    return {top * (1.0 - fy) + bottom * fy, out_x, out_y};
  }

 private:
  double at(int x, int y) const noexcept {
    return grid_[static_cast<std::size_t>(y) * w_ + x];
  }

  int w_;
  int h_;
  std::span<const double> grid_;
  BoundaryPolicy policy_;
};

inline void check_warpable(const TransformParams& tau) {
  if (tau.group() == TransformGroup::Affine) {
    require(std::abs(tau.linear_part().determinant()) > 1e-8, ErrorCode::SingularTransform,
            "affine linear part is singular");
  }
}

/// d(source point)/d(params) for canonical offset u = x - c_c; 2 x p.
inline Eigen::Matrix<double, 2, Eigen::Dynamic> point_derivative(const TransformParams& tau,
                                                                 const Eigen::Vector2d& u) {
  Eigen::Matrix<double, 2, Eigen::Dynamic> d(2, tau.p());
  switch (tau.group()) {
    case TransformGroup::Translation:
      d << 1, 0,
           0, 1;
      break;
    case TransformGroup::Euclidean: {
      const double c = std::cos(tau.params()[0]), s = std::sin(tau.params()[0]);
      d << -s * u.x() - c * u.y(), 1, 0,
            c * u.x() - s * u.y(), 0, 1;
      break;
    }
    case TransformGroup::Affine:
      d << u.x(), u.y(), 0, 0, 1, 0,
           0, 0, u.x(), u.y(), 0, 1;
      break;
  }
  return d;
}

}  // namespace detail

inline SpatialGradient spatial_gradient(const Image& image) {
  const int w = image.width(), h = image.height();
  const std::size_t count = image.size();
  SpatialGradient g{w, h, std::vector<double>(count, 0.0), std::vector<double>(count, 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (w > 1) {
        const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
        g.gx[i] = (image(xr, y) - image(xl, y)) / (xr - xl);
      }
      if (h > 1) {
        const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
        g.gy[i] = (image(x, yd) - image(x, yu)) / (yd - yu);
      }
    }
  }
  return g;
}

/// Bilinear warp of `image` onto `frame`, unnormalized. `norm` holds the l2
/// norm of the samples.
inline WarpedVector warp(const Image& image, const TransformParams& tau,
                         const CanonicalFrame& frame,
                         BoundaryPolicy policy = BoundaryPolicy::Clamp) {
  detail::check_warpable(tau);
  const detail::BilinearSampler sample(image, policy);
  const Eigen::Matrix2d a = tau.linear_part();
  const Eigen::Vector2d offset =
      tau.translation() + Eigen::Vector2d{0.5 * (image.width() - 1), 0.5 * (image.height() - 1)};
  const Eigen::Vector2d cc = frame.center();

  WarpedVector out;
  out.values.resize(frame.n());
  Eigen::Index q = 0;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x, ++q) {
      const Eigen::Vector2d s = a * Eigen::Vector2d{x - cc.x(), y - cc.y()} + offset;
      out.values[q] = sample(s.x(), s.y()).value;
    }
  }
  out.norm = out.values.norm();
  return out;
}

/// Warp followed by normalization to unit l2 norm.
inline WarpedVector warp_normalized(const Image& image, const TransformParams& tau,
                                    const CanonicalFrame& frame,
                                    BoundaryPolicy policy = BoundaryPolicy::Clamp) {
  WarpedVector v = warp(image, tau, frame, policy);
  auto [unit, nrm] = normalize(v.values);
  return {std::move(unit), nrm};
}

/// A source image with its spatial gradients, computed once and reused for
/// every linearization.
class SourceImage {
 public:
  explicit SourceImage(Image image)
      : image_(std::move(image)), gradient_(spatial_gradient(image_)) {}

  const Image& image() const noexcept { return image_; }
  const SpatialGradient& gradient() const noexcept { return gradient_; }

 private:
  Image image_;
  SpatialGradient gradient_;
};

/// Normalized warp together with its Jacobian, evaluated at one tau.
struct LinearizedWarp {
  WarpedVector warped;      // unit norm
  JacobianMatrix jacobian;  // n x p, derivative of the normalized warp
  Eigen::Index clamped = 0; // canonical samples that fell outside the source
};

/// Jacobian of the unnormalized warp. Clamped coordinates contribute no
/// derivative, since the clamped sample does not move with the parameters.
inline LinearizedWarp linearize_unnormalized(const SourceImage& source,
                                             const TransformParams& tau,
                                             const CanonicalFrame& frame,
                                             BoundaryPolicy policy = BoundaryPolicy::Clamp) {
  detail::check_warpable(tau);
  const Image& image = source.image();
  const detail::BilinearSampler sample(image, policy);
  const SpatialGradient& g = source.gradient();
  const detail::BilinearSampler sample_gx(g.width, g.height, g.gx, BoundaryPolicy::Clamp);
  const detail::BilinearSampler sample_gy(g.width, g.height, g.gy, BoundaryPolicy::Clamp);
  const Eigen::Matrix2d a = tau.linear_part();
  const Eigen::Vector2d offset =
      tau.translation() + Eigen::Vector2d{0.5 * (image.width() - 1), 0.5 * (image.height() - 1)};
  const Eigen::Vector2d cc = frame.center();
  const int p = tau.p();

  LinearizedWarp out;
  out.warped.values.resize(frame.n());
  out.jacobian.resize(frame.n(), p);
  Eigen::Index q = 0;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x, ++q) {
      const Eigen::Vector2d u{x - cc.x(), y - cc.y()};
      const Eigen::Vector2d s = a * u + offset;
      const detail::Sample v = sample(s.x(), s.y());
      out.warped.values[q] = v.value;
      if (v.clamped_x || v.clamped_y) ++out.clamped;
      Eigen::RowVector2d grad{v.clamped_x ? 0.0 : sample_gx(s.x(), s.y()).value,
                              v.clamped_y ? 0.0 : sample_gy(s.x(), s.y()).value};
      out.jacobian.row(q) = grad * detail::point_derivative(tau, u);
    }
  }
  out.warped.norm = out.warped.values.norm();
  return out;
}

/// Normalized warp and the Jacobian of the normalized warp:
/// J = (I - u u^T) J0 / |v| with u = v / |v|.
inline LinearizedWarp linearize(const SourceImage& source, const TransformParams& tau,
                                const CanonicalFrame& frame,
                                BoundaryPolicy policy = BoundaryPolicy::Clamp) {
  LinearizedWarp lin = linearize_unnormalized(source, tau, frame, policy);
  auto [unit, nrm] = normalize(lin.warped.values);
  const Eigen::RowVectorXd ut_j0 = unit.transpose() * lin.jacobian;
  lin.jacobian = (lin.jacobian - unit * ut_j0) / nrm;
  lin.warped.values = std::move(unit);
  lin.warped.norm = nrm;
  return lin;
}

/// Jacobian of the normalized warped vector with respect to tau (n x p).
inline JacobianMatrix warp_jacobian(const Image& image, const TransformParams& tau,
                                    const CanonicalFrame& frame,
                                    BoundaryPolicy policy = BoundaryPolicy::Clamp) {
  return linearize(SourceImage(image), tau, frame, policy).jacobian;
}

}  // namespace tgrasta
