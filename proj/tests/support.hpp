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

// Fixtures shared by the unit tests and the acceptance runner.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tgrasta/admm.hpp"
#include "tgrasta/imaging.hpp"
#include "tgrasta/subspace.hpp"
#include "tgrasta/synth.hpp"

namespace tgrasta::testing {

/// Code of the tgrasta::Error thrown by `f`, or nullopt when it returns.
template <class F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  }
  return m;
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
  return gaussian_matrix(n, 1, rng).col(0);
}

/// Blurred Gaussian noise rescaled to [lo, hi].
inline Image smooth_image(int w, int h, double sigma, std::uint64_t seed, double lo = 0.1,
                          double hi = 0.9) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> noise(static_cast<std::size_t>(w) * h);
  for (double& v : noise) v = g(rng);
  std::vector<double> s = synth::detail::blur(noise, w, h, sigma);
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  const double a = *mn, span = *mx - *mn;
  for (double& v : s) v = lo + (hi - lo) * (v - a) / span;
  return Image(w, h, std::move(s));
}

/// Basis images of a scene, cropped to the canonical frame at the identity.
inline Eigen::MatrixXd cropped_basis(const synth::Scene& scene, int scene_w, int scene_h,
                                     const CanonicalFrame& frame) {
  Eigen::MatrixXd b(frame.n(), scene.basis.cols());
  for (Eigen::Index k = 0; k < scene.basis.cols(); ++k) {
    std::vector<double> d(scene.basis.col(k).data(), scene.basis.col(k).data() + scene.basis.rows());
    const Image img(scene_w, scene_h, std::move(d));
    b.col(k) = warp(img, TransformParams::identity(TransformGroup::Euclidean), frame).values;
  }
  return b;
}

/// Matrix with the singular vectors of a Gaussian draw and singular values
/// spread geometrically from 1 down to 1/cond.
inline Eigen::MatrixXd conditioned_matrix(Eigen::Index rows, Eigen::Index cols, double cond,
                                          std::mt19937_64& rng) {
  const Eigen::MatrixXd a = gaussian_matrix(rows, cols, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    s[j] = cols > 1 ? std::pow(cond, -static_cast<double>(j) / static_cast<double>(cols - 1)) : 1.0;
  }
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// One instance of the ADMM convergence family: unit-norm weights, 10%
/// planted outliers of magnitude U[0.05, 0.15], J with condition number 100,
/// observation rescaled to unit norm.
struct AdmmInstance {
  Eigen::MatrixXd u;
  Eigen::MatrixXd j;
  Eigen::VectorXd y;
  std::vector<bool> outlier;
};

inline AdmmInstance admm_instance(std::uint64_t seed, Eigen::Index n = 200, Eigen::Index d = 5,
                                  Eigen::Index p = 6) {
  std::mt19937_64 rng(seed);
  AdmmInstance inst;
  inst.u = init_random(n, d, seed + 1000).basis();
  inst.j = conditioned_matrix(n, p, 100.0, rng);
  Eigen::VectorXd w = gaussian_vector(d, rng);
  w /= w.norm();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_real_distribution<double> mag(0.05, 0.15);
  inst.outlier.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n / 10; ++k) {
    const Eigen::Index i = idx[static_cast<std::size_t>(k)];
    e[i] = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
    inst.outlier[static_cast<std::size_t>(i)] = true;
  }
  inst.y = inst.u * w + e;
  inst.y /= inst.y.norm();
  return inst;
}

/// Augmented Lagrangian |e|_1 + lambda^T h + mu/2 |h|^2 at basis `u`.
inline double augmented_lagrangian(const Eigen::MatrixXd& u, const Eigen::VectorXd& y,
                                   const Eigen::MatrixXd& j, const admm::AdmmSolution& s) {
  const Eigen::VectorXd h = u * s.w + s.e - y - j * s.delta_tau;
  return s.e.lpNorm<1>() + s.lambda.dot(h) + 0.5 * s.mu_final * h.squaredNorm();
}

}  // namespace tgrasta::testing
