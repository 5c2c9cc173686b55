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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "tgrasta/error.hpp"

namespace tgrasta {

namespace detail {
struct SubspaceAccess;
}

/// Orthonormal columns with positive-diagonal R, so a nearly orthonormal
/// input comes back nearly unchanged.
inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

inline double orthonormality_residual(const Eigen::MatrixXd& basis) {
  const Eigen::Index d = basis.cols();
  return (basis.transpose() * basis - Eigen::MatrixXd::Identity(d, d)).norm();
}

/// A point on the Grassmannian G(d, n), represented by an n x d basis with
/// orthonormal columns.
class Subspace {
 public:
  static constexpr double kOrthonormalityTolerance = 1e-8;

  Subspace() = default;

  /// Takes ownership of `basis`; columns must already be orthonormal to
  /// kOrthonormalityTolerance.
  explicit Subspace(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
    check_rank(basis_.rows(), basis_.cols());
    require(basis_.allFinite(), ErrorCode::NonFinite, "subspace basis must be finite");
    require(tgrasta::orthonormality_residual(basis_) <= kOrthonormalityTolerance,
            ErrorCode::InvalidArgument, "subspace basis columns are not orthonormal");
  }

  /// Orthonormalizes any full-column-rank n x d matrix.
  static Subspace spanning(const Eigen::MatrixXd& columns) {
    check_rank(columns.rows(), columns.cols());
    return Subspace(orthonormalize(columns));
  }

  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  Eigen::Index rank() const noexcept { return basis_.cols(); }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }

  /// Geodesic steps taken since the last re-orthonormalization.
  int steps_since_reorthonormalization() const noexcept { return steps_; }

  double orthonormality_residual() const { return tgrasta::orthonormality_residual(basis_); }

  bool operator==(const Subspace& other) const { return basis_ == other.basis_; }

  static void check_rank(Eigen::Index n, Eigen::Index d) {
    require(d >= 1 && d < n, ErrorCode::BadRank,
            "subspace rank d=" + std::to_string(d) + " must satisfy 1 <= d < n=" +
                std::to_string(n));
  }

 private:
  friend struct detail::SubspaceAccess;

  Eigen::MatrixXd basis_;
  int steps_ = 0;
};

namespace detail {

// Rebuilds a subspace from a geodesic update without re-checking
// orthonormality on every step.
struct SubspaceAccess {
  static Subspace make(Eigen::MatrixXd basis, int steps) {
    Subspace u;
    u.basis_ = std::move(basis);
    u.steps_ = steps;
    return u;
  }
};

}  // namespace detail

/// Seeded standard-Gaussian n x d matrix, orthonormalized by QR.
inline Subspace init_random(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Subspace::check_rank(n, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = gauss(rng);
  }
  return Subspace::spanning(m);
}

}  // namespace tgrasta
