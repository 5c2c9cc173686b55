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

#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tgrasta/admm.hpp"
#include "tgrasta/grassmann.hpp"

namespace tgrasta::grassmann {
namespace {

using testing::error_code_of;

struct Instance {
  Subspace u;
  Eigen::MatrixXd j;
  Eigen::VectorXd y;
  admm::AdmmSolution sol;
};

Instance early_stopped(std::uint64_t seed, Eigen::Index n = 40, Eigen::Index d = 3,
                       Eigen::Index p = 6) {
  std::mt19937_64 rng(seed);
  Instance in{init_random(n, d, seed + 1), testing::gaussian_matrix(n, p, rng),
              testing::gaussian_vector(n, rng), {}};
  in.y /= in.y.norm();
  admm::AdmmOptions opts;
  opts.max_iters = 4;
  in.sol = admm::solve({in.u.basis(), in.y, in.j}, opts);
  return in;
}

TEST(LossGradient, ZeroDualAndResidualGiveZeroGradient) {
  const Subspace u = init_random(10, 2, 1);
  const Eigen::MatrixXd j = Eigen::MatrixXd::Zero(10, 3);
  Eigen::VectorXd w(2);
  w << 0.3, -0.2;
  admm::AdmmSolution sol;
  sol.w = w;
  sol.e = Eigen::VectorXd::Zero(10);
  sol.delta_tau = Eigen::VectorXd::Zero(3);
  sol.lambda = Eigen::VectorXd::Zero(10);
  sol.mu_final = 5.0;
  const Eigen::VectorXd y = u.basis() * w;
  const GradientInfo g = loss_gradient(u, sol, y, j);
  EXPECT_LE(g.gamma.norm(), 1e-15);
  EXPECT_LE(g.sigma, 1e-15);
}

TEST(LossGradient, GammaIsOrthogonalToU) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance in = early_stopped(seed);
    const GradientInfo g = loss_gradient(in.u, in.sol, in.y, in.j);
    EXPECT_LE((in.u.basis().transpose() * g.gamma).norm(), 1e-10);
    EXPECT_DOUBLE_EQ(g.sigma, g.gamma.norm() * g.w.norm());
  }
}

TEST(LossGradient, MatchesFiniteDifferenceOfAugmentedLagrangian) {
  std::mt19937_64 rng(77);
  const Instance in = early_stopped(5);
  const GradientInfo g = loss_gradient(in.u, in.sol, in.y, in.j);
  const Eigen::MatrixXd& b = in.u.basis();
  const Eigen::MatrixXd r = testing::gaussian_matrix(b.rows(), b.cols(), rng);
  const Eigen::MatrixXd delta = r - b * (b.transpose() * r);
  const double t = 1e-6;
  const double fd = (testing::augmented_lagrangian(b + t * delta, in.y, in.j, in.sol) -
                     testing::augmented_lagrangian(b - t * delta, in.y, in.j, in.sol)) /
                    (2 * t);
  const double analytic = (g.gamma * g.w.transpose()).cwiseProduct(delta).sum();
  EXPECT_LE(std::abs(fd - analytic), 1e-4 * std::abs(fd));
}

TEST(LossGradient, RejectsMismatchedSolution) {
  const Instance in = early_stopped(1);
  EXPECT_EQ(error_code_of([&] { loss_gradient(in.u, in.sol, in.y.head(10), in.j); }),
            ErrorCode::DimensionMismatch);
}

TEST(GeodesicStep, ZeroStepReturnsInputExactly) {
  const Instance in = early_stopped(2);
  const GradientInfo g = loss_gradient(in.u, in.sol, in.y, in.j);
  EXPECT_EQ(geodesic_step(in.u, g, 0.0).basis(), in.u.basis());
}

TEST(GeodesicStep, ZeroGradientReturnsInput) {
  const Subspace u = init_random(12, 3, 4);
  GradientInfo g;
  g.gamma = Eigen::VectorXd::Zero(12);
  g.w = Eigen::VectorXd::Ones(3);
  EXPECT_EQ(geodesic_step(u, g, 0.5).basis(), u.basis());
}

TEST(GeodesicStep, MatchesDenseExponentialMap) {
  std::mt19937_64 rng(8);
  const Subspace u = init_random(30, 4, 108);
  const Eigen::MatrixXd& b = u.basis();
  GradientInfo g;
  const Eigen::VectorXd r = testing::gaussian_vector(30, rng);
  g.gamma = r - b * (b.transpose() * r);
  g.w = testing::gaussian_vector(4, rng);
  g.sigma = g.gamma.norm() * g.w.norm();
  const double eta = 0.5 / g.sigma;
  const Subspace stepped = geodesic_step(u, g, eta);

  // Full SVD of the n x d descent direction H = -Gamma w^T, then the
  // exponential map U V cos(S eta) V^T + W sin(S eta) V^T.
  const Eigen::MatrixXd h = -g.gamma * g.w.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::ArrayXd s = svd.singularValues().array() * eta;
  const Eigen::MatrixXd v = svd.matrixV();
  const Eigen::MatrixXd oracle = b * v * s.cos().matrix().asDiagonal() * v.transpose() +
                                 svd.matrixU() * s.sin().matrix().asDiagonal() * v.transpose();
  EXPECT_LE((stepped.basis() - oracle).norm(), 1e-10);
  EXPECT_LE(stepped.orthonormality_residual(), 1e-10);
}

TEST(GeodesicStep, ReorthonormalizesOnSchedule) {
  std::mt19937_64 rng(9);
  Subspace u = init_random(25, 3, 109);
  for (int k = 1; k <= 7; ++k) {
    GradientInfo g;
    const Eigen::VectorXd r = testing::gaussian_vector(25, rng);
    g.gamma = r - u.basis() * (u.basis().transpose() * r);
    g.w = testing::gaussian_vector(3, rng);
    g.sigma = g.gamma.norm() * g.w.norm();
    u = geodesic_step(u, g, 0.3, 3);
    EXPECT_EQ(u.steps_since_reorthonormalization(), k % 3);
  }
}

TEST(GeodesicStep, DescendsTheAugmentedLagrangian) {
  const Instance in = early_stopped(3);
  const GradientInfo g = loss_gradient(in.u, in.sol, in.y, in.j);
  const double before = testing::augmented_lagrangian(in.u.basis(), in.y, in.j, in.sol);
  const Subspace next = geodesic_step(in.u, g, 1e-3 / g.sigma);
  EXPECT_LT(testing::augmented_lagrangian(next.basis(), in.y, in.j, in.sol), before);
}

TEST(StepSizeRule, ConstantNeverChanges) {
  StepSizeRule r = StepSizeRule::constant(0.1);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(r.next(1.0), 0.1);
}

TEST(StepSizeRule, DiminishingSchedule) {
  StepSizeRule r = StepSizeRule::diminishing(1.0, 0.1);
  EXPECT_EQ(r.next(0.0), 1.0);
  for (int i = 1; i < 10; ++i) r.next(0.0);
  EXPECT_EQ(r.t(), 10);
  EXPECT_DOUBLE_EQ(r.next(0.0), 0.5);
}

TEST(StepSizeRule, RejectsNonPositiveParameters) {
  EXPECT_EQ(error_code_of([] { StepSizeRule::constant(0.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([] { StepSizeRule::diminishing(1.0, 0.0); }), ErrorCode::InvalidArgument);
}

}  // namespace
}  // namespace tgrasta::grassmann
