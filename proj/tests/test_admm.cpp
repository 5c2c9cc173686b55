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

namespace tgrasta::admm {
namespace {

using testing::error_code_of;

TEST(SoftThreshold, ZeroStaysZero) {
  EXPECT_EQ(soft_threshold(Eigen::VectorXd::Zero(3), 0.5), Eigen::VectorXd::Zero(3));
}

TEST(SoftThreshold, ShrinksTowardZero) {
  const Eigen::VectorXd out = soft_threshold(Eigen::Vector2d{1.5, -0.3}, 1.0);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_EQ(out[1], 0.0);
}

TEST(SoftThreshold, ZeroThresholdIsIdentity) {
  const Eigen::Vector3d x{0.2, -4.0, 1e-9};
  EXPECT_EQ(soft_threshold(x, 0.0), Eigen::VectorXd(x));
  EXPECT_EQ(error_code_of([&] { soft_threshold(x, -1.0); }), ErrorCode::InvalidArgument);
}

class ResidualTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(4);
    u = init_random(15, 3, 4).basis();
    j = testing::gaussian_matrix(15, 2, rng);
    y = testing::gaussian_vector(15, rng);
  }
  Eigen::MatrixXd u, j;
  Eigen::VectorXd y;
};

TEST_F(ResidualTest, ZeroVariablesGiveMinusObservation) {
  const LinearizedProblem prob{u, y, j};
  EXPECT_EQ(residual_h(prob, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(15),
                       Eigen::VectorXd::Zero(2)),
            Eigen::VectorXd(-y));
}

TEST_F(ResidualTest, ConsistentConstructionGivesZero) {
  const Eigen::Vector3d w{0.5, -1.0, 0.25};
  const Eigen::Vector2d dtau{0.1, -0.3};
  Eigen::VectorXd e = Eigen::VectorXd::Zero(15);
  e[3] = 0.7;
  const Eigen::VectorXd obs = u * w + e - j * dtau;
  const LinearizedProblem prob{u, obs, j};
  EXPECT_LE(residual_h(prob, w, e, dtau).norm(), 1e-12);
}

TEST_F(ResidualTest, ObservationAsOutlierGivesZero) {
  const LinearizedProblem prob{u, y, j};
  EXPECT_EQ(residual_h(prob, Eigen::VectorXd::Zero(3), y, Eigen::VectorXd::Zero(2)),
            Eigen::VectorXd::Zero(15));
}

TEST_F(ResidualTest, RejectsWrongLengths) {
  const LinearizedProblem prob{u, y, j};
  EXPECT_EQ(error_code_of([&] {
              residual_h(prob, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(15),
                         Eigen::VectorXd::Zero(2));
            }),
            ErrorCode::DimensionMismatch);
}

TEST_F(ResidualTest, FactorsInvertUAndJ) {
  const Factors f = precompute_factors({u, y, j});
  EXPECT_LE((f.P * u - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
  EXPECT_LE((f.F * j - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-6);
  const Eigen::MatrixXd dense = j.completeOrthogonalDecomposition().pseudoInverse();
  EXPECT_LE((f.F - dense).norm(), 1e-6 * dense.norm());
}

TEST_F(ResidualTest, ZeroJacobianIsDegenerate) {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(15, 2);
  EXPECT_EQ(error_code_of([&] { precompute_factors({u, y, zero}); }),
            ErrorCode::DegenerateJacobian);
  // solve() keeps going with delta_tau frozen.
  const AdmmSolution s = solve({u, y, zero});
  EXPECT_TRUE(s.jacobian_degenerate);
  EXPECT_EQ(s.delta_tau, Eigen::VectorXd::Zero(2));
}

TEST(Solve, RecoversNoiselessWeights) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd u = init_random(200, 5, seed + 50).basis();
    const Eigen::MatrixXd j = testing::gaussian_matrix(200, 6, rng);
    const Eigen::VectorXd wbar = testing::gaussian_vector(5, rng);
    const Eigen::VectorXd uw = u * wbar;
    const Eigen::VectorXd y = uw / uw.norm();
    AdmmOptions opts;
    opts.rho = 2.0;
    opts.eps_tol = 1e-7;
    const AdmmSolution s = solve({u, y, j}, opts);
    EXPECT_TRUE(s.converged);
    EXPECT_LE(s.iterations, 20);
    EXPECT_LE((s.w - wbar / uw.norm()).norm(), 1e-5);
    EXPECT_LE(s.e.lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LE(s.delta_tau.lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Solve, RecoversPlantedOutlierSupport) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const testing::AdmmInstance inst = testing::admm_instance(seed);
    const AdmmSolution s = solve({inst.u, inst.y, inst.j});
    EXPECT_TRUE(s.converged);
    EXPECT_LE(s.residual, 1e-7);
    for (Eigen::Index i = 0; i < s.e.size(); ++i) {
      EXPECT_EQ(std::abs(s.e[i]) > 1e-4, inst.outlier[static_cast<std::size_t>(i)]) << i;
    }
  }
}

TEST(Solve, ZeroObservationIsAFixedPoint) {
  const Eigen::MatrixXd u = init_random(20, 2, 1).basis();
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd j = testing::gaussian_matrix(20, 3, rng);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(20);
  const AdmmSolution s = solve({u, y, j});
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.iterations, 1);
  EXPECT_EQ(s.w, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(s.e, Eigen::VectorXd::Zero(20));
  EXPECT_EQ(s.delta_tau, Eigen::VectorXd::Zero(3));
}

TEST(Solve, ReportsPenaltyAfterFinalGrowth) {
  const testing::AdmmInstance inst = testing::admm_instance(3);
  AdmmOptions opts;
  opts.rho = 1.5;
  const AdmmSolution s = solve({inst.u, inst.y, inst.j}, opts);
  EXPECT_DOUBLE_EQ(s.mu_final, std::pow(1.5, s.iterations));
}

TEST(Solve, StopsAtIterationCap) {
  const testing::AdmmInstance inst = testing::admm_instance(4);
  AdmmOptions opts;
  opts.max_iters = 2;
  const AdmmSolution s = solve({inst.u, inst.y, inst.j}, opts);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.iterations, 2);
  EXPECT_GT(s.residual, opts.eps_tol);
}

TEST(Solve, ValidatesInputs) {
  const Eigen::MatrixXd u = init_random(10, 2, 1).basis();
  const Eigen::MatrixXd j = Eigen::MatrixXd::Ones(9, 2);
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  EXPECT_EQ(error_code_of([&] { solve({u, y, j}); }), ErrorCode::DimensionMismatch);
  AdmmOptions bad;
  bad.rho = 1.0;
  const Eigen::MatrixXd j2 = Eigen::MatrixXd::Ones(10, 2);
  EXPECT_EQ(error_code_of([&] { solve({u, y, j2}, bad); }), ErrorCode::InvalidArgument);
}

}  // namespace
}  // namespace tgrasta::admm
