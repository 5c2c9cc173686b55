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

/// \file grassmann.hpp
///
/// Incremental gradient step on the Grassmannian. The augmented Lagrangian
/// of the ADMM problem, viewed as a function of U at the ADMM solution,
/// has the rank-one gradient Gamma w^T, so the geodesic in the direction of
/// the negative gradient has a closed form that only rotates the plane
/// spanned by U w / |w| and Gamma / |Gamma|.

#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "tgrasta/admm.hpp"
#include "tgrasta/error.hpp"
#include "tgrasta/subspace.hpp"

namespace tgrasta::grassmann {

struct GradientInfo {
  Eigen::VectorXd gamma;  // (I - U U^T)(lambda + mu h), orthogonal to range(U)
  Eigen::VectorXd w;
  double sigma = 0.0;     // |gamma| |w|, the only nonzero singular value of gamma w^T
};

inline GradientInfo loss_gradient(const Subspace& u, const admm::AdmmSolution& sol,
                                  const Eigen::VectorXd& observation,
                                  const Eigen::MatrixXd& jacobian) {
  const Eigen::MatrixXd& basis = u.basis();
  const Eigen::Index n = basis.rows();
  require(observation.size() == n && jacobian.rows() == n && sol.lambda.size() == n &&
              sol.e.size() == n && sol.w.size() == basis.cols() &&
              sol.delta_tau.size() == jacobian.cols(),
          ErrorCode::DimensionMismatch, "ADMM solution does not match U, y and J");

  const admm::LinearizedProblem prob{basis, observation, jacobian};
  const Eigen::VectorXd gamma1 =
      sol.lambda + sol.mu_final * admm::residual_h(prob, sol.w, sol.e, sol.delta_tau);
  GradientInfo g;
  g.gamma = gamma1 - basis * (basis.transpose() * gamma1);
  g.w = sol.w;
  g.sigma = g.gamma.norm() * g.w.norm();
  return g;
}

/// Re-orthonormalization cadence for geodesic updates.
inline constexpr int kDefaultReorthonormalizeEvery = 100;

/// U(eta) = U + ((cos(eta sigma) - 1) U w/|w| - sin(eta sigma) Gamma/|Gamma|) w^T/|w|.
/// Returns U unchanged when eta, sigma, |w| or |Gamma| is zero.
inline Subspace geodesic_step(const Subspace& u, const GradientInfo& g, double eta,
                              int reorthonormalize_every = kDefaultReorthonormalizeEvery) {
  require(g.gamma.size() == u.ambient_dim() && g.w.size() == u.rank(),
          ErrorCode::DimensionMismatch, "gradient does not match the subspace");
  const double w_norm = g.w.norm();
  const double gamma_norm = g.gamma.norm();
  if (eta == 0.0 || g.sigma == 0.0 || w_norm == 0.0 || gamma_norm == 0.0) return u;

  const double angle = eta * g.sigma;
  const Eigen::VectorXd w_unit = g.w / w_norm;
  const Eigen::VectorXd direction =
      (std::cos(angle) - 1.0) * (u.basis() * w_unit) - std::sin(angle) * (g.gamma / gamma_norm);
  Eigen::MatrixXd next = u.basis() + direction * w_unit.transpose();

  int steps = u.steps_since_reorthonormalization() + 1;
  if (reorthonormalize_every > 0 && steps >= reorthonormalize_every) {
    next = orthonormalize(next);
    steps = 0;
  }
  return detail::SubspaceAccess::make(std::move(next), steps);
}

/// Constant eta0, or diminishing eta0 / (1 + decay t) where t counts calls.
class StepSizeRule {
 public:
  enum class Kind { Constant, Diminishing };

  StepSizeRule() = default;

  static StepSizeRule constant(double eta0) { return StepSizeRule(Kind::Constant, eta0, 0.0); }
  static StepSizeRule diminishing(double eta0, double decay) {
    require(decay > 0.0, ErrorCode::InvalidArgument, "step-size decay must be positive");
    return StepSizeRule(Kind::Diminishing, eta0, decay);
  }

  Kind kind() const noexcept { return kind_; }
  double eta0() const noexcept { return eta0_; }
  double decay() const noexcept { return decay_; }
  long long t() const noexcept { return t_; }

  /// The step size for the current gradient; advances the counter.
  double next(double /*sigma*/) {
    const double eta =
        kind_ == Kind::Constant ? eta0_ : eta0_ / (1.0 + decay_ * static_cast<double>(t_));
    ++t_;
    return eta;
  }

  bool operator==(const StepSizeRule&) const = default;

 private:
  StepSizeRule(Kind kind, double eta0, double decay) : kind_(kind), eta0_(eta0), decay_(decay) {
    require(eta0 > 0.0 && std::isfinite(eta0), ErrorCode::InvalidArgument,
            "step size eta0 must be positive");
  }

  Kind kind_ = Kind::Diminishing;
  double eta0_ = 0.1;
  double decay_ = 0.01;
  long long t_ = 0;
};

inline double next_step_size(StepSizeRule& rule, double sigma) { return rule.next(sigma); }

}  // namespace tgrasta::grassmann
