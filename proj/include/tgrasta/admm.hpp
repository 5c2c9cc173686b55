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

/// \file admm.hpp
///
/// ADMM for the locally linearized l1 alignment problem
///
///   min |e|_1  s.t.  y + J dtau = U w + e
///
/// with augmented Lagrangian |e|_1 + lambda^T h + mu/2 |h|^2 and
/// h(w, e, dtau) = U w + e - y - J dtau.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "tgrasta/error.hpp"

namespace tgrasta::admm {

struct AdmmOptions {
  double rho = 2.0;       // penalty growth factor
  double eps_tol = 1e-7;  // exit when |h|_2 <= eps_tol
  int max_iters = 100;
  double mu0 = 1.0;
  double mu_max = 1e12;

  void validate() const {
    require(rho > 1.0, ErrorCode::InvalidArgument, "ADMM rho must exceed 1");
    require(eps_tol > 0.0, ErrorCode::InvalidArgument, "ADMM eps_tol must be positive");
    require(max_iters >= 1, ErrorCode::InvalidArgument, "ADMM max_iters must be >= 1");
    require(mu0 > 0.0 && mu_max > 0.0 && mu0 <= mu_max, ErrorCode::InvalidArgument,
            "ADMM penalties must satisfy 0 < mu0 <= mu_max");
  }
};

struct AdmmSolution {
  Eigen::VectorXd w;          // d
  Eigen::VectorXd e;          // n
  Eigen::VectorXd delta_tau;  // p
  Eigen::VectorXd lambda;     // n
  double mu_final = 0.0;      // penalty held by the solver on exit
  int iterations = 0;
  double residual = 0.0;      // |h|_2 of the returned iterate
  bool converged = false;
  bool jacobian_degenerate = false;  // delta_tau was frozen at zero
};

/// Non-owning view of one linearized instance. `observation` is the
/// normalized warped image y.
struct LinearizedProblem {
  const Eigen::MatrixXd& basis;        // U, n x d, orthonormal columns
  const Eigen::VectorXd& observation;  // y, n
  const Eigen::MatrixXd& jacobian;     // J, n x p

  void validate() const {
    const Eigen::Index n = observation.size();
    require(basis.rows() == n && jacobian.rows() == n, ErrorCode::DimensionMismatch,
            "U, y and J must share the row dimension n");
  }
};

/// sign(x) * max(|x| - theta, 0), elementwise.
inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double theta) {
  require(theta >= 0.0, ErrorCode::InvalidArgument, "threshold must be non-negative");
  return x.array().sign() * (x.array().abs() - theta).max(0.0);
}

/// h(w, e, dtau) = U w + e - y - J dtau.
inline Eigen::VectorXd residual_h(const LinearizedProblem& prob, const Eigen::VectorXd& w,
                                  const Eigen::VectorXd& e, const Eigen::VectorXd& delta_tau) {
  prob.validate();
  require(w.size() == prob.basis.cols() && e.size() == prob.observation.size() &&
              delta_tau.size() == prob.jacobian.cols(),
          ErrorCode::DimensionMismatch, "w, e or delta_tau has the wrong length");
  return prob.basis * w + e - prob.observation - prob.jacobian * delta_tau;
}

struct Factors {
  Eigen::MatrixXd P;  // d x n
  Eigen::MatrixXd F;  // p x n
};

namespace detail {

// (J^T J + eps I)^-1 J^T with eps = 1e-10 trace(J^T J) / p, or nothing when
// J carries no signal.
inline std::optional<Eigen::MatrixXd> regularized_pinv(const Eigen::MatrixXd& j) {
  const Eigen::MatrixXd jtj = j.transpose() * j;
  const double trace = jtj.trace();
  if (!(trace >= 1e-20)) return std::nullopt;
  const Eigen::Index p = j.cols();
  const double eps = 1e-10 * trace / static_cast<double>(p);
  const Eigen::MatrixXd reg = jtj + eps * Eigen::MatrixXd::Identity(p, p);
  return Eigen::MatrixXd(reg.ldlt().solve(j.transpose()));
}

}  // namespace detail

/// P = (U^T U)^-1 U^T, which is U^T for orthonormal U, and the regularized
/// pseudo-inverse F of J. Throws DegenerateJacobian when trace(J^T J) < 1e-20.
inline Factors precompute_factors(const LinearizedProblem& prob) {
  prob.validate();
  auto f = detail::regularized_pinv(prob.jacobian);
  require(f.has_value(), ErrorCode::DegenerateJacobian,
          "trace(J^T J) < 1e-20; the warped image carries no gradient");
  return {prob.basis.transpose(), std::move(*f)};
}

/// Runs the five ADMM updates in order (dtau, w, e, lambda, mu) from a cold
/// start until |h|_2 <= eps_tol or max_iters. A degenerate Jacobian freezes
/// dtau at zero.
inline AdmmSolution solve(const LinearizedProblem& prob, const AdmmOptions& opts = {}) {
  prob.validate();
  opts.validate();
  const Eigen::MatrixXd& u = prob.basis;
  const Eigen::VectorXd& y = prob.observation;
  const Eigen::MatrixXd& j = prob.jacobian;
  const Eigen::Index n = y.size(), d = u.cols(), p = j.cols();

  const std::optional<Eigen::MatrixXd> f = detail::regularized_pinv(j);

  AdmmSolution s;
  s.w = Eigen::VectorXd::Zero(d);
  s.e = Eigen::VectorXd::Zero(n);
  s.delta_tau = Eigen::VectorXd::Zero(p);
  s.lambda = Eigen::VectorXd::Zero(n);
  s.jacobian_degenerate = !f.has_value();
  double mu = opts.mu0;

  Eigen::VectorXd j_dtau = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd h(n);
  for (int k = 1; k <= opts.max_iters; ++k) {
    const double inv_mu = 1.0 / mu;
    if (f) {
      s.delta_tau = *f * (u * s.w + s.e - y + inv_mu * s.lambda);
      j_dtau.noalias() = j * s.delta_tau;
    }
    const Eigen::VectorXd target = y + j_dtau - inv_mu * s.lambda;
    s.w.noalias() = u.transpose() * (target - s.e);
    const Eigen::VectorXd uw = u * s.w;
    s.e = soft_threshold(target - uw, inv_mu);
    h = uw + s.e - y - j_dtau;
    s.lambda += mu * h;
    mu = std::min(opts.rho * mu, opts.mu_max);

    s.iterations = k;
    s.residual = h.norm();
    if (!std::isfinite(s.residual) || !s.lambda.allFinite() || !s.w.allFinite() ||
        !s.delta_tau.allFinite()) {
      raise(ErrorCode::NonFinite, "ADMM iterate became non-finite at iteration " +
                                      std::to_string(k));
    }
    if (s.residual <= opts.eps_tol) {
      s.converged = true;
      break;
    }
  }
  s.mu_final = mu;
  return s;
}

}  // namespace tgrasta::admm
