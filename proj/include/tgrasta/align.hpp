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

/// \file align.hpp
///
/// Joint alignment and subspace estimation in three modes:
///
///  - batch: every outer iteration relinearizes all images, sweeps them in
///    random order taking one ADMM solve and one geodesic step per image,
///    then moves every tau by its latest increment;
///  - fully online: each frame walks a union of L subspaces, updating each
///    level and its own tau in turn;
///  - trained online: Gauss-Newton-like refinement of one frame against a
///    fixed subspace.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tgrasta/admm.hpp"
#include "tgrasta/error.hpp"
#include "tgrasta/grassmann.hpp"
#include "tgrasta/imaging.hpp"
#include "tgrasta/subspace.hpp"

namespace tgrasta::align {

using grassmann::StepSizeRule;

enum class SubspaceInit {
  Random,  // seeded Gaussian, orthonormalized
  Data,    // span of the first d warped images, completed randomly when N < d
};

/// ADMM settings used by the alignment loops: a slower penalty ramp than the
/// solver default, so the soft threshold lingers near the scale of a
/// unit-norm image's pixels long enough to separate outliers.
inline admm::AdmmOptions alignment_admm_options() {
  admm::AdmmOptions o;
  o.rho = 1.2;
  o.max_iters = 500;
  return o;
}

struct BatchConfig {
  int rank = 5;
  int max_outer = 15;
  int inner_passes = 3;
  double conv_eps = 1e-3;
  double conv_eps_abs = 1.0;
  StepSizeRule step_rule = StepSizeRule::diminishing(1e-3, 0.01);
  // Seeds the per-level schedules of an online state. Smaller than the batch
  // rule: online levels see each frame before it is aligned.
  StepSizeRule online_step_rule = StepSizeRule::diminishing(1e-4, 0.01);
  admm::AdmmOptions admm = alignment_admm_options();
  std::uint64_t seed = 1;
  BoundaryPolicy boundary = BoundaryPolicy::Clamp;
  SubspaceInit init = SubspaceInit::Random;
  int reorthonormalize_every = grassmann::kDefaultReorthonormalizeEvery;
  // Subtract the mean increment before moving the transforms, which pins
  // the common motion of the batch (unobservable from the images) at its
  // starting value.
  bool center_updates = true;

  void validate() const {
    require(rank >= 1, ErrorCode::InvalidArgument, "rank must be >= 1");
    require(max_outer >= 1 && inner_passes >= 1, ErrorCode::InvalidArgument,
            "iteration counts must be >= 1");
    require(conv_eps > 0.0 && conv_eps_abs > 0.0, ErrorCode::InvalidArgument,
            "convergence tolerances must be positive");
    admm.validate();
  }
};

/// mean_i |dtau_i| / max(|tau_i|, conv_eps_abs) < conv_eps.
inline bool has_converged(const std::vector<Eigen::VectorXd>& deltas,
                          const std::vector<TransformParams>& taus, double conv_eps,
                          double conv_eps_abs) {
  require(deltas.size() == taus.size(), ErrorCode::DimensionMismatch,
          "delta and tau lists must have equal length");
  if (deltas.empty()) return true;
  double total = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    total += deltas[i].norm() / std::max(taus[i].params().norm(), conv_eps_abs);
  }
  return total / static_cast<double>(deltas.size()) < conv_eps;
}

struct ImageStatus {
  bool ok = true;
  bool converged = false;  // this image's own relative dtau fell below conv_eps
  double residual = 0.0;   // ADMM |h| of the final decomposition
  std::string error;
};

struct AlignmentResult {
  std::vector<TransformParams> taus;
  std::vector<Eigen::VectorXd> outliers;  // e, in units of the normalized warp
  std::vector<Eigen::VectorXd> weights;   // w
  std::vector<Eigen::VectorXd> lowrank;   // U w
  std::vector<WarpedVector> aligned;      // normalized warp at the final tau
  std::vector<ImageStatus> status;
  Subspace subspace;
  std::vector<Subspace> snapshots;        // U after each outer iteration
  std::vector<double> trace;              // mean |dtau| per outer iteration
  int outer_iterations = 0;
  bool converged = false;
};

namespace detail {

struct Linearized {
  std::optional<LinearizedWarp> lin;
  std::string error;
};

inline Linearized try_linearize(const SourceImage& src, const TransformParams& tau,
                                const CanonicalFrame& frame, BoundaryPolicy policy) {
  try {
    return {linearize(src, tau, frame, policy), {}};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutOfBounds || e.code() == ErrorCode::SingularTransform ||
        e.code() == ErrorCode::ZeroNorm) {
      return {std::nullopt, e.what()};
    }
    throw;
  }
}

inline Subspace initial_subspace(const std::vector<Linearized>& lins, Eigen::Index n,
                                 const BatchConfig& cfg) {
  if (cfg.init == SubspaceInit::Random) return init_random(n, cfg.rank, cfg.seed);
  Subspace::check_rank(n, cfg.rank);
  Eigen::MatrixXd m = init_random(n, cfg.rank, cfg.seed).basis();
  Eigen::Index col = 0;
  for (const Linearized& l : lins) {
    if (col == cfg.rank) break;
    if (l.lin) m.col(col++) = l.lin->warped.values;
  }
  return Subspace::spanning(m);
}

}  // namespace detail

/// Batch alignment of N images. `tau0` gives the starting transform of each
/// image; all must share one group.
inline AlignmentResult align_batch(const std::vector<Image>& images,
                                   const std::vector<TransformParams>& tau0,
                                   const CanonicalFrame& frame, const BatchConfig& cfg) {
  cfg.validate();
  require(!images.empty() && images.size() == tau0.size(), ErrorCode::DimensionMismatch,
          "need N >= 1 images with one initial transform each");
  const std::size_t count = images.size();
  const Eigen::Index n = frame.n();

  std::vector<SourceImage> sources;
  sources.reserve(count);
  for (const Image& img : images) sources.emplace_back(img);

  AlignmentResult res;
  res.taus = tau0;
  res.status.resize(count);
  std::vector<Eigen::VectorXd> deltas(count);
  for (std::size_t i = 0; i < count; ++i) deltas[i] = Eigen::VectorXd::Zero(tau0[i].p());

  std::vector<detail::Linearized> lins(count);
  auto relinearize = [&] {
    for (std::size_t i = 0; i < count; ++i) {
      lins[i] = detail::try_linearize(sources[i], res.taus[i], frame, cfg.boundary);
      res.status[i].ok = lins[i].lin.has_value();
      res.status[i].error = lins[i].error;
    }
  };

  relinearize();
  Subspace u = detail::initial_subspace(lins, n, cfg);
  StepSizeRule rule = cfg.step_rule;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int k = 1; k <= cfg.max_outer; ++k) {
    if (k > 1) relinearize();
    for (auto& d : deltas) d.setZero();

    for (int pass = 0; pass < cfg.inner_passes; ++pass) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        if (!lins[i].lin) continue;
        const LinearizedWarp& lw = *lins[i].lin;
        const admm::LinearizedProblem prob{u.basis(), lw.warped.values, lw.jacobian};
        const admm::AdmmSolution sol = admm::solve(prob, cfg.admm);
        const grassmann::GradientInfo g =
            grassmann::loss_gradient(u, sol, lw.warped.values, lw.jacobian);
        u = grassmann::geodesic_step(u, g, rule.next(g.sigma), cfg.reorthonormalize_every);
        deltas[i] = sol.delta_tau;
      }
    }

    double total = 0.0;
    std::size_t active = 0;
    std::vector<Eigen::VectorXd> active_deltas;
    std::vector<TransformParams> active_taus;
    for (std::size_t i = 0; i < count; ++i) {
      if (!lins[i].lin) continue;
      total += deltas[i].norm();
      ++active;
      active_deltas.push_back(deltas[i]);
      active_taus.push_back(res.taus[i]);
      res.status[i].converged = deltas[i].norm() / std::max(res.taus[i].params().norm(),
                                                            cfg.conv_eps_abs) < cfg.conv_eps;
    }
    res.trace.push_back(active > 0 ? total / static_cast<double>(active) : 0.0);
    const bool done = has_converged(active_deltas, active_taus, cfg.conv_eps, cfg.conv_eps_abs);
    if (cfg.center_updates && active > 0) {
      Eigen::VectorXd common = Eigen::VectorXd::Zero(active_deltas.front().size());
      for (const Eigen::VectorXd& d : active_deltas) common += d;
      common /= static_cast<double>(active);
      for (std::size_t i = 0; i < count; ++i) {
        if (lins[i].lin) deltas[i] -= common;
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (lins[i].lin) res.taus[i] = apply_delta(res.taus[i], deltas[i]);
    }
    res.snapshots.push_back(u);
    res.outer_iterations = k;
    if (done) {
      res.converged = true;
      break;
    }
  }

  // Final decomposition against the learned subspace at the final transforms.
  relinearize();
  res.subspace = u;
  res.outliers.assign(count, Eigen::VectorXd::Zero(n));
  res.weights.assign(count, Eigen::VectorXd::Zero(u.rank()));
  res.lowrank.assign(count, Eigen::VectorXd::Zero(n));
  res.aligned.assign(count, WarpedVector{Eigen::VectorXd::Zero(n), 0.0});
  for (std::size_t i = 0; i < count; ++i) {
    if (!lins[i].lin) continue;
    const LinearizedWarp& lw = *lins[i].lin;
    const admm::AdmmSolution sol =
        admm::solve({u.basis(), lw.warped.values, lw.jacobian}, cfg.admm);
    res.outliers[i] = sol.e;
    res.weights[i] = sol.w;
    res.lowrank[i] = u.basis() * sol.w;
    res.aligned[i] = lw.warped;
    res.status[i].residual = sol.residual;
  }
  return res;
}

/// Union of L subspaces, one per linearization level, with a step-size
/// schedule for each.
struct OnlineState {
  std::vector<Subspace> subspaces;
  std::vector<StepSizeRule> step_rules;
  long long frame_count = 0;

  void validate() const {
    require(!subspaces.empty(), ErrorCode::InvalidArgument, "online state needs L >= 1 levels");
    require(step_rules.size() == subspaces.size(), ErrorCode::DimensionMismatch,
            "one step-size rule per level is required");
    for (const Subspace& s : subspaces) {
      require(s.ambient_dim() == subspaces.front().ambient_dim(), ErrorCode::DimensionMismatch,
              "all levels must share the ambient dimension");
    }
  }
};

/// L levels from the batch snapshots: the last L outer iterations when at
/// least L ran, otherwise L copies of the final subspace.
inline OnlineState online_state_from(const AlignmentResult& batch, int levels,
                                     const BatchConfig& cfg) {
  require(levels >= 1, ErrorCode::InvalidArgument, "L must be >= 1");
  OnlineState state;
  const auto& snaps = batch.snapshots;
  if (static_cast<int>(snaps.size()) >= levels) {
    state.subspaces.assign(snaps.end() - levels, snaps.end());
  } else {
    state.subspaces.assign(static_cast<std::size_t>(levels), batch.subspace);
  }
  state.step_rules.assign(static_cast<std::size_t>(levels), cfg.online_step_rule);
  return state;
}

inline OnlineState init_online(const std::vector<Image>& training,
                               const std::vector<TransformParams>& tau0,
                               const CanonicalFrame& frame, const BatchConfig& cfg, int levels) {
  require(!training.empty(), ErrorCode::InvalidArgument, "training set must be non-empty");
  return online_state_from(align_batch(training, tau0, frame, cfg), levels, cfg);
}

struct OnlineStepResult {
  OnlineState state;
  TransformParams tau;
  Eigen::VectorXd outliers;  // last level's e
  Eigen::VectorXd weights;   // last level's w
  WarpedVector aligned;      // last level's normalized warp
  double residual = 0.0;
  bool ok = true;
  std::string error;
};

/// One frame through all L levels: linearize at the current tau, solve,
/// step level l along its geodesic, then tau += dtau.
inline OnlineStepResult online_step(OnlineState state, const Image& image,
                                    const TransformParams& tau0, const CanonicalFrame& frame,
                                    const BatchConfig& cfg) {
  state.validate();
  cfg.validate();
  require(state.subspaces.front().ambient_dim() == frame.n(), ErrorCode::DimensionMismatch,
          "online subspaces do not match the canonical frame");
  const SourceImage src(image);
  OnlineStepResult out{std::move(state), tau0, Eigen::VectorXd::Zero(frame.n()), {}, {}, 0.0,
                       true, {}};
  for (std::size_t level = 0; level < out.state.subspaces.size(); ++level) {
    const detail::Linearized l = detail::try_linearize(src, out.tau, frame, cfg.boundary);
    if (!l.lin) {
      out.ok = false;
      out.error = l.error;
      break;
    }
    Subspace& u = out.state.subspaces[level];
    const admm::AdmmSolution sol =
        admm::solve({u.basis(), l.lin->warped.values, l.lin->jacobian}, cfg.admm);
    const grassmann::GradientInfo g =
        grassmann::loss_gradient(u, sol, l.lin->warped.values, l.lin->jacobian);
    u = grassmann::geodesic_step(u, g, out.state.step_rules[level].next(g.sigma),
                                 cfg.reorthonormalize_every);
    out.tau = apply_delta(out.tau, sol.delta_tau);
    out.outliers = sol.e;
    out.weights = sol.w;
    out.aligned = l.lin->warped;
    out.residual = sol.residual;
  }
  ++out.state.frame_count;
  return out;
}

struct TrainedModel {
  Subspace subspace;
  CanonicalFrame frame;
  TransformGroup group = TransformGroup::Affine;

  void validate() const {
    require(subspace.ambient_dim() == frame.n(), ErrorCode::DimensionMismatch,
            "trained subspace does not match the canonical frame");
  }
};

struct TrainedOptions {
  int max_iters = 50;
  double conv_eps = 1e-3;
  double conv_eps_abs = 1.0;
  admm::AdmmOptions admm = alignment_admm_options();
  BoundaryPolicy boundary = BoundaryPolicy::Clamp;
};

struct TrainedResult {
  TransformParams tau;
  Eigen::VectorXd outliers;
  Eigen::VectorXd weights;
  WarpedVector aligned;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string error;
};

/// Aligns one image against a fixed subspace; the model is never modified.
/// Convergence also requires every canonical sample to land inside the image.
inline TrainedResult align_trained(const TrainedModel& model, const Image& image,
                                   const TransformParams& tau0, const TrainedOptions& opts = {}) {
  model.validate();
  opts.admm.validate();
  require(opts.max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
  require(tau0.group() == model.group, ErrorCode::InvalidArgument,
          "initial transform group differs from the model's group");
  const SourceImage src(image);
  TrainedResult out{tau0, Eigen::VectorXd::Zero(model.frame.n()), {}, {}, 0.0, 0, false, {}};
  for (int k = 1; k <= opts.max_iters; ++k) {
    const detail::Linearized l = detail::try_linearize(src, out.tau, model.frame, opts.boundary);
    if (!l.lin) {
      out.error = l.error;
      break;
    }
    const admm::AdmmSolution sol = admm::solve(
        {model.subspace.basis(), l.lin->warped.values, l.lin->jacobian}, opts.admm);
    // A frame that samples outside the image has not found the model, however
    // small the step.
    const bool done = l.lin->clamped == 0 &&
                      has_converged({sol.delta_tau}, {out.tau}, opts.conv_eps, opts.conv_eps_abs);
    out.tau = apply_delta(out.tau, sol.delta_tau);
    out.outliers = sol.e;
    out.weights = sol.w;
    out.aligned = l.lin->warped;
    out.residual = sol.residual;
    out.iterations = k;
    if (done) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace tgrasta::align
