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

// tgrasta command-line driver.
//
//   synth          synthetic low-rank scene + jitter, ground-truth CSV
//   align-batch    batch alignment of a directory of frames
//   train          batch alignment of the first frames; writes the subspace
//   align-online   batch warm start, then online alignment of the rest
//   align-trained  per-frame alignment against a stored subspace
//   eval           corner error and pixel-trace statistics from two CSVs
//
// Exit status: 0 success, 1 invalid input or configuration, 2 runtime
// failure (including frames that could not be aligned; see errors.log).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "tgrasta/align.hpp"
#include "tgrasta/io.hpp"
#include "tgrasta/synth.hpp"

namespace fs = std::filesystem;
using namespace tgrasta;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kInvalid = 1, kRuntime = 2 };

// Thrown for failures that happened after the inputs were validated.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // shared
  std::string in, out, truth, subspace_file, estimate;
  int frame_w = 48, frame_h = 48;
  std::string group = "euclidean";
  int rank = 5, levels = 3, max_outer = 15, inner_passes = 3, train_count = 10;
  int max_iters = 50, admm_iters = 500;
  double eta0 = 1e-3, decay = 0.01, online_eta0 = 1e-4, rho = 1.2, eps_tol = 1e-7;
  double conv_eps = 1e-3, conv_eps_abs = 1.0;
  bool center = true;
  std::string init = "random";
  std::uint64_t seed = 1;
  std::string boundary = "clamp";
  // synth
  int scene_w = 64, scene_h = 64, scene_rank = 3, frames = 30;
  double sparsity = 0.05, fg_magnitude = 1.0, gain_min = 1.0, gain_max = 1.0;
  double smoothness = 4.0, variation = 0.1;
  double jitter_x = 6.0, jitter_y = 6.0, jitter_theta = 6.0;
};

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw RuntimeFailure("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void input(const fs::path& path) {
    inputs_.emplace_back(path.filename().string(), sha256_hex(io::read_file(path)));
  }
  void output(const std::string& name) { outputs_.push_back(name); }

  std::string str() const {
    std::string s = "# tgrasta run manifest\n";
    for (const auto& [k, v] : entries_) s += k + " = " + v + "\n";
    for (const auto& [name, hash] : inputs_) s += "input." + name + ".sha256 = " + hash + "\n";
    for (const auto& name : outputs_) s += "output = " + name + "\n";
    return s;
  }

 private:
  std::map<std::string, std::string> entries_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Option plumbing

BoundaryPolicy boundary_of(const Options& o) {
  if (o.boundary == "clamp") return BoundaryPolicy::Clamp;
  if (o.boundary == "strict") return BoundaryPolicy::Strict;
  raise(ErrorCode::InvalidArgument, "boundary must be 'clamp' or 'strict'");
}

align::BatchConfig batch_config(const Options& o) {
  align::BatchConfig cfg;
  cfg.rank = o.rank;
  cfg.max_outer = o.max_outer;
  cfg.inner_passes = o.inner_passes;
  cfg.conv_eps = o.conv_eps;
  cfg.conv_eps_abs = o.conv_eps_abs;
  cfg.step_rule = grassmann::StepSizeRule::diminishing(o.eta0, o.decay);
  cfg.online_step_rule = grassmann::StepSizeRule::diminishing(o.online_eta0, o.decay);
  cfg.admm.rho = o.rho;
  cfg.admm.eps_tol = o.eps_tol;
  cfg.admm.max_iters = o.admm_iters;
  cfg.seed = o.seed;
  cfg.boundary = boundary_of(o);
  cfg.center_updates = o.center;
  if (o.init == "random") {
    cfg.init = align::SubspaceInit::Random;
  } else if (o.init == "data") {
    cfg.init = align::SubspaceInit::Data;
  } else {
    raise(ErrorCode::InvalidArgument, "init must be 'random' or 'data'");
  }
  cfg.validate();
  return cfg;
}

void record_alignment_options(Manifest& m, const Options& o) {
  m.set("frame_w", std::to_string(o.frame_w));
  m.set("frame_h", std::to_string(o.frame_h));
  m.set("group", o.group);
  m.set("rank", std::to_string(o.rank));
  m.set("max_outer", std::to_string(o.max_outer));
  m.set("inner_passes", std::to_string(o.inner_passes));
  m.set("eta0", io::format_double(o.eta0));
  m.set("decay", io::format_double(o.decay));
  m.set("online_eta0", io::format_double(o.online_eta0));
  m.set("rho", io::format_double(o.rho));
  m.set("eps_tol", io::format_double(o.eps_tol));
  m.set("admm_iters", std::to_string(o.admm_iters));
  m.set("conv_eps", io::format_double(o.conv_eps));
  m.set("conv_eps_abs", io::format_double(o.conv_eps_abs));
  m.set("center", o.center ? "true" : "false");
  m.set("init", o.init);
  m.set("seed", std::to_string(o.seed));
  m.set("boundary", o.boundary);
}

struct Frames {
  std::vector<std::string> ids;
  std::vector<Image> images;
};

Frames load_frames(const std::string& dir, Manifest& m) {
  require(!dir.empty(), ErrorCode::InvalidArgument, "--in DIR is required");
  Frames f;
  for (const fs::path& p : io::list_pgm_files(dir)) {
    f.ids.push_back(p.stem().string());
    f.images.push_back(io::read_pgm(p));
    m.input(p);
  }
  require(!f.images.empty(), ErrorCode::InvalidArgument, "no .pgm frames in '" + dir + "'");
  return f;
}

fs::path prepare_out(const std::string& out) {
  require(!out.empty(), ErrorCode::InvalidArgument, "--out DIR is required");
  fs::create_directories(out);
  return out;
}

std::vector<TransformParams> load_truth_for(const std::string& path,
                                            const std::vector<std::string>& ids, Manifest& m) {
  const auto rows = io::parse_transforms(io::read_file(path));
  m.input(path);
  std::map<std::string, TransformParams> by_id;
  for (const auto& r : rows) by_id.emplace(r.id, r.tau);
  std::vector<TransformParams> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    require(it != by_id.end(), ErrorCode::InvalidArgument,
            "ground truth has no row for '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

void append_truth_metrics(io::CsvWriter& metrics, const std::vector<TransformParams>& est,
                          const std::vector<TransformParams>& truth, const CanonicalFrame& frame) {
  const std::vector<double> errs = synth::corner_error(est, truth, frame);
  double worst = 0.0;
  for (double e : errs) worst = std::max(worst, e);
  const synth::PixelTraceStats st = synth::pixel_trace_stats(est, truth, frame);
  metrics.row({"mean_corner_error", io::format_double(synth::mean(errs))});
  metrics.row({"max_corner_error", io::format_double(worst)});
  metrics.row({"trace_max_error", io::format_double(st.max_error)});
  metrics.row({"trace_mean_error", io::format_double(st.mean_error)});
  static const char* names[] = {"trace_std_p1_x", "trace_std_p1_y", "trace_std_p2_x",
                                "trace_std_p2_y"};
  for (std::size_t k = 0; k < st.std_dev.size() && k < 4; ++k) {
    metrics.row({names[k], io::format_double(st.std_dev[k])});
  }
}

// Per-frame outputs shared by every alignment command.
struct FrameOutput {
  TransformParams tau;
  bool ok = true;
  bool converged = false;
  double residual = 0.0;
  std::string error;
  WarpedVector aligned;
  Eigen::VectorXd lowrank, outliers;
};

int write_alignment(const fs::path& out, const Frames& frames, const CanonicalFrame& frame,
                    TransformGroup group, const std::vector<FrameOutput>& results,
                    io::CsvWriter& metrics, Manifest& manifest, const Options& o) {
  for (const char* sub : {"aligned", "lowrank", "outlier"}) fs::create_directories(out / sub);
  auto header = io::transform_header(group, "image_id");
  header.push_back("converged");
  header.push_back("residual");
  io::CsvWriter transforms(header);
  std::string errors;
  std::vector<TransformParams> taus;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const FrameOutput& r = results[i];
    const std::string& id = frames.ids[i];
    auto fields = io::transform_fields(id, r.tau);
    fields.push_back(r.converged ? "true" : "false");
    fields.push_back(io::format_double(r.residual));
    transforms.row(fields);
    taus.push_back(r.tau);
    if (!r.ok) {
      errors += id + ": " + r.error + "\n";
      continue;
    }
    const double norm = r.aligned.norm;
    io::write_pgm(io::unnormalized_to_image(r.aligned.values, norm, frame.width, frame.height),
                  out / "aligned" / (id + ".pgm"));
    io::write_pgm(io::unnormalized_to_image(r.lowrank, norm, frame.width, frame.height),
                  out / "lowrank" / (id + ".pgm"));
    io::write_pgm(io::signed_to_image(r.outliers, frame.width, frame.height),
                  out / "outlier" / (id + ".pgm"));
  }
  io::write_file(out / "transforms.csv", transforms.str());
  manifest.output("transforms.csv");
  manifest.output("aligned/");
  manifest.output("lowrank/");
  manifest.output("outlier/");

  if (!o.truth.empty()) {
    append_truth_metrics(metrics, taus, load_truth_for(o.truth, frames.ids, manifest), frame);
  }
  io::write_file(out / "metrics.csv", metrics.str());
  manifest.output("metrics.csv");
  if (!errors.empty()) {
    io::write_file(out / "errors.log", errors);
    manifest.output("errors.log");
  }
  io::write_file(out / "manifest.txt", manifest.str());
  if (!errors.empty()) {
    std::cerr << "tgrasta: some frames could not be aligned; see " << (out / "errors.log").string()
              << "\n";
    return kRuntime;
  }
  return kOk;
}

std::vector<FrameOutput> batch_outputs(const align::AlignmentResult& res) {
  std::vector<FrameOutput> out(res.taus.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].tau = res.taus[i];
    out[i].ok = res.status[i].ok;
    out[i].converged = res.status[i].converged;
    out[i].residual = res.status[i].residual;
    out[i].error = res.status[i].error;
    out[i].aligned = res.aligned[i];
    out[i].lowrank = res.lowrank[i];
    out[i].outliers = res.outliers[i];
  }
  return out;
}

void write_trace(const fs::path& out, const align::AlignmentResult& res, Manifest& m) {
  io::CsvWriter trace({"outer_iteration", "mean_delta_norm"});
  for (std::size_t k = 0; k < res.trace.size(); ++k) {
    trace.row({std::to_string(k + 1), io::format_double(res.trace[k])});
  }
  io::write_file(out / "trace.csv", trace.str());
  m.output("trace.csv");
}

// ---------------------------------------------------------------------------
// Commands

int run_synth(const Options& o) {
  synth::SceneSpec spec;
  spec.width = o.scene_w;
  spec.height = o.scene_h;
  spec.rank = o.scene_rank;
  spec.n_frames = o.frames;
  spec.foreground_sparsity = o.sparsity;
  spec.foreground_magnitude = o.fg_magnitude;
  spec.gain_min = o.gain_min;
  spec.gain_max = o.gain_max;
  spec.smoothness = o.smoothness;
  spec.variation = o.variation;
  spec.seed = o.seed;
  spec.validate();
  const synth::JitterSpec js{o.jitter_x, o.jitter_y, o.jitter_theta, o.seed + 1};
  js.validate();
  const CanonicalFrame frame(o.frame_w, o.frame_h);

  const fs::path out = prepare_out(o.out);
  const synth::Scene scene = synth::make_scene(spec);
  const synth::JitteredFrames jit = synth::jitter(scene.frames, js, frame);

  fs::create_directories(out / "frames");
  io::CsvWriter truth(io::transform_header(TransformGroup::Euclidean, "frame_id"));
  const int digits = std::max(4, static_cast<int>(std::to_string(o.frames - 1).size()));
  for (std::size_t i = 0; i < jit.perturbed.size(); ++i) {
    std::string id = std::to_string(i);
    id = "frame_" + std::string(static_cast<std::size_t>(digits) - std::min<std::size_t>(digits, id.size()), '0') + id;
    io::write_pgm(jit.perturbed[i], out / "frames" / (id + ".pgm"), 65535);
    truth.row(io::transform_fields(id, jit.tau_true[i]));
  }
  io::write_file(out / "truth.csv", truth.str());

  Manifest m;
  m.set("command", "synth");
  m.set("version", kVersion);
  m.set("scene_w", std::to_string(o.scene_w));
  m.set("scene_h", std::to_string(o.scene_h));
  m.set("scene_rank", std::to_string(o.scene_rank));
  m.set("frames", std::to_string(o.frames));
  m.set("sparsity", io::format_double(o.sparsity));
  m.set("fg_magnitude", io::format_double(o.fg_magnitude));
  m.set("gain_min", io::format_double(o.gain_min));
  m.set("gain_max", io::format_double(o.gain_max));
  m.set("smoothness", io::format_double(o.smoothness));
  m.set("variation", io::format_double(o.variation));
  m.set("jitter_x", io::format_double(o.jitter_x));
  m.set("jitter_y", io::format_double(o.jitter_y));
  m.set("jitter_theta", io::format_double(o.jitter_theta));
  m.set("frame_w", std::to_string(o.frame_w));
  m.set("frame_h", std::to_string(o.frame_h));
  m.set("seed", std::to_string(o.seed));
  m.set("jitter_seed", std::to_string(js.seed));
  m.output("frames/");
  m.output("truth.csv");
  io::write_file(out / "manifest.txt", m.str());
  return kOk;
}

std::vector<TransformParams> identity_taus(TransformGroup g, std::size_t n) {
  return std::vector<TransformParams>(n, TransformParams::identity(g));
}

int run_align_batch(const Options& o, bool train) {
  const CanonicalFrame frame(o.frame_w, o.frame_h);
  const TransformGroup group = parse_group(o.group);
  const align::BatchConfig cfg = batch_config(o);
  Manifest m;
  m.set("command", train ? "train" : "align-batch");
  m.set("version", kVersion);
  record_alignment_options(m, o);
  Frames frames = load_frames(o.in, m);
  if (train) {
    require(o.train_count >= 1, ErrorCode::InvalidArgument, "train-count must be >= 1");
    const std::size_t keep = std::min<std::size_t>(frames.images.size(), o.train_count);
    frames.ids.resize(keep);
    frames.images.resize(keep);
    m.set("train_count", std::to_string(o.train_count));
  }
  const fs::path out = prepare_out(o.out);

  const align::AlignmentResult res =
      align::align_batch(frames.images, identity_taus(group, frames.images.size()), frame, cfg);
  write_trace(out, res, m);
  io::write_file(out / "subspace.txt", io::encode_subspace(res.subspace));
  m.output("subspace.txt");

  io::CsvWriter metrics({"metric", "value"});
  metrics.row({"frames", std::to_string(frames.images.size())});
  metrics.row({"outer_iterations", std::to_string(res.outer_iterations)});
  metrics.row({"converged", res.converged ? "true" : "false"});
  metrics.row({"initial_mean_delta_norm", io::format_double(res.trace.front())});
  metrics.row({"final_mean_delta_norm", io::format_double(res.trace.back())});
  return write_alignment(out, frames, frame, group, batch_outputs(res), metrics, m, o);
}

int run_align_online(const Options& o) {
  const CanonicalFrame frame(o.frame_w, o.frame_h);
  const TransformGroup group = parse_group(o.group);
  const align::BatchConfig cfg = batch_config(o);
  require(o.levels >= 1, ErrorCode::InvalidArgument, "levels must be >= 1");
  require(o.train_count >= 1, ErrorCode::InvalidArgument, "train-count must be >= 1");
  Manifest m;
  m.set("command", "align-online");
  m.set("version", kVersion);
  record_alignment_options(m, o);
  m.set("levels", std::to_string(o.levels));
  m.set("train_count", std::to_string(o.train_count));
  const Frames frames = load_frames(o.in, m);
  const fs::path out = prepare_out(o.out);

  const std::size_t warm = std::min<std::size_t>(frames.images.size(), o.train_count);
  const std::vector<Image> training(frames.images.begin(), frames.images.begin() + warm);
  const align::AlignmentResult batch =
      align::align_batch(training, identity_taus(group, warm), frame, cfg);
  align::OnlineState state = align::online_state_from(batch, o.levels, cfg);

  // Warm-start frames keep their batch results; the rest stream through.
  std::vector<FrameOutput> results = batch_outputs(batch);
  int failed = 0;
  for (std::size_t i = warm; i < frames.images.size(); ++i) {
    align::OnlineStepResult r = align::online_step(std::move(state), frames.images[i],
                                                   TransformParams::identity(group), frame, cfg);
    state = std::move(r.state);
    FrameOutput f;
    f.tau = r.tau;
    f.ok = r.ok;
    f.converged = r.ok;
    f.residual = r.residual;
    f.error = r.error;
    if (r.ok) {
      f.aligned = r.aligned;
      f.lowrank = state.subspaces.back().basis() * r.weights;
      f.outliers = r.outliers;
    }
    failed += r.ok ? 0 : 1;
    results.push_back(std::move(f));
  }

  io::CsvWriter metrics({"metric", "value"});
  metrics.row({"frames", std::to_string(frames.images.size())});
  metrics.row({"warm_start_frames", std::to_string(warm)});
  metrics.row({"levels", std::to_string(o.levels)});
  metrics.row({"failed_frames", std::to_string(failed)});
  for (std::size_t l = 0; l < state.subspaces.size(); ++l) {
    io::write_file(out / ("subspace_level" + std::to_string(l + 1) + ".txt"),
                   io::encode_subspace(state.subspaces[l]));
    m.output("subspace_level" + std::to_string(l + 1) + ".txt");
  }
  return write_alignment(out, frames, frame, group, results, metrics, m, o);
}

int run_align_trained(const Options& o) {
  const CanonicalFrame frame(o.frame_w, o.frame_h);
  const TransformGroup group = parse_group(o.group);
  require(!o.subspace_file.empty(), ErrorCode::InvalidArgument, "--subspace FILE is required");
  Manifest m;
  m.set("command", "align-trained");
  m.set("version", kVersion);
  record_alignment_options(m, o);
  m.set("max_iters", std::to_string(o.max_iters));
  const align::TrainedModel model{io::parse_subspace(io::read_file(o.subspace_file)), frame,
                                  group};
  model.validate();
  m.input(o.subspace_file);
  align::TrainedOptions opts;
  opts.max_iters = o.max_iters;
  opts.conv_eps = o.conv_eps;
  opts.conv_eps_abs = o.conv_eps_abs;
  opts.admm.rho = o.rho;
  opts.admm.eps_tol = o.eps_tol;
  opts.admm.max_iters = o.admm_iters;
  opts.boundary = boundary_of(o);
  opts.admm.validate();
  require(opts.max_iters >= 1 && opts.conv_eps > 0 && opts.conv_eps_abs > 0,
          ErrorCode::InvalidArgument, "invalid trained-mode iteration settings");
  const Frames frames = load_frames(o.in, m);
  const fs::path out = prepare_out(o.out);

  std::vector<FrameOutput> results;
  int converged = 0;
  for (const Image& img : frames.images) {
    const align::TrainedResult r =
        align::align_trained(model, img, TransformParams::identity(group), opts);
    FrameOutput f;
    f.tau = r.tau;
    f.ok = r.error.empty();
    f.converged = r.converged;
    f.residual = r.residual;
    f.error = r.error;
    if (f.ok) {
      f.aligned = r.aligned;
      f.lowrank = model.subspace.basis() * r.weights;
      f.outliers = r.outliers;
    }
    converged += r.converged ? 1 : 0;
    results.push_back(std::move(f));
  }
  io::CsvWriter metrics({"metric", "value"});
  metrics.row({"frames", std::to_string(frames.images.size())});
  metrics.row({"converged_frames", std::to_string(converged)});
  return write_alignment(out, frames, frame, group, results, metrics, m, o);
}

int run_eval(const Options& o) {
  require(!o.truth.empty() && !o.estimate.empty(), ErrorCode::InvalidArgument,
          "eval needs --truth and --estimate CSV files");
  const CanonicalFrame frame(o.frame_w, o.frame_h);
  Manifest m;
  m.set("command", "eval");
  m.set("version", kVersion);
  m.set("frame_w", std::to_string(o.frame_w));
  m.set("frame_h", std::to_string(o.frame_h));
  const auto est_rows = io::parse_transforms(io::read_file(o.estimate));
  m.input(o.estimate);
  std::vector<std::string> ids;
  std::vector<TransformParams> est;
  for (const auto& r : est_rows) {
    ids.push_back(r.id);
    est.push_back(r.tau);
  }
  require(!ids.empty(), ErrorCode::InvalidArgument, "estimate CSV has no rows");
  const std::vector<TransformParams> truth = load_truth_for(o.truth, ids, m);
  const fs::path out = prepare_out(o.out);

  io::CsvWriter per_frame({"image_id", "corner_error"});
  const std::vector<double> errs = synth::corner_error(est, truth, frame);
  for (std::size_t i = 0; i < ids.size(); ++i) per_frame.row({ids[i], io::format_double(errs[i])});
  io::write_file(out / "frame_errors.csv", per_frame.str());
  m.output("frame_errors.csv");

  io::CsvWriter metrics({"metric", "value"});
  metrics.row({"frames", std::to_string(ids.size())});
  append_truth_metrics(metrics, est, truth, frame);
  io::write_file(out / "metrics.csv", metrics.str());
  m.output("metrics.csv");
  io::write_file(out / "manifest.txt", m.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// Argument handling

void add_frame_options(CLI::App* c, Options& o) {
  c->add_option("--frame-w", o.frame_w, "canonical frame width")->capture_default_str();
  c->add_option("--frame-h", o.frame_h, "canonical frame height")->capture_default_str();
}

void add_alignment_options(CLI::App* c, Options& o) {
  add_frame_options(c, o);
  c->add_option("--in", o.in, "directory of .pgm frames (sorted by name)");
  c->add_option("--out", o.out, "output directory");
  c->add_option("--truth", o.truth, "ground-truth CSV; adds error metrics");
  c->add_option("--group", o.group, "translation | euclidean | affine")->capture_default_str();
  c->add_option("--rank", o.rank, "subspace rank d")->capture_default_str();
  c->add_option("--max-outer", o.max_outer, "outer iterations K")->capture_default_str();
  c->add_option("--inner-passes", o.inner_passes, "passes per outer iteration")
      ->capture_default_str();
  c->add_option("--eta0", o.eta0, "initial geodesic step size")->capture_default_str();
  c->add_option("--decay", o.decay, "step-size decay")->capture_default_str();
  c->add_option("--online-eta0", o.online_eta0, "initial step size of online levels")
      ->capture_default_str();
  c->add_option("--rho", o.rho, "ADMM penalty growth")->capture_default_str();
  c->add_option("--eps-tol", o.eps_tol, "ADMM residual tolerance")->capture_default_str();
  c->add_option("--admm-iters", o.admm_iters, "ADMM iteration cap")->capture_default_str();
  c->add_option("--conv-eps", o.conv_eps, "relative dtau tolerance")->capture_default_str();
  c->add_option("--conv-eps-abs", o.conv_eps_abs, "denominator floor of the dtau test")
      ->capture_default_str();
  c->add_option("--center", o.center, "centre batch increments (true|false)")
      ->capture_default_str();
  c->add_option("--init", o.init, "initial subspace: random | data")->capture_default_str();
  c->add_option("--seed", o.seed, "random seed")->capture_default_str();
  c->add_option("--boundary", o.boundary, "clamp | strict")->capture_default_str();
}

// Finds --config FILE (or --config=FILE) and turns its entries into flags
// placed ahead of the command line, so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (file.empty()) return args;
  require(!args.empty(), ErrorCode::InvalidArgument, "a command must precede --config");
  const io::Config cfg = io::parse_config(io::read_file(file));
  std::vector<std::string> out{args.front()};
  for (const auto& [key, value] : cfg) {
    std::string flag = key;
    for (char& c : flag) {
      if (c == '_') c = '-';
    }
    out.push_back("--" + flag);
    out.push_back(value);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"tgrasta: robust joint image alignment and subspace tracking"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a jittered synthetic scene");
  add_frame_options(synth_cmd, o);
  synth_cmd->add_option("--out", o.out, "output directory");
  synth_cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--scene-w", o.scene_w)->capture_default_str();
  synth_cmd->add_option("--scene-h", o.scene_h)->capture_default_str();
  synth_cmd->add_option("--scene-rank", o.scene_rank)->capture_default_str();
  synth_cmd->add_option("--frames", o.frames)->capture_default_str();
  synth_cmd->add_option("--sparsity", o.sparsity)->capture_default_str();
  synth_cmd->add_option("--fg-magnitude", o.fg_magnitude)->capture_default_str();
  synth_cmd->add_option("--gain-min", o.gain_min)->capture_default_str();
  synth_cmd->add_option("--gain-max", o.gain_max)->capture_default_str();
  synth_cmd->add_option("--smoothness", o.smoothness)->capture_default_str();
  synth_cmd->add_option("--variation", o.variation)->capture_default_str();
  synth_cmd->add_option("--jitter-x", o.jitter_x, "full x translation range, px")
      ->capture_default_str();
  synth_cmd->add_option("--jitter-y", o.jitter_y, "full y translation range, px")
      ->capture_default_str();
  synth_cmd->add_option("--jitter-theta", o.jitter_theta, "full rotation range, degrees")
      ->capture_default_str();

  CLI::App* batch_cmd = app.add_subcommand("align-batch", "batch alignment");
  add_alignment_options(batch_cmd, o);

  CLI::App* train_cmd = app.add_subcommand("train", "batch alignment of a training subset");
  add_alignment_options(train_cmd, o);
  train_cmd->add_option("--train-count", o.train_count, "frames used for training")
      ->capture_default_str();

  CLI::App* online_cmd = app.add_subcommand("align-online", "online alignment");
  add_alignment_options(online_cmd, o);
  online_cmd->add_option("--levels", o.levels, "number of subspace levels L")
      ->capture_default_str();
  online_cmd->add_option("--train-count", o.train_count, "warm-start frames")
      ->capture_default_str();

  CLI::App* trained_cmd = app.add_subcommand("align-trained", "alignment against a fixed subspace");
  add_alignment_options(trained_cmd, o);
  trained_cmd->add_option("--subspace", o.subspace_file, "subspace file written by train");
  trained_cmd->add_option("--max-iters", o.max_iters, "iterations per frame")
      ->capture_default_str();

  CLI::App* eval_cmd = app.add_subcommand("eval", "alignment error statistics");
  add_frame_options(eval_cmd, o);
  eval_cmd->add_option("--truth", o.truth, "ground-truth CSV");
  eval_cmd->add_option("--estimate", o.estimate, "estimated transforms CSV");
  eval_cmd->add_option("--out", o.out, "output directory");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  } catch (const Error& e) {
    std::cerr << "tgrasta: " << e.what() << "\n";
    return kInvalid;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(o);
    if (batch_cmd->parsed()) return run_align_batch(o, false);
    if (train_cmd->parsed()) return run_align_batch(o, true);
    if (online_cmd->parsed()) return run_align_online(o);
    if (trained_cmd->parsed()) return run_align_trained(o);
    if (eval_cmd->parsed()) return run_eval(o);
  } catch (const Error& e) {
    std::cerr << "tgrasta: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::IoError:
      case ErrorCode::NonFinite:
      case ErrorCode::DegenerateJacobian:
        return kRuntime;
      default:
        return kInvalid;
    }
  } catch (const RuntimeFailure& e) {
    std::cerr << "tgrasta: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "tgrasta: " << e.what() << "\n";
    return kRuntime;
  }
  return kInvalid;
}
