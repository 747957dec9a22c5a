// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

// stvq command line: voxelize / shunt / forward / bench / synth.
//
// Frame conventions shared by shunt and forward: history files are listed in
// chronological order (oldest first) after the current file; with H history
// files the i-th oldest is assigned capture time -(H - i) * period and the
// current frame time 0. The pose file carries one row-major 3x4 line per
// input file, in command-line order.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stvq/bench.hpp"
#include "stvq/config.hpp"
#include "stvq/hash_index.hpp"
#include "stvq/io.hpp"
#include "stvq/kernels.hpp"
#include "stvq/parallel.hpp"
#include "stvq/pipeline.hpp"
#include "stvq/voxelizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

stvq::VoxelConfig resolve_config(const std::string& config_path) {
  if (!config_path.empty()) return stvq::VoxelConfig::load(config_path);
  if (const char* env = std::getenv("STVQ_CONFIG")) {
    if (env[0] != '\0') return stvq::VoxelConfig::load(env);
  }
  stvq::VoxelConfig cfg;
  cfg.validate();
  return cfg;
}

struct FrameInputs {
  stvq::PointCloud current;
  std::vector<stvq::PointCloud> history;  // oldest first
  stvq::Pose current_pose;
  std::vector<stvq::Pose> history_poses;
  std::vector<double> history_times;
};

FrameInputs load_frames(const std::string& current_path,
                        const std::vector<std::string>& history_paths,
                        const std::string& poses_path, const std::string& calib_path,
                        double period) {
  if (!history_paths.empty() && poses_path.empty()) {
    throw CLI::ValidationError("--poses", "required when history files are given");
  }
  FrameInputs in;
  in.current = stvq::io::read_point_bin(current_path);

  std::vector<stvq::Pose> poses;
  if (!poses_path.empty()) {
    poses = stvq::io::read_poses(poses_path);
    if (!calib_path.empty()) {
      const auto calib = stvq::io::read_poses(calib_path);
      if (calib.size() != 1) {
        throw stvq::FormatError("calibration file must hold exactly one pose line");
      }
      poses = stvq::io::apply_calibration(std::move(poses), calib[0]);
    }
    if (poses.size() < 1 + history_paths.size()) {
      throw stvq::FormatError("pose file has " + std::to_string(poses.size()) +
                              " rows but " + std::to_string(1 + history_paths.size()) +
                              " input files were given");
    }
    in.current_pose = poses[0];
  }
  const std::size_t h = history_paths.size();
  for (std::size_t i = 0; i < h; ++i) {
    in.history.push_back(stvq::io::read_point_bin(history_paths[i]));
    in.history_poses.push_back(poses.empty() ? stvq::Pose() : poses[1 + i]);
    in.history_times.push_back(-static_cast<double>(h - i) * period);
  }
  return in;
}

void write_alignment_json(const fs::path& path, const stvq::QueryAlignment& a) {
  std::ofstream out(path);
  if (!out) throw stvq::FormatError("cannot write " + path.string());
  json j{{"schema_version", 1}, {"feature_width", a.feature_width}, {"match", a.match}};
  out << j.dump() << "\n";
}

int run_voxelize(const std::string& input, int scale, std::vector<double> base,
                 const std::string& config_path, const std::string& out_prefix) {
  stvq::VoxelConfig cfg = resolve_config(config_path);
  if (base.size() == 1) base = {base[0], base[0], base[0]};
  if (!base.empty()) {
    if (base.size() != 3) throw CLI::ValidationError("--base", "expects 1 or 3 values");
    cfg.base_size = {base[0], base[1], base[2]};
  }
  cfg.validate();

  const stvq::PointCloud cloud = stvq::io::read_point_bin(input);
  const stvq::VoxelSet set = stvq::voxelize(cloud, scale, cfg);

  const fs::path prefix(out_prefix);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  {
    std::ofstream coords(out_prefix + ".coords.jsonl");
    if (!coords) throw stvq::FormatError("cannot write " + out_prefix + ".coords.jsonl");
    for (const auto& c : set.coords) {
      coords << json{{"i", c.i}, {"j", c.j}, {"k", c.k}}.dump() << "\n";
    }
  }
  stvq::io::write_features(out_prefix + ".features.bin", set.features, "voxel_features");
  std::cout << set.size() << " voxels\n";
  return 0;
}

int run_shunt(const std::string& current_path, const std::vector<std::string>& history_paths,
              const std::string& poses_path, const std::string& calib_path,
              const std::string& config_path, double period, const std::string& out_dir) {
  const stvq::VoxelConfig cfg = resolve_config(config_path);
  FrameInputs in = load_frames(current_path, history_paths, poses_path, calib_path, period);

  // Merge the pose-aligned history into one stream before voxelization.
  stvq::PointCloud merged;
  const stvq::Pose to_current_base = stvq::inverse(in.current_pose);
  for (std::size_t i = 0; i < in.history.size(); ++i) {
    stvq::PointCloud h = stvq::transform(in.history[i],
                                         stvq::compose(to_current_base, in.history_poses[i]));
    for (auto& p : h.points) p.timestamp = in.history_times[i];
    merged.points.insert(merged.points.end(), h.points.begin(), h.points.end());
  }

  fs::create_directories(out_dir);
  json report{{"schema_version", 1},
              {"current_points", in.current.size()},
              {"history_points", merged.size()}};
  json per_scale = json::object();
  for (int s : cfg.scales) {
    const stvq::VoxelSet cur = stvq::voxelize(in.current, s, cfg, stvq::FrameTag::current);
    const stvq::VoxelSet hist = stvq::voxelize(merged, s, cfg, stvq::FrameTag::historical);
    const stvq::QueryAlignment a = stvq::query(cur, hist);
    write_alignment_json(fs::path(out_dir) / ("alignment_s" + std::to_string(s) + ".json"), a);
    json row{{"current_voxels", cur.size()},
             {"history_voxels", hist.size()},
             {"matched", a.matched_count()}};
    if (s == cfg.scales.front()) {
      const stvq::VoxelSet context = stvq::unquery(hist, cur);
      row["context_voxels"] = context.size();
      report["context_voxels"] = context.size();
    }
    per_scale["s" + std::to_string(s)] = row;
    std::cout << "scale " << s << ": matched " << a.matched_count() << "/" << cur.size()
              << " current voxels, " << hist.size() << " historical\n";
  }
  report["voxels"] = per_scale;
  std::ofstream out(fs::path(out_dir) / "report.json");
  out << report.dump(2) << "\n";
  std::cout << "context voxels: " << report["context_voxels"] << "\n";
  return 0;
}

int run_forward(const std::string& current_path, const std::vector<std::string>& history_paths,
                const std::string& poses_path, const std::string& calib_path,
                const std::string& config_path, const std::string& weights_path,
                std::uint64_t seed, const std::string& mode, double threshold,
                std::int64_t target_count, bool train, bool strict, double period,
                const std::string& out_dir) {
  const stvq::VoxelConfig cfg = resolve_config(config_path);

  stvq::WeightBundle weights;
  if (!weights_path.empty()) {
    weights = stvq::io::load_weights(weights_path);
  } else if (strict) {
    throw stvq::Error("--strict requires --weights");
  } else {
    std::cerr << "warning: no --weights given, generating from seed " << seed << "\n";
    weights = stvq::WeightBundle::seeded(cfg, seed);
  }

  FrameInputs in = load_frames(current_path, history_paths, poses_path, calib_path, period);

  stvq::TfiBuffer buffer(std::max<std::size_t>(cfg.history_frames, in.history.size()),
                         cfg.feature_dim);
  for (std::size_t i = 0; i < in.history.size(); ++i) {
    stvq::FrameRecord rec;
    rec.frame_id = static_cast<int>(i);
    rec.pose = in.history_poses[i];
    rec.time = in.history_times[i];
    rec.points = std::move(in.history[i]);
    // Raw history files carry no inherited features; pad with zeros.
    rec.points.inherited = stvq::Mat(rec.points.size(), cfg.feature_dim);
    buffer.update(std::move(rec));
  }

  stvq::PipelineOptions opt;
  opt.attention_mode =
      mode == "paired" ? stvq::svaq::AttentionMode::paired : stvq::svaq::AttentionMode::dense;
  opt.ca_mode = train ? stvq::ca::Mode::train : stvq::ca::Mode::infer;
  if (threshold >= 0.0) opt.threshold = threshold;
  if (target_count >= 0) opt.target_count = static_cast<std::size_t>(target_count);

  stvq::PointCloud frame = std::move(in.current);
  frame.frame_id = static_cast<int>(in.history.size());
  const stvq::FrameResult res =
      stvq::process_frame(buffer, frame, in.current_pose, 0.0, weights, cfg, opt);

  fs::create_directories(out_dir);
  stvq::io::write_features(fs::path(out_dir) / "o_v.f32", res.o_v, "o_v");
  stvq::io::write_features(fs::path(out_dir) / "o_c.f32", res.o_c, "o_c");
  json report = res.report.to_json();
  report["attention_mode"] = mode;
  std::ofstream out(fs::path(out_dir) / "report.json");
  out << report.dump(2) << "\n";
  std::cout << "o_v: " << res.o_v.rows << " x " << res.o_v.cols << ", o_c: " << res.o_c.rows
            << " x " << res.o_c.cols << ", m_prime: " << res.report.retained_voxels << "\n";
  return 0;
}

int run_bench_cmd(std::vector<std::size_t> sizes, double ratio, int repeat,
                  std::size_t brute_max, std::size_t knn_max, std::uint64_t seed,
                  const std::string& out_path) {
  stvq::bench::BenchOptions opt;
  if (!sizes.empty()) opt.sizes = std::move(sizes);
  opt.match_ratio = ratio;
  opt.repeat = repeat;
  opt.brute_max = brute_max;
  opt.knn_max = knn_max;
  opt.seed = seed;

  const stvq::bench::BenchReport report = stvq::bench::run_bench(opt);
  for (const auto& row : report.rows) {
    std::printf("n=%-8zu hash=%10.3f ms", row.n, row.hash_ms);
    if (row.brute_ms >= 0) std::printf("  brute=%10.3f ms", row.brute_ms);
    if (row.knn_ms >= 0) std::printf("  knn=%10.3f ms", row.knn_ms);
    std::printf("\n");
  }
  std::printf("slopes: hash=%.3f brute=%.3f knn=%.3f\n", report.hash_slope,
              report.brute_slope, report.knn_slope);
  if (!out_path.empty()) {
    const fs::path p(out_path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw stvq::FormatError("cannot write " + out_path);
    out << report.to_json().dump(2) << "\n";
  }
  return 0;
}

int run_synth(const std::string& spec_path, std::size_t frames, const std::string& outdir) {
  stvq::io::SceneSpec spec;
  if (!spec_path.empty()) spec = stvq::io::SceneSpec::load(spec_path);
  const auto seq = stvq::io::synth_sequence(spec, frames);

  fs::create_directories(outdir);
  std::vector<stvq::Pose> poses;
  std::ofstream times(fs::path(outdir) / "times.txt");
  times.precision(17);
  for (std::size_t f = 0; f < seq.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.bin", f);
    stvq::io::write_point_bin(fs::path(outdir) / name, seq[f].cloud);
    poses.push_back(seq[f].pose);
    times << seq[f].time << "\n";
  }
  stvq::io::write_poses(fs::path(outdir) / "poses.txt", poses);
  std::cout << seq.size() << " frames written to " << outdir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse spatio-temporal voxel query pipeline"};
  app.require_subcommand(1);

  int threads = 0;
  std::string isa;
  app.add_option("--threads", threads, "worker threads (default: hardware)");
  app.add_option("--isa", isa, "kernel ISA override: scalar or avx2");

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "quantize a point binary into a voxel dump");
  std::string vox_input, vox_config, vox_out = "voxels";
  int vox_scale = 1;
  std::vector<double> vox_base;
  vox->add_option("input", vox_input, "point binary")->required()->check(CLI::ExistingFile);
  vox->add_option("--scale", vox_scale, "voxel scale (>= 1)");
  vox->add_option("--base", vox_base, "voxel base size, one or three meters")->expected(1, 3);
  vox->add_option("--config", vox_config, "config JSON path");
  vox->add_option("--out", vox_out, "output prefix");

  // shunt
  auto* shunt = app.add_subcommand("shunt", "split history into matched neighborhood and context");
  std::string sh_current, sh_poses, sh_calib, sh_config, sh_out = "shunt_out";
  std::vector<std::string> sh_history;
  double sh_period = 0.1;
  shunt->add_option("current", sh_current, "current point binary")->required()->check(CLI::ExistingFile);
  shunt->add_option("history", sh_history, "history point binaries, oldest first");
  shunt->add_option("--poses", sh_poses, "pose file, one line per input file");
  shunt->add_option("--calib", sh_calib, "single-line sensor calibration pose");
  shunt->add_option("--config", sh_config, "config JSON path");
  shunt->add_option("--period", sh_period, "frame period in seconds");
  shunt->add_option("--out", sh_out, "output directory");

  // forward
  auto* fwd = app.add_subcommand("forward", "run the full query/attention/context pipeline");
  std::string fw_current, fw_poses, fw_calib, fw_config, fw_weights, fw_mode = "dense",
              fw_out = "forward_out";
  std::vector<std::string> fw_history;
  std::uint64_t fw_seed = 1;
  double fw_threshold = -1.0, fw_period = 0.1;
  std::int64_t fw_target = -1;
  bool fw_train = false, fw_strict = false;
  fwd->add_option("current", fw_current, "current point binary")->required()->check(CLI::ExistingFile);
  fwd->add_option("history", fw_history, "history point binaries, oldest first");
  fwd->add_option("--poses", fw_poses, "pose file, one line per input file");
  fwd->add_option("--calib", fw_calib, "single-line sensor calibration pose");
  fwd->add_option("--config", fw_config, "config JSON path");
  fwd->add_option("--weights", fw_weights, "weight bundle path");
  fwd->add_option("--seed", fw_seed, "seed for generated weights");
  fwd->add_option("--mode", fw_mode, "attention mode")->check(CLI::IsMember({"dense", "paired"}));
  fwd->add_option("--threshold", fw_threshold, "context score threshold");
  fwd->add_option("--target-count", fw_target, "retain this many context voxels");
  fwd->add_flag("--train", fw_train, "training-mode selection (keep all context voxels)");
  fwd->add_flag("--strict", fw_strict, "fail instead of generating missing weights");
  fwd->add_option("--period", fw_period, "frame period in seconds");
  fwd->add_option("--out", fw_out, "output directory");

  // bench
  auto* bench = app.add_subcommand("bench", "hash query vs. brute force scaling benchmark");
  std::vector<std::size_t> be_sizes;
  double be_ratio = 0.3;
  int be_repeat = 5;
  std::size_t be_brute_max = 40000, be_knn_max = 10000;
  std::uint64_t be_seed = 42;
  std::string be_out;
  bench->add_option("--sizes", be_sizes, "current-set sizes")->delimiter(',');
  bench->add_option("--ratio", be_ratio, "fraction of current coords present in history");
  bench->add_option("--repeat", be_repeat, "timed repetitions per size");
  bench->add_option("--brute-max", be_brute_max, "largest size for the brute scan");
  bench->add_option("--knn-max", be_knn_max, "largest size for the KNN baseline");
  bench->add_option("--seed", be_seed, "instance seed");
  bench->add_option("--out", be_out, "report JSON path");

  // synth
  auto* synth = app.add_subcommand("synth", "materialize a synthetic sequence");
  std::string sy_spec, sy_outdir = "synth_out";
  std::size_t sy_frames = 1;
  synth->add_option("--spec", sy_spec, "scene spec JSON")->check(CLI::ExistingFile);
  synth->add_option("--frames", sy_frames, "frame count");
  synth->add_option("--outdir", sy_outdir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) stvq::set_num_threads(threads);
    if (!isa.empty()) {
      if (isa == "scalar") {
        stvq::kernels::set_active_isa(stvq::kernels::Isa::scalar);
      } else if (isa == "avx2") {
        stvq::kernels::set_active_isa(stvq::kernels::Isa::avx2);
      } else {
        throw stvq::Error("unknown --isa value: " + isa);
      }
    }

    if (vox->parsed()) return run_voxelize(vox_input, vox_scale, vox_base, vox_config, vox_out);
    if (shunt->parsed()) {
      return run_shunt(sh_current, sh_history, sh_poses, sh_calib, sh_config, sh_period,
                       sh_out);
    }
    if (fwd->parsed()) {
      return run_forward(fw_current, fw_history, fw_poses, fw_calib, fw_config, fw_weights,
                         fw_seed, fw_mode, fw_threshold, fw_target, fw_train, fw_strict,
                         fw_period, fw_out);
    }
    if (bench->parsed()) {
      return run_bench_cmd(be_sizes, be_ratio, be_repeat, be_brute_max, be_knn_max, be_seed,
                           be_out);
    }
    if (synth->parsed()) return run_synth(sy_spec, sy_frames, sy_outdir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
