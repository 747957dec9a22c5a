// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/pipeline.hpp"

#include <chrono>

#include "stvq/hash_index.hpp"

namespace stvq {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

nlohmann::json FrameReport::to_json() const {
  nlohmann::json per_scale = nlohmann::json::object();
  for (std::size_t s = 0; s < scales.size(); ++s) {
    per_scale["s" + std::to_string(scales[s])] = {{"current", current_voxels[s]},
                                                  {"history", history_voxels[s]},
                                                  {"matched", matched[s]}};
  }
  return nlohmann::json{{"schema_version", 1},
                        {"frame_id", frame_id},
                        {"current_points", current_points},
                        {"history_points", history_points},
                        {"voxels", per_scale},
                        {"context_voxels", context_voxels},
                        {"m_prime", retained_voxels},
                        {"o_c_points", o_c_points},
                        {"timings_ms",
                         {{"fetch", timings.fetch_ms},
                          {"voxelize", timings.voxelize_ms},
                          {"query", timings.query_ms},
                          {"svaq", timings.svaq_ms},
                          {"ca", timings.ca_ms},
                          {"update", timings.update_ms}}}};
}

FrameResult process_frame(TfiBuffer& buffer, const PointCloud& frame, const Pose& pose,
                          double time, const WeightBundle& weights, const VoxelConfig& cfg,
                          const PipelineOptions& opt) {
  cfg.validate();
  if (frame.size() == 0) throw Error("process_frame: frame must be non-empty");
  // Inherited features are this pipeline's own per-point outputs, so the
  // buffer width must match the output width.
  if (cfg.feature_dim != cfg.channel_dim) {
    throw Error("process_frame: feature_dim must equal channel_dim");
  }
  if (buffer.feature_dim() != cfg.feature_dim) {
    throw DimensionError("process_frame: buffer feature width does not match config");
  }
  if (!buffer.frames().empty() && frame.frame_id <= buffer.frames().back().frame_id) {
    throw Error("process_frame: frame id must exceed the newest buffered frame");
  }

  FrameResult res;
  res.report.frame_id = frame.frame_id;
  res.report.current_points = frame.size();
  res.report.scales = cfg.scales;

  auto t0 = Clock::now();
  const PointCloud history = buffer.fetch(pose, time);
  res.report.history_points = history.size();
  res.report.timings.fetch_ms = ms_since(t0);

  t0 = Clock::now();
  std::vector<VoxelSet> current_sets, hist_sets;
  for (int s : cfg.scales) {
    current_sets.push_back(voxelize(frame, s, cfg, FrameTag::current));
    hist_sets.push_back(voxelize(history, s, cfg, FrameTag::historical));
    res.report.current_voxels.push_back(current_sets.back().size());
    res.report.history_voxels.push_back(hist_sets.back().size());
  }
  res.report.timings.voxelize_ms = ms_since(t0);

  // Context stream lives at scale 1 only.
  t0 = Clock::now();
  const VoxelSet context = unquery(hist_sets[0], current_sets[0]);
  res.report.context_voxels = context.size();
  res.report.timings.query_ms = ms_since(t0);

  t0 = Clock::now();
  svaq::ForwardResult fwd =
      svaq::forward(current_sets, hist_sets, weights, opt.attention_mode);
  for (const auto& a : fwd.alignments) res.report.matched.push_back(a.matched_count());
  res.report.timings.svaq_ms = ms_since(t0);

  t0 = Clock::now();
  const ca::ScoredContext scored = ca::score(context, current_sets[0], weights);
  ca::ActivatedContext activated =
      opt.target_count ? ca::select_top(scored, *opt.target_count)
                       : ca::activate(scored, opt.threshold.value_or(cfg.score_threshold),
                                      opt.ca_mode);
  res.report.retained_voxels = activated.retained_count();
  ca::ExtractResult extracted = ca::extract(activated, weights, opt.neighborhood_pool);
  res.report.o_c_points = extracted.o_c.rows;
  res.report.timings.ca_ms = ms_since(t0);

  res.o_v = std::move(fwd.o_v);
  res.o_c = std::move(extracted.o_c);
  res.o_c_point_indices = std::move(extracted.point_indices);

  // Remember this frame last so the buffer is untouched on any failure above.
  t0 = Clock::now();
  FrameRecord record;
  record.frame_id = frame.frame_id;
  record.pose = pose;
  record.time = time;
  record.points = frame;
  record.points.inherited = res.o_v;
  buffer.update(std::move(record));
  res.report.timings.update_ms = ms_since(t0);

  return res;
}

}  // namespace stvq
