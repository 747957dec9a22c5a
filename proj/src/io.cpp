// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

namespace stvq::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

void write_f32(std::ostream& out, const double* values, std::size_t n) {
  std::vector<float> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(values[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
}

void read_f32(std::istream& in, double* values, std::size_t n,
              const std::string& context) {
  std::vector<float> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float)) {
    throw FormatError(context + ": payload truncated after " +
                      std::to_string(in.gcount()) + " bytes");
  }
  for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<double>(buf[i]);
}

nlohmann::json read_header_line(std::istream& in, const std::string& context) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(context + ": missing JSON header line");
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(context + ": invalid JSON header: " + e.what());
  }
}

void expect_eof(std::istream& in, const std::string& context) {
  char extra;
  if (in.read(&extra, 1)) {
    throw FormatError(context + ": trailing bytes after payload");
  }
}

}  // namespace

PointCloud read_point_bin(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  if (bytes % 16 != 0) {
    throw FormatError(path.string() + ": length " + std::to_string(bytes) +
                      " is not a multiple of 16 bytes (truncated at offset " +
                      std::to_string(bytes - bytes % 16) + ")");
  }
  const std::size_t n = static_cast<std::size_t>(bytes / 16);
  std::vector<float> buf(n * 4);
  in.read(reinterpret_cast<char*>(buf.data()), bytes);
  if (in.gcount() != bytes) throw FormatError(path.string() + ": short read");

  PointCloud cloud;
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points[i].x = buf[i * 4 + 0];
    cloud.points[i].y = buf[i * 4 + 1];
    cloud.points[i].z = buf[i * 4 + 2];
    cloud.points[i].intensity = buf[i * 4 + 3];
    cloud.points[i].timestamp = 0.0;
  }
  return cloud;
}

void write_point_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  std::vector<float> buf(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    buf[i * 4 + 0] = static_cast<float>(cloud.points[i].x);
    buf[i * 4 + 1] = static_cast<float>(cloud.points[i].y);
    buf[i * 4 + 2] = static_cast<float>(cloud.points[i].z);
    buf[i * 4 + 3] = static_cast<float>(cloud.points[i].intensity);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<Pose> read_poses(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::array<double, 12> m{};
    std::size_t got = 0;
    double v;
    while (fields >> v) {
      if (got < 12) m[got] = v;
      ++got;
    }
    if (got != 12) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 12 fields, got " +
                        std::to_string(got));
    }
    std::array<double, 9> r{m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]};
    // Validate loosely; limited-precision rotations are snapped to the
    // closest rotation. Inputs already orthonormal at double precision pass
    // through untouched so write/read/write round-trips stay byte-exact.
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[i * 3 + k] * r[j * 3 + k];
        err = std::max(err, std::abs(dot - (i == j ? 1.0 : 0.0)));
      }
    }
    if (err > 1e-4) {
      throw InvalidPoseError(path.string() + ":" + std::to_string(line_no) +
                             ": rotation not orthonormal within 1e-4");
    }
    if (err > 1e-9) r = nearest_rotation(r);
    try {
      poses.emplace_back(r, std::array<double, 3>{m[3], m[7], m[11]});
    } catch (const InvalidPoseError& e) {
      throw InvalidPoseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return poses;
}

void write_poses(const std::filesystem::path& path, const std::vector<Pose>& poses) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (const Pose& p : poses) {
    const auto m = p.to_row_major_3x4();
    for (std::size_t i = 0; i < m.size(); ++i) {
      out << m[i] << (i + 1 == m.size() ? "" : " ");
    }
    out << "\n";
  }
}

std::vector<Pose> apply_calibration(std::vector<Pose> poses, const Pose& calibration) {
  const Pose inv = inverse(calibration);
  for (Pose& p : poses) p = compose(inv, compose(p, calibration));
  return poses;
}

void write_features(const std::filesystem::path& path, const Mat& rows,
                    const std::string& name) {
  std::ofstream out = open_out(path);
  const nlohmann::json header{
      {"dtype", "f32le"}, {"name", name}, {"rows", rows.rows}, {"width", rows.cols}};
  out << header.dump() << "\n";
  write_f32(out, rows.data.data(), rows.data.size());
}

FeatureDump read_features(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const nlohmann::json header = read_header_line(in, path.string());
  FeatureDump dump;
  try {
    dump.name = header.at("name").get<std::string>();
    if (header.at("dtype").get<std::string>() != "f32le") {
      throw FormatError(path.string() + ": unsupported dtype");
    }
    dump.values = Mat(header.at("rows").get<std::size_t>(),
                      header.at("width").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header fields: " + e.what());
  }
  read_f32(in, dump.values.data.data(), dump.values.data.size(), path.string());
  expect_eof(in, path.string());
  return dump;
}

void save_weights(const std::filesystem::path& path, const WeightBundle& w) {
  std::ofstream out = open_out(path);
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& [name, l] : w.layers) {
    layers.push_back({{"name", name}, {"kind", "linear"}, {"rows", l.out_dim()}, {"cols", l.in_dim()}});
  }
  layers.push_back({{"name", "norm"}, {"kind", "norm"}, {"width", w.norm.width()}});
  const nlohmann::json header{{"version", 1},
                              {"seed", w.seed},
                              {"feature_dim", w.feature_dim},
                              {"key_dim", w.key_dim},
                              {"channel_dim", w.channel_dim},
                              {"layers", layers}};
  out << header.dump() << "\n";
  for (const auto& [name, l] : w.layers) {
    write_f32(out, l.w.data.data(), l.w.data.size());
    write_f32(out, l.b.data(), l.b.size());
  }
  write_f32(out, w.norm.mean.data(), w.norm.mean.size());
  write_f32(out, w.norm.var.data(), w.norm.var.size());
  write_f32(out, w.norm.gain.data(), w.norm.gain.size());
  write_f32(out, w.norm.bias.data(), w.norm.bias.size());
}

WeightBundle load_weights(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const nlohmann::json header = read_header_line(in, path.string());
  WeightBundle w;
  try {
    w.seed = header.at("seed").get<std::uint64_t>();
    w.feature_dim = header.at("feature_dim").get<int>();
    w.key_dim = header.at("key_dim").get<int>();
    w.channel_dim = header.at("channel_dim").get<int>();
    for (const auto& jl : header.at("layers")) {
      const std::string kind = jl.at("kind").get<std::string>();
      if (kind == "linear") {
        LinearLayer l;
        l.w = Mat(jl.at("rows").get<std::size_t>(), jl.at("cols").get<std::size_t>());
        l.b.resize(l.w.rows);
        read_f32(in, l.w.data.data(), l.w.data.size(), path.string());
        read_f32(in, l.b.data(), l.b.size(), path.string());
        w.layers.emplace_back(jl.at("name").get<std::string>(), std::move(l));
      } else if (kind == "norm") {
        const std::size_t width = jl.at("width").get<std::size_t>();
        w.norm.mean.resize(width);
        w.norm.var.resize(width);
        w.norm.gain.resize(width);
        w.norm.bias.resize(width);
        read_f32(in, w.norm.mean.data(), width, path.string());
        read_f32(in, w.norm.var.data(), width, path.string());
        read_f32(in, w.norm.gain.data(), width, path.string());
        read_f32(in, w.norm.bias.data(), width, path.string());
      } else {
        throw FormatError(path.string() + ": unknown layer kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header fields: " + e.what());
  }
  expect_eof(in, path.string());
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const TfiBuffer& buffer) {
  std::ofstream out = open_out(path);
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : buffer.frames()) {
    frames.push_back({{"frame_id", f.frame_id},
                      {"time", f.time},
                      {"pose", f.pose.to_row_major_3x4()},
                      {"points", f.points.size()}});
  }
  const nlohmann::json header{{"version", 1},
                              {"n", buffer.capacity()},
                              {"d", buffer.feature_dim()},
                              {"frames", frames}};
  out << header.dump() << "\n";

  const std::size_t d = static_cast<std::size_t>(buffer.feature_dim());
  for (const auto& f : buffer.frames()) {
    std::vector<double> row(5 + d);
    for (std::size_t p = 0; p < f.points.size(); ++p) {
      const Point& pt = f.points.points[p];
      row[0] = pt.x;
      row[1] = pt.y;
      row[2] = pt.z;
      row[3] = pt.intensity;
      row[4] = pt.timestamp;
      if (d != 0) std::memcpy(row.data() + 5, f.points.inherited.row(p), d * sizeof(double));
      write_f32(out, row.data(), row.size());
    }
  }
}

TfiBuffer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const nlohmann::json header = read_header_line(in, path.string());
  try {
    const std::size_t n = header.at("n").get<std::size_t>();
    const int d = header.at("d").get<int>();
    TfiBuffer buffer(n, d);
    const std::size_t width = 5 + static_cast<std::size_t>(d);
    for (const auto& jf : header.at("frames")) {
      FrameRecord rec;
      rec.frame_id = jf.at("frame_id").get<int>();
      rec.time = jf.at("time").get<double>();
      const auto m = jf.at("pose").get<std::array<double, 12>>();
      rec.pose = Pose::from_row_major_3x4(m);
      const std::size_t count = jf.at("points").get<std::size_t>();
      rec.points.points.resize(count);
      rec.points.inherited = Mat(count, static_cast<std::size_t>(d));
      std::vector<double> row(width);
      for (std::size_t p = 0; p < count; ++p) {
        read_f32(in, row.data(), width, path.string());
        rec.points.points[p] = Point{row[0], row[1], row[2], row[3], row[4]};
        if (d != 0) {
          std::memcpy(rec.points.inherited.row(p), row.data() + 5,
                      static_cast<std::size_t>(d) * sizeof(double));
        }
      }
      buffer.update(std::move(rec));
    }
    expect_eof(in, path.string());
    return buffer;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header fields: " + e.what());
  }
}

}  // namespace stvq::io
