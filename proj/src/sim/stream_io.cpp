#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aftvo/io.hpp"

namespace aftvo::io {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

std::string format_stamp_seconds(Timestamp t) {
  const char* sign = t < 0 ? "-" : "";
  const auto mag = static_cast<unsigned long long>(t < 0 ? -t : t);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%06llu", sign, mag / 1000000ULL, mag % 1000000ULL);
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_stream(std::ostream& out, const sim::MeasurementStream& stream) {
  out << "# aftvo-stream v" << kStreamFormatVersion << " origin_us=" << stream.origin
      << " columns=source_id,timestamp_us,tx,ty,tz,ex,ey,ez,noise_scale\n";
  for (const auto& e : stream.entries) {
    out << stream.source_id << ' ' << e.timestamp;
    for (int d = 0; d < 6; ++d) out << ' ' << format_double(e.observation[d]);
    out << ' ' << format_double(e.noise_scale) << '\n';
  }
}

sim::MeasurementStream read_stream(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty stream file");
  std::istringstream hs(header);
  std::string hash, magic, version, origin_field;
  hs >> hash >> magic >> version >> origin_field;
  if (hash != "#" || magic != "aftvo-stream") throw FormatError("missing aftvo-stream header");
  if (version != "v" + std::to_string(kStreamFormatVersion))
    throw FormatError("unsupported stream format version " + version);
  if (origin_field.rfind("origin_us=", 0) != 0) throw FormatError("header lacks origin_us");

  sim::MeasurementStream stream;
  stream.origin = std::stoll(origin_field.substr(10));
  std::string line;
  bool first = true;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int source = 0;
    sim::Measurement m{};
    ls >> source >> m.timestamp;
    for (int d = 0; d < 6; ++d) ls >> m.observation[d];
    ls >> m.noise_scale;
    if (!ls) throw FormatError("malformed stream line " + std::to_string(line_no));
    if (first) stream.source_id = source;
    else if (source != stream.source_id) throw FormatError("mixed source ids in one stream");
    const Timestamp prev = stream.entries.empty() ? stream.origin : stream.entries.back().timestamp;
    if (m.timestamp <= prev) throw FormatError("stream timestamps not strictly increasing");
    stream.entries.push_back(m);
    first = false;
  }
  return stream;
}

void write_tum(std::ostream& out, const Trajectory& trajectory) {
  for (const auto& [stamp, pose] : trajectory) {
    const auto& t = pose.translation;
    const auto& q = pose.rotation;
    out << format_stamp_seconds(stamp) << ' ' << format_double(t.x()) << ' ' << format_double(t.y()) << ' '
        << format_double(t.z()) << ' ' << format_double(q.x()) << ' ' << format_double(q.y()) << ' '
        << format_double(q.z()) << ' ' << format_double(q.w()) << '\n';
  }
}

Trajectory read_tum(std::istream& in) {
  Trajectory trajectory;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string stamp_text;
    double tx, ty, tz, qx, qy, qz, qw;
    ls >> stamp_text >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
    if (!ls) throw FormatError("malformed TUM line: " + line);
    Pose p{{tx, ty, tz}, Eigen::Quaterniond(qw, qx, qy, qz)};
    trajectory.push_back(from_seconds(std::stod(stamp_text)), p);
  }
  return trajectory;
}

void write_stream_file(const std::filesystem::path& path, const sim::MeasurementStream& stream) {
  auto out = open_out(path);
  write_stream(out, stream);
  if (!out) throw IoError("failed writing " + path.string());
}

sim::MeasurementStream read_stream_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_stream(in);
}

void write_tum_file(const std::filesystem::path& path, const Trajectory& trajectory) {
  auto out = open_out(path);
  write_tum(out, trajectory);
  if (!out) throw IoError("failed writing " + path.string());
}

Trajectory read_tum_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tum(in);
}

void save_episode(const std::filesystem::path& dir, const sim::Episode& episode) {
  for (const auto& s : episode.streams)
    write_stream_file(dir / ("stream_" + std::to_string(s.source_id) + ".txt"), s);
  write_tum_file(dir / "groundtruth.tum", episode.ground_truth);
  write_tum_file(dir / "reference.tum", episode.ground_truth.select(episode.reference_stamps));
}

sim::Episode load_episode(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("no episode directory " + dir.string());
  sim::Episode ep;
  std::vector<std::filesystem::path> stream_files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("stream_", 0) == 0 && entry.path().extension() == ".txt") stream_files.push_back(entry.path());
  }
  for (const auto& f : stream_files) ep.streams.push_back(read_stream_file(f));
  std::sort(ep.streams.begin(), ep.streams.end(),
            [](const auto& a, const auto& b) { return a.source_id < b.source_id; });
  ep.ground_truth = read_tum_file(dir / "groundtruth.tum");
  for (const auto& p : read_tum_file(dir / "reference.tum")) ep.reference_stamps.push_back(p.stamp);
  return ep;
}

}  // namespace aftvo::io
