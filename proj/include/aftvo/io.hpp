#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "aftvo/pose.hpp"
#include "aftvo/sim.hpp"

namespace aftvo::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kStreamFormatVersion = 1;

// Stream text: one header line
//   # aftvo-stream v1 origin_us=<t0> columns=source_id,timestamp_us,tx,ty,tz,ex,ey,ez,noise_scale
// then one measurement per line, Euler angles zyx in radians.
void write_stream(std::ostream& out, const sim::MeasurementStream& stream);
sim::MeasurementStream read_stream(std::istream& in);

// TUM trajectory: `timestamp_s tx ty tz qx qy qz qw` per line; stamps are
// written with microsecond resolution and read back exactly.
void write_tum(std::ostream& out, const Trajectory& trajectory);
Trajectory read_tum(std::istream& in);

void write_stream_file(const std::filesystem::path& path, const sim::MeasurementStream& stream);
sim::MeasurementStream read_stream_file(const std::filesystem::path& path);
void write_tum_file(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_tum_file(const std::filesystem::path& path);

/// Episode directory: stream_<k>.txt, groundtruth.tum (every stamp),
/// reference.tum (query stamps only).
void save_episode(const std::filesystem::path& dir, const sim::Episode& episode);
sim::Episode load_episode(const std::filesystem::path& dir);

std::string format_double(double v);

}  // namespace aftvo::io
