#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftgeo/geometry.hpp"

namespace liftgeo {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class JointCountError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PoseRecord {
  std::string seq_id;
  long frame_idx = 0;
  Pose2D joints;
  std::array<double, kNumJoints> confidence;
  bool has_confidence = false;

  PoseRecord() { confidence.fill(1.0); }
};

struct Pose3DRecord {
  std::string seq_id;
  long frame_idx = 0;
  Pose3D joints;
};

/// Pose CSV: `seq_id,frame_idx,j0x,j0y,...,j13x,j13y[,c0,...,c13]`.
std::vector<PoseRecord> load_poses(const std::filesystem::path& path);
std::vector<PoseRecord> parse_poses(const std::string& text);
void save_poses(const std::filesystem::path& path, const std::vector<PoseRecord>& records);
std::string format_poses(const std::vector<PoseRecord>& records);

/// Ground-truth CSV: `seq_id,frame_idx,j0x,j0y,j0z,...`.
std::vector<Pose3DRecord> load_poses3d(const std::filesystem::path& path);
std::vector<Pose3DRecord> parse_poses3d(const std::string& text);
void save_poses3d(const std::filesystem::path& path, const std::vector<Pose3DRecord>& records);
std::string format_poses3d(const std::vector<Pose3DRecord>& records);

/// Keeps records whose 14 confidences are all >= threshold.
std::vector<PoseRecord> filter_complete(const std::vector<PoseRecord>& records, double threshold);

struct TemporalItem {
  std::size_t anchor = 0;            // index of frame t
  std::vector<std::size_t> next;     // indices of frames t+1 .. t+M
};

/// Windows of M+1 consecutive frames within one sequence. Records may arrive in any order.
std::vector<TemporalItem> make_temporal_pairs(const std::vector<PoseRecord>& records, int m);

/// Normalizes every record; throws DegeneratePose naming the offending row.
std::vector<Pose2D> normalized_poses(const std::vector<PoseRecord>& records, double c);

/// Shortest round-trip decimal text for a double.
std::string format_number(double v);

}  // namespace liftgeo
