#include "liftgeo/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace liftgeo {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, "not a number: '" + std::string(field) + "'");
  }
  return v;
}

long parse_frame(std::string_view field, std::size_t line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || v < 0) {
    throw ParseError(line, "bad frame index: '" + std::string(field) + "'");
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

/// Calls fn(line_number, fields) for each data row after validating the header prefix.
template <typename Fn>
void for_each_row(const std::string& text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.rfind("seq_id,frame_idx", 0) != 0) {
        throw ParseError(line_no, "expected header starting with seq_id,frame_idx");
      }
      header_seen = true;
      continue;
    }
    fn(line_no, split(line));
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<PoseRecord> parse_poses(const std::string& text) {
  std::vector<PoseRecord> out;
  for_each_row(text, [&](std::size_t line, const std::vector<std::string_view>& f) {
    const std::size_t values = f.size() - 2;
    if (f.size() < 2 || (values != 2 * kNumJoints && values != 3 * kNumJoints)) {
      throw JointCountError(line, "expected " + std::to_string(2 * kNumJoints) + " coordinates (+" +
                                      std::to_string(kNumJoints) + " optional confidences), got " +
                                      std::to_string(f.size() < 2 ? 0 : values) + " values");
    }
    PoseRecord r;
    r.seq_id = std::string(f[0]);
    r.frame_idx = parse_frame(f[1], line);
    for (int j = 0; j < kNumJoints; ++j) {
      r.joints.joints(j, 0) = parse_double(f[2 + 2 * j], line);
      r.joints.joints(j, 1) = parse_double(f[3 + 2 * j], line);
    }
    if (values == 3 * kNumJoints) {
      r.has_confidence = true;
      for (int j = 0; j < kNumJoints; ++j) r.confidence[j] = parse_double(f[2 + 2 * kNumJoints + j], line);
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<PoseRecord> load_poses(const std::filesystem::path& path) {
  return parse_poses(read_file(path));
}

std::string format_poses(const std::vector<PoseRecord>& records) {
  const bool with_conf = std::any_of(records.begin(), records.end(),
                                     [](const PoseRecord& r) { return r.has_confidence; });
  std::string out = "seq_id,frame_idx";
  for (int j = 0; j < kNumJoints; ++j) {
    out += ",j" + std::to_string(j) + "x,j" + std::to_string(j) + "y";
  }
  if (with_conf) {
    for (int j = 0; j < kNumJoints; ++j) out += ",c" + std::to_string(j);
  }
  out += '\n';
  for (const PoseRecord& r : records) {
    out += r.seq_id;
    out += ',';
    out += std::to_string(r.frame_idx);
    for (int j = 0; j < kNumJoints; ++j) {
      out += ',' + format_number(r.joints.joints(j, 0));
      out += ',' + format_number(r.joints.joints(j, 1));
    }
    if (with_conf) {
      for (int j = 0; j < kNumJoints; ++j) out += ',' + format_number(r.confidence[j]);
    }
    out += '\n';
  }
  return out;
}

void save_poses(const std::filesystem::path& path, const std::vector<PoseRecord>& records) {
  write_file(path, format_poses(records));
}

std::vector<Pose3DRecord> parse_poses3d(const std::string& text) {
  std::vector<Pose3DRecord> out;
  for_each_row(text, [&](std::size_t line, const std::vector<std::string_view>& f) {
    if (f.size() != 2 + 3 * kNumJoints) {
      throw JointCountError(line, "expected " + std::to_string(3 * kNumJoints) +
                                      " coordinates, got " + std::to_string(f.size() - 2));
    }
    Pose3DRecord r;
    r.seq_id = std::string(f[0]);
    r.frame_idx = parse_frame(f[1], line);
    for (int j = 0; j < kNumJoints; ++j) {
      for (int k = 0; k < 3; ++k) r.joints.joints(j, k) = parse_double(f[2 + 3 * j + k], line);
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<Pose3DRecord> load_poses3d(const std::filesystem::path& path) {
  return parse_poses3d(read_file(path));
}

std::string format_poses3d(const std::vector<Pose3DRecord>& records) {
  std::string out = "seq_id,frame_idx";
  for (int j = 0; j < kNumJoints; ++j) {
    const std::string p = ",j" + std::to_string(j);
    out += p + "x" + p + "y" + p + "z";
  }
  out += '\n';
  for (const Pose3DRecord& r : records) {
    out += r.seq_id;
    out += ',';
    out += std::to_string(r.frame_idx);
    for (int j = 0; j < kNumJoints; ++j) {
      for (int k = 0; k < 3; ++k) out += ',' + format_number(r.joints.joints(j, k));
    }
    out += '\n';
  }
  return out;
}

void save_poses3d(const std::filesystem::path& path, const std::vector<Pose3DRecord>& records) {
  write_file(path, format_poses3d(records));
}

std::vector<PoseRecord> filter_complete(const std::vector<PoseRecord>& records, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("confidence threshold must lie in [0, 1]");
  }
  std::vector<PoseRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), [&](const PoseRecord& r) {
    return std::all_of(r.confidence.begin(), r.confidence.end(),
                       [&](double c) { return c >= threshold; });
  });
  return out;
}

std::vector<TemporalItem> make_temporal_pairs(const std::vector<PoseRecord>& records, int m) {
  if (m < 1) throw std::invalid_argument("M must be at least 1");
  std::map<std::string, std::vector<std::pair<long, std::size_t>>> by_seq;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_seq[records[i].seq_id].emplace_back(records[i].frame_idx, i);
  }
  std::vector<TemporalItem> out;
  for (auto& [seq, frames] : by_seq) {
    std::stable_sort(frames.begin(), frames.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k + m < frames.size(); ++k) {
      bool consecutive = true;
      for (int s = 1; s <= m && consecutive; ++s) {
        consecutive = frames[k + s].first == frames[k].first + s;
      }
      if (!consecutive) continue;
      TemporalItem item;
      item.anchor = frames[k].second;
      for (int s = 1; s <= m; ++s) item.next.push_back(frames[k + s].second);
      out.push_back(std::move(item));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const TemporalItem& a, const TemporalItem& b) { return a.anchor < b.anchor; });
  return out;
}

std::vector<Pose2D> normalized_poses(const std::vector<PoseRecord>& records, double c) {
  std::vector<Pose2D> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(normalize_pose2d(records[i].joints, default_schema(), c).pose);
    } catch (const DegeneratePose& e) {
      throw DegeneratePose("record " + std::to_string(i) + " (" + records[i].seq_id + ":" +
                           std::to_string(records[i].frame_idx) + "): " + e.what());
    }
  }
  return out;
}

}  // namespace liftgeo
