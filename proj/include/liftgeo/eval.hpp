#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftgeo/geometry.hpp"

namespace liftgeo {

class DegenerateTarget : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptySet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ZeroLimb : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Millimetres per head-to-root unit used when reporting synthetic results.
inline constexpr double kSyntheticUnitMm = 500.0;

struct AlignmentResult {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Pose3D aligned;
  std::array<double, kNumJoints> residual{};
};

/// Similarity (s, R, t) minimizing sum ||s R pred_i + t - gt_i||^2, det(R) = +1.
AlignmentResult procrustes_align(const Pose3D& pred, const Pose3D& gt);

/// Mean joint distance times unit_scale. Expects an already aligned prediction.
double mpjpe(const Pose3D& aligned, const Pose3D& gt, double unit_scale);

/// Aligned MPJPE averaged over a set of poses.
double aligned_mpjpe(std::span<const Pose3D> preds, std::span<const Pose3D> gts, double unit_scale);

/// Per-joint aligned errors (mm) over a set, in pose-major order.
std::vector<double> aligned_joint_errors(std::span<const Pose3D> preds,
                                         std::span<const Pose3D> gts, double unit_scale);

struct AucRange {
  double lo_mm = 0.0;
  double hi_mm = 150.0;
  int steps = 31;
};

struct PckAuc {
  double pck = 0.0;  // percent
  double auc = 0.0;  // percent
};

/// A joint counts as correct when its error is <= the threshold.
PckAuc pck_auc(std::span<const double> joint_errors_mm, double threshold_mm = 150.0,
               AucRange range = {});

struct RatioSeries {
  std::string limb;
  std::vector<double> ratios;
  std::vector<long> counts;
  double mean = 0.0;
  double variance = 0.0;
};

struct RatioHistogram {
  std::vector<double> bin_edges;
  std::array<RatioSeries, 4> series;

  const RatioSeries& limb(const std::string& name) const;
};

/// Upper/lower segment length ratios for both arms and legs. Ratios outside the bin range are
/// counted in the first or last bin.
RatioHistogram limb_ratio_histogram(std::span<const Pose3D> poses, const JointSchema& schema,
                                    double lo = 0.0, double hi = 3.0, int bins = 60);

/// CSV `limb,bin_left,bin_right,count`.
std::string format_ratio_histogram(const RatioHistogram& h);

}  // namespace liftgeo
