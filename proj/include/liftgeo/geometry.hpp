#pragma once

#include <array>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

namespace liftgeo {

inline constexpr int kNumJoints = 14;
inline constexpr double kPi = 3.14159265358979323846;

/// Fixed 14-joint layout shared by every pose in the library.
namespace joint {
inline constexpr int kHead = 0;
inline constexpr int kNeck = 1;
inline constexpr int kRightShoulder = 2;
inline constexpr int kLeftShoulder = 3;
inline constexpr int kRightElbow = 4;
inline constexpr int kLeftElbow = 5;
inline constexpr int kRightWrist = 6;
inline constexpr int kLeftWrist = 7;
inline constexpr int kRightHip = 8;
inline constexpr int kLeftHip = 9;
inline constexpr int kRightKnee = 10;
inline constexpr int kLeftKnee = 11;
inline constexpr int kRightAnkle = 12;
inline constexpr int kLeftAnkle = 13;
}  // namespace joint

struct LimbPair {
  std::string_view name;
  int upper_from, upper_to;
  int lower_from, lower_to;
};

struct JointSchema {
  std::array<std::string_view, kNumJoints> names;
  int head, left_hip, right_hip;
  /// Upper/lower segments of both arms and legs, used by the limb-ratio analysis.
  std::array<LimbPair, 4> limbs;
};

const JointSchema& default_schema();

using Joints2 = Eigen::Matrix<double, kNumJoints, 2, Eigen::RowMajor>;
using Joints3 = Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>;
using DepthVector = Eigen::Matrix<double, kNumJoints, 1>;

struct Pose2D {
  Joints2 joints = Joints2::Zero();
};

struct Pose3D {
  Joints3 joints = Joints3::Zero();
};

struct DepthOffsets {
  DepthVector d = DepthVector::Zero();
};

struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d root = Eigen::Vector3d::Zero();
  Eigen::Vector3d T = Eigen::Vector3d::Zero();
};

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct RotationRanges {
  AngleRange azimuth{-kPi, kPi};
  AngleRange elevation{-kPi / 9.0, kPi / 9.0};
};

struct NormalizedPose {
  Pose2D pose;
  double scale = 1.0;
  Eigen::Vector2d root = Eigen::Vector2d::Zero();
};

class DegeneratePose : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BehindCameraPlane : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Midpoint of the two hip joints.
Eigen::Vector2d root_of(const Pose2D& pose, const JointSchema& schema = default_schema());
Eigen::Vector3d root_of(const Pose3D& pose, const JointSchema& schema = default_schema());

/// Root-centres the pose and rescales it so the head sits at distance 1/c from the root.
NormalizedPose normalize_pose2d(const Pose2D& raw, const JointSchema& schema, double c);

/// z_i = max(1, c + d_i), X_i = (x_i z_i, y_i z_i, z_i).
Pose3D lift_with_depths(const Pose2D& pose, const DepthOffsets& depths, double c);

/// Unit-focal perspective projection. Not re-normalized.
Pose2D project(const Pose3D& pose);

Eigen::Matrix3d azimuth_rotation(double theta);
Eigen::Matrix3d elevation_rotation(double phi);

/// R = R_elev(phi) * R_azim(theta), T = [0, 0, c].
RigidTransform make_rigid(double azimuth, double elevation, const Eigen::Vector3d& root, double c);

RigidTransform sample_rotation(std::mt19937_64& rng, const RotationRanges& ranges,
                               const Eigen::Vector3d& root, double c);

/// Y_i = R (X_i - X_r) + T. Throws BehindCameraPlane when any output depth falls below 1.
Pose3D apply_rigid(const Pose3D& pose, const RigidTransform& q);

/// Same as apply_rigid without the depth check.
Pose3D apply_rigid_unchecked(const Pose3D& pose, const RigidTransform& q);

/// X_i = R^T (Y_i - T) + X_r.
Pose3D invert_rigid(const Pose3D& pose, const RigidTransform& q);

/// Samples rotations until the transformed pose clears the clamp plane. Returns false after
/// `max_tries` failures.
bool sample_valid_rotation(std::mt19937_64& rng, const RotationRanges& ranges, const Pose3D& pose,
                           double c, RigidTransform& out, int max_tries = 8);

}  // namespace liftgeo
