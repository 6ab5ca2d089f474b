#include "liftgeo/geometry.hpp"

#include <cmath>

namespace liftgeo {

const JointSchema& default_schema() {
  static const JointSchema schema{
      {"head", "neck", "r_shoulder", "l_shoulder", "r_elbow", "l_elbow", "r_wrist", "l_wrist",
       "r_hip", "l_hip", "r_knee", "l_knee", "r_ankle", "l_ankle"},
      joint::kHead,
      joint::kLeftHip,
      joint::kRightHip,
      {{
          {"arm_left", joint::kLeftShoulder, joint::kLeftElbow, joint::kLeftElbow, joint::kLeftWrist},
          {"arm_right", joint::kRightShoulder, joint::kRightElbow, joint::kRightElbow,
           joint::kRightWrist},
          {"leg_left", joint::kLeftHip, joint::kLeftKnee, joint::kLeftKnee, joint::kLeftAnkle},
          {"leg_right", joint::kRightHip, joint::kRightKnee, joint::kRightKnee, joint::kRightAnkle},
      }},
  };
  return schema;
}

Eigen::Vector2d root_of(const Pose2D& pose, const JointSchema& schema) {
  return 0.5 * (pose.joints.row(schema.left_hip) + pose.joints.row(schema.right_hip)).transpose();
}

Eigen::Vector3d root_of(const Pose3D& pose, const JointSchema& schema) {
  return 0.5 * (pose.joints.row(schema.left_hip) + pose.joints.row(schema.right_hip)).transpose();
}

NormalizedPose normalize_pose2d(const Pose2D& raw, const JointSchema& schema, double c) {
  const Eigen::Vector2d root = root_of(raw, schema);
  const Eigen::Vector2d head = raw.joints.row(schema.head).transpose();
  if (!root.allFinite() || !head.allFinite()) {
    throw DegeneratePose("head or hip joints are not finite");
  }
  const double dist = (head - root).norm();
  if (dist < 1e-9) {
    throw DegeneratePose("head coincides with root");
  }
  NormalizedPose out;
  out.root = root;
  out.scale = 1.0 / (c * dist);
  out.pose.joints = (raw.joints.rowwise() - root.transpose()) * out.scale;
  return out;
}

Pose3D lift_with_depths(const Pose2D& pose, const DepthOffsets& depths, double c) {
  Pose3D out;
  for (int i = 0; i < kNumJoints; ++i) {
    const double z = std::max(1.0, c + depths.d(i));
    out.joints(i, 0) = pose.joints(i, 0) * z;
    out.joints(i, 1) = pose.joints(i, 1) * z;
    out.joints(i, 2) = z;
  }
  return out;
}

Pose2D project(const Pose3D& pose) {
  Pose2D out;
  for (int i = 0; i < kNumJoints; ++i) {
    out.joints(i, 0) = pose.joints(i, 0) / pose.joints(i, 2);
    out.joints(i, 1) = pose.joints(i, 1) / pose.joints(i, 2);
  }
  return out;
}

Eigen::Matrix3d azimuth_rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix3d r;
  r << c, 0, s,
       0, 1, 0,
      -s, 0, c;
  return r;
}

Eigen::Matrix3d elevation_rotation(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

RigidTransform make_rigid(double azimuth, double elevation, const Eigen::Vector3d& root, double c) {
  RigidTransform q;
  q.R = elevation_rotation(elevation) * azimuth_rotation(azimuth);
  q.root = root;
  q.T = Eigen::Vector3d(0.0, 0.0, c);
  return q;
}

RigidTransform sample_rotation(std::mt19937_64& rng, const RotationRanges& ranges,
                               const Eigen::Vector3d& root, double c) {
  // Two draws per sample regardless of range widths.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double v = unit(rng);
  const double theta = ranges.azimuth.lo + u * (ranges.azimuth.hi - ranges.azimuth.lo);
  const double phi = ranges.elevation.lo + v * (ranges.elevation.hi - ranges.elevation.lo);
  return make_rigid(theta, phi, root, c);
}

Pose3D apply_rigid_unchecked(const Pose3D& pose, const RigidTransform& q) {
  Pose3D out;
  out.joints = ((pose.joints.rowwise() - q.root.transpose()) * q.R.transpose()).rowwise() +
               q.T.transpose();
  return out;
}

Pose3D apply_rigid(const Pose3D& pose, const RigidTransform& q) {
  Pose3D out = apply_rigid_unchecked(pose, q);
  if ((out.joints.col(2).array() < 1.0).any()) {
    throw BehindCameraPlane("rigid transform moved a joint in front of the clamp plane");
  }
  return out;
}

Pose3D invert_rigid(const Pose3D& pose, const RigidTransform& q) {
  Pose3D out;
  out.joints = ((pose.joints.rowwise() - q.T.transpose()) * q.R).rowwise() + q.root.transpose();
  return out;
}

bool sample_valid_rotation(std::mt19937_64& rng, const RotationRanges& ranges, const Pose3D& pose,
                           double c, RigidTransform& out, int max_tries) {
  const Eigen::Vector3d root = root_of(pose);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    RigidTransform q = sample_rotation(rng, ranges, root, c);
    const Pose3D moved = apply_rigid_unchecked(pose, q);
    if ((moved.joints.col(2).array() >= 1.0).all()) {
      out = q;
      return true;
    }
  }
  return false;
}

}  // namespace liftgeo
