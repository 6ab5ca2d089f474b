#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftgeo/data.hpp"
#include "liftgeo/geometry.hpp"

namespace liftgeo {

class ConfigInvalid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Segment lengths of the single synthetic body, in head-to-root units. Left and right limbs
/// share one length each.
struct BoneTemplate {
  double spine = 0.75;       // root -> neck
  double neck_head = 0.25;   // neck -> head
  double shoulder_half = 0.19;
  double hip_half = 0.12;
  double upper_arm = 0.31;
  double lower_arm = 0.28;
  double upper_leg = 0.45;
  double lower_leg = 0.45;
};

/// Joint-angle limits in radians. Flexion angles bend limbs forward (arms, hips) or backward
/// (knees); abduction moves a limb away from the body midline.
struct JointAngleRanges {
  AngleRange torso_pitch{-0.17, 0.52};
  AngleRange torso_roll{-0.26, 0.26};
  AngleRange torso_twist{-0.52, 0.52};
  AngleRange head_pitch{-0.35, 0.52};
  AngleRange head_roll{-0.26, 0.26};
  AngleRange shoulder_flex{-0.7, 2.6};
  AngleRange shoulder_abduct{0.0, 1.57};
  AngleRange shoulder_twist{-1.0, 1.0};
  AngleRange elbow_flex{0.0, 2.4};
  AngleRange hip_flex{-0.5, 1.7};
  AngleRange hip_abduct{-0.15, 0.7};
  AngleRange hip_twist{-0.5, 0.5};
  AngleRange knee_flex{0.0, 2.2};

  /// Every range collapsed to zero: the rest pose.
  static JointAngleRanges rest();
};

struct SyntheticSkeletonConfig {
  BoneTemplate bones;
  JointAngleRanges angles;
  std::size_t count = 100000;
  double c = 10.0;
  std::uint64_t seed = 1;
  /// Global camera orientation of each sample (azimuth about the vertical, elevation).
  RotationRanges view{{-kPi, kPi}, {-kPi / 18.0, kPi / 18.0}};
  /// Symmetric multiplicative jitter applied to the bone template per sample (or per sequence).
  double length_jitter = 0.0;
  /// Pose prior. With archetypes == 0 every angle is drawn independently and uniformly from its
  /// range. Otherwise that many archetype poses are drawn once per dataset and each pose is a
  /// random archetype plus Gaussian noise of std archetype_spread * (range width), clamped to
  /// the range. Correlated angles make lifting far less ambiguous, as with real motion.
  std::size_t archetypes = 0;
  double archetype_spread = 0.1;
  /// Seeds the archetypes; datasets sharing it share one population even with different seeds.
  std::uint64_t prior_seed = 0;
  /// Sequence mode: samples are grouped into smoothly animated sequences.
  bool sequences = false;
  std::size_t sequence_length = 50;
  std::size_t keyframe_interval = 10;

  void validate() const;
};

struct SyntheticSample {
  std::string seq_id;
  long frame_idx = 0;
  Pose3D ground_truth;     // camera frame, root near (0, 0, c); its projection is normalized
  Pose2D projected;        // normalized 2D
  RigidTransform camera;   // body frame -> camera frame
};

struct SyntheticDataset {
  std::vector<SyntheticSample> samples;

  std::vector<PoseRecord> records2d() const;
  std::vector<Pose3DRecord> records3d() const;
  std::vector<Pose2D> poses2d() const;
  std::vector<Pose3D> poses3d() const;
};

/// Flat list of joint angles for one body configuration.
struct BodyAngles {
  double torso_pitch = 0, torso_roll = 0, torso_twist = 0, head_pitch = 0, head_roll = 0;
  double shoulder_flex[2] = {0, 0}, shoulder_abduct[2] = {0, 0}, shoulder_twist[2] = {0, 0};
  double elbow_flex[2] = {0, 0};
  double hip_flex[2] = {0, 0}, hip_abduct[2] = {0, 0}, hip_twist[2] = {0, 0};
  double knee_flex[2] = {0, 0};
};

/// Body-frame skeleton: root at the origin, +y up, +z forward, +x toward the body's left.
Pose3D forward_kinematics(const BoneTemplate& bones, const BodyAngles& angles);

SyntheticDataset synth_generate(const SyntheticSkeletonConfig& cfg);

/// Depth offsets that make lift_with_depths(sample.projected, d, c) a similarity copy of the
/// ground truth.
DepthOffsets oracle_depths(const SyntheticSample& sample, double c);

}  // namespace liftgeo
