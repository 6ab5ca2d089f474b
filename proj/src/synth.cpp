#include "liftgeo/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace liftgeo {

namespace {

constexpr std::size_t kAngleCount = 21;
static_assert(sizeof(BodyAngles) == kAngleCount * sizeof(double));

std::array<double, kAngleCount> to_array(const BodyAngles& a) {
  std::array<double, kAngleCount> out;
  std::memcpy(out.data(), &a, sizeof(a));
  return out;
}

BodyAngles from_array(const std::array<double, kAngleCount>& v) {
  BodyAngles a;
  std::memcpy(&a, v.data(), sizeof(a));
  return a;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t counter) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(counter)));
}

double draw(std::mt19937_64& rng, const AngleRange& r) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return r.lo + unit(rng) * (r.hi - r.lo);
}

BodyAngles sample_angles(std::mt19937_64& rng, const JointAngleRanges& r) {
  BodyAngles a;
  a.torso_pitch = draw(rng, r.torso_pitch);
  a.torso_roll = draw(rng, r.torso_roll);
  a.torso_twist = draw(rng, r.torso_twist);
  a.head_pitch = draw(rng, r.head_pitch);
  a.head_roll = draw(rng, r.head_roll);
  for (int s = 0; s < 2; ++s) {
    a.shoulder_flex[s] = draw(rng, r.shoulder_flex);
    a.shoulder_abduct[s] = draw(rng, r.shoulder_abduct);
    a.shoulder_twist[s] = draw(rng, r.shoulder_twist);
    a.elbow_flex[s] = draw(rng, r.elbow_flex);
    a.hip_flex[s] = draw(rng, r.hip_flex);
    a.hip_abduct[s] = draw(rng, r.hip_abduct);
    a.hip_twist[s] = draw(rng, r.hip_twist);
    a.knee_flex[s] = draw(rng, r.knee_flex);
  }
  return a;
}

using AngleVector = std::array<double, kAngleCount>;

AngleVector range_lo(const JointAngleRanges& r) {
  BodyAngles a;
  a.torso_pitch = r.torso_pitch.lo;
  a.torso_roll = r.torso_roll.lo;
  a.torso_twist = r.torso_twist.lo;
  a.head_pitch = r.head_pitch.lo;
  a.head_roll = r.head_roll.lo;
  for (int s = 0; s < 2; ++s) {
    a.shoulder_flex[s] = r.shoulder_flex.lo;
    a.shoulder_abduct[s] = r.shoulder_abduct.lo;
    a.shoulder_twist[s] = r.shoulder_twist.lo;
    a.elbow_flex[s] = r.elbow_flex.lo;
    a.hip_flex[s] = r.hip_flex.lo;
    a.hip_abduct[s] = r.hip_abduct.lo;
    a.hip_twist[s] = r.hip_twist.lo;
    a.knee_flex[s] = r.knee_flex.lo;
  }
  return to_array(a);
}

AngleVector range_hi(const JointAngleRanges& r) {
  JointAngleRanges flipped = r;
  for (AngleRange* x :
       {&flipped.torso_pitch, &flipped.torso_roll, &flipped.torso_twist, &flipped.head_pitch,
        &flipped.head_roll, &flipped.shoulder_flex, &flipped.shoulder_abduct,
        &flipped.shoulder_twist, &flipped.elbow_flex, &flipped.hip_flex, &flipped.hip_abduct,
        &flipped.hip_twist, &flipped.knee_flex}) {
    x->lo = x->hi;
  }
  return range_lo(flipped);
}

// Draws body angles from the configured prior.
class PosePrior {
 public:
  explicit PosePrior(const SyntheticSkeletonConfig& cfg)
      : cfg_(cfg), lo_(range_lo(cfg.angles)), hi_(range_hi(cfg.angles)) {
    std::mt19937_64 rng = stream(cfg.prior_seed ^ 0xA5C3ULL, 0xFFFFFFFFULL);
    for (std::size_t k = 0; k < cfg.archetypes; ++k) {
      archetypes_.push_back(to_array(sample_angles(rng, cfg.angles)));
    }
  }

  BodyAngles sample(std::mt19937_64& rng) const {
    if (archetypes_.empty()) return sample_angles(rng, cfg_.angles);
    std::uniform_int_distribution<std::size_t> pick(0, archetypes_.size() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    AngleVector v = archetypes_[pick(rng)];
    for (std::size_t j = 0; j < kAngleCount; ++j) {
      v[j] = std::clamp(v[j] + cfg_.archetype_spread * (hi_[j] - lo_[j]) * noise(rng), lo_[j], hi_[j]);
    }
    return from_array(v);
  }

 private:
  const SyntheticSkeletonConfig& cfg_;
  AngleVector lo_, hi_;
  std::vector<AngleVector> archetypes_;
};

BoneTemplate jittered(const BoneTemplate& b, double jitter, std::mt19937_64& rng) {
  if (jitter <= 0.0) return b;
  std::uniform_real_distribution<double> u(1.0 - jitter, 1.0 + jitter);
  BoneTemplate out = b;
  out.spine *= u(rng);
  out.neck_head *= u(rng);
  out.shoulder_half *= u(rng);
  out.hip_half *= u(rng);
  out.upper_arm *= u(rng);
  out.lower_arm *= u(rng);
  out.upper_leg *= u(rng);
  out.lower_leg *= u(rng);
  return out;
}

Eigen::Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()).toRotationMatrix(); }
Eigen::Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitY()).toRotationMatrix(); }
Eigen::Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix(); }

// Residual of "the projection is already normalized": projected root at the origin and
// projected head-root distance 1/c.
Eigen::Vector3d normalization_residual(const Pose3D& pose, double c) {
  const Pose2D p = project(pose);
  const Eigen::Vector2d root = root_of(p);
  const double dist = (p.joints.row(joint::kHead).transpose() - root).norm();
  return {root.x(), root.y(), c * dist - 1.0};
}

// Shifts the camera-frame skeleton (root starting at (0, 0, c)) so that its plain projection
// satisfies the 2D normalization. Normalizing a projection is then a no-op, and lifting the 2D
// with the true depths reproduces the ground truth exactly rather than up to the
// principal-point shift and focal rescale that normalization would otherwise introduce.
Pose3D place_normalized(const Pose3D& pose, double c) {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  auto shifted = [&](const Eigen::Vector3d& v) {
    Pose3D out = pose;
    out.joints.rowwise() += v.transpose();
    return out;
  };
  for (int iter = 0; iter < 30; ++iter) {
    const Eigen::Vector3d f = normalization_residual(shifted(t), c);
    if (f.cwiseAbs().maxCoeff() < 1e-15) break;
    Eigen::Matrix3d J;
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-7;
      Eigen::Vector3d dt = Eigen::Vector3d::Zero();
      dt(k) = h;
      J.col(k) = (normalization_residual(shifted(t + dt), c) - normalization_residual(shifted(t - dt), c)) / (2 * h);
    }
    t -= J.partialPivLu().solve(f);
  }
  return shifted(t);
}

SyntheticSample make_sample(const SyntheticSkeletonConfig& cfg, const BoneTemplate& bones,
                            const BodyAngles& angles, double azimuth, double elevation) {
  SyntheticSample s;
  const Pose3D body = forward_kinematics(bones, angles);
  s.camera = make_rigid(azimuth, elevation, Eigen::Vector3d::Zero(), cfg.c);
  const Pose3D placed = place_normalized(apply_rigid_unchecked(body, s.camera), cfg.c);
  s.camera.T = placed.joints.row(0).transpose() - s.camera.R * body.joints.row(0).transpose();
  s.ground_truth = placed;
  s.projected = normalize_pose2d(project(s.ground_truth), default_schema(), cfg.c).pose;
  return s;
}

}  // namespace

JointAngleRanges JointAngleRanges::rest() {
  JointAngleRanges r;
  for (AngleRange* a :
       {&r.torso_pitch, &r.torso_roll, &r.torso_twist, &r.head_pitch, &r.head_roll,
        &r.shoulder_flex, &r.shoulder_abduct, &r.shoulder_twist, &r.elbow_flex, &r.hip_flex,
        &r.hip_abduct, &r.hip_twist, &r.knee_flex}) {
    *a = AngleRange{0.0, 0.0};
  }
  return r;
}

void SyntheticSkeletonConfig::validate() const {
  const BoneTemplate& b = bones;
  for (double len : {b.spine, b.neck_head, b.shoulder_half, b.hip_half, b.upper_arm, b.lower_arm,
                     b.upper_leg, b.lower_leg}) {
    if (!(len > 0.0)) throw ConfigInvalid("bone lengths must be positive");
  }
  const JointAngleRanges& r = angles;
  for (const AngleRange* a :
       {&r.torso_pitch, &r.torso_roll, &r.torso_twist, &r.head_pitch, &r.head_roll,
        &r.shoulder_flex, &r.shoulder_abduct, &r.shoulder_twist, &r.elbow_flex, &r.hip_flex,
        &r.hip_abduct, &r.hip_twist, &r.knee_flex, &view.azimuth, &view.elevation}) {
    if (!(a->lo <= a->hi) || std::abs(a->lo) > kPi || std::abs(a->hi) > kPi) {
      throw ConfigInvalid("angle ranges must satisfy -pi <= lo <= hi <= pi");
    }
  }
  if (!(c > 1.0)) throw ConfigInvalid("camera distance c must exceed 1");
  if (length_jitter < 0.0 || length_jitter >= 0.5) {
    throw ConfigInvalid("length jitter must lie in [0, 0.5)");
  }
  if (archetypes > 0 && !(archetype_spread >= 0.0)) {
    throw ConfigInvalid("archetype spread must be non-negative");
  }
  if (sequences && (sequence_length < 2 || keyframe_interval < 1)) {
    throw ConfigInvalid("sequence mode needs sequence_length >= 2 and keyframe_interval >= 1");
  }
}

Pose3D forward_kinematics(const BoneTemplate& bones, const BodyAngles& a) {
  using Eigen::Vector3d;
  Pose3D p;
  auto set = [&p](int j, const Vector3d& v) { p.joints.row(j) = v.transpose(); };

  const Eigen::Matrix3d torso = rot_y(a.torso_twist) * rot_z(a.torso_roll) * rot_x(a.torso_pitch);
  const Vector3d neck = torso * Vector3d(0, bones.spine, 0);
  const Vector3d head =
      neck + torso * rot_z(a.head_roll) * rot_x(a.head_pitch) * Vector3d(0, bones.neck_head, 0);
  set(joint::kNeck, neck);
  set(joint::kHead, head);

  // side 0 = right (-x), side 1 = left (+x)
  const int shoulder_idx[2] = {joint::kRightShoulder, joint::kLeftShoulder};
  const int elbow_idx[2] = {joint::kRightElbow, joint::kLeftElbow};
  const int wrist_idx[2] = {joint::kRightWrist, joint::kLeftWrist};
  const int hip_idx[2] = {joint::kRightHip, joint::kLeftHip};
  const int knee_idx[2] = {joint::kRightKnee, joint::kLeftKnee};
  const int ankle_idx[2] = {joint::kRightAnkle, joint::kLeftAnkle};
  for (int side = 0; side < 2; ++side) {
    const double s = side == 0 ? -1.0 : 1.0;
    const Vector3d shoulder = neck + torso * Vector3d(s * bones.shoulder_half, 0, 0);
    const Eigen::Matrix3d upper = torso * rot_z(s * a.shoulder_abduct[side]) *
                                  rot_x(-a.shoulder_flex[side]) * rot_y(s * a.shoulder_twist[side]);
    const Vector3d elbow = shoulder + upper * Vector3d(0, -bones.upper_arm, 0);
    const Vector3d wrist = elbow + upper * rot_x(-a.elbow_flex[side]) * Vector3d(0, -bones.lower_arm, 0);
    set(shoulder_idx[side], shoulder);
    set(elbow_idx[side], elbow);
    set(wrist_idx[side], wrist);

    const Vector3d hip(s * bones.hip_half, 0, 0);
    const Eigen::Matrix3d thigh =
        rot_z(s * a.hip_abduct[side]) * rot_x(-a.hip_flex[side]) * rot_y(s * a.hip_twist[side]);
    const Vector3d knee = hip + thigh * Vector3d(0, -bones.upper_leg, 0);
    const Vector3d ankle = knee + thigh * rot_x(a.knee_flex[side]) * Vector3d(0, -bones.lower_leg, 0);
    set(hip_idx[side], hip);
    set(knee_idx[side], knee);
    set(ankle_idx[side], ankle);
  }
  return p;
}

SyntheticDataset synth_generate(const SyntheticSkeletonConfig& cfg) {
  cfg.validate();
  SyntheticDataset out;
  out.samples.reserve(cfg.count);
  const PosePrior prior(cfg);
  if (!cfg.sequences) {
    for (std::size_t i = 0; i < cfg.count; ++i) {
      std::mt19937_64 rng = stream(cfg.seed, i);
      const BoneTemplate bones = jittered(cfg.bones, cfg.length_jitter, rng);
      const BodyAngles angles = prior.sample(rng);
      const double az = draw(rng, cfg.view.azimuth);
      const double el = draw(rng, cfg.view.elevation);
      SyntheticSample s = make_sample(cfg, bones, angles, az, el);
      s.seq_id = "s" + std::to_string(i);
      s.frame_idx = 0;
      out.samples.push_back(std::move(s));
    }
    return out;
  }

  const std::size_t n_seq = (cfg.count + cfg.sequence_length - 1) / cfg.sequence_length;
  for (std::size_t q = 0; q < n_seq; ++q) {
    std::mt19937_64 rng = stream(cfg.seed, q);
    const BoneTemplate bones = jittered(cfg.bones, cfg.length_jitter, rng);
    const std::size_t frames = std::min(cfg.sequence_length, cfg.count - q * cfg.sequence_length);
    const std::size_t n_keys = (frames - 1) / cfg.keyframe_interval + 2;
    std::vector<std::array<double, kAngleCount>> keys;
    for (std::size_t k = 0; k < n_keys; ++k) keys.push_back(to_array(prior.sample(rng)));
    const double az0 = draw(rng, cfg.view.azimuth);
    const double el = draw(rng, cfg.view.elevation);
    const double drift = draw(rng, AngleRange{-0.5, 0.5});
    for (std::size_t f = 0; f < frames; ++f) {
      const std::size_t k = f / cfg.keyframe_interval;
      const double t = double(f % cfg.keyframe_interval) / double(cfg.keyframe_interval);
      const double w = t * t * (3.0 - 2.0 * t);
      std::array<double, kAngleCount> v;
      for (std::size_t j = 0; j < kAngleCount; ++j) v[j] = (1.0 - w) * keys[k][j] + w * keys[k + 1][j];
      const double az = az0 + drift * double(f) / double(cfg.sequence_length);
      SyntheticSample s = make_sample(cfg, bones, from_array(v), az, el);
      s.seq_id = "q" + std::to_string(q);
      s.frame_idx = static_cast<long>(f);
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

DepthOffsets oracle_depths(const SyntheticSample& sample, double c) {
  const Pose2D raw = project(sample.ground_truth);
  const double scale = normalize_pose2d(raw, default_schema(), c).scale;
  DepthOffsets d;
  for (int i = 0; i < kNumJoints; ++i) d.d(i) = sample.ground_truth.joints(i, 2) / scale - c;
  return d;
}

std::vector<PoseRecord> SyntheticDataset::records2d() const {
  std::vector<PoseRecord> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    PoseRecord r;
    r.seq_id = s.seq_id;
    r.frame_idx = s.frame_idx;
    r.joints = s.projected;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Pose3DRecord> SyntheticDataset::records3d() const {
  std::vector<Pose3DRecord> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.seq_id, s.frame_idx, s.ground_truth});
  return out;
}

std::vector<Pose2D> SyntheticDataset::poses2d() const {
  std::vector<Pose2D> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.projected);
  return out;
}

std::vector<Pose3D> SyntheticDataset::poses3d() const {
  std::vector<Pose3D> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.ground_truth);
  return out;
}

}  // namespace liftgeo
