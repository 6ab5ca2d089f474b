#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "liftgeo/checkpoint.hpp"
#include "liftgeo/geometry.hpp"
#include "liftgeo/layers.hpp"

namespace liftgeo {

using nn::Graph;
using nn::Mode;
using nn::Tensor;
using nn::Var;

inline constexpr int kPoseWidth = 2 * kNumJoints;
inline constexpr int kPose3Width = 3 * kNumJoints;
/// Factor applied to the lifter's output-layer weights after Kaiming init.
inline constexpr double kLifterHeadInitScale = 0.01;

class CheckpointMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetworkSize {
  int width = 1024;
  int blocks = 4;
};

/// Shared plumbing for the four networks: an Mlp trunk fed with c-scaled poses, and
/// checkpoint conversion. Instances are pinned in memory because optimizers and graphs hold
/// pointers into them.
template <typename T>
class PoseNetwork {
 public:
  PoseNetwork(const PoseNetwork&) = delete;
  PoseNetwork& operator=(const PoseNetwork&) = delete;
  virtual ~PoseNetwork() = default;

  nn::Mlp<T>& mlp() { return mlp_; }
  std::vector<nn::Parameter<T>*> parameters() { return mlp_.parameters(); }
  double c() const { return c_; }
  const std::string& kind() const { return kind_; }

  nn::Checkpoint to_checkpoint();
  /// Overwrites parameters and running statistics; throws CheckpointMismatch on kind or shape
  /// disagreement.
  void load(const nn::Checkpoint& ckpt);

  /// Sets the output head to zero so the network emits a constant 0.
  void zero_head();

 protected:
  PoseNetwork(std::string kind, const nn::MlpConfig& cfg, double c, std::uint64_t seed);
  Var trunk(Graph<T>& g, Var x, Mode mode);

  std::string kind_;
  double c_;
  nn::Mlp<T> mlp_;
};

/// Lifter: 2N inputs, N depth offsets relative to the plane at distance c.
template <typename T>
class LifterNet : public PoseNetwork<T> {
 public:
  LifterNet(NetworkSize size, double c, std::uint64_t seed);

  /// (B, 2N) -> (B, N).
  Var depths(Graph<T>& g, Var poses, Mode mode);
  /// (B, 2N) -> (B, 3N), Z = max(1, c + d).
  Var lift(Graph<T>& g, Var poses, Mode mode);

  /// Eval-mode convenience over a batch of poses.
  Tensor<T> lift_batch(const Tensor<T>& poses);
  Pose3D lift(const Pose2D& pose);

  static std::unique_ptr<LifterNet> from_checkpoint(const nn::Checkpoint& ckpt);
};

/// Sigmoid classifier over 2D inputs; used for D (pose) and D_D (domain).
template <typename T>
class PoseDiscriminator : public PoseNetwork<T> {
 public:
  PoseDiscriminator(NetworkSize size, double c, std::uint64_t seed,
                    std::string kind = "pose_discriminator");

  /// (B, 2N) -> (B, 1) in (0, 1).
  Var probability(Graph<T>& g, Var poses);
  double discriminate(const Pose2D& pose);
};

/// Classifies a pose together with M temporal differences.
template <typename T>
class TemporalDiscriminator : public PoseNetwork<T> {
 public:
  TemporalDiscriminator(NetworkSize size, double c, int m, std::uint64_t seed);

  int m() const { return m_; }
  /// (B, 2N + 2NM) -> (B, 1).
  Var probability(Graph<T>& g, Var input);
  /// Concatenates [pose, diff_1, ..., diff_M]; throws ShapeMismatch on the wrong M.
  Var make_input(Graph<T>& g, Var pose, std::span<const Var> diffs);
  double temporal_discriminate(const Pose2D& pose, std::span<const Pose2D> diffs);

 private:
  int m_;
};

/// Residual 2D correction, x_sc = normalize(x_s + C(x_s)).
template <typename T>
class DomainAdapter : public PoseNetwork<T> {
 public:
  DomainAdapter(NetworkSize size, double c, std::uint64_t seed);

  /// (B, 2N) -> (B, 2N) correction C(x).
  Var correction(Graph<T>& g, Var poses, Mode mode);
  /// Corrected and re-normalized poses.
  Var adapt(Graph<T>& g, Var poses, Mode mode);
  Pose2D adapt(const Pose2D& pose);
  Tensor<T> adapt_batch(const Tensor<T>& poses);

  static std::unique_ptr<DomainAdapter> from_checkpoint(const nn::Checkpoint& ckpt);
};

/// (B, 2N) batch from poses, row-major.
template <typename T>
Tensor<T> to_batch(std::span<const Pose2D> poses);
template <typename T>
Tensor<T> to_batch(std::span<const Pose3D> poses);
template <typename T>
std::vector<Pose3D> poses3d_from_batch(const Tensor<T>& batch);
template <typename T>
std::vector<Pose2D> poses2d_from_batch(const Tensor<T>& batch);

}  // namespace liftgeo
