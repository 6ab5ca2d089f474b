#include "liftgeo/models.hpp"

#include <memory>

namespace liftgeo {

namespace {

nn::MlpConfig mlp_config(int in, int out, NetworkSize size, bool batchnorm, nn::Activation act) {
  nn::MlpConfig cfg;
  cfg.in = in;
  cfg.out = out;
  cfg.width = size.width;
  cfg.blocks = size.blocks;
  cfg.batchnorm = batchnorm;
  cfg.act = act;
  return cfg;
}

NetworkSize infer_size(const nn::Checkpoint& ckpt) {
  const nn::NamedTensor* w = ckpt.find("input.W");
  if (w == nullptr) throw CheckpointMismatch("checkpoint has no input.W entry");
  NetworkSize size;
  size.width = static_cast<int>(w->data.cols());
  size.blocks = 0;
  while (ckpt.find("block" + std::to_string(size.blocks) + ".fc1.W") != nullptr) ++size.blocks;
  return size;
}

double meta_value(const nn::Checkpoint& ckpt, const std::string& name) {
  const nn::NamedTensor* e = ckpt.find(name);
  if (e == nullptr || e->data.size() != 1) throw CheckpointMismatch("checkpoint lacks " + name);
  return e->data(0, 0);
}

}  // namespace

template <typename T>
PoseNetwork<T>::PoseNetwork(std::string kind, const nn::MlpConfig& cfg, double c,
                            std::uint64_t seed)
    : kind_(std::move(kind)), c_(c), mlp_([&] {
        std::mt19937_64 rng(seed);
        return nn::Mlp<T>(cfg, rng);
      }()) {}

template <typename T>
Var PoseNetwork<T>::trunk(Graph<T>& g, Var x, Mode mode) {
  if (g.value(x).cols() != mlp_.config().in) {
    throw nn::ShapeMismatch(kind_ + ": input width " + std::to_string(g.value(x).cols()) +
                            ", expected " + std::to_string(mlp_.config().in));
  }
  // Normalized poses have head-root distance 1/c; the trunk sees unit-scale inputs.
  return mlp_.forward(g, g.affine(x, T(c_)), mode);
}

template <typename T>
nn::Checkpoint PoseNetwork<T>::to_checkpoint() {
  nn::Checkpoint ckpt;
  ckpt.kind = kind_;
  for (auto& [name, tensor] : mlp_.state()) {
    ckpt.entries.push_back({name, tensor->template cast<float>()});
  }
  ckpt.entries.push_back({"meta.c", Tensor<float>::Constant(1, 1, static_cast<float>(c_))});
  return ckpt;
}

template <typename T>
void PoseNetwork<T>::load(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != kind_) {
    throw CheckpointMismatch("checkpoint kind '" + ckpt.kind + "', expected '" + kind_ + "'");
  }
  for (auto& [name, tensor] : mlp_.state()) {
    const nn::NamedTensor* e = ckpt.find(name);
    if (e == nullptr) throw CheckpointMismatch("checkpoint lacks " + name);
    if (e->data.rows() != tensor->rows() || e->data.cols() != tensor->cols()) {
      throw CheckpointMismatch("shape mismatch for " + name);
    }
    *tensor = e->data.template cast<T>();
  }
  c_ = meta_value(ckpt, "meta.c");
  for (nn::Parameter<T>* p : mlp_.parameters()) p->zero_grad();
}

template <typename T>
void PoseNetwork<T>::zero_head() {
  mlp_.head().W.value.setZero();
  mlp_.head().b.value.setZero();
}

template <typename T>
LifterNet<T>::LifterNet(NetworkSize size, double c, std::uint64_t seed)
    : PoseNetwork<T>("lifter",
                     mlp_config(kPoseWidth, kNumJoints, size, true, nn::Activation::kRelu), c,
                     seed) {
  // Start close to the planar solution: a default-initialized head emits depth offsets an order
  // of magnitude larger than a body, pushing joints onto the z >= 1 clamp where they get no
  // gradient.
  this->mlp_.head().W.value *= T(kLifterHeadInitScale);
}

template <typename T>
Var LifterNet<T>::depths(Graph<T>& g, Var poses, Mode mode) {
  return this->trunk(g, poses, mode);
}

template <typename T>
Var LifterNet<T>::lift(Graph<T>& g, Var poses, Mode mode) {
  return g.lift_depths(poses, depths(g, poses, mode), T(this->c_));
}

template <typename T>
Tensor<T> LifterNet<T>::lift_batch(const Tensor<T>& poses) {
  Graph<T> g(false);
  return g.value(lift(g, g.input(poses), Mode::kEval));
}

template <typename T>
Pose3D LifterNet<T>::lift(const Pose2D& pose) {
  const std::vector<Pose2D> one{pose};
  return poses3d_from_batch<T>(lift_batch(to_batch<T>(std::span<const Pose2D>(one))))[0];
}

template <typename T>
std::unique_ptr<LifterNet<T>> LifterNet<T>::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "lifter") {
    throw CheckpointMismatch("checkpoint kind '" + ckpt.kind + "' is not a lifter");
  }
  auto net = std::make_unique<LifterNet<T>>(infer_size(ckpt), meta_value(ckpt, "meta.c"), 0);
  net->load(ckpt);
  return net;
}

template <typename T>
PoseDiscriminator<T>::PoseDiscriminator(NetworkSize size, double c, std::uint64_t seed,
                                        std::string kind)
    : PoseNetwork<T>(std::move(kind),
                     mlp_config(kPoseWidth, 1, size, false, nn::Activation::kLeakyRelu), c, seed) {}

template <typename T>
Var PoseDiscriminator<T>::probability(Graph<T>& g, Var poses) {
  return g.sigmoid(this->trunk(g, poses, Mode::kTrain));
}

template <typename T>
double PoseDiscriminator<T>::discriminate(const Pose2D& pose) {
  Graph<T> g(false);
  const std::vector<Pose2D> one{pose};
  return g.value(probability(g, g.input(to_batch<T>(std::span<const Pose2D>(one)))))(0, 0);
}

template <typename T>
TemporalDiscriminator<T>::TemporalDiscriminator(NetworkSize size, double c, int m,
                                                std::uint64_t seed)
    : PoseNetwork<T>("temporal_discriminator",
                     mlp_config(kPoseWidth * (1 + m), 1, size, false, nn::Activation::kLeakyRelu),
                     c, seed),
      m_(m) {
  if (m < 1) throw std::invalid_argument("temporal discriminator needs M >= 1");
}

template <typename T>
Var TemporalDiscriminator<T>::probability(Graph<T>& g, Var input) {
  return g.sigmoid(this->trunk(g, input, Mode::kTrain));
}

template <typename T>
Var TemporalDiscriminator<T>::make_input(Graph<T>& g, Var pose, std::span<const Var> diffs) {
  if (static_cast<int>(diffs.size()) != m_) {
    throw nn::ShapeMismatch("temporal discriminator expects " + std::to_string(m_) +
                            " differences, got " + std::to_string(diffs.size()));
  }
  Var out = pose;
  for (Var d : diffs) out = g.concat_cols(out, d);
  return out;
}

template <typename T>
double TemporalDiscriminator<T>::temporal_discriminate(const Pose2D& pose,
                                                       std::span<const Pose2D> diffs) {
  Graph<T> g(false);
  const std::vector<Pose2D> one{pose};
  Var p = g.input(to_batch<T>(std::span<const Pose2D>(one)));
  std::vector<Var> dv;
  for (const Pose2D& d : diffs) {
    const std::vector<Pose2D> dd{d};
    dv.push_back(g.input(to_batch<T>(std::span<const Pose2D>(dd))));
  }
  return g.value(probability(g, make_input(g, p, dv)))(0, 0);
}

template <typename T>
DomainAdapter<T>::DomainAdapter(NetworkSize size, double c, std::uint64_t seed)
    : PoseNetwork<T>("domain_adapter",
                     mlp_config(kPoseWidth, kPoseWidth, size, true, nn::Activation::kRelu), c,
                     seed) {}

template <typename T>
std::unique_ptr<DomainAdapter<T>> DomainAdapter<T>::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "domain_adapter") {
    throw CheckpointMismatch("checkpoint kind '" + ckpt.kind + "' is not a domain adapter");
  }
  auto net = std::make_unique<DomainAdapter<T>>(infer_size(ckpt), meta_value(ckpt, "meta.c"), 0);
  net->load(ckpt);
  return net;
}

template <typename T>
Var DomainAdapter<T>::correction(Graph<T>& g, Var poses, Mode mode) {
  // Corrections are expressed back in normalized pose units.
  return g.affine(this->trunk(g, poses, mode), T(1.0 / this->c_));
}

template <typename T>
Var DomainAdapter<T>::adapt(Graph<T>& g, Var poses, Mode mode) {
  const JointSchema& s = default_schema();
  return g.normalize2d(g.add(poses, correction(g, poses, mode)), s.head, s.left_hip, s.right_hip,
                       T(this->c_));
}

template <typename T>
Tensor<T> DomainAdapter<T>::adapt_batch(const Tensor<T>& poses) {
  Graph<T> g(false);
  return g.value(adapt(g, g.input(poses), Mode::kEval));
}

template <typename T>
Pose2D DomainAdapter<T>::adapt(const Pose2D& pose) {
  const std::vector<Pose2D> one{pose};
  return poses2d_from_batch<T>(adapt_batch(to_batch<T>(std::span<const Pose2D>(one))))[0];
}

template <typename T>
Tensor<T> to_batch(std::span<const Pose2D> poses) {
  Tensor<T> out(static_cast<long>(poses.size()), kPoseWidth);
  for (std::size_t b = 0; b < poses.size(); ++b) {
    out.row(static_cast<long>(b)) =
        Eigen::Map<const Eigen::Matrix<double, 1, kPoseWidth>>(poses[b].joints.data()).cast<T>();
  }
  return out;
}

template <typename T>
Tensor<T> to_batch(std::span<const Pose3D> poses) {
  Tensor<T> out(static_cast<long>(poses.size()), kPose3Width);
  for (std::size_t b = 0; b < poses.size(); ++b) {
    out.row(static_cast<long>(b)) =
        Eigen::Map<const Eigen::Matrix<double, 1, kPose3Width>>(poses[b].joints.data()).cast<T>();
  }
  return out;
}

template <typename T>
std::vector<Pose3D> poses3d_from_batch(const Tensor<T>& batch) {
  if (batch.cols() != kPose3Width) throw nn::ShapeMismatch("expected (B, 3N) batch");
  std::vector<Pose3D> out(static_cast<std::size_t>(batch.rows()));
  for (long b = 0; b < batch.rows(); ++b) {
    Eigen::Map<Eigen::Matrix<double, 1, kPose3Width>>(out[b].joints.data()) =
        batch.row(b).template cast<double>();
  }
  return out;
}

template <typename T>
std::vector<Pose2D> poses2d_from_batch(const Tensor<T>& batch) {
  if (batch.cols() != kPoseWidth) throw nn::ShapeMismatch("expected (B, 2N) batch");
  std::vector<Pose2D> out(static_cast<std::size_t>(batch.rows()));
  for (long b = 0; b < batch.rows(); ++b) {
    Eigen::Map<Eigen::Matrix<double, 1, kPoseWidth>>(out[b].joints.data()) =
        batch.row(b).template cast<double>();
  }
  return out;
}

#define LIFTGEO_INSTANTIATE(T)                                                   \
  template class PoseNetwork<T>;                                                 \
  template class LifterNet<T>;                                                   \
  template class PoseDiscriminator<T>;                                           \
  template class TemporalDiscriminator<T>;                                       \
  template class DomainAdapter<T>;                                               \
  template Tensor<T> to_batch<T>(std::span<const Pose2D>);                       \
  template Tensor<T> to_batch<T>(std::span<const Pose3D>);                       \
  template std::vector<Pose3D> poses3d_from_batch<T>(const Tensor<T>&);          \
  template std::vector<Pose2D> poses2d_from_batch<T>(const Tensor<T>&);

LIFTGEO_INSTANTIATE(float)
LIFTGEO_INSTANTIATE(double)

#undef LIFTGEO_INSTANTIATE

}  // namespace liftgeo
