#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "liftgeo/data.hpp"
#include "liftgeo/eval.hpp"
#include "liftgeo/geometry.hpp"
#include "liftgeo/models.hpp"
#include "liftgeo/synth.hpp"

namespace liftgeo {

class DataMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SequenceRequired : public DataMissing {
 public:
  using DataMissing::DataMissing;
};

class PairMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossWeights {
  double w2d = 10.0;
  double w3d = 0.001;
  double wt = 1.0;
  double lambda = 0.01;
};

/// Which parts of the objective are active. Names follow the ablation labels "SS", "Adv",
/// "Adv+SS", "Adv+SS+DA", "Adv+SS+DA+TD".
struct Flags {
  bool ss = false;
  bool adv = false;
  bool td = false;
  bool da = false;

  static Flags parse(const std::string& text);
  std::string name() const;
  bool operator==(const Flags&) const = default;
};

struct TrainingConfig {
  std::size_t batch_size = 8192;
  double c = 10.0;
  RotationRanges rotations;
  int epochs = 10;
  std::uint64_t seed = 1;
  LossWeights weights;
  int temporal_m = 1;
  Flags flags{true, true, false, false};
  NetworkSize lifter{1024, 4};
  NetworkSize discriminator{1024, 3};
  double lr_lifter = 2e-4;
  double lr_discriminator = 2e-4;
  double beta1_lifter = 0.9;
  double beta1_discriminator = 0.5;
  /// Discriminator updates per lifter update.
  int d_steps = 1;
  double log_floor = 1e-7;
  /// Denominator floor for projecting the inverse-transformed re-lift.
  double closure_z_floor = 0.1;
  int rotation_retries = 8;
  /// Evaluate on the held-out set every k epochs (0 disables).
  int eval_every = 1;
  /// Cap on held-out poses used for per-epoch evaluation.
  std::size_t eval_limit = 2000;
  std::map<std::string, std::string> paths;

  void validate() const;
};

/// Mean over batch and joints of squared per-joint distances.
template <typename T>
Var loss_3d(Graph<T>& g, Var Y, Var Y_tilde);
template <typename T>
Var loss_2d(Graph<T>& g, Var x, Var x_tilde);

/// Depth provider for the closure loop: (B, 2N) poses -> (B, N) depth offsets.
template <typename T>
using DepthFn = std::function<Var(Graph<T>&, Var)>;

/// Variables of one pass around the lift-rotate-project-lift loop.
struct ClosureVars {
  Var x, X, root, Y, y, Y_tilde, X_tilde, x_tilde;
  Var l3d, l2d;
};

/// Per-row rotations (B, 9) row-major.
template <typename T>
Tensor<T> rotation_rows(const std::vector<RigidTransform>& qs);

/// y = P(Q(X)) with Q built from `rotations` and the hip midpoint of X.
template <typename T>
ClosureVars rotate_and_project(Graph<T>& g, Var x, Var X, const Tensor<T>& rotations, double c);

/// Full loop starting from already lifted X = lift(x).
template <typename T>
ClosureVars closure_loop(Graph<T>& g, const DepthFn<T>& depths, Var x, Var X,
                         const Tensor<T>& rotations, double c, double z_floor);

struct ClosureBatch {
  std::vector<Pose2D> x;
  std::vector<Pose3D> X;
  std::vector<RigidTransform> Q;
  std::vector<Pose3D> Y;
  std::vector<Pose2D> y;
  std::vector<Pose3D> Y_tilde;
  std::vector<Pose3D> X_tilde;
  std::vector<Pose2D> x_tilde;
};

/// Builds a closure batch with a per-pose lifting function (double precision, no autodiff).
ClosureBatch make_closure_batch(const std::vector<Pose2D>& x,
                                const std::function<Pose3D(const Pose2D&)>& lift,
                                const std::vector<RigidTransform>& qs);

struct ClosureLosses {
  double l3d = 0.0;
  double l2d = 0.0;
};

ClosureLosses closure_losses(const ClosureBatch& batch);

/// GAN losses from discriminator outputs on real and fake inputs.
template <typename T>
struct GanLosses {
  Var disc;  // -[E log p_real + E log(1 - p_fake)]
  Var gen;   // -E log p_fake
};

template <typename T>
GanLosses<T> adversarial_losses(Graph<T>& g, Var p_real, Var p_fake, double log_floor);

/// Domain-adaptation objective: returns disc = -[E log D_D(x_t) + E log(1 - D_D(x_sc))] and
/// gen = -E log D_D(x_sc) + lambda * mean ||C(x_s)||^2.
template <typename T>
GanLosses<T> domain_adaptation_losses(Graph<T>& g, Var p_target, Var p_corrected, Var correction,
                                      double lambda, double log_floor);

struct LossParts {
  std::optional<double> adv;
  std::optional<double> l2d;
  std::optional<double> l3d;
  std::optional<double> lt;
};

/// L = L_adv + w2D L2D + w3D L3D + wT LT; absent terms contribute 0.
double total_loss(const LossParts& parts, const LossWeights& w);

struct EpochLog {
  int epoch = 0;
  std::optional<double> loss_adv_d;
  std::optional<double> loss_adv_g;
  std::optional<double> loss_2d;
  std::optional<double> loss_3d;
  std::optional<double> loss_t;
  std::optional<double> loss_t_d;
  double loss_total = 0.0;
  std::optional<double> mpjpe;
  std::optional<double> pck;
  std::optional<double> auc;
  long discriminator_updates = 0;
  long lifter_updates = 0;
  long skipped_samples = 0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochLog& log);

struct EvalSet {
  std::vector<Pose2D> poses2d;
  std::vector<Pose3D> ground_truth;
  double unit_scale = kSyntheticUnitMm;
};

struct TrainingData {
  /// Normalized lifter inputs.
  std::vector<Pose2D> inputs;
  /// Real poses for the 2D discriminator; defaults to `inputs` when empty.
  std::vector<Pose2D> real;
  /// Windows of consecutive frames indexing `inputs`; required when TD is on.
  std::vector<TemporalItem> temporal;
  std::optional<EvalSet> eval;
};

/// Builds TrainingData from a synthetic dataset (temporal windows only in sequence mode).
TrainingData training_data_from(const SyntheticDataset& ds, int temporal_m);

/// Normalized 2D inputs with camera-frame ground truth.
EvalSet eval_set_from(const SyntheticDataset& ds);

struct EvalMetrics {
  double mpjpe = 0.0;
  double pck = 0.0;
  double auc = 0.0;
};

template <typename T>
EvalMetrics evaluate_lifter(LifterNet<T>& lifter, const EvalSet& set, std::size_t limit = 0);

/// Alternating optimization of the lifter against the enabled discriminators.
class Trainer {
 public:
  using Scalar = float;

  Trainer(TrainingConfig cfg, TrainingData data);

  EpochLog run_epoch();
  std::vector<EpochLog> train(const std::function<void(const EpochLog&)>& on_epoch = {});

  LifterNet<Scalar>& lifter() { return *lifter_; }
  PoseDiscriminator<Scalar>* discriminator() { return disc_.get(); }
  TemporalDiscriminator<Scalar>* temporal() { return temporal_.get(); }
  const TrainingConfig& config() const { return cfg_; }
  const std::vector<EpochLog>& history() const { return history_; }

 private:
  struct StepStats;
  void lifter_step(StepStats& st, const std::vector<int>& rows, bool paired);
  std::vector<RigidTransform> sample_rotations(const Tensor<Scalar>& X, bool paired,
                                               std::vector<int>& keep);

  TrainingConfig cfg_;
  TrainingData data_;
  Tensor<Scalar> inputs_;
  Tensor<Scalar> real_;
  std::mt19937_64 rng_;
  std::unique_ptr<LifterNet<Scalar>> lifter_;
  std::unique_ptr<PoseDiscriminator<Scalar>> disc_;
  std::unique_ptr<TemporalDiscriminator<Scalar>> temporal_;
  nn::Adam<Scalar> opt_lifter_, opt_disc_, opt_temporal_;
  std::vector<EpochLog> history_;
  int epoch_ = 0;
};

struct FinetuneConfig {
  int steps = 200;
  std::size_t batch_size = 512;
  double lr = 1e-4;
  std::uint64_t seed = 1;
};

/// Supervised refinement on paired (normalized 2D, 3D in the lifter's frame) data. Returns
/// the mean loss of the last step (0 when there are no pairs).
template <typename T>
double finetune_supervised(LifterNet<T>& lifter, const std::vector<Pose2D>& x,
                           const std::vector<Pose3D>& X_gt, const FinetuneConfig& cfg);

/// 3D target in the lifter's frame for a synthetic sample (oracle depths applied to its 2D).
Pose3D lifter_frame_target(const SyntheticSample& sample, double c);

struct AdapterConfig {
  int epochs = 5;
  std::size_t batch_size = 512;
  double c = 10.0;
  double lambda = 0.01;
  NetworkSize adapter{1024, 4};
  NetworkSize discriminator{1024, 3};
  double lr = 2e-4;
  double log_floor = 1e-7;
  std::uint64_t seed = 1;
};

struct AdapterLog {
  int epoch = 0;
  double loss_dd = 0.0;
  double loss_c = 0.0;
  double correction_sq = 0.0;  // mean ||C(x_s)||^2
};

/// Trains the 2D domain adapter C against D_D. Source and target are normalized poses.
class AdapterTrainer {
 public:
  using Scalar = float;

  AdapterTrainer(AdapterConfig cfg, std::vector<Pose2D> source, std::vector<Pose2D> target);

  AdapterLog run_epoch();
  std::vector<AdapterLog> train();

  DomainAdapter<Scalar>& adapter() { return *adapter_; }
  PoseDiscriminator<Scalar>& discriminator() { return *disc_; }
  /// Mean ||C(x_s)||^2 over the source set, eval mode.
  double mean_correction_sq();

 private:
  AdapterConfig cfg_;
  Tensor<Scalar> source_, target_;
  std::mt19937_64 rng_;
  std::unique_ptr<DomainAdapter<Scalar>> adapter_;
  std::unique_ptr<PoseDiscriminator<Scalar>> disc_;
  nn::Adam<Scalar> opt_c_, opt_d_;
  int epoch_ = 0;
};

}  // namespace liftgeo
