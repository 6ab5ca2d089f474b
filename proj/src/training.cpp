#include "liftgeo/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "liftgeo/eval.hpp"

namespace liftgeo {

namespace {

std::uint64_t splitmix(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
Tensor<T> camera_offset(Eigen::Index rows, double c) {
  Tensor<T> t = Tensor<T>::Zero(rows, 3);
  t.col(2).setConstant(T(c));
  return t;
}

// -E log p, or -E log(1 - p) with `complement`.
template <typename T>
Var neg_mean_log(Graph<T>& g, Var p, double floor, bool complement = false) {
  Var arg = complement ? g.affine(p, T(-1), T(1)) : p;
  return g.affine(g.mean(g.log_clamped(arg, T(floor))), T(-1));
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericFailure(std::string("non-finite ") + what);
}

struct Mean {
  double sum = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> get() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
};

}  // namespace

Flags Flags::parse(const std::string& text) {
  Flags f;
  if (text.empty()) throw ConfigInvalid("empty flag set");
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, '+')) {
    if (tok == "SS") f.ss = true;
    else if (tok == "Adv") f.adv = true;
    else if (tok == "TD") f.td = true;
    else if (tok == "DA") f.da = true;
    else throw ConfigInvalid("unknown flag '" + tok + "' (expected SS, Adv, DA, TD)");
  }
  return f;
}

std::string Flags::name() const {
  std::string out;
  auto put = [&](bool on, const char* n) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += n;
  };
  put(adv, "Adv");
  put(ss, "SS");
  put(da, "DA");
  put(td, "TD");
  return out;
}

void TrainingConfig::validate() const {
  if (batch_size < 2) throw ConfigInvalid("batch_size must be at least 2");
  if (!(c > 1.0)) throw ConfigInvalid("c must exceed 1");
  if (epochs < 0) throw ConfigInvalid("epochs must be non-negative");
  if (temporal_m < 1) throw ConfigInvalid("temporal M must be at least 1");
  if (d_steps < 1) throw ConfigInvalid("d_steps must be at least 1");
  if (rotation_retries < 1) throw ConfigInvalid("rotation_retries must be at least 1");
  for (double w : {weights.w2d, weights.w3d, weights.wt, weights.lambda}) {
    if (!(w >= 0.0)) throw ConfigInvalid("loss weights must be non-negative");
  }
  if (!(rotations.azimuth.lo <= rotations.azimuth.hi) ||
      !(rotations.elevation.lo <= rotations.elevation.hi)) {
    throw ConfigInvalid("rotation range lo > hi");
  }
  if (lifter.width < 1 || lifter.blocks < 0 || discriminator.width < 1 || discriminator.blocks < 0) {
    throw ConfigInvalid("network sizes must be positive");
  }
  if (!(lr_lifter > 0.0) || !(lr_discriminator > 0.0)) throw ConfigInvalid("learning rates must be positive");
  if (!flags.ss && !flags.adv && !flags.td) throw ConfigInvalid("no lifter objective enabled");
}

template <typename T>
Var loss_3d(Graph<T>& g, Var Y, Var Y_tilde) {
  return g.sum_squares(g.sub(Y, Y_tilde), T(g.value(Y).rows() * kNumJoints));
}

template <typename T>
Var loss_2d(Graph<T>& g, Var x, Var x_tilde) {
  return g.sum_squares(g.sub(x, x_tilde), T(g.value(x).rows() * kNumJoints));
}

template <typename T>
Tensor<T> rotation_rows(const std::vector<RigidTransform>& qs) {
  Tensor<T> out(static_cast<Eigen::Index>(qs.size()), 9);
  for (std::size_t b = 0; b < qs.size(); ++b) {
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) out(b, 3 * r + k) = T(qs[b].R(r, k));
    }
  }
  return out;
}

template <typename T>
ClosureVars rotate_and_project(Graph<T>& g, Var x, Var X, const Tensor<T>& rotations, double c) {
  const auto& s = default_schema();
  ClosureVars v;
  v.x = x;
  v.X = X;
  v.root = g.joint_midpoint(X, 3, s.left_hip, s.right_hip);
  Var offset = g.input(camera_offset<T>(g.value(X).rows(), c));
  Var centred = g.translate(X, v.root, 3, T(-1));
  v.Y = g.translate(g.rotate(centred, rotations, false), offset, 3, T(1));
  v.y = g.project(v.Y);
  return v;
}

template <typename T>
ClosureVars closure_loop(Graph<T>& g, const DepthFn<T>& depths, Var x, Var X,
                         const Tensor<T>& rotations, double c, double z_floor) {
  ClosureVars v = rotate_and_project(g, x, X, rotations, c);
  Var offset = g.input(camera_offset<T>(g.value(X).rows(), c));
  v.Y_tilde = g.lift_depths(v.y, depths(g, v.y), T(c));
  Var back = g.rotate(g.translate(v.Y_tilde, offset, 3, T(-1)), rotations, true);
  v.X_tilde = g.translate(back, v.root, 3, T(1));
  v.x_tilde = g.project(v.X_tilde, T(z_floor));
  v.l3d = loss_3d(g, v.Y, v.Y_tilde);
  v.l2d = loss_2d(g, v.x, v.x_tilde);
  return v;
}

ClosureBatch make_closure_batch(const std::vector<Pose2D>& x,
                                const std::function<Pose3D(const Pose2D&)>& lift,
                                const std::vector<RigidTransform>& qs) {
  if (x.size() != qs.size()) throw std::invalid_argument("one transform per pose required");
  ClosureBatch b;
  b.x = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Pose3D X = lift(x[k]);
    RigidTransform q = qs[k];
    q.root = root_of(X);  // rotation about the lifted pose's own root
    const Pose3D Y = apply_rigid_unchecked(X, q);
    const Pose2D y = project(Y);
    const Pose3D Yt = lift(y);
    const Pose3D Xt = invert_rigid(Yt, q);
    b.X.push_back(X);
    b.Q.push_back(q);
    b.Y.push_back(Y);
    b.y.push_back(y);
    b.Y_tilde.push_back(Yt);
    b.X_tilde.push_back(Xt);
    b.x_tilde.push_back(project(Xt));
  }
  return b;
}

ClosureLosses closure_losses(const ClosureBatch& batch) {
  ClosureLosses out;
  if (batch.x.empty()) return out;
  for (std::size_t k = 0; k < batch.x.size(); ++k) {
    out.l3d += (batch.Y[k].joints - batch.Y_tilde[k].joints).squaredNorm();
    out.l2d += (batch.x[k].joints - batch.x_tilde[k].joints).squaredNorm();
  }
  const double n = static_cast<double>(batch.x.size() * kNumJoints);
  out.l3d /= n;
  out.l2d /= n;
  return out;
}

template <typename T>
GanLosses<T> adversarial_losses(Graph<T>& g, Var p_real, Var p_fake, double log_floor) {
  GanLosses<T> out;
  out.disc = g.add(neg_mean_log(g, p_real, log_floor), neg_mean_log(g, p_fake, log_floor, true));
  out.gen = neg_mean_log(g, p_fake, log_floor);
  return out;
}

template <typename T>
GanLosses<T> domain_adaptation_losses(Graph<T>& g, Var p_target, Var p_corrected, Var correction,
                                      double lambda, double log_floor) {
  GanLosses<T> out = adversarial_losses(g, p_target, p_corrected, log_floor);
  const T rows = T(g.value(correction).rows());
  out.gen = g.add(out.gen, g.affine(g.sum_squares(correction, rows), T(lambda)));
  return out;
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  return parts.adv.value_or(0.0) + w.w2d * parts.l2d.value_or(0.0) +
         w.w3d * parts.l3d.value_or(0.0) + w.wt * parts.lt.value_or(0.0);
}

std::string metrics_csv_header() { return "epoch,loss_adv_d,loss_adv_g,loss_2d,loss_3d,loss_t,mpjpe,pck,auc"; }

std::string metrics_csv_row(const EpochLog& log) {
  auto f = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  return std::to_string(log.epoch) + ',' + f(log.loss_adv_d) + ',' + f(log.loss_adv_g) + ',' +
         f(log.loss_2d) + ',' + f(log.loss_3d) + ',' + f(log.loss_t) + ',' + f(log.mpjpe) + ',' +
         f(log.pck) + ',' + f(log.auc);
}

TrainingData training_data_from(const SyntheticDataset& ds, int temporal_m) {
  TrainingData d;
  d.inputs = ds.poses2d();
  const bool sequential = std::any_of(ds.samples.begin(), ds.samples.end(),
                                      [](const SyntheticSample& s) { return s.frame_idx != 0; });
  if (sequential) d.temporal = make_temporal_pairs(ds.records2d(), temporal_m);
  return d;
}

EvalSet eval_set_from(const SyntheticDataset& ds) {
  EvalSet e;
  e.poses2d = ds.poses2d();
  e.ground_truth = ds.poses3d();
  return e;
}

template <typename T>
EvalMetrics evaluate_lifter(LifterNet<T>& lifter, const EvalSet& set, std::size_t limit) {
  std::size_t n = set.poses2d.size();
  if (limit) n = std::min(n, limit);
  if (n == 0) throw EmptySet("evaluation set is empty");
  if (set.ground_truth.size() < n) throw std::invalid_argument("evaluation set lacks ground truth");
  const std::span<const Pose2D> in(set.poses2d.data(), n);
  const std::vector<Pose3D> pred = poses3d_from_batch<T>(lifter.lift_batch(to_batch<T>(in)));
  const std::vector<double> errs =
      aligned_joint_errors(pred, std::span<const Pose3D>(set.ground_truth.data(), n), set.unit_scale);
  EvalMetrics m;
  m.mpjpe = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
  const PckAuc p = pck_auc(errs);
  m.pck = p.pck;
  m.auc = p.auc;
  return m;
}

// ---------------------------------------------------------------------------------------------

struct Trainer::StepStats {
  Mean adv_d, adv_g, l2d, l3d, lt, lt_d, total;
  long d_updates = 0, g_updates = 0, skipped = 0;
};

Trainer::Trainer(TrainingConfig cfg, TrainingData data)
    : cfg_(std::move(cfg)), data_(std::move(data)), rng_(splitmix(cfg_.seed, 0)) {
  cfg_.validate();
  if (cfg_.flags.da && data_.inputs.empty()) throw DataMissing("DA requires adapted source poses");
  if (data_.inputs.size() < 2) throw DataMissing("training needs at least 2 poses");
  if (cfg_.flags.td) {
    if (data_.temporal.empty()) throw SequenceRequired("TD requires sequence data");
    for (const auto& item : data_.temporal) {
      if (static_cast<int>(item.next.size()) != cfg_.temporal_m) {
        throw SequenceRequired("temporal windows do not match M");
      }
    }
  }
  inputs_ = to_batch<Scalar>(std::span<const Pose2D>(data_.inputs));
  real_ = data_.real.empty() ? inputs_ : to_batch<Scalar>(std::span<const Pose2D>(data_.real));

  lifter_ = std::make_unique<LifterNet<Scalar>>(cfg_.lifter, cfg_.c, splitmix(cfg_.seed, 1));
  const nn::AdamConfig g_opt{cfg_.lr_lifter, cfg_.beta1_lifter, 0.999, 1e-8};
  const nn::AdamConfig d_opt{cfg_.lr_discriminator, cfg_.beta1_discriminator, 0.999, 1e-8};
  opt_lifter_ = nn::Adam<Scalar>(lifter_->parameters(), g_opt);
  if (cfg_.flags.adv) {
    disc_ = std::make_unique<PoseDiscriminator<Scalar>>(cfg_.discriminator, cfg_.c, splitmix(cfg_.seed, 2));
    opt_disc_ = nn::Adam<Scalar>(disc_->parameters(), d_opt);
  }
  if (cfg_.flags.td) {
    temporal_ = std::make_unique<TemporalDiscriminator<Scalar>>(cfg_.discriminator, cfg_.c,
                                                                cfg_.temporal_m, splitmix(cfg_.seed, 3));
    opt_temporal_ = nn::Adam<Scalar>(temporal_->parameters(), d_opt);
  }
}

// One rotation per row, or per group of M+1 rows in paired layout (rows [g], [g + P], ...).
std::vector<RigidTransform> Trainer::sample_rotations(const Tensor<Scalar>& X, bool paired,
                                                      std::vector<int>& keep) {
  const int rows = static_cast<int>(X.rows());
  const int span = paired ? cfg_.temporal_m + 1 : 1;
  const int groups = rows / span;
  std::vector<RigidTransform> per_group(groups);
  std::vector<char> ok(groups, 0);
  std::vector<Pose3D> frames(span);
  for (int gi = 0; gi < groups; ++gi) {
    for (int s = 0; s < span; ++s) {
      const auto row = X.row(gi + s * groups);
      for (int j = 0; j < kNumJoints; ++j) {
        for (int k = 0; k < 3; ++k) frames[s].joints(j, k) = row(3 * j + k);
      }
    }
    for (int attempt = 0; attempt < cfg_.rotation_retries && !ok[gi]; ++attempt) {
      const RigidTransform q = sample_rotation(rng_, cfg_.rotations, Eigen::Vector3d::Zero(), cfg_.c);
      bool valid = true;
      for (int s = 0; s < span && valid; ++s) {
        RigidTransform qs = q;
        qs.root = root_of(frames[s]);
        valid = (apply_rigid_unchecked(frames[s], qs).joints.col(2).array() >= 1.0).all();
      }
      if (valid) {
        per_group[gi] = q;
        ok[gi] = 1;
      }
    }
  }
  keep.clear();
  std::vector<RigidTransform> out;
  std::vector<int> kept_groups;
  for (int gi = 0; gi < groups; ++gi) {
    if (ok[gi]) kept_groups.push_back(gi);
  }
  for (int s = 0; s < span; ++s) {
    for (int gi : kept_groups) {
      keep.push_back(gi + s * groups);
      out.push_back(per_group[gi]);
    }
  }
  return out;
}

void Trainer::lifter_step(StepStats& st, const std::vector<int>& rows, bool paired) {
  const Eigen::Index b = static_cast<Eigen::Index>(rows.size());
  Tensor<Scalar> xb(b, kPoseWidth);
  for (Eigen::Index r = 0; r < b; ++r) xb.row(r) = inputs_.row(rows[r]);

  opt_lifter_.zero_grad();
  Graph<Scalar> g;
  Var x_all = g.input(xb);
  Var X_all = lifter_->lift(g, x_all, Mode::kTrain);

  std::vector<int> keep;
  const std::vector<RigidTransform> qs = sample_rotations(g.value(X_all), paired, keep);
  st.skipped += b - static_cast<long>(keep.size());
  if (keep.size() < 2) return;
  Var x = x_all, X = X_all;
  if (static_cast<Eigen::Index>(keep.size()) != b) {
    x = g.gather_rows(x_all, keep);
    X = g.gather_rows(X_all, keep);
  }
  const Tensor<Scalar> rot = rotation_rows<Scalar>(qs);

  ClosureVars cv;
  if (cfg_.flags.ss) {
    DepthFn<Scalar> depth = [this](Graph<Scalar>& gg, Var p) { return lifter_->depths(gg, p, Mode::kTrain); };
    cv = closure_loop<Scalar>(g, depth, x, X, rot, cfg_.c, cfg_.closure_z_floor);
  } else {
    cv = rotate_and_project<Scalar>(g, x, X, rot, cfg_.c);
  }

  LossParts parts;
  Var total{-1};
  auto accumulate = [&](Var term, double w) {
    Var t = g.affine(term, Scalar(w));
    total = total.id < 0 ? t : g.add(total, t);
  };
  if (cfg_.flags.ss) {
    parts.l2d = g.scalar(cv.l2d);
    parts.l3d = g.scalar(cv.l3d);
    accumulate(cv.l2d, cfg_.weights.w2d);
    accumulate(cv.l3d, cfg_.weights.w3d);
  }
  // Discriminators see projections in the same normalization as real inputs; otherwise the
  // head-root length alone separates real from fake.
  const auto& schema = default_schema();
  Var y_norm = g.normalize2d(cv.y, schema.head, schema.left_hip, schema.right_hip, Scalar(cfg_.c));
  if (cfg_.flags.adv) {
    Var gen = neg_mean_log(g, disc_->probability(g, y_norm), cfg_.log_floor);
    parts.adv = g.scalar(gen);
    accumulate(gen, 1.0);
  }
  const int span = cfg_.temporal_m + 1;
  const int groups = static_cast<int>(keep.size()) / span;
  auto temporal_input = [&](Graph<Scalar>& gg, Var poses) {
    std::vector<Var> frames;
    for (int s = 0; s < span; ++s) {
      std::vector<int> idx(groups);
      std::iota(idx.begin(), idx.end(), s * groups);
      frames.push_back(gg.gather_rows(poses, idx));
    }
    std::vector<Var> diffs;
    for (int s = 0; s + 1 < span; ++s) diffs.push_back(gg.sub(frames[s], frames[s + 1]));
    return temporal_->make_input(gg, frames[0], diffs);
  };
  if (cfg_.flags.td) {
    Var gen = neg_mean_log(g, temporal_->probability(g, temporal_input(g, y_norm)), cfg_.log_floor);
    parts.lt = g.scalar(gen);
    accumulate(gen, cfg_.weights.wt);
  }
  const double step_total = g.scalar(total);
  check_finite(step_total, "lifter loss");
  g.backward(total);
  opt_lifter_.step();
  ++st.g_updates;

  if (parts.adv) st.adv_g.add(*parts.adv);
  if (parts.l2d) st.l2d.add(*parts.l2d);
  if (parts.l3d) st.l3d.add(*parts.l3d);
  if (parts.lt) st.lt.add(*parts.lt);
  st.total.add(step_total);

  const Tensor<Scalar> fakes = g.value(y_norm);
  std::uniform_int_distribution<Eigen::Index> pick_real(0, real_.rows() - 1);
  std::uniform_int_distribution<std::size_t> pick_item(0, data_.temporal.size() - 1);
  for (int k = 0; k < cfg_.d_steps; ++k) {
    if (cfg_.flags.adv) {
      Tensor<Scalar> rb(fakes.rows(), kPoseWidth);
      for (Eigen::Index r = 0; r < rb.rows(); ++r) rb.row(r) = real_.row(pick_real(rng_));
      opt_disc_.zero_grad();
      Graph<Scalar> gd;
      const auto l = adversarial_losses(gd, disc_->probability(gd, gd.input(rb)),
                                        disc_->probability(gd, gd.input(fakes)), cfg_.log_floor);
      st.adv_d.add(gd.scalar(l.disc));
      check_finite(gd.scalar(l.disc), "discriminator loss");
      gd.backward(l.disc);
      opt_disc_.step();
      ++st.d_updates;
    }
    if (cfg_.flags.td) {
      Tensor<Scalar> rb(static_cast<Eigen::Index>(groups) * span, kPoseWidth);
      for (int gi = 0; gi < groups; ++gi) {
        const TemporalItem& item = data_.temporal[pick_item(rng_)];
        rb.row(gi) = inputs_.row(static_cast<Eigen::Index>(item.anchor));
        for (int s = 1; s < span; ++s) rb.row(gi + s * groups) = inputs_.row(static_cast<Eigen::Index>(item.next[s - 1]));
      }
      opt_temporal_.zero_grad();
      Graph<Scalar> gt;
      const auto l = adversarial_losses(gt, temporal_->probability(gt, temporal_input(gt, gt.input(rb))),
                                        temporal_->probability(gt, temporal_input(gt, gt.input(fakes))),
                                        cfg_.log_floor);
      st.lt_d.add(gt.scalar(l.disc));
      check_finite(gt.scalar(l.disc), "temporal discriminator loss");
      gt.backward(l.disc);
      opt_temporal_.step();
      ++st.d_updates;
    }
  }
}

EpochLog Trainer::run_epoch() {
  ++epoch_;
  StepStats st;
  const bool paired = cfg_.flags.td;
  if (paired) {
    const std::size_t span = cfg_.temporal_m + 1;
    const std::size_t per_step = std::max<std::size_t>(1, std::min(cfg_.batch_size / span, data_.temporal.size()));
    std::vector<std::size_t> order(data_.temporal.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    const std::size_t steps = std::max<std::size_t>(1, order.size() / per_step);
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<int> rows(per_step * span);
      for (std::size_t k = 0; k < per_step; ++k) {
        const TemporalItem& item = data_.temporal[order[s * per_step + k]];
        rows[k] = static_cast<int>(item.anchor);
        for (std::size_t f = 1; f < span; ++f) rows[k + f * per_step] = static_cast<int>(item.next[f - 1]);
      }
      lifter_step(st, rows, true);
    }
  } else {
    const std::size_t n = static_cast<std::size_t>(inputs_.rows());
    const std::size_t per_step = std::min(cfg_.batch_size, n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    const std::size_t steps = std::max<std::size_t>(1, n / per_step);
    for (std::size_t s = 0; s < steps; ++s) {
      lifter_step(st, std::vector<int>(order.begin() + s * per_step, order.begin() + (s + 1) * per_step), false);
    }
  }

  EpochLog log;
  log.epoch = epoch_;
  log.loss_adv_d = st.adv_d.get();
  log.loss_adv_g = st.adv_g.get();
  log.loss_2d = st.l2d.get();
  log.loss_3d = st.l3d.get();
  log.loss_t = st.lt.get();
  log.loss_t_d = st.lt_d.get();
  log.loss_total = total_loss({log.loss_adv_g, log.loss_2d, log.loss_3d, log.loss_t}, cfg_.weights);
  log.discriminator_updates = st.d_updates;
  log.lifter_updates = st.g_updates;
  log.skipped_samples = st.skipped;
  // The per-step totals must agree with the weighted sum of the logged means.
  if (const auto mean_total = st.total.get()) {
    if (std::abs(*mean_total - log.loss_total) > 1e-4 * (1.0 + std::abs(log.loss_total))) {
      throw NumericFailure("loss bookkeeping mismatch");
    }
  }
  if (data_.eval && cfg_.eval_every > 0 && epoch_ % cfg_.eval_every == 0) {
    const EvalMetrics m = evaluate_lifter(*lifter_, *data_.eval, cfg_.eval_limit);
    log.mpjpe = m.mpjpe;
    log.pck = m.pck;
    log.auc = m.auc;
  }
  history_.push_back(log);
  return log;
}

std::vector<EpochLog> Trainer::train(const std::function<void(const EpochLog&)>& on_epoch) {
  std::vector<EpochLog> out;
  for (int e = 0; e < cfg_.epochs; ++e) {
    out.push_back(run_epoch());
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

template <typename T>
double finetune_supervised(LifterNet<T>& lifter, const std::vector<Pose2D>& x,
                           const std::vector<Pose3D>& X_gt, const FinetuneConfig& cfg) {
  if (x.size() != X_gt.size()) throw PairMismatch("2D and 3D pair counts differ");
  if (x.empty()) return 0.0;
  if (x.size() < 2) throw PairMismatch("fine-tuning needs at least 2 pairs");
  const Tensor<T> in = to_batch<T>(std::span<const Pose2D>(x));
  const Tensor<T> target = to_batch<T>(std::span<const Pose3D>(X_gt));
  nn::Adam<T> opt(lifter.parameters(), {cfg.lr, 0.9, 0.999, 1e-8});
  std::mt19937_64 rng(splitmix(cfg.seed, 7));
  const std::size_t b = std::min(cfg.batch_size, x.size());
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  double last = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    if (cursor + b > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    Tensor<T> xb(static_cast<Eigen::Index>(b), kPoseWidth), yb(static_cast<Eigen::Index>(b), kPose3Width);
    for (std::size_t k = 0; k < b; ++k) {
      xb.row(k) = in.row(order[cursor + k]);
      yb.row(k) = target.row(order[cursor + k]);
    }
    cursor += b;
    opt.zero_grad();
    Graph<T> g;
    Var pred = lifter.lift(g, g.input(xb), Mode::kTrain);
    Var loss = loss_3d(g, pred, g.input(yb));
    last = g.scalar(loss);
    check_finite(last, "supervised loss");
    g.backward(loss);
    opt.step();
  }
  return last;
}

Pose3D lifter_frame_target(const SyntheticSample& sample, double c) {
  return lift_with_depths(sample.projected, oracle_depths(sample, c), c);
}

// ---------------------------------------------------------------------------------------------

AdapterTrainer::AdapterTrainer(AdapterConfig cfg, std::vector<Pose2D> source, std::vector<Pose2D> target)
    : cfg_(std::move(cfg)), rng_(splitmix(cfg_.seed, 10)) {
  if (source.size() < 2 || target.size() < 2) throw DataMissing("adapter needs source and target poses");
  if (cfg_.batch_size < 2) throw ConfigInvalid("batch_size must be at least 2");
  if (!(cfg_.lambda >= 0.0)) throw ConfigInvalid("lambda must be non-negative");
  source_ = to_batch<Scalar>(std::span<const Pose2D>(source));
  target_ = to_batch<Scalar>(std::span<const Pose2D>(target));
  adapter_ = std::make_unique<DomainAdapter<Scalar>>(cfg_.adapter, cfg_.c, splitmix(cfg_.seed, 11));
  disc_ = std::make_unique<PoseDiscriminator<Scalar>>(cfg_.discriminator, cfg_.c, splitmix(cfg_.seed, 12),
                                                      "domain_discriminator");
  opt_c_ = nn::Adam<Scalar>(adapter_->parameters(), {cfg_.lr, 0.9, 0.999, 1e-8});
  opt_d_ = nn::Adam<Scalar>(disc_->parameters(), {cfg_.lr, 0.5, 0.999, 1e-8});
}

AdapterLog AdapterTrainer::run_epoch() {
  ++epoch_;
  const auto& s = default_schema();
  const Eigen::Index b = static_cast<Eigen::Index>(std::min<std::size_t>(
      cfg_.batch_size, static_cast<std::size_t>(std::min(source_.rows(), target_.rows()))));
  std::vector<int> order(source_.rows());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  std::uniform_int_distribution<Eigen::Index> pick(0, target_.rows() - 1);
  const std::size_t steps = std::max<std::size_t>(1, order.size() / b);
  Mean dd, cc, sq;
  for (std::size_t step = 0; step < steps; ++step) {
    Tensor<Scalar> xs(b, kPoseWidth), xt(b, kPoseWidth);
    for (Eigen::Index r = 0; r < b; ++r) {
      xs.row(r) = source_.row(order[step * b + r]);
      xt.row(r) = target_.row(pick(rng_));
    }
    opt_c_.zero_grad();
    Graph<Scalar> g;
    Var in = g.input(xs);
    Var corr = adapter_->correction(g, in, Mode::kTrain);
    Var xsc = g.normalize2d(g.add(in, corr), s.head, s.left_hip, s.right_hip, Scalar(cfg_.c));
    const auto l = domain_adaptation_losses(g, disc_->probability(g, g.input(xt)),
                                            disc_->probability(g, xsc), corr, cfg_.lambda, cfg_.log_floor);
    check_finite(g.scalar(l.gen), "adapter loss");
    cc.add(g.scalar(l.gen));
    sq.add(g.value(corr).squaredNorm() / static_cast<double>(b));
    g.backward(l.gen);
    opt_c_.step();

    const Tensor<Scalar> fakes = g.value(xsc);
    opt_d_.zero_grad();
    Graph<Scalar> gd;
    const auto ld = adversarial_losses(gd, disc_->probability(gd, gd.input(xt)),
                                       disc_->probability(gd, gd.input(fakes)), cfg_.log_floor);
    check_finite(gd.scalar(ld.disc), "domain discriminator loss");
    dd.add(gd.scalar(ld.disc));
    gd.backward(ld.disc);
    opt_d_.step();
  }
  return {epoch_, *dd.get(), *cc.get(), *sq.get()};
}

std::vector<AdapterLog> AdapterTrainer::train() {
  std::vector<AdapterLog> out;
  for (int e = 0; e < cfg_.epochs; ++e) out.push_back(run_epoch());
  return out;
}

double AdapterTrainer::mean_correction_sq() {
  Graph<Scalar> g(false);
  const Tensor<Scalar>& c = g.value(adapter_->correction(g, g.input(source_), Mode::kEval));
  return c.squaredNorm() / static_cast<double>(source_.rows());
}

#define LIFTGEO_INSTANTIATE(T)                                                                       \
  template Var loss_3d<T>(Graph<T>&, Var, Var);                                                    \
  template Var loss_2d<T>(Graph<T>&, Var, Var);                                                    \
  template Tensor<T> rotation_rows<T>(const std::vector<RigidTransform>&);                         \
  template ClosureVars rotate_and_project<T>(Graph<T>&, Var, Var, const Tensor<T>&, double);       \
  template ClosureVars closure_loop<T>(Graph<T>&, const DepthFn<T>&, Var, Var, const Tensor<T>&,   \
                                       double, double);                                            \
  template GanLosses<T> adversarial_losses<T>(Graph<T>&, Var, Var, double);                        \
  template GanLosses<T> domain_adaptation_losses<T>(Graph<T>&, Var, Var, Var, double, double);     \
  template EvalMetrics evaluate_lifter<T>(LifterNet<T>&, const EvalSet&, std::size_t);             \
  template double finetune_supervised<T>(LifterNet<T>&, const std::vector<Pose2D>&,                \
                                         const std::vector<Pose3D>&, const FinetuneConfig&);

LIFTGEO_INSTANTIATE(float)
LIFTGEO_INSTANTIATE(double)

}  // namespace liftgeo
