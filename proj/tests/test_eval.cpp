#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "liftgeo/eval.hpp"
#include "liftgeo/synth.hpp"
#include "support.hpp"

using namespace liftgeo;

namespace {

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

// Naive per-joint distance sum.
double loop_mpjpe(const Pose3D& a, const Pose3D& b, double unit) {
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    double sq = 0.0;
    for (int k = 0; k < 3; ++k) sq += (a.joints(i, k) - b.joints(i, k)) * (a.joints(i, k) - b.joints(i, k));
    sum += std::sqrt(sq);
  }
  return sum / kNumJoints * unit;
}

}  // namespace

TEST_CASE("aligning a pose to itself is the identity") {
  std::mt19937_64 rng(1);
  const Pose3D gt = testing::random_pose3d(rng);
  const AlignmentResult a = procrustes_align(gt, gt);
  CHECK(a.scale == doctest::Approx(1.0));
  CHECK((a.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(a.translation.norm() < 1e-12);
  CHECK(mpjpe(a.aligned, gt, 500) < 1e-9);
}

TEST_CASE("any similarity of the target is recovered exactly") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose3D gt = testing::random_pose3d(rng);
    const double s = trial == 0 ? 2.0 : u(rng);
    const Eigen::Matrix3d R = random_rotation(rng);
    const Eigen::Vector3d t = testing::random_matrix(rng, 3, 1, -10, 10);
    Pose3D pred;
    pred.joints = ((s * gt.joints) * R.transpose()).rowwise() + t.transpose();
    const AlignmentResult a = procrustes_align(pred, gt);
    CHECK(*std::max_element(a.residual.begin(), a.residual.end()) < 1e-9);
    CHECK(a.rotation.determinant() == doctest::Approx(1.0));
    CHECK(a.scale == doctest::Approx(1.0 / s));
  }
}

TEST_CASE("mirror images are not aligned away") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose3D gt = testing::random_pose3d(rng);
    Pose3D mirrored = gt;
    mirrored.joints.col(0) *= -1.0;
    const AlignmentResult a = procrustes_align(mirrored, gt);
    CHECK(a.rotation.determinant() == doctest::Approx(1.0));
    CHECK((a.rotation * a.rotation.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(std::accumulate(a.residual.begin(), a.residual.end(), 0.0) > 1e-3);
    // Brute force: the residual is no worse than the best of many random rotations.
    double best = 1e300;
    for (int k = 0; k < 2000; ++k) {
      Pose3D p;
      const Eigen::Matrix3d R = random_rotation(rng);
      const Joints3 c = mirrored.joints.rowwise() - mirrored.joints.colwise().mean();
      p.joints = c * R.transpose();
      const Eigen::RowVector3d mu = gt.joints.colwise().mean();
      const Joints3 g = gt.joints.rowwise() - mu;
      const double s = std::max(0.0, (g.array() * p.joints.array()).sum() / p.joints.squaredNorm());
      best = std::min(best, (s * p.joints - g).squaredNorm());
    }
    double mine = 0.0;
    for (double r : a.residual) mine += r * r;
    CHECK(mine <= best + 1e-9);
  }
}

TEST_CASE("coincident targets are rejected") {
  Pose3D gt;
  gt.joints.setConstant(2.0);
  CHECK_THROWS_AS(procrustes_align(gt, gt), DegenerateTarget);
}

TEST_CASE("mpjpe arithmetic") {
  std::mt19937_64 rng(4);
  const Pose3D gt = testing::random_pose3d(rng);
  CHECK(mpjpe(gt, gt, 1000) == 0.0);
  Pose3D moved = gt;
  moved.joints(5, 1) += 0.01;
  CHECK(mpjpe(moved, gt, 1000) == doctest::Approx(0.01 * 1000 / 14).epsilon(1e-10));
  for (int trial = 0; trial < 50; ++trial) {
    Pose3D p = gt;
    p.joints += testing::random_matrix(rng, kNumJoints, 3, -0.1, 0.1);
    CHECK(std::abs(mpjpe(p, gt, 500) - loop_mpjpe(p, gt, 500)) < 1e-12);
    // Invariant under a common rigid motion.
    const Eigen::Matrix3d R = random_rotation(rng);
    Pose3D a, b;
    a.joints = (p.joints * R.transpose()).rowwise() + Eigen::RowVector3d(1, 2, 3);
    b.joints = (gt.joints * R.transpose()).rowwise() + Eigen::RowVector3d(1, 2, 3);
    CHECK(mpjpe(a, b, 500) == doctest::Approx(mpjpe(p, gt, 500)).epsilon(1e-10));
  }
}

TEST_CASE("pck and auc") {
  const std::vector<double> zeros(140, 0.0);
  const PckAuc z = pck_auc(zeros);
  CHECK(z.pck == 100.0);
  CHECK(z.auc == 100.0);

  const std::vector<double> far(140, 300.0);
  CHECK(pck_auc(far).pck == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 250.0);
  std::vector<double> mixed(1000);
  for (double& e : mixed) e = u(rng);
  auto count = [&](double t) {
    int hits = 0;
    for (double e : mixed) hits += e <= t;
    return 100.0 * hits / mixed.size();
  };
  const PckAuc r = pck_auc(mixed);
  CHECK(r.pck == doctest::Approx(count(150.0)));
  double auc = 0.0;
  for (int k = 0; k < 31; ++k) auc += count(150.0 * k / 30);
  CHECK(r.auc == doctest::Approx(auc / 31));
  CHECK(r.auc <= r.pck);

  double prev = -1.0;
  for (double t = 0; t <= 300; t += 7.5) {
    const double p = pck_auc(mixed, t).pck;
    CHECK(p >= prev);
    prev = p;
  }
  CHECK_THROWS_AS(pck_auc(std::vector<double>{}), EmptySet);
  CHECK_THROWS_AS(aligned_mpjpe({}, {}, 500), EmptySet);
}

TEST_CASE("limb ratios of the synthetic body") {
  SyntheticSkeletonConfig cfg;
  cfg.count = 400;
  const auto ds = synth_generate(cfg);
  const auto poses = ds.poses3d();
  const RatioHistogram h = limb_ratio_histogram(poses, default_schema());
  for (const auto& s : h.series) {
    CHECK(std::accumulate(s.counts.begin(), s.counts.end(), 0L) == 400);
    CHECK(s.variance >= 0.0);
  }
  // Legs are a point mass at 1.0.
  const RatioSeries& leg = h.limb("leg_left");
  CHECK(leg.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(leg.variance < 1e-20);
  CHECK(std::count_if(leg.counts.begin(), leg.counts.end(), [](long c) { return c > 0; }) == 1);
  CHECK(h.limb("leg_right").mean == doctest::Approx(1.0).epsilon(1e-12));
  // Reference values: about 1.0 for legs and 1.1 for arms.
  CHECK(std::abs(h.limb("arm_left").mean - 1.1) < 0.02);
  CHECK(std::abs(h.limb("arm_right").mean - 1.1) < 0.02);
  CHECK_THROWS_AS(h.limb("tail"), std::out_of_range);

  const std::string csv = format_ratio_histogram(h);
  CHECK(csv.rfind("limb,bin_left,bin_right,count\n", 0) == 0);

  std::vector<Pose3D> broken = {poses[0]};
  broken[0].joints.row(joint::kLeftAnkle) = broken[0].joints.row(joint::kLeftKnee);
  CHECK_THROWS_AS(limb_ratio_histogram(broken, default_schema()), ZeroLimb);
}
