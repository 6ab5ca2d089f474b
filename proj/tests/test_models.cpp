#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "liftgeo/models.hpp"
#include "support.hpp"

using namespace liftgeo;
using testing::Mat;

namespace {

std::vector<Pose2D> some_poses(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Pose2D> out;
  for (int i = 0; i < n; ++i) out.push_back(testing::random_pose2d(rng));
  return out;
}

}  // namespace

TEST_CASE("lifter shapes and reprojection") {
  LifterNet<float> G({32, 2}, 10, 1);
  const auto poses = some_poses(6, 1);
  const Tensor<float> x = to_batch<float>(std::span<const Pose2D>(poses));
  Graph<float> g(false);
  Var d = G.depths(g, g.input(x), Mode::kTrain);
  CHECK(g.value(d).rows() == 6);
  CHECK(g.value(d).cols() == kNumJoints);
  const Tensor<float> X = G.lift_batch(x);
  CHECK(X.cols() == kPose3Width);
  const auto lifted = poses3d_from_batch<float>(X);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    CHECK((lifted[k].joints.col(2).array() >= 1.0).all());
    CHECK((project(lifted[k]).joints - poses[k].joints).cwiseAbs().maxCoeff() < 1e-6);
  }
  CHECK_THROWS_AS(G.depths(g, g.input(Tensor<float>::Zero(2, 30)), Mode::kEval), nn::ShapeMismatch);
}

TEST_CASE("zeroed lifter head is the planar lifter") {
  LifterNet<double> G({16, 1}, 10, 2);
  G.zero_head();
  const auto poses = some_poses(3, 2);
  for (const auto& p : poses) {
    const Pose3D X = G.lift(p);
    CHECK((X.joints.col(2).array() == 10.0).all());
    CHECK((X.joints.leftCols(2) - 10.0 * p.joints).norm() < 1e-12);
  }
}

TEST_CASE("lifter starts near the planar solution") {
  LifterNet<float> G({64, 4}, 10, 3);
  const auto poses = some_poses(64, 3);
  Graph<float> g(false);
  const Tensor<float> d =
      g.value(G.depths(g, g.input(to_batch<float>(std::span<const Pose2D>(poses))), Mode::kTrain));
  CHECK(d.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("untrained discriminators with a zero head output one half") {
  PoseDiscriminator<double> D({16, 3}, 10, 4);
  D.zero_head();
  CHECK(D.discriminate(some_poses(1, 4)[0]) == doctest::Approx(0.5));

  TemporalDiscriminator<double> T({16, 3}, 10, 2, 5);
  CHECK(T.mlp().config().in == kPoseWidth * 3);
  T.zero_head();
  const auto p = some_poses(3, 5);
  CHECK(T.temporal_discriminate(p[0], std::span<const Pose2D>(p).subspan(1)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(T.temporal_discriminate(p[0], std::span<const Pose2D>(p).subspan(2)), nn::ShapeMismatch);
}

TEST_CASE("temporal input of a static sequence is the pose followed by zeros") {
  TemporalDiscriminator<double> T({8, 1}, 10, 1, 6);
  const auto p = some_poses(1, 6);
  Graph<double> g(false);
  Var pose = g.input(to_batch<double>(std::span<const Pose2D>(p)));
  const Var diffs[] = {g.sub(pose, pose)};
  const Mat& in = g.value(T.make_input(g, pose, diffs));
  CHECK(in.cols() == 2 * kPoseWidth);
  CHECK((in.leftCols(kPoseWidth) - g.value(pose)).norm() == 0.0);
  CHECK(in.rightCols(kPoseWidth).norm() == 0.0);
}

TEST_CASE("zeroed adapter is the identity on normalized poses") {
  DomainAdapter<float> C({16, 2}, 10, 7);
  C.zero_head();
  for (const auto& p : some_poses(5, 7)) {
    CHECK((C.adapt(p).joints - p.joints).cwiseAbs().maxCoeff() < 1e-6);
  }
  // Any correction still yields a normalized pose.
  DomainAdapter<double> C2({16, 2}, 10, 8);
  for (const auto& p : some_poses(5, 8)) {
    const Pose2D a = C2.adapt(p);
    CHECK(root_of(a).norm() < 1e-12);
    CHECK(a.joints.row(joint::kHead).norm() == doctest::Approx(0.1));
  }
}

TEST_CASE("composed lifter and discriminator gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LifterNet<double> G({8, 2}, 10, seed);
    // Larger head so the depth path carries real signal.
    G.mlp().head().W.value *= 50.0;
    PoseDiscriminator<double> D({8, 2}, 10, seed + 100);
    const auto poses = some_poses(4, seed);
    const Mat x = to_batch<double>(std::span<const Pose2D>(poses));
    auto params = G.parameters();
    for (auto* p : D.parameters()) params.push_back(p);
    const double err = testing::grad_check({x}, params, [&](Graph<double>& g, const std::vector<Var>& v) {
      Var y = g.project(G.lift(g, v[0], Mode::kTrain));
      return g.mean(g.log_clamped(D.probability(g, y), 1e-7));
    });
    CHECK(err < 1e-5);
  }
}

TEST_CASE("checkpoints round-trip through bytes and files") {
  LifterNet<float> G({32, 2}, 10, 9);
  // Touch the running statistics so they are non-trivial.
  const auto poses = some_poses(8, 9);
  const Tensor<float> x = to_batch<float>(std::span<const Pose2D>(poses));
  {
    Graph<float> g(false);
    G.lift(g, g.input(x), Mode::kTrain);
  }
  const nn::Checkpoint ckpt = G.to_checkpoint();
  const nn::Checkpoint back = nn::decode_checkpoint(nn::encode_checkpoint(ckpt));
  REQUIRE(back.entries.size() == ckpt.entries.size());
  CHECK(back.kind == "lifter");
  for (std::size_t k = 0; k < ckpt.entries.size(); ++k) {
    CHECK(back.entries[k].name == ckpt.entries[k].name);
    CHECK(back.entries[k].data == ckpt.entries[k].data);
  }

  const auto path = std::filesystem::temp_directory_path() / "liftgeo_test_lifter.ckpt";
  nn::save_checkpoint(path, ckpt);
  auto loaded = LifterNet<float>::from_checkpoint(nn::load_checkpoint(path));
  std::filesystem::remove(path);
  CHECK(loaded->mlp().config().width == 32);
  CHECK(loaded->mlp().config().blocks == 2);
  CHECK(loaded->c() == 10.0);
  CHECK(loaded->lift_batch(x) == G.lift_batch(x));

  // The same weights in double precision agree to float rounding.
  auto dbl = LifterNet<double>::from_checkpoint(ckpt);
  const Tensor<double> xd = to_batch<double>(std::span<const Pose2D>(poses));
  CHECK((dbl->lift_batch(xd).cast<float>() - G.lift_batch(x)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("checkpoint mismatches are rejected") {
  LifterNet<float> G({32, 2}, 10, 10);
  PoseDiscriminator<float> D({32, 2}, 10, 11);
  CHECK_THROWS_AS(D.load(G.to_checkpoint()), CheckpointMismatch);
  CHECK_THROWS_AS(LifterNet<float>::from_checkpoint(D.to_checkpoint()), CheckpointMismatch);
  LifterNet<float> wide({64, 2}, 10, 12);
  CHECK_THROWS_AS(G.load(wide.to_checkpoint()), CheckpointMismatch);

  std::vector<char> bytes = nn::encode_checkpoint(G.to_checkpoint());
  std::vector<char> bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(nn::decode_checkpoint(bad), nn::CheckpointError);
  CHECK_THROWS_AS(nn::decode_checkpoint(std::vector<char>(bytes.begin(), bytes.end() - 3)), nn::CheckpointError);
  bytes.push_back(0);
  CHECK_THROWS_AS(nn::decode_checkpoint(bytes), nn::CheckpointError);
  CHECK_THROWS_AS(nn::load_checkpoint("/nonexistent/dir/x.ckpt"), nn::CheckpointError);
}
