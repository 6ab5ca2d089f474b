#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "liftgeo/geometry.hpp"
#include "liftgeo/nn.hpp"

namespace testing {

using liftgeo::nn::Graph;
using liftgeo::nn::Parameter;
using liftgeo::nn::Tensor;
using liftgeo::nn::Var;
using Mat = Tensor<double>;

inline Mat random_matrix(std::mt19937_64& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Loosely human-shaped 2D pose, already normalized.
inline liftgeo::Pose2D random_pose2d(std::mt19937_64& rng, double c = 10.0) {
  std::normal_distribution<double> n(0.0, 0.3);
  liftgeo::Pose2D p;
  const double base[liftgeo::kNumJoints][2] = {{0, 1},      {0, 0.75},   {-0.2, 0.7}, {0.2, 0.7},
                                              {-0.3, 0.4}, {0.3, 0.4},  {-0.35, 0.15}, {0.35, 0.15},
                                              {-0.12, 0},  {0.12, 0},   {-0.13, -0.45}, {0.13, -0.45},
                                              {-0.14, -0.9}, {0.14, -0.9}};
  for (int j = 0; j < liftgeo::kNumJoints; ++j) {
    p.joints(j, 0) = base[j][0] + 0.3 * n(rng);
    p.joints(j, 1) = base[j][1] + 0.3 * n(rng);
  }
  return liftgeo::normalize_pose2d(p, liftgeo::default_schema(), c).pose;
}

inline liftgeo::Pose3D random_pose3d(std::mt19937_64& rng, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  liftgeo::Pose3D p;
  for (int j = 0; j < liftgeo::kNumJoints; ++j) {
    for (int k = 0; k < 3; ++k) p.joints(j, k) = u(rng);
  }
  return p;
}

using BuildFn = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

// Relative L2 error between the analytic gradient of build's scalar output and central
// differences, over sampled entries of all inputs and parameters taken as one vector. (A
// per-tensor ratio is meaningless for tensors whose true gradient is exactly zero, such as a
// bias feeding batch norm.)
inline double grad_check(std::vector<Mat> inputs, const std::vector<Parameter<double>*>& params,
                         const BuildFn& build, double h = 1e-5, int max_entries = 64,
                         std::uint64_t seed = 99) {
  auto evaluate = [&](const std::vector<Mat>& ins) {
    Graph<double> g(false);
    std::vector<Var> vars;
    for (const auto& m : ins) vars.push_back(g.input(m));
    return g.scalar(build(g, vars));
  };

  for (auto* p : params) p->zero_grad();
  Graph<double> g;
  std::vector<Var> vars;
  for (const auto& m : inputs) vars.push_back(g.input(m, true));
  g.backward(build(g, vars));
  std::vector<Mat> analytic;
  for (const auto& v : vars) analytic.push_back(g.grad(v));
  for (auto* p : params) analytic.push_back(p->grad);

  std::mt19937_64 rng(seed);
  double diff = 0.0, scale = 0.0;
  auto check_tensor = [&](Mat& target, const Mat& grad, const std::function<double()>& f) {
    std::vector<Eigen::Index> idx(target.size());
    for (Eigen::Index i = 0; i < target.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    if (static_cast<int>(idx.size()) > max_entries) idx.resize(max_entries);
    for (Eigen::Index i : idx) {
      const double keep = target.data()[i];
      target.data()[i] = keep + h;
      const double up = f();
      target.data()[i] = keep - h;
      const double down = f();
      target.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = grad.data()[i];
      diff += (a - numeric) * (a - numeric);
      scale += a * a + numeric * numeric;
    }
  };
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    check_tensor(inputs[k], analytic[k], [&] { return evaluate(inputs); });
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    check_tensor(params[k]->value, analytic[inputs.size() + k], [&] { return evaluate(inputs); });
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

}  // namespace testing
