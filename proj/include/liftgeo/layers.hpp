#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "liftgeo/nn.hpp"

namespace liftgeo::nn {

enum class Activation { kRelu, kLeakyRelu };

inline constexpr double kLeakySlope = 0.01;

template <typename T>
struct Dense {
  Parameter<T> W;
  Parameter<T> b;

  Dense() = default;
  /// Kaiming-uniform on fan-in, zero bias.
  Dense(const std::string& prefix, int in, int out, std::mt19937_64& rng);

  int in() const { return static_cast<int>(W.value.rows()); }
  int out() const { return static_cast<int>(W.value.cols()); }

  Var forward(Graph<T>& g, Var x) { return g.linear(x, W, b); }
};

/// y = x + f(x) with f = Dense -> [BN] -> act -> Dense -> [BN] -> act.
template <typename T>
struct ResidualBlock {
  Dense<T> fc1, fc2;
  std::optional<BatchNorm<T>> bn1, bn2;
  Activation act = Activation::kRelu;

  ResidualBlock() = default;
  ResidualBlock(const std::string& prefix, int width, bool batchnorm, Activation act,
                std::mt19937_64& rng);

  Var forward(Graph<T>& g, Var x, Mode mode);
};

struct MlpConfig {
  int in = 0;
  int out = 0;
  int width = 1024;
  int blocks = 4;
  bool batchnorm = true;
  Activation act = Activation::kRelu;
};

/// Dense input map, residual trunk and a dense output head.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpConfig& cfg, std::mt19937_64& rng);

  const MlpConfig& config() const { return cfg_; }
  Var forward(Graph<T>& g, Var x, Mode mode);

  std::vector<Parameter<T>*> parameters();
  /// Parameters plus batch-norm running statistics, keyed by stable names.
  std::vector<std::pair<std::string, Tensor<T>*>> state();

  Dense<T>& head() { return output_; }
  std::vector<ResidualBlock<T>>& blocks() { return blocks_; }

 private:
  Var activate(Graph<T>& g, Var x) const;

  MlpConfig cfg_;
  Dense<T> input_;
  std::optional<BatchNorm<T>> input_bn_;
  std::vector<ResidualBlock<T>> blocks_;
  Dense<T> output_;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter<T>*> params, AdamConfig cfg);

  void zero_grad();
  /// Applies one update from the accumulated gradients and increments the step counter.
  void step();

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  long t_ = 0;
};

extern template struct Dense<float>;
extern template struct Dense<double>;
extern template struct ResidualBlock<float>;
extern template struct ResidualBlock<double>;
extern template class Mlp<float>;
extern template class Mlp<double>;
extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace liftgeo::nn
