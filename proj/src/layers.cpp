#include "liftgeo/layers.hpp"

#include <cmath>

namespace liftgeo::nn {

template <typename T>
Dense<T>::Dense(const std::string& prefix, int in, int out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> w(in, out);
  for (long i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
  W = Parameter<T>(prefix + ".W", std::move(w));
  b = Parameter<T>(prefix + ".b", Tensor<T>::Zero(1, out));
}

template <typename T>
ResidualBlock<T>::ResidualBlock(const std::string& prefix, int width, bool batchnorm,
                                Activation activation, std::mt19937_64& rng)
    : fc1(prefix + ".fc1", width, width, rng),
      fc2(prefix + ".fc2", width, width, rng),
      act(activation) {
  if (batchnorm) {
    bn1.emplace(prefix + ".bn1", width);
    bn2.emplace(prefix + ".bn2", width);
  }
}

template <typename T>
Var ResidualBlock<T>::forward(Graph<T>& g, Var x, Mode mode) {
  if (g.value(x).cols() != fc1.in()) {
    throw ShapeMismatch("residual block: input width " + std::to_string(g.value(x).cols()) +
                        ", block width " + std::to_string(fc1.in()));
  }
  auto nonlin = [&](Var v) {
    return act == Activation::kRelu ? g.relu(v) : g.leaky_relu(v, T(kLeakySlope));
  };
  Var h = fc1.forward(g, x);
  if (bn1) h = g.batchnorm(h, *bn1, mode);
  h = nonlin(h);
  h = fc2.forward(g, h);
  if (bn2) h = g.batchnorm(h, *bn2, mode);
  h = nonlin(h);
  return g.add(x, h);
}

template <typename T>
Mlp<T>::Mlp(const MlpConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg), input_("input", cfg.in, cfg.width, rng) {
  if (cfg.batchnorm) input_bn_.emplace("input.bn", cfg.width);
  for (int i = 0; i < cfg.blocks; ++i) {
    blocks_.emplace_back("block" + std::to_string(i), cfg.width, cfg.batchnorm, cfg.act, rng);
  }
  output_ = Dense<T>("output", cfg.width, cfg.out, rng);
}

template <typename T>
Var Mlp<T>::activate(Graph<T>& g, Var x) const {
  return cfg_.act == Activation::kRelu ? g.relu(x) : g.leaky_relu(x, T(kLeakySlope));
}

template <typename T>
Var Mlp<T>::forward(Graph<T>& g, Var x, Mode mode) {
  Var h = input_.forward(g, x);
  if (input_bn_) h = g.batchnorm(h, *input_bn_, mode);
  h = activate(g, h);
  for (auto& block : blocks_) h = block.forward(g, h, mode);
  return output_.forward(g, h);
}

template <typename T>
std::vector<Parameter<T>*> Mlp<T>::parameters() {
  std::vector<Parameter<T>*> out{&input_.W, &input_.b};
  if (input_bn_) {
    out.push_back(&input_bn_->gamma);
    out.push_back(&input_bn_->beta);
  }
  for (auto& blk : blocks_) {
    out.push_back(&blk.fc1.W);
    out.push_back(&blk.fc1.b);
    if (blk.bn1) {
      out.push_back(&blk.bn1->gamma);
      out.push_back(&blk.bn1->beta);
    }
    out.push_back(&blk.fc2.W);
    out.push_back(&blk.fc2.b);
    if (blk.bn2) {
      out.push_back(&blk.bn2->gamma);
      out.push_back(&blk.bn2->beta);
    }
  }
  out.push_back(&output_.W);
  out.push_back(&output_.b);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Mlp<T>::state() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (Parameter<T>* p : parameters()) out.emplace_back(p->name, &p->value);
  auto add_bn = [&out](std::optional<BatchNorm<T>>& bn) {
    if (!bn) return;
    const std::string prefix = bn->gamma.name.substr(0, bn->gamma.name.size() - 6);
    out.emplace_back(prefix + ".running_mean", &bn->running_mean);
    out.emplace_back(prefix + ".running_var", &bn->running_var);
  };
  add_bn(input_bn_);
  for (auto& blk : blocks_) {
    add_bn(blk.bn1);
    add_bn(blk.bn2);
  }
  return out;
}

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (Parameter<T>* p : params_) {
    m_.push_back(Tensor<T>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Tensor<T>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (Parameter<T>* p : params_) p->zero_grad();
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const T b1 = T(cfg_.beta1), b2 = T(cfg_.beta2);
  const T c1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, static_cast<double>(t_)));
  const T c2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, static_cast<double>(t_)));
  const T lr = T(cfg_.lr), eps = T(cfg_.eps);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter<T>& p = *params_[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ShapeMismatch("adam: gradient shape differs from parameter " + p.name);
    }
    m_[k] = b1 * m_[k] + (T(1) - b1) * p.grad;
    v_[k] = b2 * v_[k] + (T(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
  }
}

template struct Dense<float>;
template struct Dense<double>;
template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template class Mlp<float>;
template class Mlp<double>;
template class Adam<float>;
template class Adam<double>;

}  // namespace liftgeo::nn
