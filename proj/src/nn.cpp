#include "liftgeo/nn.hpp"

#include <cmath>
#include <string>

namespace liftgeo::nn {

namespace {

std::string shape_str(long r, long c) { return "(" + std::to_string(r) + "x" + std::to_string(c) + ")"; }

template <typename M>
void require_same_shape(const M& a, const M& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(op) + ": " + shape_str(a.rows(), a.cols()) + " vs " +
                        shape_str(b.rows(), b.cols()));
  }
}

}  // namespace

template <typename T>
Var Graph<T>::push(Mat value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void Graph<T>::set_backward(Var out, std::function<void()> fn) {
  if (needs(out)) nodes_[out.id].backward = std::move(fn);
}

template <typename T>
typename Graph<T>::Mat& Graph<T>::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
typename Graph<T>::Mat Graph<T>::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
Var Graph<T>::input(Mat value, bool requires_grad) {
  return push(std::move(value), requires_grad);
}

template <typename T>
Var Graph<T>::linear(Var x, Parameter<T>& W, Parameter<T>& b) {
  const Mat& xv = value(x);
  if (xv.cols() != W.value.rows() || b.value.cols() != W.value.cols() || b.value.rows() != 1) {
    throw ShapeMismatch("linear: input " + shape_str(xv.rows(), xv.cols()) + ", weight " +
                        shape_str(W.value.rows(), W.value.cols()) + ", bias " +
                        shape_str(b.value.rows(), b.value.cols()));
  }
  Mat y(xv.rows(), W.value.cols());
  y.noalias() = xv * W.value;
  y.rowwise() += b.value.row(0);
  Var out = push(std::move(y), true);
  set_backward(out, [this, x, out, &W, &b] {
    const Mat& g = nodes_[out.id].grad;
    W.grad.noalias() += value(x).transpose() * g;
    b.grad += g.colwise().sum();
    if (needs(x)) grad_ref(x.id).noalias() += g * W.value.transpose();
  });
  return out;
}

template <typename T>
Var Graph<T>::batchnorm(Var x, BatchNorm<T>& bn, Mode mode) {
  const Mat& xv = value(x);
  const long batch = xv.rows();
  if (xv.cols() != bn.gamma.value.cols()) {
    throw ShapeMismatch("batchnorm: input width " + std::to_string(xv.cols()) + ", expected " +
                        std::to_string(bn.gamma.value.cols()));
  }
  using Row = Eigen::Matrix<T, 1, Eigen::Dynamic>;
  Row mean, var;
  if (mode == Mode::kTrain) {
    if (batch < 2) throw BatchTooSmall("batchnorm in train mode needs a batch of at least 2");
    mean = xv.colwise().mean();
    var = (xv.rowwise() - mean).array().square().colwise().mean().matrix();
    const T unbias = T(batch) / T(batch - 1);
    bn.running_mean = (T(1) - bn.momentum) * bn.running_mean + bn.momentum * mean;
    bn.running_var = (T(1) - bn.momentum) * bn.running_var + (bn.momentum * unbias) * var;
  } else {
    mean = bn.running_mean.row(0);
    var = bn.running_var.row(0);
  }
  const Row inv_std = (var.array() + bn.epsilon).rsqrt().matrix();
  Mat xhat = ((xv.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
  Mat y = (xhat.array().rowwise() * bn.gamma.value.row(0).array()).matrix();
  y.rowwise() += bn.beta.value.row(0);
  Var out = push(std::move(y), true);
  const bool train = mode == Mode::kTrain;
  set_backward(out, [this, x, out, &bn, train, xhat = std::move(xhat), inv_std] {
    const Mat& g = nodes_[out.id].grad;
    bn.gamma.grad += (g.array() * xhat.array()).matrix().colwise().sum();
    bn.beta.grad += g.colwise().sum();
    if (!needs(x)) return;
    const auto dxhat = (g.array().rowwise() * bn.gamma.value.row(0).array()).eval();
    if (!train) {
      grad_ref(x.id) += (dxhat.rowwise() * inv_std.array()).matrix();
      return;
    }
    const T n = T(g.rows());
    const auto sum_dxhat = dxhat.colwise().sum().eval();
    const auto sum_dxhat_xhat = (dxhat * xhat.array()).colwise().sum().eval();
    auto dx = ((n * dxhat).rowwise() - sum_dxhat - (xhat.array().rowwise() * sum_dxhat_xhat))
                  .eval();
    dx.rowwise() *= (inv_std.array() / n);
    grad_ref(x.id) += dx.matrix();
  });
  return out;
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Var out = push(value(a) + value(b), needs(a) || needs(b));
  set_backward(out, [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    if (needs(a)) grad_ref(a.id) += g;
    if (needs(b)) grad_ref(b.id) += g;
  });
  return out;
}

template <typename T>
Var Graph<T>::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Var out = push(value(a) - value(b), needs(a) || needs(b));
  set_backward(out, [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    if (needs(a)) grad_ref(a.id) += g;
    if (needs(b)) grad_ref(b.id) -= g;
  });
  return out;
}

template <typename T>
Var Graph<T>::affine(Var a, T s, T shift) {
  Var out = push((value(a).array() * s + shift).matrix(), needs(a));
  set_backward(out, [this, a, out, s] { grad_ref(a.id) += s * nodes_[out.id].grad; });
  return out;
}

template <typename T>
Var Graph<T>::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Var out = push(value(a).cwiseProduct(value(b)), needs(a) || needs(b));
  set_backward(out, [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    if (needs(a)) grad_ref(a.id) += g.cwiseProduct(value(b));
    if (needs(b)) grad_ref(b.id) += g.cwiseProduct(value(a));
  });
  return out;
}

template <typename T>
Var Graph<T>::relu(Var a) {
  Var out = push(value(a).cwiseMax(T(0)), needs(a));
  set_backward(out, [this, a, out] {
    grad_ref(a.id) += (value(a).array() > T(0)).select(nodes_[out.id].grad, T(0)).matrix();
  });
  return out;
}

template <typename T>
Var Graph<T>::leaky_relu(Var a, T slope) {
  const Mat& av = value(a);
  Var out = push((av.array() > T(0)).select(av, av * slope).matrix(), needs(a));
  set_backward(out, [this, a, out, slope] {
    const Mat& g = nodes_[out.id].grad;
    grad_ref(a.id) += (value(a).array() > T(0)).select(g, g * slope).matrix();
  });
  return out;
}

template <typename T>
Var Graph<T>::sigmoid(Var a) {
  Mat s = value(a).unaryExpr([](T v) {
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  });
  Var out = push(std::move(s), needs(a));
  set_backward(out, [this, a, out] {
    const Mat& y = nodes_[out.id].value;
    grad_ref(a.id) += (nodes_[out.id].grad.array() * y.array() * (T(1) - y.array())).matrix();
  });
  return out;
}

template <typename T>
Var Graph<T>::log_clamped(Var a, T floor) {
  Var out = push(value(a).cwiseMax(floor).array().log().matrix(), needs(a));
  set_backward(out, [this, a, out, floor] {
    const Mat& av = value(a);
    grad_ref(a.id) +=
        (av.array() > floor).select(nodes_[out.id].grad.array() / av.array(), T(0)).matrix();
  });
  return out;
}

template <typename T>
Var Graph<T>::concat_cols(Var a, Var b) {
  const Mat& av = value(a);
  const Mat& bv = value(b);
  if (av.rows() != bv.rows()) throw ShapeMismatch("concat_cols: row counts differ");
  Mat y(av.rows(), av.cols() + bv.cols());
  y << av, bv;
  Var out = push(std::move(y), needs(a) || needs(b));
  set_backward(out, [this, a, b, out] {
    const Mat& g = nodes_[out.id].grad;
    const long ca = value(a).cols();
    if (needs(a)) grad_ref(a.id) += g.leftCols(ca);
    if (needs(b)) grad_ref(b.id) += g.rightCols(g.cols() - ca);
  });
  return out;
}

template <typename T>
Var Graph<T>::gather_rows(Var a, std::span<const int> rows) {
  const Mat& av = value(a);
  Mat y(static_cast<long>(rows.size()), av.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= av.rows()) throw ShapeMismatch("gather_rows: index out of range");
    y.row(static_cast<long>(k)) = av.row(rows[k]);
  }
  Var out = push(std::move(y), needs(a));
  set_backward(out, [this, a, out, idx = std::vector<int>(rows.begin(), rows.end())] {
    const Mat& g = nodes_[out.id].grad;
    Mat& ga = grad_ref(a.id);
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<long>(k));
  });
  return out;
}

template <typename T>
Var Graph<T>::sum(Var a) {
  Var out = push(Mat::Constant(1, 1, value(a).sum()), needs(a));
  set_backward(out, [this, a, out] { grad_ref(a.id).array() += nodes_[out.id].grad(0, 0); });
  return out;
}

template <typename T>
Var Graph<T>::mean(Var a) {
  const T n = T(value(a).size());
  Var out = push(Mat::Constant(1, 1, value(a).sum() / n), needs(a));
  set_backward(out, [this, a, out, n] { grad_ref(a.id).array() += nodes_[out.id].grad(0, 0) / n; });
  return out;
}

template <typename T>
Var Graph<T>::sum_squares(Var a, T divisor) {
  Var out = push(Mat::Constant(1, 1, value(a).squaredNorm() / divisor), needs(a));
  set_backward(out, [this, a, out, divisor] {
    grad_ref(a.id) += (T(2) * nodes_[out.id].grad(0, 0) / divisor) * value(a);
  });
  return out;
}

template <typename T>
Var Graph<T>::lift_depths(Var x, Var d, T c) {
  const Mat& xv = value(x);
  const Mat& dv = value(d);
  const long n = dv.cols();
  if (xv.rows() != dv.rows() || xv.cols() != 2 * n) {
    throw ShapeMismatch("lift_depths: poses " + shape_str(xv.rows(), xv.cols()) + ", depths " +
                        shape_str(dv.rows(), dv.cols()));
  }
  Mat y(xv.rows(), 3 * n);
  for (long b = 0; b < xv.rows(); ++b) {
    for (long i = 0; i < n; ++i) {
      const T z = std::max(T(1), c + dv(b, i));
      y(b, 3 * i) = xv(b, 2 * i) * z;
      y(b, 3 * i + 1) = xv(b, 2 * i + 1) * z;
      y(b, 3 * i + 2) = z;
    }
  }
  Var out = push(std::move(y), needs(x) || needs(d));
  set_backward(out, [this, x, d, out, c, n] {
    const Mat& g = nodes_[out.id].grad;
    const Mat& xv = value(x);
    const Mat& dv = value(d);
    for (long b = 0; b < g.rows(); ++b) {
      for (long i = 0; i < n; ++i) {
        const T raw = c + dv(b, i);
        const T z = std::max(T(1), raw);
        if (needs(x)) {
          Mat& gx = grad_ref(x.id);
          gx(b, 2 * i) += g(b, 3 * i) * z;
          gx(b, 2 * i + 1) += g(b, 3 * i + 1) * z;
        }
        if (needs(d) && raw > T(1)) {
          grad_ref(d.id)(b, i) +=
              g(b, 3 * i) * xv(b, 2 * i) + g(b, 3 * i + 1) * xv(b, 2 * i + 1) + g(b, 3 * i + 2);
        }
      }
    }
  });
  return out;
}

template <typename T>
Var Graph<T>::project(Var X, T z_floor) {
  const Mat& v = value(X);
  if (v.cols() % 3 != 0) throw ShapeMismatch("project: width must be a multiple of 3");
  const long n = v.cols() / 3;
  Mat y(v.rows(), 2 * n);
  for (long b = 0; b < v.rows(); ++b) {
    for (long i = 0; i < n; ++i) {
      const T z = std::max(v(b, 3 * i + 2), z_floor);
      y(b, 2 * i) = v(b, 3 * i) / z;
      y(b, 2 * i + 1) = v(b, 3 * i + 1) / z;
    }
  }
  Var out = push(std::move(y), needs(X));
  set_backward(out, [this, X, out, z_floor, n] {
    const Mat& g = nodes_[out.id].grad;
    const Mat& v = value(X);
    Mat& gv = grad_ref(X.id);
    for (long b = 0; b < g.rows(); ++b) {
      for (long i = 0; i < n; ++i) {
        const T zr = v(b, 3 * i + 2);
        const T z = std::max(zr, z_floor);
        gv(b, 3 * i) += g(b, 2 * i) / z;
        gv(b, 3 * i + 1) += g(b, 2 * i + 1) / z;
        if (zr >= z_floor) {
          gv(b, 3 * i + 2) -= (g(b, 2 * i) * v(b, 3 * i) + g(b, 2 * i + 1) * v(b, 3 * i + 1)) / (z * z);
        }
      }
    }
  });
  return out;
}

template <typename T>
Var Graph<T>::joint_midpoint(Var X, int dim, int joint_a, int joint_b) {
  const Mat& v = value(X);
  if (v.cols() < dim * (std::max(joint_a, joint_b) + 1)) {
    throw ShapeMismatch("joint_midpoint: joint index out of range");
  }
  Mat y = T(0.5) * (v.middleCols(dim * joint_a, dim) + v.middleCols(dim * joint_b, dim));
  Var out = push(std::move(y), needs(X));
  set_backward(out, [this, X, out, dim, joint_a, joint_b] {
    const Mat& g = nodes_[out.id].grad;
    Mat& gv = grad_ref(X.id);
    gv.middleCols(dim * joint_a, dim) += T(0.5) * g;
    gv.middleCols(dim * joint_b, dim) += T(0.5) * g;
  });
  return out;
}

template <typename T>
Var Graph<T>::translate(Var X, Var p, int dim, T sign) {
  const Mat& v = value(X);
  const Mat& pv = value(p);
  if (pv.rows() != v.rows() || pv.cols() != dim || v.cols() % dim != 0) {
    throw ShapeMismatch("translate: offsets " + shape_str(pv.rows(), pv.cols()) + " for poses " +
                        shape_str(v.rows(), v.cols()));
  }
  const long n = v.cols() / dim;
  Mat y = v;
  for (long i = 0; i < n; ++i) y.middleCols(dim * i, dim) += sign * pv;
  Var out = push(std::move(y), needs(X) || needs(p));
  set_backward(out, [this, X, p, out, dim, sign, n] {
    const Mat& g = nodes_[out.id].grad;
    if (needs(X)) grad_ref(X.id) += g;
    if (needs(p)) {
      Mat& gp = grad_ref(p.id);
      for (long i = 0; i < n; ++i) gp += sign * g.middleCols(dim * i, dim);
    }
  });
  return out;
}

template <typename T>
Var Graph<T>::rotate(Var X, const Mat& rotations, bool transpose) {
  const Mat& v = value(X);
  if (rotations.rows() != v.rows() || rotations.cols() != 9 || v.cols() % 3 != 0) {
    throw ShapeMismatch("rotate: rotations " + shape_str(rotations.rows(), rotations.cols()) +
                        " for poses " + shape_str(v.rows(), v.cols()));
  }
  using Mat3 = Eigen::Matrix<T, 3, 3, Eigen::RowMajor>;
  using Joints = Eigen::Matrix<T, Eigen::Dynamic, 3, Eigen::RowMajor>;
  const long n = v.cols() / 3;
  // Row b holds N joints as an (N, 3) block; R X_i for all i is P R^T.
  auto row_rotation = [transpose](const Mat& rs, long b) {
    Mat3 r = Eigen::Map<const Mat3>(rs.row(b).data());
    return transpose ? Mat3(r) : Mat3(r.transpose());
  };
  Mat y(v.rows(), v.cols());
  for (long b = 0; b < v.rows(); ++b) {
    Eigen::Map<const Joints> in(v.row(b).data(), n, 3);
    Eigen::Map<Joints> dst(y.row(b).data(), n, 3);
    dst.noalias() = in * row_rotation(rotations, b);
  }
  Var out = push(std::move(y), needs(X));
  set_backward(out, [this, X, out, rs = rotations, n, row_rotation] {
    const Mat& g = nodes_[out.id].grad;
    Mat& gv = grad_ref(X.id);
    for (long b = 0; b < g.rows(); ++b) {
      Eigen::Map<const Joints> gin(g.row(b).data(), n, 3);
      Eigen::Map<Joints> dst(gv.row(b).data(), n, 3);
      dst.noalias() += gin * row_rotation(rs, b).transpose();
    }
  });
  return out;
}

template <typename T>
Var Graph<T>::normalize2d(Var x, int head, int hip_a, int hip_b, T c) {
  const Mat& v = value(x);
  if (v.cols() % 2 != 0 || v.cols() < 2 * (std::max({head, hip_a, hip_b}) + 1)) {
    throw ShapeMismatch("normalize2d: bad pose width");
  }
  const long n = v.cols() / 2;
  Mat y(v.rows(), v.cols());
  Mat centred(v.rows(), v.cols());
  Eigen::Matrix<T, Eigen::Dynamic, 1> scales(v.rows());
  for (long b = 0; b < v.rows(); ++b) {
    const T rx = T(0.5) * (v(b, 2 * hip_a) + v(b, 2 * hip_b));
    const T ry = T(0.5) * (v(b, 2 * hip_a + 1) + v(b, 2 * hip_b + 1));
    for (long i = 0; i < n; ++i) {
      centred(b, 2 * i) = v(b, 2 * i) - rx;
      centred(b, 2 * i + 1) = v(b, 2 * i + 1) - ry;
    }
    const T dist = std::hypot(centred(b, 2 * head), centred(b, 2 * head + 1));
    scales(b) = T(1) / (c * dist);
    y.row(b) = scales(b) * centred.row(b);
  }
  Var out = push(std::move(y), needs(x));
  set_backward(out, [this, x, out, head, hip_a, hip_b, n, centred = std::move(centred),
                     scales = std::move(scales)] {
    const Mat& g = nodes_[out.id].grad;
    Mat& gx = grad_ref(x.id);
    for (long b = 0; b < g.rows(); ++b) {
      const T s = scales(b);
      Eigen::Matrix<T, 1, Eigen::Dynamic> gv = s * g.row(b);
      const T gs = g.row(b).dot(centred.row(b));
      const T hx = centred(b, 2 * head), hy = centred(b, 2 * head + 1);
      const T d2 = hx * hx + hy * hy;
      gv(2 * head) -= gs * s * hx / d2;
      gv(2 * head + 1) -= gs * s * hy / d2;
      T grx = 0, gry = 0;
      for (long i = 0; i < n; ++i) {
        grx -= gv(2 * i);
        gry -= gv(2 * i + 1);
      }
      gx.row(b) += gv;
      gx(b, 2 * hip_a) += T(0.5) * grx;
      gx(b, 2 * hip_b) += T(0.5) * grx;
      gx(b, 2 * hip_a + 1) += T(0.5) * gry;
      gx(b, 2 * hip_b + 1) += T(0.5) * gry;
    }
  });
  return out;
}

template <typename T>
void Graph<T>::backward(Var loss) {
  if (!record_) throw GraphNotRecorded("backward() on a graph built without recording");
  const Node& l = nodes_.at(loss.id);
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw ShapeMismatch("backward: loss must be 1x1, got " + shape_str(l.value.rows(), l.value.cols()));
  }
  if (!l.requires_grad) {
    throw GraphNotRecorded("backward: loss has no recorded dependence on any parameter");
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  grad_ref(loss.id).setOnes();
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace liftgeo::nn
