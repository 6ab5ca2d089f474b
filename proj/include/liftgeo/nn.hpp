#pragma once

#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace liftgeo::nn {

template <typename T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BatchTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GraphNotRecorded : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A learnable tensor with its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor<T>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

enum class Mode { kTrain, kEval };

template <typename T>
struct BatchNorm {
  Parameter<T> gamma;
  Parameter<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.1);
  T epsilon = T(1e-5);

  BatchNorm() = default;
  BatchNorm(const std::string& prefix, int width)
      : gamma(prefix + ".gamma", Tensor<T>::Ones(1, width)),
        beta(prefix + ".beta", Tensor<T>::Zero(1, width)),
        running_mean(Tensor<T>::Zero(1, width)),
        running_var(Tensor<T>::Ones(1, width)) {}
};

/// Handle to a node of a Graph.
struct Var {
  int id = -1;
};

/// Reverse-mode tape. Every op appends a node holding its value and, when any input needs a
/// gradient, a closure that pushes the node's gradient back to its inputs. Nodes are processed
/// in reverse creation order, which is a valid topological order for a tape.
template <typename T>
class Graph {
 public:
  using Mat = Tensor<T>;

  explicit Graph(bool record = true) : record_(record) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() wrt node v; zeros if v received none.
  Mat grad(Var v) const;
  T scalar(Var v) const { return value(v)(0, 0); }

  Var input(Mat value, bool requires_grad = false);

  /// y = x W + b.
  Var linear(Var x, Parameter<T>& W, Parameter<T>& b);
  Var batchnorm(Var x, BatchNorm<T>& bn, Mode mode);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// a * s + shift.
  Var affine(Var a, T s, T shift = T(0));
  Var mul(Var a, Var b);
  Var relu(Var a);
  Var leaky_relu(Var a, T slope);
  Var sigmoid(Var a);
  /// log(max(a, floor)); gradient is zero where the floor is active.
  Var log_clamped(Var a, T floor);
  Var concat_cols(Var a, Var b);
  Var gather_rows(Var a, std::span<const int> rows);

  Var sum(Var a);
  Var mean(Var a);
  /// sum(a^2) / divisor, as a 1x1 node.
  Var sum_squares(Var a, T divisor);

  /// (x, d) with x of shape (B, 2N) and d of shape (B, N) -> (B, 3N), z = max(1, c + d).
  /// The derivative of the clamp is taken as 0 at c + d = 1.
  Var lift_depths(Var x, Var d, T c);
  /// (B, 3N) -> (B, 2N), x = X / max(Z, z_floor). Gradient wrt Z vanishes below the floor.
  Var project(Var X, T z_floor = T(0));
  /// (B, dim*N) -> (B, dim): midpoint of two joints.
  Var joint_midpoint(Var X, int dim, int joint_a, int joint_b);
  /// X_i + sign * p for every joint, p of shape (B, dim).
  Var translate(Var X, Var p, int dim, T sign);
  /// X_i <- R_b X_i (or R_b^T X_i) with per-row rotations (B, 9), row-major. R is constant.
  Var rotate(Var X, const Mat& rotations, bool transpose);
  /// Root-centres each 2D pose on the hip midpoint and rescales head-root distance to 1/c.
  Var normalize2d(Var x, int head, int hip_a, int hip_b, T c);

  /// Backpropagates from a 1x1 node, accumulating into Parameter::grad.
  void backward(Var loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(Mat value, bool requires_grad);
  bool needs(Var v) const { return record_ && nodes_[v.id].requires_grad; }
  Mat& grad_ref(int id);
  void set_backward(Var out, std::function<void()> fn);

  bool record_;
  std::deque<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace liftgeo::nn
