#pragma once

// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// A Tensor is a shared handle: copying a Tensor aliases the same storage, the
// way framework tensors do. Use clone() for an independent copy. Every op that
// has at least one requires_grad input records a node in the computation
// record; backward() walks that record once in reverse topological order.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cadv {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node;
using BackwardFn = std::function<void(const Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;  // set on interior nodes only

  bool is_leaf() const { return !backward; }
  std::vector<double>& ensure_grad();
  // grad += local; local must have numel(shape) entries.
  void accumulate(std::span<const double> local);
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> data() const;
  // Direct write access, intended for leaves (optimizer updates, test setup).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const { return data()[i]; }
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  // Zero-filled span when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Fresh leaf holding a copy of the data, detached from any record.
  Tensor detach() const;
  // Fresh leaf holding a copy of the data, keeping requires_grad.
  Tensor clone() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor record_op(Shape, std::vector<double>, std::vector<Tensor>, detail::BackwardFn);

  std::shared_ptr<detail::Node> node_;
};

// Builds the result of an op. If grad mode is on and any parent requires a
// gradient, the result is recorded with `backward`, which reads self.grad and
// accumulates into self.parents[i] (skipping parents that do not require grad).
Tensor record_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                 detail::BackwardFn backward);

// Seeds d(root)/d(root) = 1 and propagates to every requires_grad ancestor.
// Interior gradients are reset first; leaf gradients accumulate.
void backward(const Tensor& root);

bool grad_mode_enabled();

// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace cadv
