#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace egg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Tape;

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized like data iff requires_grad
  bool requires_grad = false;
  // Graph node, set only for results recorded on a tape.
  const Tape* tape = nullptr;
  std::uint64_t generation = 0;
  std::size_t index = 0;
};

}  // namespace detail

// A dense row-major array of doubles. Copies share storage (handle
// semantics); use clone() for an independent copy. Results of operations on
// tensors that require gradients are recorded on the calling thread's tape.
class Tensor {
 public:
  Tensor();  // rank-0 zero
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> values() const { return impl_->data; }
  // Direct write access, for initializers and optimizers. Writing through
  // this does not interact with any tape.
  std::span<double> mutable_values() { return impl_->data; }
  double item() const;
  double operator[](std::size_t i) const { return impl_->data[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  // Turning gradients on allocates a zero accumulator; off drops it.
  void set_requires_grad(bool on);
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() { return impl_->grad; }
  void zero_grad();

  // Shares values, never requires gradients.
  Tensor detach() const;
  // Deep copy of values (and the requires_grad flag), with a zero gradient.
  Tensor clone() const;

  bool recorded() const { return impl_->tape != nullptr; }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Records operations for one backward pass. One tape exists per thread;
// backward() consumes it and bumps its generation, so results recorded
// before that can no longer be differentiated.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> grad_out)>;

  static Tape& current();

  bool enabled() const { return enabled_; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t generation() const { return generation_; }

  // Drops all recorded operations without running backward.
  void discard();

  // Internal: appends an entry whose output is `out`.
  void record(const std::shared_ptr<detail::TensorImpl>& out,
              std::vector<std::shared_ptr<detail::TensorImpl>> inputs, BackwardFn fn);

  void run_backward(const Tensor& root);

 private:
  friend class NoGradGuard;
  struct Entry {
    std::shared_ptr<detail::TensorImpl> output;
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    BackwardFn fn;
  };

  std::vector<Entry> entries_;
  std::uint64_t generation_ = 1;
  bool enabled_ = true;
};

// Disables recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Accumulates d(root)/d(t) into t.grad for every gradient-requiring tensor t
// reachable from `root`, then clears the tape.
void backward(const Tensor& root);

}  // namespace egg
