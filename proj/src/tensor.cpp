#include "egg/tensor.hpp"

#include <sstream>

namespace egg {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : Tensor(Shape{}, false) {}

Tensor::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("Tensor: shape " + shape_str(shape) + " holds " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  set_requires_grad(requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor(Shape{rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw ShapeError("Tensor::dim: axis " + std::to_string(axis) + " out of range for shape " +
                     shape_str(shape()));
  }
  return impl_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("Tensor::item: expected one element, shape is " + shape_str(shape()));
  }
  return impl_->data[0];
}

void Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  if (on) {
    impl_->grad.assign(impl_->data.size(), 0.0);
  } else {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

void Tensor::zero_grad() {
  for (double& g : impl_->grad) g = 0.0;
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  Tensor t(impl_->shape, impl_->data, impl_->requires_grad);
  return t;
}

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::discard() {
  entries_.clear();
  ++generation_;
}

void Tape::record(const std::shared_ptr<detail::TensorImpl>& out,
                  std::vector<std::shared_ptr<detail::TensorImpl>> inputs, BackwardFn fn) {
  out->tape = this;
  out->generation = generation_;
  out->index = entries_.size();
  entries_.push_back(Entry{out, std::move(inputs), std::move(fn)});
}

void Tape::run_backward(const Tensor& root) {
  const auto& r = *root.impl();
  if (root.numel() != 1) {
    throw TapeError("backward: root must be a scalar, shape is " + shape_str(root.shape()));
  }
  if (r.tape == nullptr) {
    throw TapeError("backward: root was not recorded on a tape");
  }
  if (r.tape != this) {
    throw TapeError("backward: root was recorded on another thread's tape");
  }
  if (r.generation != generation_) {
    throw TapeError("backward: the tape that recorded this root was already consumed");
  }

  std::vector<char> live(entries_.size(), 0);
  live[r.index] = 1;
  root.impl()->grad[0] += 1.0;

  for (std::size_t i = r.index + 1; i-- > 0;) {
    if (!live[i]) continue;
    Entry& e = entries_[i];
    e.fn(e.output->grad);
    for (const auto& in : e.inputs) {
      if (in->tape == this && in->generation == generation_) live[in->index] = 1;
    }
  }
  discard();
}

NoGradGuard::NoGradGuard() : previous_(Tape::current().enabled_) {
  Tape::current().enabled_ = false;
}

NoGradGuard::~NoGradGuard() { Tape::current().enabled_ = previous_; }

void backward(const Tensor& root) { Tape::current().run_backward(root); }

}  // namespace egg
