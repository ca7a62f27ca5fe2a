#include "egg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "egg/kernels.hpp"

namespace egg {

namespace {

using ImplPtr = std::shared_ptr<detail::TensorImpl>;

// Builds the result tensor and, when recording, its tape entry. `make_fn` is
// only invoked when a backward rule is needed.
template <typename MakeFn>
Tensor finish(Shape shape, std::vector<double> data, std::vector<Tensor> inputs, MakeFn&& make_fn) {
  Tape& tape = Tape::current();
  bool needs_grad = false;
  if (tape.enabled()) {
    for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
  }
  Tensor out(std::move(shape), std::move(data), needs_grad);
  if (needs_grad) {
    std::vector<ImplPtr> impls;
    impls.reserve(inputs.size());
    for (const auto& t : inputs) impls.push_back(t.impl());
    if constexpr (std::is_invocable_v<MakeFn, const detail::TensorImpl*>) {
      tape.record(out.impl(), std::move(impls), make_fn(out.impl().get()));
    } else {
      tape.record(out.impl(), std::move(impls), make_fn());
    }
  }
  return out;
}

// Gradient buffer of `t`, or nullptr when it takes no gradient.
double* grad_ptr(const ImplPtr& t) { return t->requires_grad ? t->grad.data() : nullptr; }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + shape_str(t.shape()));
  }
}

const char* kind_name(Elementwise kind) {
  switch (kind) {
    case Elementwise::add:
      return "add";
    case Elementwise::sub:
      return "sub";
    case Elementwise::mul:
      return "mul";
    case Elementwise::div:
      return "div";
  }
  return "?";
}

}  // namespace

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b) {
  const bool a_scalar = a.rank() == 0;
  const bool b_scalar = b.rank() == 0;
  if (a.shape() != b.shape() && !a_scalar && !b_scalar) {
    throw ShapeError(std::string(kind_name(kind)) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  if (kind == Elementwise::div) {
    for (double v : b.values()) {
      if (v == 0.0) throw std::domain_error("div: division by zero");
    }
  }
  const Shape shape = (a_scalar && !b_scalar) ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  const auto av = a.values();
  const auto bv = b.values();
  auto ai = [&](std::size_t i) { return a_scalar ? av[0] : av[i]; };
  auto bi = [&](std::size_t i) { return b_scalar ? bv[0] : bv[i]; };

  std::vector<double> out(n);
  switch (kind) {
    case Elementwise::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = ai(i) + bi(i);
      break;
    case Elementwise::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = ai(i) - bi(i);
      break;
    case Elementwise::mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = ai(i) * bi(i);
      break;
    case Elementwise::div:
      for (std::size_t i = 0; i < n; ++i) out[i] = ai(i) / bi(i);
      break;
  }

  return finish(shape, std::move(out), {a, b}, [=, ia = a.impl(), ib = b.impl()] {
    return [=](std::span<const double> g) {
      double* ga = grad_ptr(ia);
      double* gb = grad_ptr(ib);
      const auto& x = ia->data;
      const auto& y = ib->data;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ixa = a_scalar ? 0 : i;
        const std::size_t ixb = b_scalar ? 0 : i;
        switch (kind) {
          case Elementwise::add:
            if (ga) ga[ixa] += g[i];
            if (gb) gb[ixb] += g[i];
            break;
          case Elementwise::sub:
            if (ga) ga[ixa] += g[i];
            if (gb) gb[ixb] -= g[i];
            break;
          case Elementwise::mul:
            if (ga) ga[ixa] += g[i] * y[ixb];
            if (gb) gb[ixb] += g[i] * x[ixa];
            break;
          case Elementwise::div:
            if (ga) ga[ixa] += g[i] / y[ixb];
            if (gb) gb[ixb] -= g[i] * x[ixa] / (y[ixb] * y[ixb]);
            break;
        }
      }
    };
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::div, a, b); }
Tensor neg(const Tensor& a) { return scale(a, -1.0); }
Tensor scale(const Tensor& a, double factor) { return mul(a, Tensor::scalar(factor)); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  kernels::gemm({m, n, k}, a.values(), b.values(), out, false);

  return finish({m, n}, std::move(out), {a, b}, [=, ia = a.impl(), ib = b.impl()] {
    return [=](std::span<const double> g) {
      if (ia->requires_grad) {
        // dA = dC * B^T
        kernels::gemm({m, k, n, false, true}, g, ib->data, ia->grad, true);
      }
      if (ib->requires_grad) {
        // dB = A^T * dC
        kernels::gemm({k, n, m, true, false}, ia->data, g, ib->grad, true);
      }
    };
  });
}

namespace {

Tensor linear_impl(const Tensor& x, const Tensor& w, const Tensor* b) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (w.dim(1) != in) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + " does not match weight " +
                     shape_str(w.shape()));
  }
  if (b && (b->rank() != 1 || b->dim(0) != out)) {
    throw ShapeError("linear: bias " + shape_str(b->shape()) + " does not match weight " +
                     shape_str(w.shape()));
  }
  std::vector<double> y(batch * out);
  kernels::gemm({batch, out, in, false, true}, x.values(), w.values(), y, false);
  if (b) {
    const auto bv = b->values();
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < out; ++j) y[r * out + j] += bv[j];
  }
  std::vector<Tensor> inputs{x, w};
  if (b) inputs.push_back(*b);
  ImplPtr ib = b ? b->impl() : nullptr;
  return finish({batch, out}, std::move(y), inputs, [=, ix = x.impl(), iw = w.impl()] {
    return [=](std::span<const double> g) {
      if (ix->requires_grad) {
        kernels::gemm({batch, in, out}, g, iw->data, ix->grad, true);
      }
      if (iw->requires_grad) {
        kernels::gemm({out, in, batch, true, false}, g, ix->data, iw->grad, true);
      }
      if (ib && ib->requires_grad) {
        for (std::size_t j = 0; j < out; ++j) {
          double acc = 0.0;
          for (std::size_t r = 0; r < batch; ++r) acc += g[r * out + j];
          ib->grad[j] += acc;
        }
      }
    };
  });
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return linear_impl(x, weight, &bias);
}

Tensor linear(const Tensor& x, const Tensor& weight) { return linear_impl(x, weight, nullptr); }

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto v = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];

  return finish({c, r}, std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ia->grad[i * c + j] += g[j * r + i];
    };
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const std::size_t n = a.numel();
  return finish(std::move(shape), std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < n; ++i) ia->grad[i] += g[i];
    };
  });
}

Tensor expand_rows(const Tensor& v, std::size_t rows) {
  require_rank(v, 1, "expand_rows");
  const std::size_t n = v.dim(0);
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(v.values().begin(), v.values().end(), out.begin() + r * n);
  return finish({rows, n}, std::move(out), {v}, [=, iv = v.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) iv->grad[j] += g[r * n + j];
    };
  });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  require_rank(a, 2, "slice_cols");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (start + count > cols) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + shape_str(a.shape()));
  }
  std::vector<double> out(rows * count);
  const auto v = a.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < count; ++j) out[r * count + j] = v[r * cols + start + j];
  return finish({rows, count}, std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < count; ++j) ia->grad[r * cols + start + j] += g[r * count + j];
    };
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rank() == 2 ? parts[0].dim(0) : 0;
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts[0].shape()) + " vs " +
                       shape_str(p.shape()));
    }
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < widths[k]; ++j) out[r * total + offset + j] = v[r * widths[k] + j];
    offset += widths[k];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  std::vector<ImplPtr> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  return finish({rows, total}, std::move(out), inputs, [=] {
    return [=](std::span<const double> g) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < impls.size(); ++k) {
        if (impls[k]->requires_grad) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < widths[k]; ++j)
              impls[k]->grad[r * widths[k] + j] += g[r * total + off + j];
        }
        off += widths[k];
      }
    };
  });
}

namespace {

// Elementwise map whose derivative is a function of input x and output y.
template <typename Deriv>
Tensor unary_op(const Tensor& a, kernels::Unary kind, Deriv deriv) {
  std::vector<double> out(a.numel());
  kernels::unary(kind, a.values(), out);
  const std::size_t n = a.numel();
  return finish(a.shape(), std::move(out), {a}, [=, ia = a.impl()](const detail::TensorImpl* o) {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < n; ++i) ia->grad[i] += g[i] * deriv(ia->data[i], o->data[i]);
    };
  });
}

}  // namespace

Tensor activation(Activation kind, const Tensor& a) {
  switch (kind) {
    case Activation::tanh:
      return tanh(a);
    case Activation::sigmoid:
      return sigmoid(a);
    case Activation::relu:
      return relu(a);
  }
  return a;
}

Tensor tanh(const Tensor& a) {
  return unary_op(a, kernels::Unary::tanh, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(a, kernels::Unary::sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, kernels::Unary::relu, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, kernels::Unary::exp, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) throw std::domain_error("log: input must be positive, got " + std::to_string(v));
  }
  return unary_op(a, kernels::Unary::log, [](double x, double) { return 1.0 / x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  const std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto v = a.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(v[i], lo, hi);
  return finish(a.shape(), std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = ia->data[i];
        if (x >= lo && x <= hi) ia->grad[i] += g[i];
      }
    };
  });
}

namespace {

// Splits a shape around `axis` into outer x extent x inner.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// Applies a row kernel to every slice along the axis, gathering strided
// slices into contiguous rows when the axis is not the last one.
template <typename RowsKernel>
std::vector<double> along_axis(const Tensor& a, const AxisSplit& s, RowsKernel kernel) {
  std::vector<double> out(a.numel());
  if (s.inner == 1) {
    kernel(a.values(), std::span<double>(out), s.outer, s.extent);
    return out;
  }
  const auto v = a.values();
  std::vector<double> rows(a.numel()), res(a.numel());
  const std::size_t nrows = s.outer * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in)
      for (std::size_t k = 0; k < s.extent; ++k)
        rows[(o * s.inner + in) * s.extent + k] = v[(o * s.extent + k) * s.inner + in];
  kernel(std::span<const double>(rows), std::span<double>(res), nrows, s.extent);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in)
      for (std::size_t k = 0; k < s.extent; ++k)
        out[(o * s.extent + k) * s.inner + in] = res[(o * s.inner + in) * s.extent + k];
  return out;
}

}  // namespace

Tensor softmax(const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "softmax");
  auto out = along_axis(a, s, [](auto in, auto o, std::size_t r, std::size_t c) {
    kernels::softmax_rows(in, o, r, c);
  });
  return finish(a.shape(), std::move(out), {a}, [=, ia = a.impl()](const detail::TensorImpl* o) {
    return [=](std::span<const double> g) {
      const auto& y = o->data;
      for (std::size_t ou = 0; ou < s.outer; ++ou)
        for (std::size_t in = 0; in < s.inner; ++in) {
          double dot = 0.0;
          for (std::size_t k = 0; k < s.extent; ++k) {
            const std::size_t i = (ou * s.extent + k) * s.inner + in;
            dot += g[i] * y[i];
          }
          for (std::size_t k = 0; k < s.extent; ++k) {
            const std::size_t i = (ou * s.extent + k) * s.inner + in;
            ia->grad[i] += y[i] * (g[i] - dot);
          }
        }
    };
  });
}

Tensor log_softmax(const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "log_softmax");
  auto out = along_axis(a, s, [](auto in, auto o, std::size_t r, std::size_t c) {
    kernels::log_softmax_rows(in, o, r, c);
  });
  return finish(a.shape(), std::move(out), {a}, [=, ia = a.impl()](const detail::TensorImpl* o) {
    return [=](std::span<const double> g) {
      const auto& y = o->data;
      for (std::size_t ou = 0; ou < s.outer; ++ou)
        for (std::size_t in = 0; in < s.inner; ++in) {
          double total = 0.0;
          for (std::size_t k = 0; k < s.extent; ++k) total += g[(ou * s.extent + k) * s.inner + in];
          for (std::size_t k = 0; k < s.extent; ++k) {
            const std::size_t i = (ou * s.extent + k) * s.inner + in;
            ia->grad[i] += g[i] - std::exp(y[i]) * total;
          }
        }
    };
  });
}

Tensor reduce(Reduce kind, const Tensor& a) {
  const std::size_t n = a.numel();
  double total = 0.0;
  for (double v : a.values()) total += v;
  const double factor = kind == Reduce::mean ? 1.0 / static_cast<double>(n) : 1.0;
  const double value = kind == Reduce::mean ? total / static_cast<double>(n) : total;
  return finish(Shape{}, {value}, {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < n; ++i) ia->grad[i] += g[0] * factor;
    };
  });
}

Tensor reduce(Reduce kind, const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_axis(a.shape(), axis, "reduce");
  Shape shape = a.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto v = a.values();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.extent; ++k)
      for (std::size_t in = 0; in < s.inner; ++in)
        out[o * s.inner + in] += v[(o * s.extent + k) * s.inner + in];
  const double factor = kind == Reduce::mean ? 1.0 / static_cast<double>(s.extent) : 1.0;
  if (kind == Reduce::mean) {
    for (double& x : out) x /= static_cast<double>(s.extent);
  }
  return finish(std::move(shape), std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.extent; ++k)
          for (std::size_t in = 0; in < s.inner; ++in)
            ia->grad[(o * s.extent + k) * s.inner + in] += g[o * s.inner + in] * factor;
    };
  });
}

Tensor sum(const Tensor& a) { return reduce(Reduce::sum, a); }
Tensor mean(const Tensor& a) { return reduce(Reduce::mean, a); }
Tensor sum(const Tensor& a, std::size_t axis) { return reduce(Reduce::sum, a, axis); }
Tensor mean(const Tensor& a, std::size_t axis) { return reduce(Reduce::mean, a, axis); }

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> indices) {
  require_rank(table, 2, "embedding_lookup");
  const std::size_t rows = table.dim(0), d = table.dim(1);
  for (std::size_t idx : indices) {
    if (idx >= rows) {
      throw std::out_of_range("embedding_lookup: index " + std::to_string(idx) +
                              " out of range for vocabulary of " + std::to_string(rows));
    }
  }
  const std::size_t n = indices.size();
  std::vector<double> out(n * d);
  const auto v = table.values();
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(indices[i] * d), d, out.begin() + i * d);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return finish({n, d}, std::move(out), {table}, [=, it = table.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) it->grad[idx[i] * d + j] += g[i * d + j];
    };
  });
}

Tensor pick(const Tensor& a, std::span<const std::size_t> indices) {
  require_rank(a, 2, "pick");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (indices.size() != rows) {
    throw ShapeError("pick: " + std::to_string(indices.size()) + " indices for " +
                     shape_str(a.shape()));
  }
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (indices[i] >= cols) {
      throw std::out_of_range("pick: index " + std::to_string(indices[i]) + " out of range for " +
                              std::to_string(cols) + " columns");
    }
    out[i] = a.values()[i * cols + indices[i]];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return finish({rows}, std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < rows; ++i) ia->grad[i * cols + idx[i]] += g[i];
    };
  });
}

Tensor select_rows(std::span<const Tensor> candidates, std::span<const std::size_t> which) {
  if (candidates.empty()) throw ShapeError("select_rows: no candidates");
  const Shape shape = candidates[0].shape();
  if (shape.size() != 2) throw ShapeError("select_rows: candidates must be rank 2");
  for (const auto& c : candidates) {
    if (c.shape() != shape) {
      throw ShapeError("select_rows: candidate shapes differ, " + shape_str(shape) + " vs " +
                       shape_str(c.shape()));
    }
  }
  const std::size_t rows = shape[0], cols = shape[1];
  if (which.size() != rows) {
    throw ShapeError("select_rows: " + std::to_string(which.size()) + " selectors for " +
                     std::to_string(rows) + " rows");
  }
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (which[r] >= candidates.size()) {
      throw std::out_of_range("select_rows: selector " + std::to_string(which[r]) +
                              " out of range");
    }
    const auto v = candidates[which[r]].values();
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, out.begin() + r * cols);
  }
  std::vector<ImplPtr> impls;
  for (const auto& c : candidates) impls.push_back(c.impl());
  std::vector<std::size_t> sel(which.begin(), which.end());
  std::vector<Tensor> inputs(candidates.begin(), candidates.end());
  return finish(shape, std::move(out), inputs, [=] {
    return [=](std::span<const double> g) {
      for (std::size_t r = 0; r < rows; ++r) {
        const auto& src = impls[sel[r]];
        if (!src->requires_grad) continue;
        for (std::size_t j = 0; j < cols; ++j) src->grad[r * cols + j] += g[r * cols + j];
      }
    };
  });
}

Tensor keep_where(const Tensor& a, const std::vector<bool>& keep) {
  if (a.rank() == 0 || keep.size() != a.dim(0)) {
    throw ShapeError("keep_where: mask of " + std::to_string(keep.size()) +
                     " entries for shape " + shape_str(a.shape()));
  }
  const std::size_t per = a.numel() / keep.size();
  std::vector<double> out(a.numel(), 0.0);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    if (!keep[r]) continue;
    for (std::size_t j = 0; j < per; ++j) out[r * per + j] = a.values()[r * per + j];
  }
  return finish(a.shape(), std::move(out), {a}, [=, ia = a.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t r = 0; r < keep.size(); ++r) {
        if (!keep[r]) continue;
        for (std::size_t j = 0; j < per; ++j) ia->grad[r * per + j] += g[r * per + j];
      }
    };
  });
}

Tensor batched_matvec(const Tensor& c, const Tensor& v) {
  require_rank(c, 3, "batched_matvec");
  require_rank(v, 2, "batched_matvec");
  const std::size_t b = c.dim(0), k = c.dim(1), h = c.dim(2);
  if (v.dim(0) != b || v.dim(1) != h) {
    throw ShapeError("batched_matvec: shapes " + shape_str(c.shape()) + " and " +
                     shape_str(v.shape()) + " disagree");
  }
  std::vector<double> out(b * k, 0.0);
  const auto cv = c.values();
  const auto vv = v.values();
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < h; ++p) acc += cv[(i * k + j) * h + p] * vv[i * h + p];
      out[i * k + j] = acc;
    }
  return finish({b, k}, std::move(out), {c, v}, [=, ic = c.impl(), iv = v.impl()] {
    return [=](std::span<const double> g) {
      double* gc = grad_ptr(ic);
      double* gv = grad_ptr(iv);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double gij = g[i * k + j];
          for (std::size_t p = 0; p < h; ++p) {
            if (gc) gc[(i * k + j) * h + p] += gij * iv->data[i * h + p];
            if (gv) gv[i * h + p] += gij * ic->data[(i * k + j) * h + p];
          }
        }
    };
  });
}

std::vector<std::size_t> argmax_rows(const Tensor& a) {
  require_rank(a, 2, "argmax_rows");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<std::size_t> out(rows, 0);
  const auto v = a.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j)
      if (v[r * cols + j] > v[r * cols + best]) best = j;
    out[r] = best;
  }
  return out;
}

Tensor straight_through(const Tensor& soft) {
  const auto idx = argmax_rows(soft);
  const std::size_t rows = soft.dim(0), cols = soft.dim(1);
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) out[r * cols + idx[r]] = 1.0;
  const std::size_t n = rows * cols;
  return finish(soft.shape(), std::move(out), {soft}, [=, is = soft.impl()] {
    return [=](std::span<const double> g) {
      for (std::size_t i = 0; i < n; ++i) is->grad[i] += g[i];
    };
  });
}

}  // namespace egg
