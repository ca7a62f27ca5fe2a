#include <atomic>

#include "kernel_detail.hpp"

namespace egg::kernels {

namespace serial {

void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < s.m; ++i) detail::gemm_row(s, a, b, c, accumulate, i);
}

void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    detail::softmax_row(in.data() + r * cols, out.data() + r * cols, cols);
  }
}

void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                      std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    detail::log_softmax_row(in.data() + r * cols, out.data() + r * cols, cols);
  }
}

void unary(Unary kind, std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = detail::apply_unary(kind, in[i]);
}

}  // namespace serial

namespace {
std::atomic<std::size_t> g_threshold{1u << 16};
}

std::size_t parallel_threshold() { return g_threshold.load(std::memory_order_relaxed); }
void set_parallel_threshold(std::size_t work) {
  g_threshold.store(work, std::memory_order_relaxed);
}

void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  if (parallel_available() && s.m > 1 && s.m * s.n * s.k >= parallel_threshold()) {
    parallel::gemm(s, a, b, c, accumulate);
  } else {
    serial::gemm(s, a, b, c, accumulate);
  }
}

void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                  std::size_t cols) {
  if (parallel_available() && rows > 1 && in.size() >= parallel_threshold()) {
    parallel::softmax_rows(in, out, rows, cols);
  } else {
    serial::softmax_rows(in, out, rows, cols);
  }
}

void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                      std::size_t cols) {
  if (parallel_available() && rows > 1 && in.size() >= parallel_threshold()) {
    parallel::log_softmax_rows(in, out, rows, cols);
  } else {
    serial::log_softmax_rows(in, out, rows, cols);
  }
}

void unary(Unary kind, std::span<const double> in, std::span<double> out) {
  if (parallel_available() && in.size() >= parallel_threshold()) {
    parallel::unary(kind, in, out);
  } else {
    serial::unary(kind, in, out);
  }
}

}  // namespace egg::kernels
