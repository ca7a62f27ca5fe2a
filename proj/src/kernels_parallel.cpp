#include <cstdint>

#include "kernel_detail.hpp"

#ifdef EGG_HAVE_OPENMP
#include <omp.h>
#endif

namespace egg::kernels {

bool parallel_available() {
#ifdef EGG_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

namespace parallel {

void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  const auto m = static_cast<std::int64_t>(s.m);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    detail::gemm_row(s, a, b, c, accumulate, static_cast<std::size_t>(i));
  }
}

void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                  std::size_t cols) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    detail::softmax_row(in.data() + r * cols, out.data() + r * cols, cols);
  }
}

void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                      std::size_t cols) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    detail::log_softmax_row(in.data() + r * cols, out.data() + r * cols, cols);
  }
}

void unary(Unary kind, std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = detail::apply_unary(kind, in[i]);
}

}  // namespace parallel

}  // namespace egg::kernels
