#pragma once

#include <cstddef>
#include <span>

// Dense numeric kernels behind the tensor ops. Every kernel has a serial
// reference in `serial` and an OpenMP version in `parallel`; the parallel
// versions partition only independent output elements, so both produce
// bit-identical results for every input. The unqualified entry points pick
// one based on problem size.
namespace egg::kernels {

enum class Unary { tanh, sigmoid, relu, exp, log };

// C[m x n] = op(A) * op(B), or C += ... when `accumulate` is set.
// op(A) is m x k (A is stored k x m when trans_a), op(B) is k x n
// (B is stored n x k when trans_b). All buffers are row-major.
struct GemmShape {
  std::size_t m, n, k;
  bool trans_a = false;
  bool trans_b = false;
};

namespace serial {
void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);
void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                  std::size_t cols);
void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                      std::size_t cols);
void unary(Unary kind, std::span<const double> in, std::span<double> out);
}  // namespace serial

namespace parallel {
void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);
void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                  std::size_t cols);
void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                      std::size_t cols);
void unary(Unary kind, std::span<const double> in, std::span<double> out);
}  // namespace parallel

bool parallel_available();

// Problems with at least this many scalar multiply-adds (or elements, for
// the row and unary kernels) go to the parallel kernels.
std::size_t parallel_threshold();
void set_parallel_threshold(std::size_t work);

void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);
void softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                  std::size_t cols);
void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t rows,
                      std::size_t cols);
void unary(Unary kind, std::span<const double> in, std::span<double> out);

}  // namespace egg::kernels
